// tests/oracles.h

// Copyright 2026  lattice-embr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Brute-force reference implementations and random generators shared by the
// tests.  Nothing here reuses the dynamic programs under test.

#ifndef EMBR_TESTS_ORACLES_H_
#define EMBR_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "embr/common.h"
#include "embr/lattice.h"

namespace embr::oracle {

using ArcSeq = std::vector<std::int32_t>;

/// Every complete path, by depth-first search from state 0.
inline std::vector<ArcSeq> enumerate_paths(const Lattice& lat) {
  std::vector<std::vector<std::int32_t>> out_arcs(lat.num_states);
  for (std::size_t a = 0; a < lat.arcs.size(); ++a)
    out_arcs[lat.arcs[a].src].push_back(static_cast<std::int32_t>(a));
  std::vector<ArcSeq> paths;
  ArcSeq cur;
  std::function<void(StateId)> walk = [&](StateId s) {
    if (std::find(lat.finals.begin(), lat.finals.end(), s) != lat.finals.end())
      paths.push_back(cur);
    for (std::int32_t a : out_arcs[s]) {
      cur.push_back(a);
      walk(lat.arcs[a].dst);
      cur.pop_back();
    }
  };
  walk(0);
  return paths;
}

inline double path_score(const Lattice& lat, const ArcSeq& p,
                         const ScaleConfig& scales = {}) {
  double s = 0.0;
  for (std::int32_t a : p) s += scales.score(lat.arcs[a]);
  return s;
}

inline double path_lm(const Lattice& lat, const ArcSeq& p) {
  double s = 0.0;
  for (std::int32_t a : p) s += lat.arcs[a].lm_logp;
  return s;
}

inline std::vector<std::string> path_words(const Lattice& lat, const ArcSeq& p) {
  std::vector<std::string> w;
  for (std::int32_t a : p)
    if (!lat.arcs[a].is_epsilon()) w.push_back(lat.arcs[a].label);
  return w;
}

inline std::int64_t path_edit_cost(const Lattice& lat, const ArcSeq& p) {
  std::int64_t c = 0;
  for (std::int32_t a : p) c += *lat.arcs[a].edit_cost;
  return c;
}

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Paths sorted best first; equal scores by lexicographic arc sequence.
inline std::vector<ArcSeq> sorted_paths(const Lattice& lat,
                                        const ScaleConfig& scales = {}) {
  auto paths = enumerate_paths(lat);
  std::stable_sort(paths.begin(), paths.end(), [&](const ArcSeq& a, const ArcSeq& b) {
    const double sa = path_score(lat, a, scales), sb = path_score(lat, b, scales);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return paths;
}

/// Minimum edit cost by exhaustive recursion over alignment operations.
inline int brute_force_distance(std::span<const std::string> hyp,
                                std::span<const std::string> ref) {
  if (hyp.empty()) return static_cast<int>(ref.size());
  if (ref.empty()) return static_cast<int>(hyp.size());
  const int sub = brute_force_distance(hyp.subspan(1), ref.subspan(1)) +
                  (hyp[0] != ref[0]);
  const int del = brute_force_distance(hyp, ref.subspan(1)) + 1;
  const int ins = brute_force_distance(hyp.subspan(1), ref) + 1;
  return std::min({sub, del, ins});
}

inline std::vector<std::string> random_words(Rng& rng,
                                             std::span<const std::string> vocab,
                                             std::size_t len) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(vocab[rng.below(vocab.size())]);
  return w;
}

struct DagOptions {
  int min_states = 2;
  int max_states = 8;
  int max_extra_arcs = 10;
  std::size_t max_paths = 200;
  double epsilon_prob = 0.15;
  double extra_final_prob = 0.15;
  double score_scale = 2.0;
  std::vector<std::string> vocab{"a", "b", "c", "d"};
};

inline std::size_t count_paths(const Lattice& lat) {
  // Assumes topologically numbered states, as random_dag produces; use
  // enumerate_paths for other lattices.
  std::vector<std::size_t> n(lat.num_states, 0);
  n[0] = 1;
  std::size_t total = 0;
  std::vector<std::vector<std::int32_t>> out_arcs(lat.num_states);
  for (std::size_t a = 0; a < lat.arcs.size(); ++a)
    out_arcs[lat.arcs[a].src].push_back(static_cast<std::int32_t>(a));
  for (StateId s = 0; s < lat.num_states; ++s) {
    if (lat.is_final(s)) total += n[s];
    for (std::int32_t a : out_arcs[s]) n[lat.arcs[a].dst] += n[s];
  }
  return total;
}

/// Random valid lattice with at most opt.max_paths paths.  A chain
/// 0 -> 1 -> ... -> N-1 keeps every state reachable and co-reachable; extra
/// forward arcs add alternatives.  Arc order is shuffled so index order and
/// topological order differ.
inline Lattice random_dag(Rng& rng, const DagOptions& opt = {}) {
  for (;;) {
    Lattice lat;
    lat.utt_id = "r";
    lat.num_states = opt.min_states +
        static_cast<StateId>(rng.below(opt.max_states - opt.min_states + 1));
    auto label = [&] {
      return rng.bernoulli(opt.epsilon_prob)
                 ? std::string(kEpsilon)
                 : opt.vocab[rng.below(opt.vocab.size())];
    };
    auto arc = [&](StateId s, StateId d) {
      Arc a;
      a.src = s;
      a.dst = d;
      a.label = label();
      a.am_logp = opt.score_scale * rng.normal();
      a.lm_logp = opt.score_scale * rng.normal();
      lat.arcs.push_back(std::move(a));
    };
    for (StateId s = 0; s + 1 < lat.num_states; ++s) arc(s, s + 1);
    const int extra = static_cast<int>(rng.below(opt.max_extra_arcs + 1));
    for (int i = 0; i < extra; ++i) {
      const StateId s = static_cast<StateId>(rng.below(lat.num_states - 1));
      const StateId d = s + 1 + static_cast<StateId>(rng.below(lat.num_states - 1 - s));
      arc(s, d);
    }
    for (StateId s = 0; s + 1 < lat.num_states; ++s)
      if (rng.bernoulli(opt.extra_final_prob)) lat.finals.push_back(s);
    lat.finals.push_back(lat.num_states - 1);
    for (std::size_t i = lat.arcs.size(); i > 1; --i)
      std::swap(lat.arcs[i - 1], lat.arcs[rng.below(i)]);
    if (count_paths(lat) <= opt.max_paths) return lat;
  }
}

}  // namespace embr::oracle

#endif  // EMBR_TESTS_ORACLES_H_
