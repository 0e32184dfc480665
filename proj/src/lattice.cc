// embr/lattice.cc

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

#include "embr/lattice.h"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>

namespace embr {

bool Lattice::is_final(StateId s) const {
  return std::binary_search(finals.begin(), finals.end(), s);
}

std::vector<std::vector<std::int32_t>> outgoing_arcs(const Lattice& lat) {
  std::vector<std::vector<std::int32_t>> out(lat.num_states);
  for (std::size_t i = 0; i < lat.arcs.size(); ++i)
    out[lat.arcs[i].src].push_back(static_cast<std::int32_t>(i));
  return out;
}

std::vector<std::vector<std::int32_t>> incoming_arcs(const Lattice& lat) {
  std::vector<std::vector<std::int32_t>> in(lat.num_states);
  for (std::size_t i = 0; i < lat.arcs.size(); ++i)
    in[lat.arcs[i].dst].push_back(static_cast<std::int32_t>(i));
  return in;
}

std::vector<std::string> path_words(const Lattice& lat,
                                    std::span<const std::int32_t> arcs) {
  std::vector<std::string> words;
  for (std::int32_t a : arcs)
    if (!lat.arcs[a].is_epsilon()) words.push_back(lat.arcs[a].label);
  return words;
}

std::string Defect::describe() const {
  switch (kind) {
    case DefectKind::kNoStates: return "no states";
    case DefectKind::kNoFinal: return "no final state";
    case DefectKind::kCycle: return "cycle";
    case DefectKind::kUnreachable: return "unreachable: state " + std::to_string(state);
    case DefectKind::kDeadEnd: return "dead end: state " + std::to_string(state);
  }
  return "unknown defect";
}

namespace {

// Kahn's scheme; returns fewer than num_states entries when there is a cycle.
std::vector<StateId> kahn_order(const Lattice& lat) {
  std::vector<int> indegree(lat.num_states, 0);
  for (const Arc& a : lat.arcs) ++indegree[a.dst];
  auto out = outgoing_arcs(lat);
  std::priority_queue<StateId, std::vector<StateId>, std::greater<>> ready;
  for (StateId s = 0; s < lat.num_states; ++s)
    if (indegree[s] == 0) ready.push(s);
  std::vector<StateId> order;
  order.reserve(lat.num_states);
  while (!ready.empty()) {
    StateId s = ready.top();
    ready.pop();
    order.push_back(s);
    for (std::int32_t ai : out[s])
      if (--indegree[lat.arcs[ai].dst] == 0) ready.push(lat.arcs[ai].dst);
  }
  return order;
}

std::vector<char> final_mask(const Lattice& lat) {
  std::vector<char> mask(lat.num_states, 0);
  for (StateId f : lat.finals) mask[f] = 1;
  return mask;
}

std::vector<double> arc_scores(const Lattice& lat, const ScaleConfig& scales) {
  std::vector<double> s(lat.arcs.size());
  for (std::size_t i = 0; i < lat.arcs.size(); ++i)
    s[i] = scales.score(lat.arcs[i]);
  return s;
}

Path make_path(const Lattice& lat, std::vector<std::int32_t> arcs,
               double score) {
  Path p;
  p.words = path_words(lat, arcs);
  p.arcs = std::move(arcs);
  p.score = score;
  return p;
}

}  // namespace

std::vector<Defect> validate(const Lattice& lat) {
  std::vector<Defect> defects;
  if (lat.num_states <= 0) {
    defects.push_back({DefectKind::kNoStates});
    return defects;
  }
  if (lat.finals.empty()) defects.push_back({DefectKind::kNoFinal});
  if (kahn_order(lat).size() != static_cast<std::size_t>(lat.num_states))
    defects.push_back({DefectKind::kCycle});

  std::vector<char> fwd(lat.num_states, 0), bwd(lat.num_states, 0);
  auto out = outgoing_arcs(lat);
  auto in = incoming_arcs(lat);
  std::deque<StateId> queue{0};
  fwd[0] = 1;
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    for (std::int32_t ai : out[s]) {
      StateId d = lat.arcs[ai].dst;
      if (!fwd[d]) fwd[d] = 1, queue.push_back(d);
    }
  }
  for (StateId f : lat.finals) bwd[f] = 1, queue.push_back(f);
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    for (std::int32_t ai : in[s]) {
      StateId d = lat.arcs[ai].src;
      if (!bwd[d]) bwd[d] = 1, queue.push_back(d);
    }
  }
  for (StateId s = 0; s < lat.num_states; ++s) {
    if (!fwd[s]) defects.push_back({DefectKind::kUnreachable, s});
    else if (!bwd[s] && !lat.finals.empty())
      defects.push_back({DefectKind::kDeadEnd, s});
  }
  return defects;
}

void require_valid(const Lattice& lat) {
  auto defects = validate(lat);
  if (defects.empty()) return;
  std::string msg = "invalid lattice '" + lat.utt_id + "':";
  for (const Defect& d : defects) msg += " [" + d.describe() + "]";
  throw Error(msg);
}

std::vector<StateId> topological_order(const Lattice& lat) {
  auto order = kahn_order(lat);
  if (order.size() != static_cast<std::size_t>(lat.num_states))
    throw Error("cycle detected in lattice '" + lat.utt_id + "'");
  return order;
}

Path best_path(const Lattice& lat, const ScaleConfig& scales) {
  // Backward max-plus: the best suffix of each state is chosen among
  // "stop here" and its out-arcs in index order with a strict comparison,
  // which yields the lexicographically smallest optimal arc sequence.
  const auto order = topological_order(lat);
  const auto out = outgoing_arcs(lat);
  const auto finals = final_mask(lat);
  const auto score = arc_scores(lat, scales);
  std::vector<double> best(lat.num_states, kLogZero);
  std::vector<std::int32_t> choice(lat.num_states, -1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    StateId s = *it;
    if (finals[s]) best[s] = 0.0;
    for (std::int32_t ai : out[s]) {
      double v = score[ai] + best[lat.arcs[ai].dst];
      if (v > best[s]) best[s] = v, choice[s] = ai;
    }
  }
  if (best[0] == kLogZero)
    throw Error("no complete path in lattice '" + lat.utt_id + "'");
  std::vector<std::int32_t> arcs;
  for (StateId s = 0; choice[s] >= 0; s = lat.arcs[choice[s]].dst)
    arcs.push_back(choice[s]);
  return make_path(lat, std::move(arcs), best[0]);
}

std::vector<Path> nbest(const Lattice& lat, std::size_t n,
                        const ScaleConfig& scales) {
  if (n == 0) return {};
  struct Suffix {
    double score;
    std::vector<std::int32_t> arcs;
  };
  auto better = [](const Suffix& a, const Suffix& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.arcs < b.arcs;
  };
  const auto order = topological_order(lat);
  const auto out = outgoing_arcs(lat);
  const auto finals = final_mask(lat);
  const auto score = arc_scores(lat, scales);
  // Top-n suffixes per state, merged backwards from the successors' lists.
  std::vector<std::vector<Suffix>> top(lat.num_states);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    StateId s = *it;
    std::vector<Suffix> cand;
    if (finals[s]) cand.push_back({0.0, {}});
    for (std::int32_t ai : out[s]) {
      for (const Suffix& suf : top[lat.arcs[ai].dst]) {
        Suffix c{score[ai] + suf.score, {}};
        c.arcs.reserve(suf.arcs.size() + 1);
        c.arcs.push_back(ai);
        c.arcs.insert(c.arcs.end(), suf.arcs.begin(), suf.arcs.end());
        cand.push_back(std::move(c));
      }
    }
    std::size_t keep = std::min(n, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), better);
    cand.resize(keep);
    top[s] = std::move(cand);
  }
  std::vector<Path> paths;
  for (Suffix& suf : top[0])
    paths.push_back(make_path(lat, std::move(suf.arcs), suf.score));
  return paths;
}

std::vector<double> forward_logprobs(const Lattice& lat,
                                     std::span<const double> arc_scores,
                                     std::span<const StateId> order) {
  const auto in = incoming_arcs(lat);
  std::vector<double> alpha(lat.num_states, kLogZero);
  for (StateId s : order) {
    if (s == 0) {
      alpha[s] = 0.0;
      continue;
    }
    // Max-shifted log-sum-exp over incoming arcs.
    double mx = kLogZero;
    for (std::int32_t ai : in[s])
      mx = std::max(mx, alpha[lat.arcs[ai].src] + arc_scores[ai]);
    if (mx == kLogZero) continue;
    double sum = 0.0;
    for (std::int32_t ai : in[s])
      sum += std::exp(alpha[lat.arcs[ai].src] + arc_scores[ai] - mx);
    alpha[s] = mx + std::log(sum);
  }
  return alpha;
}

std::vector<double> backward_logprobs(const Lattice& lat,
                                      std::span<const double> arc_scores,
                                      std::span<const StateId> order) {
  const auto out = outgoing_arcs(lat);
  const auto finals = final_mask(lat);
  std::vector<double> beta(lat.num_states, kLogZero);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    StateId s = *it;
    double mx = finals[s] ? 0.0 : kLogZero;
    for (std::int32_t ai : out[s])
      mx = std::max(mx, arc_scores[ai] + beta[lat.arcs[ai].dst]);
    if (mx == kLogZero) continue;
    double sum = finals[s] ? std::exp(-mx) : 0.0;
    for (std::int32_t ai : out[s])
      sum += std::exp(arc_scores[ai] + beta[lat.arcs[ai].dst] - mx);
    beta[s] = mx + std::log(sum);
  }
  return beta;
}

double total_logprob(const Lattice& lat, const ScaleConfig& scales) {
  const auto order = topological_order(lat);
  const auto score = arc_scores(lat, scales);
  const auto beta = backward_logprobs(lat, score, order);
  if (beta[0] == kLogZero)
    throw Error("no complete path in lattice '" + lat.utt_id + "'");
  return beta[0];
}

std::vector<Path> sample_paths(const Lattice& lat, std::size_t k,
                               const ScaleConfig& scales, std::uint64_t seed) {
  const auto order = topological_order(lat);
  const auto out = outgoing_arcs(lat);
  const auto finals = final_mask(lat);
  const auto score = arc_scores(lat, scales);
  const auto beta = backward_logprobs(lat, score, order);
  if (beta[0] == kLogZero)
    throw Error("no complete path in lattice '" + lat.utt_id + "'");

  Rng rng(seed, "sample_paths");
  std::vector<Path> paths;
  paths.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::int32_t> arcs;
    double total = 0.0;
    StateId s = 0;
    while (true) {
      // Options in fixed order: stop (if final), then out-arcs by index.
      double u = rng.uniform();
      double acc = finals[s] ? std::exp(-beta[s]) : 0.0;
      if (finals[s] && u < acc) break;
      std::int32_t pick = -1;
      for (std::int32_t ai : out[s]) {
        double w = score[ai] + beta[lat.arcs[ai].dst] - beta[s];
        if (w == kLogZero) continue;
        pick = ai;
        acc += std::exp(w);
        if (u < acc) break;
      }
      if (pick < 0) break;  // final state with rounding slack
      arcs.push_back(pick);
      total += score[pick];
      s = lat.arcs[pick].dst;
    }
    paths.push_back(make_path(lat, std::move(arcs), total));
  }
  return paths;
}

}  // namespace embr
