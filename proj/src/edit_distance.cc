// embr/edit_distance.cc

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

#include "embr/edit_distance.h"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

namespace embr {

EditCounts edit_distance(std::span<const std::string> hyp,
                         std::span<const std::string> ref) {
  const std::size_t H = hyp.size(), R = ref.size();
  std::vector<std::int32_t> d((H + 1) * (R + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::int32_t& {
    return d[i * (R + 1) + j];
  };
  for (std::size_t i = 0; i <= H; ++i) at(i, 0) = static_cast<std::int32_t>(i);
  for (std::size_t j = 0; j <= R; ++j) at(0, j) = static_cast<std::int32_t>(j);
  for (std::size_t i = 1; i <= H; ++i)
    for (std::size_t j = 1; j <= R; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] != ref[j - 1]),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});

  EditCounts c;
  std::size_t i = H, j = R;
  while (i > 0 || j > 0) {
    const std::int32_t cur = at(i, j);
    if (i > 0 && j > 0 && hyp[i - 1] == ref[j - 1] && at(i - 1, j - 1) == cur) {
      ++c.matches, --i, --j;
    } else if (i > 0 && j > 0 && at(i - 1, j - 1) + 1 == cur) {
      ++c.substitutions, --i, --j;
    } else if (j > 0 && at(i, j - 1) + 1 == cur) {
      ++c.deletions, --j;
    } else {
      ++c.insertions, --i;
    }
  }
  return c;
}

double wer(const EditCounts& counts, std::int64_t ref_words) {
  if (ref_words <= 0) throw Error("wer: reference word count must be positive");
  return 100.0 * static_cast<double>(counts.total()) /
         static_cast<double>(ref_words);
}

AnnotatedLattice annotate_lattice(const Lattice& lat,
                                  std::span<const std::string> ref,
                                  std::size_t max_states) {
  require_valid(lat);
  const std::size_t R = ref.size();

  // Reference positions as small ints; -1 never matches.
  std::unordered_map<std::string, std::int32_t> ref_ids;
  std::vector<std::int32_t> ref_seq(R);
  for (std::size_t j = 0; j < R; ++j)
    ref_seq[j] = ref_ids.emplace(ref[j], static_cast<std::int32_t>(ref_ids.size()))
                     .first->second;
  std::vector<std::int32_t> arc_word(lat.arcs.size(), -1);
  for (std::size_t a = 0; a < lat.arcs.size(); ++a) {
    auto it = ref_ids.find(lat.arcs[a].label);
    if (it != ref_ids.end()) arc_word[a] = it->second;
  }

  using Row = std::vector<std::int32_t>;
  std::map<std::pair<StateId, Row>, StateId> index;
  std::vector<const Row*> rows;  // row of each annotated state
  std::vector<std::vector<StateId>> expansions(lat.num_states);

  AnnotatedLattice out;
  out.lattice.utt_id = lat.utt_id;
  auto state_of = [&](StateId orig, Row row) {
    auto [it, inserted] =
        index.emplace(std::make_pair(orig, std::move(row)),
                      static_cast<StateId>(rows.size()));
    if (inserted) {
      if (rows.size() >= max_states)
        throw Error("annotation of " + lat.utt_id + " exceeds " +
                    std::to_string(max_states) + " states");
      rows.push_back(&it->first.second);
      out.state_origin.push_back(orig);
      expansions[orig].push_back(it->second);
    }
    return it->second;
  };

  Row init(R + 1);
  for (std::size_t j = 0; j <= R; ++j) init[j] = static_cast<std::int32_t>(j);
  state_of(0, init);

  struct Pending {
    StateId src;
    std::int32_t cost;
  };
  std::vector<Pending> finals;
  const auto out_arcs = outgoing_arcs(lat);
  Row next(R + 1);
  for (StateId s : topological_order(lat)) {
    for (std::size_t e = 0; e < expansions[s].size(); ++e) {
      const StateId from = expansions[s][e];
      for (std::int32_t ai : out_arcs[s]) {
        const Arc& arc = lat.arcs[ai];
        const Row& row = *rows[from];
        std::int32_t cost = 0;
        if (arc.is_epsilon()) {
          next = row;
        } else {
          // One hypothesis word: column update of the Levenshtein table.
          const std::int32_t w = arc_word[ai];
          next[0] = row[0] + 1;
          for (std::size_t j = 1; j <= R; ++j)
            next[j] = std::min({row[j - 1] + (w != ref_seq[j - 1]),
                                next[j - 1] + 1, row[j] + 1});
          cost = *std::min_element(next.begin(), next.end());
          for (auto& v : next) v -= cost;
        }
        const StateId to = state_of(arc.dst, next);
        Arc na = arc;
        na.src = from;
        na.dst = to;
        na.edit_cost = cost;
        out.lattice.arcs.push_back(std::move(na));
        out.arc_origin.push_back(ai);
      }
      if (lat.is_final(s)) finals.push_back({from, (*rows[from])[R]});
    }
  }

  out.super_final = static_cast<StateId>(rows.size());
  out.state_origin.push_back(-1);
  for (const Pending& p : finals) {
    Arc na;
    na.src = p.src;
    na.dst = out.super_final;
    na.label = std::string(kEpsilon);
    na.edit_cost = p.cost;
    out.lattice.arcs.push_back(std::move(na));
    out.arc_origin.push_back(-1);
  }
  out.lattice.num_states = out.super_final + 1;
  out.lattice.finals = {out.super_final};
  return out;
}

Path oracle_path(const Lattice& lat, std::span<const std::string> ref) {
  require_valid(lat);
  const std::size_t R = ref.size();
  constexpr std::int32_t kInf = std::numeric_limits<std::int32_t>::max() / 2;
  // Back pointer: arc taken into (state, j) and the column it came from;
  // arc -1 marks a deletion within the state.
  struct Back {
    std::int32_t arc = -1;
    std::int32_t col = -1;
  };
  const std::size_t S = static_cast<std::size_t>(lat.num_states);
  std::vector<std::int32_t> cost(S * (R + 1), kInf);
  std::vector<Back> back(S * (R + 1));
  auto at = [&](StateId s, std::size_t j) { return static_cast<std::size_t>(s) * (R + 1) + j; };
  auto relax = [&](StateId s, std::size_t j, std::int32_t c, Back b) {
    if (c < cost[at(s, j)]) {
      cost[at(s, j)] = c;
      back[at(s, j)] = b;
    }
  };
  cost[at(0, 0)] = 0;
  const auto out_arcs = outgoing_arcs(lat);
  for (StateId s : topological_order(lat)) {
    for (std::size_t j = 1; j <= R; ++j)
      relax(s, j, cost[at(s, j - 1)] + 1, {-1, static_cast<std::int32_t>(j - 1)});
    for (std::int32_t ai : out_arcs[s]) {
      const Arc& arc = lat.arcs[ai];
      for (std::size_t j = 0; j <= R; ++j) {
        const std::int32_t c = cost[at(s, j)];
        if (c >= kInf) continue;
        const auto col = static_cast<std::int32_t>(j);
        if (arc.is_epsilon()) {
          relax(arc.dst, j, c, {ai, col});
          continue;
        }
        if (j < R) relax(arc.dst, j + 1, c + (arc.label != ref[j]), {ai, col});
        relax(arc.dst, j, c + 1, {ai, col});
      }
    }
  }
  StateId end = -1;
  for (StateId f : lat.finals)
    if (end < 0 || cost[at(f, R)] < cost[at(end, R)]) end = f;
  if (end < 0 || cost[at(end, R)] >= kInf) throw Error("oracle: no complete path");

  Path p;
  StateId s = end;
  std::size_t j = R;
  while (s != 0 || j != 0) {
    const Back b = back[at(s, j)];
    if (b.arc >= 0) {
      p.arcs.push_back(b.arc);
      s = lat.arcs[b.arc].src;
    }
    j = static_cast<std::size_t>(b.col);
  }
  std::reverse(p.arcs.begin(), p.arcs.end());
  p.words = path_words(lat, p.arcs);
  for (std::int32_t ai : p.arcs) p.score += ScaleConfig{}.score(lat.arcs[ai]);
  return p;
}

EditCounts oracle_counts(const Lattice& lat, std::span<const std::string> ref) {
  return edit_distance(oracle_path(lat, ref).words, ref);
}

}  // namespace embr
