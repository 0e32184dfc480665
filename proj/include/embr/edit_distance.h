// embr/edit_distance.h

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

#ifndef EMBR_EDIT_DISTANCE_H_
#define EMBR_EDIT_DISTANCE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embr/lattice.h"

namespace embr {

struct EditCounts {
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t substitutions = 0;
  std::int64_t matches = 0;

  std::int64_t total() const { return insertions + deletions + substitutions; }
  std::int64_t ref_length() const { return matches + deletions + substitutions; }
  std::int64_t hyp_length() const { return matches + insertions + substitutions; }

  EditCounts& operator+=(const EditCounts& o) {
    insertions += o.insertions;
    deletions += o.deletions;
    substitutions += o.substitutions;
    matches += o.matches;
    return *this;
  }
  bool operator==(const EditCounts&) const = default;
};

/// Unit-cost Levenshtein alignment of hyp against ref.  Among minimal
/// alignments the backtrace prefers match, then substitution, then deletion,
/// then insertion.  Words compare by exact string equality.
EditCounts edit_distance(std::span<const std::string> hyp,
                         std::span<const std::string> ref);

/// 100 * errors / ref_words.  Throws if ref_words is 0.
double wer(const EditCounts& counts, std::int64_t ref_words);

/// A lattice whose arcs carry exact edit-cost contributions against one
/// reference: summing edit_cost along any complete path gives that path's
/// Levenshtein distance to the reference.
struct AnnotatedLattice {
  Lattice lattice;
  /// Index of the source arc in the original lattice, or -1 for the
  /// epsilon arcs into the super-final state.
  std::vector<std::int32_t> arc_origin;
  /// Original state each annotated state expands.
  std::vector<StateId> state_origin;
  StateId super_final = -1;
};

/// Expands the lattice by carried Levenshtein rows.  Each annotated state is
/// an (original state, min-normalised DP row) pair; arcs pay the growth of
/// the row minimum and the remainder c[R] - min(c) is paid on an epsilon arc
/// into a single super-final state.  Equal pairs are merged.  No dominance
/// pruning is done, so the size can grow exponentially with the reference
/// length on highly ambiguous lattices; throws past max_states.
AnnotatedLattice annotate_lattice(const Lattice& lat,
                                  std::span<const std::string> ref,
                                  std::size_t max_states = 1000000);

/// Path of the original lattice closest to ref, by a dynamic program over
/// (state, reference position).  Ties go to the first candidate met when
/// states are visited in topological order and arcs in index order.
Path oracle_path(const Lattice& lat, std::span<const std::string> ref);

/// Edit counts of oracle_path.
EditCounts oracle_counts(const Lattice& lat, std::span<const std::string> ref);

}  // namespace embr

#endif  // EMBR_EDIT_DISTANCE_H_
