// embr/lattice.h

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

#ifndef EMBR_LATTICE_H_
#define EMBR_LATTICE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embr/common.h"

namespace embr {

using StateId = std::int32_t;

/// Reserved label for arcs that emit no word.
inline constexpr std::string_view kEpsilon = "<eps>";

struct Arc {
  StateId src = 0;
  StateId dst = 0;
  std::string label;
  double am_logp = 0.0;  // natural log, higher is better
  double lm_logp = 0.0;
  /// Present only on arcs of edit-cost annotated lattices.
  std::optional<std::int32_t> edit_cost;

  bool is_epsilon() const { return label == kEpsilon; }
};

/// Acyclic word graph.  State 0 is the start; paths end at any final state.
/// There are no final weights: anything that must be paid at the end of a
/// sentence goes on an epsilon arc into a dedicated final state.
struct Lattice {
  std::string utt_id;
  StateId num_states = 0;
  std::vector<Arc> arcs;
  std::vector<StateId> finals;  // sorted, unique

  bool is_final(StateId s) const;
  bool annotated() const { return !arcs.empty() && arcs.front().edit_cost.has_value(); }
};

/// Weights used to combine an arc's acoustic and LM scores:
///   score(a) = posterior_scale * (am_scale * am_logp + lm_scale * lm_logp).
struct ScaleConfig {
  double am_scale = 1.0;
  double lm_scale = 1.0;
  double posterior_scale = 1.0;

  double score(const Arc& arc) const {
    return posterior_scale * (am_scale * arc.am_logp + lm_scale * arc.lm_logp);
  }
};

struct Path {
  std::vector<std::int32_t> arcs;
  std::vector<std::string> words;  // epsilons removed
  double score = 0.0;
};

/// Arc indices leaving each state, in increasing index order.
std::vector<std::vector<std::int32_t>> outgoing_arcs(const Lattice& lat);
/// Arc indices entering each state, in increasing index order.
std::vector<std::vector<std::int32_t>> incoming_arcs(const Lattice& lat);

std::vector<std::string> path_words(const Lattice& lat,
                                    std::span<const std::int32_t> arcs);

// ---------------------------------------------------------------------------
// Text format
//
//   UTT <utt_id>
//   S <num_states>
//   A <src> <dst> <label> <am_logp> <lm_logp> [<edit_cost>]
//   F <state>
//   END
//
// Lines starting with '#' are comments.  A file may hold any number of
// blocks.  Writing is canonical: arcs sorted by (src, dst, label), finals
// ascending, reals with 17 significant digits.

class LatticeParseError : public Error {
 public:
  LatticeParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::vector<Lattice> read_lattices(std::istream& in);
std::vector<Lattice> read_lattices_file(const std::string& path);
/// Parses text holding exactly one lattice block.
Lattice parse_lattice(std::string_view text);

void write_lattice(std::ostream& out, const Lattice& lat);
std::string write_lattice(const Lattice& lat);
void write_lattices_file(const std::string& path, std::span<const Lattice> lats);

/// Formats a real the way the lattice writer does (17 significant digits,
/// locale independent).
std::string format_real(double v);
double parse_real(std::string_view s);

/// Reference transcripts: one `<utt_id>\t<words>` line per utterance.
struct Transcript {
  std::string utt_id;
  std::vector<std::string> words;
};
std::vector<Transcript> read_transcripts(std::istream& in);
std::vector<Transcript> read_transcripts_file(const std::string& path);
void write_transcripts(std::ostream& out, std::span<const Transcript> ts);

std::vector<std::string> split_words(std::string_view line);

// ---------------------------------------------------------------------------
// Structure

enum class DefectKind { kNoStates, kNoFinal, kCycle, kUnreachable, kDeadEnd };

struct Defect {
  DefectKind kind;
  StateId state = -1;  // for kUnreachable / kDeadEnd

  bool operator==(const Defect&) const = default;
  std::string describe() const;
};

/// Empty iff the lattice is acyclic, every state is reachable from 0 and
/// reaches a final state, and there is at least one final state.
std::vector<Defect> validate(const Lattice& lat);
/// Throws Error listing the defects, if any.
void require_valid(const Lattice& lat);

/// Kahn's algorithm, smallest ready state first.  Throws on a cycle.
std::vector<StateId> topological_order(const Lattice& lat);

// ---------------------------------------------------------------------------
// Paths and probabilities

/// Highest scoring complete path.  Ties go to the lexicographically smaller
/// arc-index sequence (stopping at a final state counts as the empty suffix).
Path best_path(const Lattice& lat, const ScaleConfig& scales = {});

/// Up to n distinct complete paths, best first, ties as in best_path.
std::vector<Path> nbest(const Lattice& lat, std::size_t n,
                        const ScaleConfig& scales = {});

/// log of the summed exp(score) over all complete paths.
double total_logprob(const Lattice& lat, const ScaleConfig& scales = {});

/// Log-sum of scores of all paths from state 0 to each state.
std::vector<double> forward_logprobs(const Lattice& lat,
                                     std::span<const double> arc_scores,
                                     std::span<const StateId> order);
/// Log-sum of scores of all paths from each state to a final state.
std::vector<double> backward_logprobs(const Lattice& lat,
                                      std::span<const double> arc_scores,
                                      std::span<const StateId> order);

/// k independent draws from the path posterior, deterministic in `seed`.
std::vector<Path> sample_paths(const Lattice& lat, std::size_t k,
                               const ScaleConfig& scales, std::uint64_t seed);

}  // namespace embr

#endif  // EMBR_LATTICE_H_
