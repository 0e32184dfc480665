// embr/ngram.h

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

#ifndef EMBR_NGRAM_H_
#define EMBR_NGRAM_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "embr/lattice.h"
#include "embr/vocabulary.h"

namespace embr {

/// Most recent word ids, oldest first; never longer than order - 1.
using HistoryState = std::vector<WordId>;

/// Backoff n-gram model.  Probabilities and backoff weights are kept in
/// log10 exactly as read from ARPA text; queries answer in natural log.
class NGramModel {
 public:
  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
  };

  NGramModel() = default;
  NGramModel(int order, Vocabulary vocab);

  int order() const { return order_; }
  const Vocabulary& vocab() const { return vocab_; }

  /// Natural-log probability used for words the model cannot score at all
  /// (no unigram and no <unk>).
  double unknown_floor() const { return unknown_floor_; }
  void set_unknown_floor(double ln_prob) { unknown_floor_ = ln_prob; }

  /// Inserts or replaces an entry; ngram.size() selects the table.
  void set(std::span<const WordId> ngram, Entry entry);
  const Entry* find(std::span<const WordId> ngram) const;
  /// Declared entry count per order (index 0 = unigrams).
  std::vector<std::size_t> counts() const;

  /// ln P(word | history) by the backoff recursion.  Only the last
  /// order - 1 words of history are used.
  double logprob(WordId word, std::span<const WordId> history) const;
  double logprob(std::string_view word, std::span<const WordId> history) const;

  /// Word id for lookups: the word, else <unk>, else -1.
  WordId lookup(std::string_view word) const;

  HistoryState initial_history() const;
  HistoryState advance(std::span<const WordId> history, WordId word) const;

  /// ln P(words </s> | <s>).
  double sentence_logprob(std::span<const std::string> words) const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<WordId>& k) const noexcept;
  };
  using Table = std::unordered_map<std::vector<WordId>, Entry, KeyHash>;

  double log10_prob(WordId word, std::span<const WordId> history) const;

  int order_ = 0;
  Vocabulary vocab_;
  std::vector<Table> tables_;
  double unknown_floor_ = -23.025850929940457;  // ln 1e-10
};

NGramModel load_arpa(std::istream& in);
NGramModel load_arpa_file(const std::string& path);
void write_arpa(std::ostream& out, const NGramModel& model);

/// Add-one estimate of a full unigram or bigram table over vocab from a
/// corpus.  Every n-gram is listed, so no backoff is ever taken.
NGramModel estimate_add_one(std::span<const std::vector<std::string>> corpus,
                            const Vocabulary& vocab, int order);

enum class ArcKind : std::uint8_t { kWord, kEpsilon, kSentenceEnd };

/// Lattice whose states are split by n-gram history.
struct ExpandedLattice {
  Lattice lattice;
  std::vector<std::int32_t> arc_origin;  // -1 for sentence-end arcs
  std::vector<ArcKind> arc_kind;
  std::vector<StateId> state_origin;     // -1 for the super-final state
  std::vector<HistoryState> history;
  int order = 0;
  StateId super_final = -1;
};

/// Splits states by the last order - 1 words and replaces every arc's
/// lm_logp by the model's conditional log-probability (epsilon arcs get 0).
/// Each final (state, history) gains an epsilon arc carrying ln P(</s>|h)
/// into one super-final state.
ExpandedLattice expand_lattice(const Lattice& lat, const NGramModel& model);

}  // namespace embr

#endif  // EMBR_NGRAM_H_
