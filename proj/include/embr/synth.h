// embr/synth.h

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

#ifndef EMBR_SYNTH_H_
#define EMBR_SYNTH_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embr/lattice.h"
#include "embr/vocabulary.h"

namespace embr {

/// Parameters of the synthetic text generator and of the noisy lattices
/// built around its sentences.
struct SynthSpec {
  // Text generator: a class bigram.  Words are split round-robin into
  // num_classes classes and the next-word distribution depends only on the
  // class of the previous word (or on sentence start).  Each context ranks
  // the words by its own random permutation and assigns Zipf weights.
  std::size_t vocab_size = 100;
  int num_classes = 2;
  double zipf = 1.0;       // 0 = uniform
  double end_prob = 0.1;   // P(</s>) after any word; never right after <s>

  // Lattices: one slot per reference word.  Exact annotation grows
  // quickly with utterance length, so lattice references are drawn from the
  // generator conditioned on length <= max_ref_length (0 = unbounded).
  std::size_t max_ref_length = 10;
  int branching = 3;             // max word arcs per slot
  int confusion_size = 4;        // confusable words per vocabulary word
  double sub_prob = 0.4;         // each confusable word enters the slot
  double del_prob = 0.2;         // epsilon arc in the slot
  double ins_prob = 0.05;        // detour carrying an extra word
  double ref_include_prob = 1.0; // reference word present in its slot
  double am_ref_mean = 0.0;
  double am_sub_mean = -1.0;
  double am_del_mean = -2.0;
  double am_ins_mean = -1.0;
  double am_noise = 1.5;         // std dev of the additive noise

  std::uint64_t seed = 1;

  void check() const;
};

class TextGenerator {
 public:
  explicit TextGenerator(const SynthSpec& spec);

  const Vocabulary& vocab() const { return vocab_; }
  /// Words of the generator, without special tokens.
  const std::vector<std::string>& words() const { return words_; }

  std::vector<std::string> sample(Rng& rng) const;

  /// ln P(next | previous word), previous = -1 for sentence start; next is
  /// a word index or words().size() for </s>.
  double logprob(int previous, int next) const;

  /// Perplexity of the source over tokens including </s>: exp of expected
  /// sentence log-loss over expected sentence length, from the absorbing
  /// Markov chain over contexts.
  double analytic_perplexity() const;

 private:
  int context_of(int previous) const;

  SynthSpec spec_;
  Vocabulary vocab_;
  std::vector<std::string> words_;
  // dist_[context][w], w in [0, V] with V = </s>; context 0 is the start.
  std::vector<std::vector<double>> dist_;
  std::vector<std::vector<double>> cdf_;
};

struct Corpus {
  std::vector<std::vector<std::string>> train, valid, test;
};

/// Independent draws for each split, each split from its own random stream.
Corpus gen_corpus(const SynthSpec& spec, std::size_t train, std::size_t valid,
                  std::size_t test);

/// Reference transcripts from the generator with ids `<prefix>-NNNNN`.
std::vector<Transcript> gen_references(const SynthSpec& spec,
                                       std::size_t count,
                                       const std::string& prefix);

/// Confusion-network style lattices around each reference.  Reference arcs
/// score higher in expectation, but noise makes the 1-best wrong often.
std::vector<Lattice> gen_lattices(std::span<const Transcript> refs,
                                  const SynthSpec& spec);

}  // namespace embr

#endif  // EMBR_SYNTH_H_
