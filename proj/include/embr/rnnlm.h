// embr/rnnlm.h

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

#ifndef EMBR_RNNLM_H_
#define EMBR_RNNLM_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "embr/gru.h"
#include "embr/lattice.h"
#include "embr/ngram.h"
#include "embr/vocabulary.h"

namespace embr {

using Weights = GruWeights<double>;
using Vector = Weights::Vector;
using StepCache = GruStepCache<double>;
using Sentence = std::vector<WordId>;

/// A GRU language model whose raw output score U[w].h + b[w] is used
/// directly as ln P(w | h).
struct RnnLmParams {
  static constexpr std::uint32_t kVersion = 1;

  Vocabulary vocab;
  Weights weights;

  Eigen::Index hidden() const { return weights.hidden(); }
  bool operator==(const RnnLmParams&) const = default;
};

/// Small uniform initialisation in [-scale, scale]; output biases start at
/// -ln V so the untrained model is roughly self-normalised.
RnnLmParams init_rnnlm(Vocabulary vocab, int hidden, std::uint64_t seed,
                       double scale = 0.1);

/// Checkpoint: little-endian binary header (magic, version, d, V), the
/// vocabulary, then every tensor as float64 in declaration order.
void save_checkpoint(std::ostream& out, const RnnLmParams& params);
RnnLmParams load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const RnnLmParams& params);
RnnLmParams load_checkpoint_file(const std::string& path);

/// Hidden state after consuming <s> from the zero state.
Vector start_hidden(const RnnLmParams& params, StepCache* cache = nullptr);

inline Vector rnn_step(const RnnLmParams& p, const Vector& h, WordId word,
                       StepCache* cache = nullptr) {
  return gru_step(p.weights, h, word, cache);
}

/// Self-normalised score, read as ln P(word | h).
inline double score_word(const RnnLmParams& p, const Vector& h, WordId word) {
  return p.weights.output.row(word).dot(h) + p.weights.output_bias(word);
}

/// Sum of score_word over </s>-terminated sentence.
double sentence_score(const RnnLmParams& p, std::span<const WordId> words);

/// exp(-mean log softmax probability) over every token and </s>.  Uses the
/// true softmax, not the raw scores.
double perplexity(const RnnLmParams& p, std::span<const Sentence> corpus);

// ---------------------------------------------------------------------------
// Noise contrastive estimation

struct NoiseDistribution {
  std::vector<double> prob;
  std::vector<double> log_prob;
  std::vector<double> cdf;
  int samples = 10;  // k noise draws per true token

  /// Corpus unigram over tokens and </s>, floored and renormalised.
  static NoiseDistribution from_corpus(std::span<const Sentence> corpus,
                                       const Vocabulary& vocab, int samples,
                                       double floor = 1e-6);
  WordId sample(Rng& rng) const;
};

struct NceResult {
  double loss = 0.0;
  Weights grads;
  std::size_t tokens = 0;
};

/// Summed NCE loss over every prediction (words and </s>) of the batch and
/// its exact gradient by backpropagation through each whole sentence.
/// Noise words are drawn from `noise` with a generator seeded by `seed`.
NceResult nce_loss_and_grads(const RnnLmParams& p,
                             std::span<const Sentence> batch,
                             const NoiseDistribution& noise,
                             std::uint64_t seed);

struct NceConfig {
  int epochs = 15;
  double learning_rate = 1.0;   // per-token mean gradient
  std::size_t batch_sentences = 16;
  int noise_samples = 10;
  double decay_factor = 4.0;    // applied when validation PPL stalls
  double min_improvement = 1.0; // absolute PPL improvement that counts
  double max_grad_norm = 5.0;   // <= 0 disables clipping
  std::uint64_t seed = 1;
};

struct NceEpoch {
  int epoch = 0;
  double train_loss = 0.0;  // per token
  double valid_ppl = 0.0;
  double learning_rate = 0.0;
};

/// SGD on the NCE loss; learning rate divided by decay_factor after any
/// epoch whose validation PPL did not improve by min_improvement.  Returns
/// the checkpoint with the best validation PPL (the initial one counts).
RnnLmParams train_nce(const RnnLmParams& init, std::span<const Sentence> train,
                      std::span<const Sentence> valid, const NceConfig& config,
                      std::vector<NceEpoch>* log = nullptr);

// ---------------------------------------------------------------------------
// Lattice rescoring

struct Interpolation {
  double w_rnn = 0.9;
  double w_ng = 0.1;
};

/// Per-state choices and activations of one rescoring pass.
struct RescoreTrace {
  std::vector<Vector> hidden;              // per expanded state
  std::vector<std::int32_t> chosen_arc;    // incoming arc kept; -1 at start
  std::vector<StepCache> step;             // valid where chosen arc is a word
  StepCache start_step;                    // consumption of <s>
  std::vector<WordId> arc_word;            // rnn id scored on the arc, or -1
  std::vector<double> rnn_score;           // per arc (0 where arc_word < 0)
  std::vector<double> ngram_score;         // per arc
  std::vector<double> rnn_share;           // d lm_logp / d rnn_score
};

/// Replaces every word and sentence-end arc's lm_logp with
/// ln(w_rnn e^rnn + w_ng e^ngram).  Each state carries one hidden state,
/// the one propagated along its best incoming arc under the running
/// combined score (ties: smallest arc index); epsilon arcs pass it through
/// unchanged.  If frozen_tree is given it dictates the choices instead.
Lattice rescore_lattice(const ExpandedLattice& expanded,
                        const RnnLmParams& params, const NGramModel& ngram,
                        const Interpolation& weights,
                        const ScaleConfig& scales = {},
                        RescoreTrace* trace = nullptr,
                        std::span<const std::int32_t> frozen_tree = {});

/// Backpropagates per-arc d loss / d lm_logp through the kept history tree
/// into grads.
void rescore_backward(const ExpandedLattice& expanded,
                      const RnnLmParams& params, const RescoreTrace& trace,
                      std::span<const double> d_lm, Weights* grads);

}  // namespace embr

#endif  // EMBR_RNNLM_H_
