// embr/embr.h

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

#ifndef EMBR_EMBR_H_
#define EMBR_EMBR_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "embr/edit_distance.h"
#include "embr/lattice.h"
#include "embr/ngram.h"
#include "embr/rnnlm.h"

namespace embr {

/// Forward-backward quantities of the expected edit distance.  Loss
/// accumulators are kept as conditional expectations next to the log
/// probabilities, so every update is a convex combination.
struct ExpectationStats {
  std::vector<double> alpha;       // log mass of prefixes ending in a state
  std::vector<double> alpha_loss;  // E[prefix loss | prefix ends in state]
  std::vector<double> beta;        // log mass of suffixes leaving a state
  std::vector<double> beta_loss;   // E[suffix loss | suffix leaves state]
  std::vector<double> posterior;   // gamma(a)
  std::vector<double> arc_loss;    // r(a) = E[L | path uses a]
  double log_total = kLogZero;
  double expected_loss = 0.0;
};

/// Expected edit cost sum over the path posterior of an annotated lattice,
/// with arc scores given explicitly.
ExpectationStats expected_edit_distance(const Lattice& annotated,
                                        std::span<const double> arc_scores);
ExpectationStats expected_edit_distance(const Lattice& annotated,
                                        const ScaleConfig& scales);
inline ExpectationStats expected_edit_distance(const AnnotatedLattice& a,
                                               const ScaleConfig& scales) {
  return expected_edit_distance(a.lattice, scales);
}

/// dE[L]/ds(a) = gamma(a) (r(a) - E[L]) for every arc.
std::vector<double> embr_arc_gradients(const ExpectationStats& stats);

/// Mean path edit cost over k posterior samples.
double sampled_embr(const Lattice& annotated, std::size_t k,
                    const ScaleConfig& scales, std::uint64_t seed);
/// Edit cost averaged over the n best paths with renormalised posteriors.
double nbest_embr(const Lattice& annotated, std::size_t n,
                  const ScaleConfig& scales);

// ---------------------------------------------------------------------------
// Fine-tuning

struct TrainConfig {
  double alpha = 0.25;           // weight of the NCE term
  double learning_rate = 0.01;
  std::size_t batch_size = 32;   // lattices per batch
  std::size_t batch_states = 0;  // if > 0, batch by summed state count instead
  int epochs = 3;
  std::uint64_t seed = 1;
  int noise_samples = 10;
  ScaleConfig scales;
  Interpolation interpolation;

  void check() const;
};

/// One training lattice, expanded with the n-gram model and then annotated
/// against its reference.
struct TrainingItem {
  ExpandedLattice expanded;
  AnnotatedLattice annotated;  // of expanded.lattice
  std::vector<std::string> reference;
  Sentence reference_ids;      // in the RNNLM vocabulary

  std::size_t num_states() const {
    return static_cast<std::size_t>(annotated.lattice.num_states);
  }
};

TrainingItem make_training_item(const Lattice& lat,
                                std::span<const std::string> reference,
                                const NGramModel& ngram,
                                const Vocabulary& rnn_vocab);

struct LossResult {
  double embr = 0.0;   // summed E[L]
  double nce = 0.0;    // summed NCE loss on the references
  double total = 0.0;  // embr + alpha * nce
  Weights grads;
  /// Kept-history tree of each lattice, usable as frozen_trees.
  std::vector<std::vector<std::int32_t>> trees;
};

/// L_EMBR + alpha L_NCE over a batch and its gradient.  History selection in
/// rescoring is not differentiated; pass frozen_trees to pin it.
LossResult total_loss(std::span<const TrainingItem> batch,
                      const RnnLmParams& params, const NGramModel& ngram,
                      const NoiseDistribution& noise, const TrainConfig& config,
                      std::uint64_t noise_seed, bool want_grads = true,
                      std::span<const std::vector<std::int32_t>> frozen_trees = {});
LossResult total_loss(std::span<const TrainingItem* const> batch,
                      const RnnLmParams& params, const NGramModel& ngram,
                      const NoiseDistribution& noise, const TrainConfig& config,
                      std::uint64_t noise_seed, bool want_grads = true,
                      std::span<const std::vector<std::int32_t>> frozen_trees = {});

/// Lattice indices grouped into batches of similar size: sorted by state
/// count, then cut every batch_size lattices (or when the summed state
/// count reaches batch_states).
std::vector<std::vector<std::size_t>> make_batches(
    std::span<const TrainingItem> items, const TrainConfig& config);

/// Corpus counts of the 1-best rescored paths against the references.
EditCounts rescoring_counts(std::span<const TrainingItem> items,
                            const RnnLmParams& params, const NGramModel& ngram,
                            const TrainConfig& config);

struct EpochMetrics {
  int epoch = 0;
  std::size_t step = 0;
  double loss_embr = 0.0;
  double loss_nce = 0.0;
  double train_expected_wer = 0.0;
  double test_wer = 0.0;  // NaN when no test set was given
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const EpochMetrics& m);

/// SGD on total_loss.  Emits one metrics row before training (epoch 0) and
/// one after each epoch.
RnnLmParams finetune_embr(const RnnLmParams& params,
                          std::span<const TrainingItem> train,
                          std::span<const TrainingItem> test,
                          const NGramModel& ngram, const TrainConfig& config,
                          std::vector<EpochMetrics>* metrics = nullptr,
                          const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace embr

#endif  // EMBR_EMBR_H_
