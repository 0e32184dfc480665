// embr/finetune.cc

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

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>

#include "embr/embr.h"

namespace embr {

void TrainConfig::check() const {
  if (!(alpha >= 0)) throw Error("alpha must be non-negative");
  if (!(learning_rate > 0)) throw Error("learning rate must be positive");
  if (batch_size == 0 && batch_states == 0)
    throw Error("batch size must be positive");
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (noise_samples < 1) throw Error("NCE needs at least one noise sample");
}

TrainingItem make_training_item(const Lattice& lat,
                                std::span<const std::string> reference,
                                const NGramModel& ngram,
                                const Vocabulary& rnn_vocab) {
  TrainingItem item;
  item.expanded = expand_lattice(lat, ngram);
  item.annotated = annotate_lattice(item.expanded.lattice, reference);
  item.reference.assign(reference.begin(), reference.end());
  item.reference_ids = rnn_vocab.encode(reference);
  return item;
}

LossResult total_loss(std::span<const TrainingItem> batch,
                      const RnnLmParams& params, const NGramModel& ngram,
                      const NoiseDistribution& noise, const TrainConfig& config,
                      std::uint64_t noise_seed, bool want_grads,
                      std::span<const std::vector<std::int32_t>> frozen_trees) {
  std::vector<const TrainingItem*> ptrs;
  for (const auto& it : batch) ptrs.push_back(&it);
  return total_loss(ptrs, params, ngram, noise, config, noise_seed, want_grads,
                    frozen_trees);
}

LossResult total_loss(std::span<const TrainingItem* const> batch,
                      const RnnLmParams& params, const NGramModel& ngram,
                      const NoiseDistribution& noise, const TrainConfig& config,
                      std::uint64_t noise_seed, bool want_grads,
                      std::span<const std::vector<std::int32_t>> frozen_trees) {
  if (batch.empty()) throw Error("total_loss: empty batch");
  if (!frozen_trees.empty() && frozen_trees.size() != batch.size())
    throw Error("total_loss: one frozen tree per lattice required");
  LossResult res;
  if (want_grads) res.grads = params.weights.zeros_like();
  // s(a) = kappa (am_scale am + lm_scale lm), so ds/dlm is constant.
  const double d_score_d_lm =
      config.scales.posterior_scale * config.scales.lm_scale;

  std::vector<Sentence> refs;
  refs.reserve(batch.size());
  RescoreTrace trace;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TrainingItem& item = *batch[i];
    const Lattice rescored = rescore_lattice(
        item.expanded, params, ngram, config.interpolation, config.scales,
        &trace,
        frozen_trees.empty() ? std::span<const std::int32_t>()
                             : std::span<const std::int32_t>(frozen_trees[i]));

    const Lattice& ann = item.annotated.lattice;
    const auto& origin = item.annotated.arc_origin;
    std::vector<double> scores(ann.arcs.size(), 0.0);
    for (std::size_t a = 0; a < ann.arcs.size(); ++a)
      if (origin[a] >= 0) scores[a] = config.scales.score(rescored.arcs[origin[a]]);
    const ExpectationStats st = expected_edit_distance(ann, scores);
    res.embr += st.expected_loss;

    if (want_grads) {
      const auto g = embr_arc_gradients(st);
      std::vector<double> d_lm(rescored.arcs.size(), 0.0);
      for (std::size_t a = 0; a < ann.arcs.size(); ++a)
        if (origin[a] >= 0) d_lm[origin[a]] += g[a] * d_score_d_lm;
      rescore_backward(item.expanded, params, trace, d_lm, &res.grads);
    }
    res.trees.push_back(std::move(trace.chosen_arc));
    refs.push_back(item.reference_ids);
  }

  NceResult nce = nce_loss_and_grads(params, refs, noise, noise_seed);
  res.nce = nce.loss;
  res.total = res.embr + config.alpha * res.nce;
  if (want_grads && config.alpha > 0) res.grads.add_scaled(config.alpha, nce.grads);
  return res;
}

std::vector<std::vector<std::size_t>> make_batches(
    std::span<const TrainingItem> items, const TrainConfig& config) {
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return items[a].num_states() < items[b].num_states();
  });
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> cur;
  std::size_t states = 0;
  for (std::size_t i : idx) {
    cur.push_back(i);
    states += items[i].num_states();
    const bool full = config.batch_states > 0 ? states >= config.batch_states
                                              : cur.size() >= config.batch_size;
    if (full) {
      batches.push_back(std::move(cur));
      cur.clear();
      states = 0;
    }
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

EditCounts rescoring_counts(std::span<const TrainingItem> items,
                            const RnnLmParams& params, const NGramModel& ngram,
                            const TrainConfig& config) {
  EditCounts total;
  for (const TrainingItem& item : items) {
    const Lattice rescored = rescore_lattice(item.expanded, params, ngram,
                                             config.interpolation, config.scales);
    total += edit_distance(best_path(rescored, config.scales).words,
                           item.reference);
  }
  return total;
}

void write_metrics_header(std::ostream& out) {
  out << "epoch\tstep\tloss_embr\tloss_nce\ttrain_expected_wer\ttest_wer\n";
}

void write_metrics_row(std::ostream& out, const EpochMetrics& m) {
  out << m.epoch << '\t' << m.step << '\t' << format_real(m.loss_embr) << '\t'
      << format_real(m.loss_nce) << '\t' << format_real(m.train_expected_wer)
      << '\t' << format_real(m.test_wer) << '\n';
}

namespace {

std::size_t reference_words(std::span<const TrainingItem> items) {
  std::size_t n = 0;
  for (const auto& it : items) n += it.reference.size();
  return n;
}

}  // namespace

RnnLmParams finetune_embr(const RnnLmParams& init,
                          std::span<const TrainingItem> train,
                          std::span<const TrainingItem> test,
                          const NGramModel& ngram, const TrainConfig& config,
                          std::vector<EpochMetrics>* metrics,
                          const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.check();
  if (train.empty()) throw Error("finetune_embr: empty lattice set");
  std::vector<Sentence> ref_text;
  for (const auto& it : train) ref_text.push_back(it.reference_ids);
  const NoiseDistribution noise = NoiseDistribution::from_corpus(
      ref_text, init.vocab, config.noise_samples);
  const auto batches = make_batches(train, config);
  const double train_words =
      static_cast<double>(std::max<std::size_t>(1, reference_words(train)));
  const std::size_t test_words = reference_words(test);

  RnnLmParams params = init;
  std::vector<const TrainingItem*> chunk;
  auto gather = [&](const std::vector<std::size_t>& b) {
    chunk.clear();
    for (std::size_t i : b) chunk.push_back(&train[i]);
  };
  auto emit = [&](EpochMetrics m) {
    double embr = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      gather(batches[b]);
      LossResult r = total_loss(chunk, params, ngram, noise, config,
                                derive_seed(config.seed, "embr_eval") + b,
                                /*want_grads=*/false);
      embr += r.embr;
      if (m.epoch == 0) m.loss_embr += r.embr, m.loss_nce += r.nce;
    }
    m.train_expected_wer = 100.0 * embr / train_words;
    m.test_wer = test_words > 0
                     ? wer(rescoring_counts(test, params, ngram, config),
                           static_cast<std::int64_t>(test_words))
                     : std::numeric_limits<double>::quiet_NaN();
    if (metrics) metrics->push_back(m);
    if (on_epoch) on_epoch(m);
  };

  std::size_t step = 0;
  emit(EpochMetrics{});
  std::vector<std::size_t> order(batches.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(mix_seed(config.seed + static_cast<std::uint64_t>(epoch)),
                "embr_shuffle");
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.below(i)]);

    EpochMetrics m;
    m.epoch = epoch;
    for (std::size_t b : order) {
      gather(batches[b]);
      LossResult r = total_loss(chunk, params, ngram, noise, config,
                                derive_seed(config.seed, "embr_nce") + step);
      params.weights.add_scaled(-config.learning_rate, r.grads);
      m.loss_embr += r.embr;
      m.loss_nce += r.nce;
      ++step;
    }
    m.step = step;
    emit(m);
  }
  return params;
}

}  // namespace embr
