// embr/harness.h

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

#ifndef EMBR_HARNESS_H_
#define EMBR_HARNESS_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embr/edit_distance.h"
#include "embr/embr.h"
#include "embr/ngram.h"
#include "embr/rnnlm.h"
#include "embr/synth.h"

namespace embr {

// ---------------------------------------------------------------------------
// Scoring

struct UtteranceScore {
  std::string utt_id;
  std::int64_t ref_words = 0;
  EditCounts counts;
  std::optional<EditCounts> oracle;  // lattices only
};

struct ScoreReport {
  std::vector<UtteranceScore> utterances;
  EditCounts total;
  std::optional<EditCounts> oracle_total;
  std::int64_t ref_words = 0;

  double wer() const;
  std::optional<double> oracle_wer() const;
};

/// Relative WER reduction in percent: 100 (baseline - candidate) / baseline.
double relative_improvement(double baseline_wer, double candidate_wer);

/// Scores the best path of every lattice, plus its oracle.  Every lattice
/// needs a reference with the same utterance id.
ScoreReport score_lattices(std::span<const Lattice> lattices,
                           std::span<const Transcript> refs,
                           const ScaleConfig& scales = {});
ScoreReport score_hypotheses(std::span<const Transcript> hyps,
                             std::span<const Transcript> refs);

/// Header + one row: wer, oracle_wer, counts, and the relative improvement
/// over `baseline_wer` when given.
void write_report_summary(std::ostream& out, const ScoreReport& report,
                          std::optional<double> baseline_wer = std::nullopt);
void write_report_details(std::ostream& out, const ScoreReport& report);

// ---------------------------------------------------------------------------
// Experiments

struct PipelineConfig {
  SynthSpec synth;
  std::size_t train_sentences = 5000;
  std::size_t valid_sentences = 500;
  std::size_t test_sentences = 500;
  std::size_t train_lattices = 1000;
  std::size_t test_lattices = 200;
  int hidden = 32;
  int ngram_order = 2;
  NceConfig nce;
  TrainConfig embr;
};

/// Everything an experiment needs, generated from one seed.
struct PipelineData {
  Corpus corpus;
  Vocabulary vocab;
  NGramModel ngram;
  std::vector<Transcript> train_refs, test_refs;
  std::vector<Lattice> train_lattices, test_lattices;
  std::vector<TrainingItem> train_items, test_items;
  double generator_perplexity = 0.0;
};

PipelineData prepare_pipeline(const PipelineConfig& config);

std::vector<Sentence> encode_corpus(const Vocabulary& vocab,
                                    std::span<const std::vector<std::string>> text);

/// NCE pretraining on the generated corpus.
RnnLmParams pretrain(const PipelineData& data, const PipelineConfig& config,
                     std::vector<NceEpoch>* log = nullptr);

/// Rescores lattices (expanding each with the n-gram model first).
std::vector<Lattice> rescore_all(std::span<const TrainingItem> items,
                                 const RnnLmParams& params,
                                 const NGramModel& ngram,
                                 const TrainConfig& config);

struct SweepRow {
  double alpha = 0.0;
  double final_test_wer = 0.0;
  double final_train_expected_wer = 0.0;
};

/// finetune_embr once per alpha from the same starting checkpoint.
std::vector<SweepRow> run_alpha_sweep(const RnnLmParams& params,
                                      std::span<const TrainingItem> train,
                                      std::span<const TrainingItem> test,
                                      const NGramModel& ngram,
                                      const TrainConfig& config,
                                      std::span<const double> alphas);
void write_sweep(std::ostream& out, std::span<const SweepRow> rows);

/// Plain NCE fine-tuning on the given text (the adaptation control).  The
/// text doubles as validation set unless `valid` is non-empty.
RnnLmParams adapt_baseline(const RnnLmParams& params,
                           std::span<const Sentence> text,
                           const NceConfig& config,
                           std::span<const Sentence> valid = {});

/// Oracle path word sequence of each lattice.
std::vector<Transcript> oracle_transcripts(std::span<const Lattice> lattices,
                                           std::span<const Transcript> refs);

}  // namespace embr

#endif  // EMBR_HARNESS_H_
