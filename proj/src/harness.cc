// embr/harness.cc

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

#include "embr/harness.h"

#include <algorithm>
#include <ostream>
#include <unordered_map>

namespace embr {

double ScoreReport::wer() const { return embr::wer(total, ref_words); }

std::optional<double> ScoreReport::oracle_wer() const {
  if (!oracle_total) return std::nullopt;
  return embr::wer(*oracle_total, ref_words);
}

double relative_improvement(double baseline_wer, double candidate_wer) {
  if (baseline_wer <= 0) throw Error("relative improvement needs a positive baseline");
  return 100.0 * (baseline_wer - candidate_wer) / baseline_wer;
}

namespace {

std::unordered_map<std::string, const Transcript*> index_refs(
    std::span<const Transcript> refs) {
  std::unordered_map<std::string, const Transcript*> idx;
  for (const auto& r : refs)
    if (!idx.emplace(r.utt_id, &r).second)
      throw Error("duplicate reference for utterance " + r.utt_id);
  return idx;
}

void finish(ScoreReport& rep, std::size_t expected) {
  if (rep.utterances.size() != expected)
    throw Error("score: some references have no hypothesis");
  std::sort(rep.utterances.begin(), rep.utterances.end(),
            [](const auto& a, const auto& b) { return a.utt_id < b.utt_id; });
  for (const auto& u : rep.utterances) {
    rep.total += u.counts;
    rep.ref_words += u.ref_words;
    if (u.oracle) {
      if (!rep.oracle_total) rep.oracle_total = EditCounts{};
      *rep.oracle_total += *u.oracle;
    }
  }
}

std::string fmt_opt(std::optional<double> v) {
  return v ? format_real(*v) : std::string("NA");
}

}  // namespace

ScoreReport score_lattices(std::span<const Lattice> lattices,
                           std::span<const Transcript> refs,
                           const ScaleConfig& scales) {
  const auto idx = index_refs(refs);
  ScoreReport rep;
  for (const Lattice& lat : lattices) {
    auto it = idx.find(lat.utt_id);
    if (it == idx.end()) throw Error("score: no reference for utterance " + lat.utt_id);
    const auto& ref = it->second->words;
    UtteranceScore u;
    u.utt_id = lat.utt_id;
    u.ref_words = static_cast<std::int64_t>(ref.size());
    u.counts = edit_distance(best_path(lat, scales).words, ref);
    u.oracle = oracle_counts(lat, ref);
    rep.utterances.push_back(std::move(u));
  }
  finish(rep, refs.size());
  return rep;
}

ScoreReport score_hypotheses(std::span<const Transcript> hyps,
                             std::span<const Transcript> refs) {
  const auto idx = index_refs(refs);
  ScoreReport rep;
  for (const Transcript& h : hyps) {
    auto it = idx.find(h.utt_id);
    if (it == idx.end()) throw Error("score: no reference for utterance " + h.utt_id);
    UtteranceScore u;
    u.utt_id = h.utt_id;
    u.ref_words = static_cast<std::int64_t>(it->second->words.size());
    u.counts = edit_distance(h.words, it->second->words);
    rep.utterances.push_back(std::move(u));
  }
  finish(rep, refs.size());
  return rep;
}

void write_report_summary(std::ostream& out, const ScoreReport& rep,
                          std::optional<double> baseline_wer) {
  out << "wer\toracle_wer\tinsertions\tdeletions\tsubstitutions\terrors\t"
         "ref_words\trelative_improvement\n";
  const double w = rep.wer();
  std::optional<double> rel;
  if (baseline_wer) rel = relative_improvement(*baseline_wer, w);
  out << format_real(w) << '\t' << fmt_opt(rep.oracle_wer()) << '\t'
      << rep.total.insertions << '\t' << rep.total.deletions << '\t'
      << rep.total.substitutions << '\t' << rep.total.total() << '\t'
      << rep.ref_words << '\t' << fmt_opt(rel) << '\n';
}

void write_report_details(std::ostream& out, const ScoreReport& rep) {
  out << "utt_id\tref_words\tinsertions\tdeletions\tsubstitutions\terrors\t"
         "oracle_errors\n";
  for (const auto& u : rep.utterances) {
    out << u.utt_id << '\t' << u.ref_words << '\t' << u.counts.insertions
        << '\t' << u.counts.deletions << '\t' << u.counts.substitutions << '\t'
        << u.counts.total() << '\t'
        << (u.oracle ? std::to_string(u.oracle->total()) : std::string("NA"))
        << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<Sentence> encode_corpus(
    const Vocabulary& vocab, std::span<const std::vector<std::string>> text) {
  std::vector<Sentence> out;
  out.reserve(text.size());
  for (const auto& s : text) out.push_back(vocab.encode(s));
  return out;
}

PipelineData prepare_pipeline(const PipelineConfig& config) {
  PipelineData d;
  const TextGenerator gen(config.synth);
  d.generator_perplexity = gen.analytic_perplexity();
  d.vocab = gen.vocab();
  d.corpus = gen_corpus(config.synth, config.train_sentences,
                        config.valid_sentences, config.test_sentences);
  d.ngram = estimate_add_one(d.corpus.train, d.vocab, config.ngram_order);
  d.train_refs = gen_references(config.synth, config.train_lattices, "train");
  d.test_refs = gen_references(config.synth, config.test_lattices, "test");
  d.train_lattices = gen_lattices(d.train_refs, config.synth);
  d.test_lattices = gen_lattices(d.test_refs, config.synth);
  for (std::size_t i = 0; i < d.train_refs.size(); ++i)
    d.train_items.push_back(make_training_item(
        d.train_lattices[i], d.train_refs[i].words, d.ngram, d.vocab));
  for (std::size_t i = 0; i < d.test_refs.size(); ++i)
    d.test_items.push_back(make_training_item(
        d.test_lattices[i], d.test_refs[i].words, d.ngram, d.vocab));
  return d;
}

RnnLmParams pretrain(const PipelineData& data, const PipelineConfig& config,
                     std::vector<NceEpoch>* log) {
  const RnnLmParams init =
      init_rnnlm(data.vocab, config.hidden, derive_seed(config.nce.seed, "init"));
  return train_nce(init, encode_corpus(data.vocab, data.corpus.train),
                   encode_corpus(data.vocab, data.corpus.valid), config.nce, log);
}

std::vector<Lattice> rescore_all(std::span<const TrainingItem> items,
                                 const RnnLmParams& params,
                                 const NGramModel& ngram,
                                 const TrainConfig& config) {
  std::vector<Lattice> out;
  out.reserve(items.size());
  for (const auto& item : items)
    out.push_back(rescore_lattice(item.expanded, params, ngram,
                                  config.interpolation, config.scales));
  return out;
}

std::vector<SweepRow> run_alpha_sweep(const RnnLmParams& params,
                                      std::span<const TrainingItem> train,
                                      std::span<const TrainingItem> test,
                                      const NGramModel& ngram,
                                      const TrainConfig& config,
                                      std::span<const double> alphas) {
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    TrainConfig c = config;
    c.alpha = alpha;
    std::vector<EpochMetrics> metrics;
    finetune_embr(params, train, test, ngram, c, &metrics);
    rows.push_back({alpha, metrics.back().test_wer,
                    metrics.back().train_expected_wer});
  }
  return rows;
}

void write_sweep(std::ostream& out, std::span<const SweepRow> rows) {
  out << "alpha\tfinal_test_wer\tfinal_train_expected_wer\n";
  for (const auto& r : rows)
    out << format_real(r.alpha) << '\t' << format_real(r.final_test_wer) << '\t'
        << format_real(r.final_train_expected_wer) << '\n';
}

RnnLmParams adapt_baseline(const RnnLmParams& params,
                           std::span<const Sentence> text,
                           const NceConfig& config,
                           std::span<const Sentence> valid) {
  if (text.empty()) throw Error("adapt: empty adaptation text");
  if (config.epochs == 0) return params;
  return train_nce(params, text, valid.empty() ? text : valid, config);
}

std::vector<Transcript> oracle_transcripts(std::span<const Lattice> lattices,
                                           std::span<const Transcript> refs) {
  const auto idx = index_refs(refs);
  std::vector<Transcript> out;
  for (const Lattice& lat : lattices) {
    auto it = idx.find(lat.utt_id);
    if (it == idx.end()) throw Error("no reference for utterance " + lat.utt_id);
    out.push_back({lat.utt_id, oracle_path(lat, it->second->words).words});
  }
  return out;
}

}  // namespace embr
