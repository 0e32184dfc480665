// tests/acceptance_test.cc

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

// Acceptance run.  Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "embr/harness.h"
#include "oracles.h"

using namespace embr;

namespace {

using Clock = std::chrono::steady_clock;

const std::vector<std::string> kWords{"a", "b", "c", "d"};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// |a - b| / max(|a|, |b|, floor).  The floor keeps components whose true
// value is at the finite-difference noise level from dominating.
double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct RandomCase {
  Lattice lattice;
  std::vector<std::string> ref;
  AnnotatedLattice annotated;
};

// Shared by criteria 1, 2 and 4.
std::vector<RandomCase> random_cases(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  oracle::DagOptions opt;
  opt.max_states = 12;
  opt.max_extra_arcs = 20;
  opt.max_paths = 200;
  std::vector<RandomCase> out;
  for (std::size_t i = 0; i < n; ++i) {
    RandomCase c;
    c.lattice = oracle::random_dag(rng, opt);
    c.lattice.utt_id = "r" + std::to_string(i);
    c.ref = oracle::random_words(rng, opt.vocab, rng.below(9));
    c.annotated = annotate_lattice(c.lattice, c.ref);
    out.push_back(std::move(c));
  }
  return out;
}

double enumerated_expectation(const Lattice& lat, double* variance = nullptr) {
  const auto paths = oracle::enumerate_paths(lat);
  std::vector<double> lp;
  for (const auto& p : paths) lp.push_back(oracle::path_score(lat, p));
  const double z = oracle::log_sum_exp(lp);
  double e = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const double w = std::exp(lp[i] - z);
    const double c = static_cast<double>(oracle::path_edit_cost(lat, paths[i]));
    e += w * c;
    e2 += w * c * c;
  }
  if (variance) *variance = std::max(0.0, e2 - e * e);
  return e;
}

Outcome criterion1(const std::vector<RandomCase>& cases) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t max_paths = 0;
  for (const auto& c : cases) {
    const double exact = expected_edit_distance(c.annotated, ScaleConfig{}).expected_loss;
    worst = std::max(worst, std::abs(exact - enumerated_expectation(c.annotated.lattice)));
    max_paths = std::max(max_paths, oracle::count_paths(c.lattice));
  }
  const double secs = seconds_since(t0);
  return {cases.size() >= 500 && max_paths <= 200 && worst <= 1e-9 && secs < 60,
          std::to_string(cases.size()) + " lattices (up to " + std::to_string(max_paths) +
              " paths), max |error| " + fmt("%.3g", worst) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome criterion2(const std::vector<RandomCase>& cases) {
  std::size_t paths = 0, failures = 0;
  for (const auto& c : cases) {
    const Lattice& lat = c.annotated.lattice;
    for (const auto& p : oracle::enumerate_paths(lat)) {
      ++paths;
      if (oracle::path_edit_cost(lat, p) !=
          edit_distance(oracle::path_words(lat, p), c.ref).total())
        ++failures;
    }
  }
  return {failures == 0 && paths > 0,
          std::to_string(paths) + " paths checked, " + std::to_string(failures) + " failures"};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  // Arc-score gradients.
  Rng rng(301);
  double arc_worst = 0.0;
  std::size_t arcs = 0;
  for (int iter = 0; iter < 200; ++iter) {
    const Lattice lat = oracle::random_dag(rng);
    const AnnotatedLattice ann =
        annotate_lattice(lat, oracle::random_words(rng, kWords, rng.below(7)));
    std::vector<double> score;
    for (const Arc& a : ann.lattice.arcs) score.push_back(ScaleConfig{}.score(a));
    const auto g = embr_arc_gradients(expected_edit_distance(ann.lattice, score));
    const double eps = 1e-5;
    for (std::size_t a = 0; a < score.size(); ++a, ++arcs) {
      const double keep = score[a];
      score[a] = keep + eps;
      const double up = expected_edit_distance(ann.lattice, score).expected_loss;
      score[a] = keep - eps;
      const double down = expected_edit_distance(ann.lattice, score).expected_loss;
      score[a] = keep;
      arc_worst = std::max(arc_worst, rel_err(g[a], (up - down) / (2 * eps), 1e-3));
    }
  }

  // RNNLM parameter gradients of the total loss with frozen history trees.
  double param_worst = 0.0;
  std::size_t params_checked = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Vocabulary v(split_words("a b c d"));
    RnnLmParams p = init_rnnlm(v, 5, seed, 0.4);
    const std::vector<std::vector<std::string>> text{
        {"a", "b"}, {"c", "a", "d"}, {"a", "c", "b"}, {"d"}};
    const NGramModel ng = estimate_add_one(text, v, 2);
    Rng r(seed + 400);
    oracle::DagOptions opt;
    opt.vocab = {"a", "b", "c", "d"};
    opt.max_states = 6;
    opt.max_paths = 40;
    std::vector<TrainingItem> batch;
    for (int i = 0; i < 2; ++i)
      batch.push_back(make_training_item(oracle::random_dag(r, opt),
                                         oracle::random_words(r, opt.vocab, 1 + r.below(4)),
                                         ng, v));
    std::vector<Sentence> refs;
    for (const auto& it : batch) refs.push_back(it.reference_ids);
    const NoiseDistribution noise = NoiseDistribution::from_corpus(refs, v, 4);
    TrainConfig cfg;
    const LossResult base = total_loss(batch, p, ng, noise, cfg, seed);
    const double eps = 1e-4;
    Weights::zip(p.weights, base.grads, [&](std::string_view, auto& t, const auto& g) {
      for (Eigen::Index i = 0; i < t.size(); ++i, ++params_checked) {
        const double keep = t.data()[i];
        t.data()[i] = keep + eps;
        const double up = total_loss(batch, p, ng, noise, cfg, seed, false, base.trees).total;
        t.data()[i] = keep - eps;
        const double down = total_loss(batch, p, ng, noise, cfg, seed, false, base.trees).total;
        t.data()[i] = keep;
        param_worst =
            std::max(param_worst, rel_err(g.data()[i], (up - down) / (2 * eps), 1e-5));
      }
    });
  }
  const double secs = seconds_since(t0);
  return {arc_worst <= 1e-6 && param_worst <= 1e-3 && secs < 300,
          std::to_string(arcs) + " arc scores max rel err " + fmt("%.3g", arc_worst) + "; " +
              std::to_string(params_checked) + " parameters max rel err " +
              fmt("%.3g", param_worst) + "; " + fmt("%.1f", secs) + " s"};
}

Outcome criterion4(const std::vector<RandomCase>& cases) {
  double nbest_worst = 0.0;
  for (const auto& c : cases) {
    const Lattice& lat = c.annotated.lattice;
    const double exact = expected_edit_distance(lat, ScaleConfig{}).expected_loss;
    nbest_worst = std::max(
        nbest_worst, std::abs(nbest_embr(lat, oracle::enumerate_paths(lat).size(), {}) - exact));
  }

  const std::size_t k = 100, seeds = 200, lattices = 20;
  std::size_t within = 0;
  double worst_z = 0.0;
  for (std::size_t i = 0; i < lattices; ++i) {
    const Lattice& lat = cases[i].annotated.lattice;
    double var = 0.0;
    const double exact = enumerated_expectation(lat, &var);
    double mean = 0.0;
    for (std::size_t s = 0; s < seeds; ++s)
      mean += sampled_embr(lat, k, {}, derive_seed(1000 + s, lat.utt_id));
    mean /= static_cast<double>(seeds);
    const double se = std::sqrt(var / static_cast<double>(k * seeds));
    const double z = se > 0 ? std::abs(mean - exact) / se : (mean == exact ? 0.0 : 1e9);
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++within;
  }
  return {nbest_worst <= 1e-9 && within == lattices,
          "n-best max |error| " + fmt("%.3g", nbest_worst) + "; sampled k=100 x 200 seeds within 3 SE on " +
              std::to_string(within) + "/" + std::to_string(lattices) +
              " lattices (max " + fmt("%.2f", worst_z) + " SE)"};
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  PipelineConfig c;
  c.train_lattices = 0;
  c.test_lattices = 0;
  const PipelineData d = prepare_pipeline(c);
  std::vector<NceEpoch> log;
  const RnnLmParams p = pretrain(d, c, &log);
  double best = log.empty() ? perplexity(p, encode_corpus(d.vocab, d.corpus.valid)) : 1e300;
  for (const auto& e : log) best = std::min(best, e.valid_ppl);
  const double gap = std::abs(best - d.generator_perplexity) / d.generator_perplexity;

  std::size_t histories = 0, normalised = 0;
  for (const Sentence& s : encode_corpus(d.vocab, d.corpus.test)) {
    Vector h = start_hidden(p);
    for (std::size_t t = 0; t <= s.size(); ++t) {
      const Vector logits = p.weights.output * h + p.weights.output_bias;
      const double log_z = std::log(logits.array().exp().sum());
      ++histories;
      if (std::abs(log_z) <= std::log(1.25)) ++normalised;
      if (t < s.size()) h = rnn_step(p, h, s[t]);
    }
  }
  const double frac = static_cast<double>(normalised) / static_cast<double>(histories);
  return {gap <= 0.10 && frac >= 0.90,
          "valid PPL " + fmt("%.2f", best) + " vs generator " +
              fmt("%.2f", d.generator_perplexity) + " (" + fmt("%.1f", 100 * gap) +
              "%); self-normalised on " + fmt("%.1f", 100 * frac) + "% of " +
              std::to_string(histories) + " histories; " + fmt("%.1f", seconds_since(t0)) + " s"};
}

struct SeedRun {
  std::uint64_t seed = 0;
  double wer_before = 0.0, wer_after = 0.0;
  double ewer_epoch0 = 0.0, ewer_epoch1 = 0.0;
  EditCounts counts_before, counts_after;
  std::size_t oracle_violations = 0, lattices_checked = 0;
};

std::size_t oracle_violations(const PipelineData& d, const RnnLmParams& p,
                              const TrainConfig& cfg, std::size_t* checked) {
  std::size_t bad = 0;
  const auto rescored = rescore_all(d.test_items, p, d.ngram, cfg);
  for (std::size_t i = 0; i < rescored.size(); ++i, ++*checked) {
    const auto& ref = d.test_refs[i].words;
    const std::int64_t errors = edit_distance(best_path(rescored[i], cfg.scales).words, ref).total();
    if (oracle_counts(d.test_lattices[i], ref).total() > errors) ++bad;
  }
  return bad;
}

std::vector<SeedRun> end_to_end_runs(double* secs) {
  const auto t0 = Clock::now();
  std::vector<SeedRun> runs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PipelineConfig c;
    c.synth.seed = seed;
    c.nce.seed = seed;
    c.embr.seed = seed;
    c.embr.alpha = 0.25;
    const PipelineData d = prepare_pipeline(c);
    const RnnLmParams p = pretrain(d, c);
    std::vector<EpochMetrics> m;
    const RnnLmParams tuned = finetune_embr(p, d.train_items, d.test_items, d.ngram, c.embr, &m);
    SeedRun r;
    r.seed = seed;
    r.wer_before = m.front().test_wer;
    r.wer_after = m.back().test_wer;
    r.ewer_epoch0 = m[0].train_expected_wer;
    r.ewer_epoch1 = m.size() > 1 ? m[1].train_expected_wer : m[0].train_expected_wer;
    r.counts_before = rescoring_counts(d.test_items, p, d.ngram, c.embr);
    r.counts_after = rescoring_counts(d.test_items, tuned, d.ngram, c.embr);
    for (const RnnLmParams* q : {&p, &tuned}) {
      for (const Interpolation w : {Interpolation{0.9, 0.1}, Interpolation{0.0, 1.0},
                                    Interpolation{1.0, 0.0}}) {
        TrainConfig tc = c.embr;
        tc.interpolation = w;
        r.oracle_violations += oracle_violations(d, *q, tc, &r.lattices_checked);
      }
    }
    std::cerr << "  seed " << seed << ": test WER " << r.wer_before << " -> " << r.wer_after
              << ", train expected WER " << r.ewer_epoch0 << " -> " << r.ewer_epoch1 << " ("
              << fmt("%.0f", seconds_since(t0)) << " s)\n";
    runs.push_back(r);
  }
  *secs = seconds_since(t0);
  return runs;
}

Outcome criterion6(const std::vector<SeedRun>& runs, double secs) {
  std::size_t improved = 0, decreased = 0;
  std::string wers;
  for (const auto& r : runs) {
    if (r.wer_after < r.wer_before) ++improved;
    if (r.ewer_epoch1 < r.ewer_epoch0) ++decreased;
    wers += (wers.empty() ? "" : " ") + fmt("%.2f", r.wer_before) + "->" + fmt("%.2f", r.wer_after);
  }
  return {runs.size() == 10 && improved >= 8 && decreased == runs.size() && secs < 1800,
          "held-out WER lower in " + std::to_string(improved) + "/10 seeds [" + wers +
              "]; train expected WER fell over epoch 1 in " + std::to_string(decreased) +
              "/10; " + fmt("%.0f", secs) + " s"};
}

Outcome criterion7(const std::vector<SeedRun>& runs) {
  EditCounts before, after;
  for (const auto& r : runs) {
    before += r.counts_before;
    after += r.counts_after;
  }
  auto ids = [](const EditCounts& c) {
    return "I " + std::to_string(c.insertions) + " D " + std::to_string(c.deletions) + " S " +
           std::to_string(c.substitutions);
  };
  const char* trend = after.deletions < before.deletions   ? "fewer deletions"
                      : after.deletions > before.deletions ? "more deletions"
                                                           : "same deletions";
  return {!runs.empty(), "NCE-only " + ids(before) + "; after EMBR " + ids(after) + " (" +
                             trend + ", reported only)"};
}

std::string pipeline_fingerprint() {
  PipelineConfig c;
  c.synth.vocab_size = 30;
  c.synth.seed = 77;
  c.train_sentences = 400;
  c.valid_sentences = 50;
  c.test_sentences = 10;
  c.train_lattices = 40;
  c.test_lattices = 10;
  c.hidden = 8;
  c.nce.epochs = 2;
  c.nce.seed = 77;
  c.embr.epochs = 1;
  c.embr.seed = 77;
  const PipelineData d = prepare_pipeline(c);
  std::ostringstream out;
  for (const Lattice& l : d.train_lattices) write_lattice(out, l);
  write_arpa(out, d.ngram);
  const RnnLmParams p = pretrain(d, c);
  write_metrics_header(out);
  const RnnLmParams tuned = finetune_embr(p, d.train_items, d.test_items, d.ngram, c.embr,
                                          nullptr, [&](const EpochMetrics& m) {
                                            write_metrics_row(out, m);
                                          });
  save_checkpoint(out, tuned);
  write_report_summary(out, score_lattices(rescore_all(d.test_items, tuned, d.ngram, c.embr),
                                           d.test_refs));
  return out.str();
}

Outcome criterion8(const std::vector<SeedRun>& runs) {
  std::vector<std::string> failed;

  std::size_t violations = 0, checked = 0;
  for (const auto& r : runs) {
    violations += r.oracle_violations;
    checked += r.lattices_checked;
  }
  if (violations > 0 || checked == 0) failed.push_back("oracle bound");

  Rng rng(801);
  double cut_worst = 0.0, shift_worst = 0.0;
  for (int iter = 0; iter < 300; ++iter) {
    const Lattice lat = oracle::random_dag(rng);
    const AnnotatedLattice ann =
        annotate_lattice(lat, oracle::random_words(rng, kWords, rng.below(7)));
    const Lattice& al = ann.lattice;
    std::vector<double> score;
    for (const Arc& a : al.arcs) score.push_back(ScaleConfig{}.score(a));
    const ExpectationStats st = expected_edit_distance(al, score);
    const auto g = embr_arc_gradients(st);
    const auto order = topological_order(al);
    std::vector<std::size_t> pos(al.num_states);
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (std::size_t k = 1; k < order.size(); ++k) {
      double mass = 0.0;
      std::vector<double> shifted = score;
      for (std::size_t a = 0; a < al.arcs.size(); ++a)
        if (pos[al.arcs[a].src] < k && pos[al.arcs[a].dst] >= k) {
          mass += st.posterior[a];
          shifted[a] += 2.5;
        }
      cut_worst = std::max(cut_worst, std::abs(mass - 1.0));
      const ExpectationStats s2 = expected_edit_distance(al, shifted);
      const auto g2 = embr_arc_gradients(s2);
      shift_worst = std::max(shift_worst, std::abs(s2.expected_loss - st.expected_loss));
      for (std::size_t a = 0; a < g.size(); ++a)
        shift_worst = std::max(shift_worst, std::abs(g2[a] - g[a]));
    }
  }
  if (cut_worst > 1e-9) failed.push_back("cut sums");
  if (shift_worst > 1e-9) failed.push_back("shift invariance");

  std::size_t expansion_failures = 0;
  const Vocabulary v(split_words("a b c d"));
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<std::vector<std::string>> text;
    for (int s = 0; s < 8; ++s)
      text.push_back(oracle::random_words(rng, kWords, 1 + rng.below(5)));
    const NGramModel m = estimate_add_one(text, v, 1 + static_cast<int>(rng.below(2)));
    const Lattice lat = oracle::random_dag(rng);
    const ExpandedLattice ex = expand_lattice(lat, m);
    std::map<std::vector<std::string>, int> words;
    for (const auto& p : oracle::enumerate_paths(lat)) ++words[oracle::path_words(lat, p)];
    const auto paths = oracle::enumerate_paths(ex.lattice);
    if (paths.size() != oracle::enumerate_paths(lat).size()) ++expansion_failures;
    for (const auto& p : paths) {
      const auto w = oracle::path_words(ex.lattice, p);
      if (--words[w] < 0) ++expansion_failures;
      if (oracle::path_lm(ex.lattice, p) != m.sentence_logprob(w)) ++expansion_failures;
    }
  }
  if (expansion_failures > 0) failed.push_back("expansion");

  const bool identical = pipeline_fingerprint() == pipeline_fingerprint();
  if (!identical) failed.push_back("pipeline rerun");

  std::string detail = "oracle bound held on " + std::to_string(checked - violations) + "/" +
                       std::to_string(checked) + " rescored lattices; max cut-sum error " +
                       fmt("%.2g", cut_worst) + "; max shift change " + fmt("%.2g", shift_worst) +
                       "; expansion failures " + std::to_string(expansion_failures) +
                       "; pipeline rerun " + (identical ? "byte-identical" : "differs");
  for (const auto& f : failed) detail += "; FAILED " + f;
  return {failed.empty(), detail};
}

void print(int n, const char* name, const Outcome& o) {
  std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << name << ": "
            << o.detail << std::endl;
}

}  // namespace

int main() {
  try {
    bool ok = true;
    auto report = [&](int n, const char* name, const Outcome& o) {
      print(n, name, o);
      ok = ok && o.pass;
    };
    const auto cases = random_cases(500, 101);
    report(1, "expected loss is exact", criterion1(cases));
    report(2, "annotation is exact", criterion2(cases));
    report(3, "gradients match finite differences", criterion3());
    report(4, "n-best and sampled estimators", criterion4(cases));
    report(5, "NCE pretraining", criterion5());
    double secs = 0.0;
    const auto runs = end_to_end_runs(&secs);
    report(6, "EMBR fine-tuning helps", criterion6(runs, secs));
    report(7, "error structure", criterion7(runs));
    report(8, "invariants", criterion8(runs));
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cout << "acceptance: error: " << e.what() << std::endl;
    return 1;
  }
}
