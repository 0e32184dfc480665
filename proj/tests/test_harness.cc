// tests/test_harness.cc

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

#include <map>
#include <sstream>

#include "doctest.h"
#include "embr/harness.h"
#include "oracles.h"

using namespace embr;

namespace {

std::string lattices_text(std::span<const Lattice> lats) {
  std::ostringstream out;
  for (const Lattice& l : lats) write_lattice(out, l);
  return out.str();
}

PipelineConfig small_pipeline(std::uint64_t seed) {
  PipelineConfig c;
  c.synth.vocab_size = 20;
  c.synth.seed = seed;
  c.synth.max_ref_length = 6;
  c.train_sentences = 300;
  c.valid_sentences = 50;
  c.test_sentences = 10;
  c.train_lattices = 12;
  c.test_lattices = 6;
  c.hidden = 8;
  c.nce.epochs = 2;
  c.nce.seed = seed;
  c.embr.epochs = 1;
  c.embr.batch_size = 4;
  c.embr.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("corpus generation") {
  SynthSpec spec;
  spec.seed = 5;
  const Corpus a = gen_corpus(spec, 50, 10, 10);
  const Corpus b = gen_corpus(spec, 50, 10, 10);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);
  CHECK(a.train.size() == 50);
  CHECK_FALSE(a.train == gen_corpus([&] { auto s = spec; s.seed = 6; return s; }(), 50, 10, 10).train);

  const Corpus none = gen_corpus(spec, 0, 0, 0);
  CHECK(none.train.empty());
  CHECK(none.valid.empty());
  CHECK(none.test.empty());

  spec.vocab_size = 2;
  CHECK_THROWS_AS(gen_corpus(spec, 1, 1, 1), Error);
  spec.vocab_size = 100;
  spec.sub_prob = 1.5;
  CHECK_THROWS_AS(gen_lattices(std::vector<Transcript>{{"u", {"w001"}}}, spec), Error);
}

TEST_CASE("uniform generator gives a flat unigram") {
  SynthSpec spec;
  spec.vocab_size = 5;
  spec.num_classes = 1;
  spec.zipf = 0.0;
  spec.seed = 17;
  std::map<std::string, std::size_t> counts;
  std::size_t tokens = 0;
  for (std::size_t chunk = 0; tokens < 100000; ++chunk) {
    spec.seed = 17 + chunk;
    for (const auto& s : gen_corpus(spec, 1000, 0, 0).train)
      for (const auto& w : s) ++counts[w], ++tokens;
  }
  REQUIRE(counts.size() == 5);
  for (const auto& [w, n] : counts) {
    INFO(w << " " << n << " of " << tokens);
    CHECK(std::abs(static_cast<double>(n) / tokens - 0.2) <= 0.02 * 0.2);
  }
  // Uniform over 5 words with end probability 0.1 after each word.
  const TextGenerator gen(spec);
  const double h = -(0.9 * std::log(0.9 / 5) + 0.1 * std::log(0.1));
  const double len = 10.0;  // expected words per sentence
  const double start = std::log(5.0);
  CHECK(gen.analytic_perplexity() ==
        doctest::Approx(std::exp((start + (len - 1) * h + h) / (len + 1))).epsilon(1e-12));
}

TEST_CASE("zero-noise lattices are the references") {
  SynthSpec spec;
  spec.sub_prob = 0.0;
  spec.del_prob = 0.0;
  spec.ins_prob = 0.0;
  const auto refs = gen_references(spec, 50, "z");
  for (const auto& r : refs) CHECK(r.words.size() <= spec.max_ref_length);
  const auto lats = gen_lattices(refs, spec);
  REQUIRE(lats.size() == refs.size());
  for (std::size_t i = 0; i < lats.size(); ++i) {
    CHECK(lats[i].arcs.size() == refs[i].words.size());
    CHECK(oracle::count_paths(lats[i]) == 1);
    CHECK(validate(lats[i]).empty());
  }
  const ScoreReport rep = score_lattices(lats, refs);
  CHECK(rep.wer() == 0.0);
  CHECK(*rep.oracle_wer() == 0.0);
}

TEST_CASE("noisy lattices leave oracle headroom") {
  SynthSpec spec;
  spec.sub_prob = 0.3;
  spec.branching = 2;
  spec.seed = 9;
  const auto refs = gen_references(spec, 200, "n");
  const auto lats = gen_lattices(refs, spec);
  CHECK(lattices_text(lats) == lattices_text(gen_lattices(refs, spec)));
  const ScoreReport rep = score_lattices(lats, refs);
  CHECK(*rep.oracle_wer() < rep.wer());
  for (const auto& u : rep.utterances) CHECK(u.oracle->total() <= u.counts.total());
  for (const Lattice& l : lats) {
    CHECK(validate(l).empty());
    for (const Arc& a : l.arcs) CHECK(std::isfinite(a.am_logp));
  }
}

TEST_CASE("scoring a hand fixture") {
  const std::vector<Transcript> refs{{"u2", split_words("the cat sat")},
                                     {"u1", split_words("a b c d")},
                                     {"u3", split_words("x")}};
  const std::vector<Transcript> hyps{{"u1", split_words("a c d e")},
                                     {"u2", split_words("the hat sat")},
                                     {"u3", split_words("")}};
  const ScoreReport rep = score_hypotheses(hyps, refs);
  REQUIRE(rep.utterances.size() == 3);
  CHECK(rep.utterances[0].utt_id == "u1");
  // u1: delete b, insert e.  u2: one substitution.  u3: one deletion.
  CHECK(rep.utterances[0].counts.deletions == 1);
  CHECK(rep.utterances[0].counts.insertions == 1);
  CHECK(rep.utterances[1].counts.substitutions == 1);
  CHECK(rep.utterances[2].counts.deletions == 1);
  CHECK(rep.total.insertions == 1);
  CHECK(rep.total.deletions == 2);
  CHECK(rep.total.substitutions == 1);
  CHECK(rep.ref_words == 8);
  CHECK(rep.wer() == 50.0);
  CHECK_FALSE(rep.oracle_wer());

  EditCounts sum;
  for (const auto& u : rep.utterances) sum += u.counts;
  CHECK(sum == rep.total);
  CHECK(rep.wer() == wer(sum, rep.ref_words));

  std::ostringstream summary, details;
  write_report_summary(summary, rep, 60.0);
  CHECK(summary.str() ==
        "wer\toracle_wer\tinsertions\tdeletions\tsubstitutions\terrors\tref_words\t"
        "relative_improvement\n50\tNA\t1\t2\t1\t4\t8\t" +
            format_real(100.0 * (60.0 - 50.0) / 60.0) + "\n");
  write_report_details(details, rep);
  CHECK(details.str().find("u3\t1\t0\t1\t0\t1\tNA\n") != std::string::npos);

  CHECK(score_hypotheses(refs, refs).wer() == 0.0);
  CHECK(score_hypotheses(refs, refs).total.total() == 0);
  CHECK_THROWS_AS(score_hypotheses(std::span(hyps).first(2), refs), Error);
  const std::vector<Transcript> stray{{"u9", {}}};
  CHECK_THROWS_AS(score_hypotheses(stray, refs), Error);
}

TEST_CASE("relative improvement") {
  CHECK(relative_improvement(23.2, 21.5) == doctest::Approx(7.3).epsilon(0.005));
  CHECK(relative_improvement(10.0, 10.0) == 0.0);
  CHECK_THROWS_AS(relative_improvement(0.0, 1.0), Error);
}

TEST_CASE("oracle transcripts") {
  const Lattice lat = parse_lattice(
      "UTT u\nS 4\nA 0 1 a -1 0\nA 0 1 x 0 0\nA 1 2 b -1 0\nA 1 2 <eps> 0 0\n"
      "A 2 3 c 0 0\nF 3\nEND\n");
  const std::vector<Transcript> refs{{"u", split_words("a b c")}};
  const auto out = oracle_transcripts(std::vector<Lattice>{lat}, refs);
  REQUIRE(out.size() == 1);
  CHECK(out[0].words == refs[0].words);
  CHECK_THROWS_AS(oracle_transcripts(std::vector<Lattice>{lat}, {}), Error);
}

TEST_CASE("pipeline determinism, sweep and adaptation") {
  const PipelineConfig cfg = small_pipeline(3);
  const PipelineData a = prepare_pipeline(cfg);
  const PipelineData b = prepare_pipeline(cfg);
  CHECK(a.corpus.train == b.corpus.train);
  CHECK(lattices_text(a.train_lattices) == lattices_text(b.train_lattices));
  CHECK(a.train_items.size() == 12);
  CHECK(a.generator_perplexity > 1.0);

  const RnnLmParams p = pretrain(a, cfg);
  CHECK(p == pretrain(b, cfg));
  std::ostringstream ca, cb;
  save_checkpoint(ca, p);
  save_checkpoint(cb, pretrain(b, cfg));
  CHECK(ca.str() == cb.str());

  // Oracle lower-bounds every rescoring of the same lattices.
  for (const auto& interp : {Interpolation{0.9, 0.1}, Interpolation{0.0, 1.0}}) {
    TrainConfig tc = cfg.embr;
    tc.interpolation = interp;
    const auto rescored = rescore_all(a.test_items, p, a.ngram, tc);
    const ScoreReport rep = score_lattices(rescored, a.test_refs, tc.scales);
    for (const auto& u : rep.utterances) CHECK(u.oracle->total() <= u.counts.total());
  }

  const std::vector<double> one{0.25};
  const auto single = run_alpha_sweep(p, a.train_items, a.test_items, a.ngram, cfg.embr, one);
  CHECK(single.size() == 1);
  const std::vector<double> dup{0.0, 0.5, 0.5};
  const auto rows = run_alpha_sweep(p, a.train_items, a.test_items, a.ngram, cfg.embr, dup);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].alpha == 0.0);
  CHECK(rows[1].final_test_wer == rows[2].final_test_wer);
  CHECK(rows[1].final_train_expected_wer == rows[2].final_train_expected_wer);
  std::ostringstream sweep;
  write_sweep(sweep, rows);
  CHECK(sweep.str().rfind("alpha\tfinal_test_wer\tfinal_train_expected_wer\n0\t", 0) == 0);

  const auto text = encode_corpus(a.vocab, std::span(a.corpus.train).first(100));
  NceConfig nc = cfg.nce;
  nc.learning_rate = 0.3;
  const RnnLmParams adapted = adapt_baseline(p, text, nc);
  CHECK(perplexity(adapted, text) <= perplexity(p, text));
  nc.epochs = 0;
  CHECK(adapt_baseline(p, text, nc) == p);
  CHECK_THROWS_AS(adapt_baseline(p, {}, nc), Error);
}

}  // TEST_SUITE
