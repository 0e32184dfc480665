// tools/embr_tool.cc

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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "embr/harness.h"

namespace {

using namespace embr;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

// Writes to `path`, or to stdout when it is empty or "-".
template <typename F>
void with_output(const std::string& path, F&& f) {
  if (path.empty() || path == "-") {
    f(std::cout);
    std::cout.flush();
  } else {
    std::ofstream out = open_out(path);
    f(out);
    if (!out) throw Error("write failed: " + path);
  }
}

void add_scales(CLI::App* cmd, ScaleConfig* s) {
  cmd->add_option("--am-scale", s->am_scale, "Acoustic score scale")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--lm-scale", s->lm_scale, "LM score scale")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--kappa", s->posterior_scale, "Posterior scale")
      ->check(CLI::PositiveNumber);
}

void add_interpolation(CLI::App* cmd, Interpolation* w) {
  cmd->add_option("--w-rnn", w->w_rnn, "Interpolation weight of the RNNLM");
  cmd->add_option("--w-ng", w->w_ng, "Interpolation weight of the n-gram");
}

// Pairs lattices with references by utterance id.
std::vector<TrainingItem> load_items(const std::string& lat_path,
                                     const std::string& ref_path,
                                     const NGramModel& ngram,
                                     const Vocabulary& vocab) {
  const auto lats = read_lattices_file(lat_path);
  const auto refs = read_transcripts_file(ref_path);
  std::unordered_map<std::string, const Transcript*> idx;
  for (const auto& r : refs) idx.emplace(r.utt_id, &r);
  std::vector<TrainingItem> items;
  items.reserve(lats.size());
  for (const auto& lat : lats) {
    auto it = idx.find(lat.utt_id);
    if (it == idx.end()) throw Error("no reference for utterance " + lat.utt_id);
    items.push_back(make_training_item(lat, it->second->words, ngram, vocab));
  }
  return items;
}

struct GenOpts {
  std::string out_dir;
  PipelineConfig cfg;
};

void run_gen(const GenOpts& o) {
  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  auto path = [&](const char* name) { return (fs::path(o.out_dir) / name).string(); };
  const PipelineConfig& c = o.cfg;
  c.synth.check();
  const TextGenerator gen(c.synth);
  const Corpus corpus = gen_corpus(c.synth, c.train_sentences,
                                   c.valid_sentences, c.test_sentences);
  with_output(path("vocab.txt"),
              [&](std::ostream& out) { write_vocabulary(out, gen.vocab()); });
  with_output(path("train.txt"),
              [&](std::ostream& out) { write_corpus(out, corpus.train); });
  with_output(path("valid.txt"),
              [&](std::ostream& out) { write_corpus(out, corpus.valid); });
  with_output(path("test.txt"),
              [&](std::ostream& out) { write_corpus(out, corpus.test); });
  const NGramModel lm = estimate_add_one(corpus.train, gen.vocab(), c.ngram_order);
  with_output(path("lm.arpa"), [&](std::ostream& out) { write_arpa(out, lm); });
  for (const char* split : {"train", "test"}) {
    const bool train = std::string(split) == "train";
    const auto refs = gen_references(c.synth, train ? c.train_lattices : c.test_lattices,
                                     split);
    const auto lats = gen_lattices(refs, c.synth);
    with_output(path(train ? "lat-train.ref" : "lat-test.ref"),
                [&](std::ostream& out) { write_transcripts(out, refs); });
    write_lattices_file(path(train ? "lat-train.lat" : "lat-test.lat"), lats);
  }
  std::cout << "generator_perplexity\t" << format_real(gen.analytic_perplexity())
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice-based discriminative training of recurrent language models.\n"
               "Usage: embr-tool <command> [options]"};
  app.require_subcommand(1);
  std::function<void()> action;

  // gen
  GenOpts gen;
  {
    auto* cmd = app.add_subcommand("gen", "Generate a synthetic corpus, ARPA model and lattices");
    cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
    cmd->add_option("--seed", gen.cfg.synth.seed, "Random seed");
    cmd->add_option("--vocab-size", gen.cfg.synth.vocab_size, "Generator vocabulary size");
    cmd->add_option("--zipf", gen.cfg.synth.zipf, "Zipf exponent (0 = uniform)");
    cmd->add_option("--end-prob", gen.cfg.synth.end_prob, "Sentence end probability");
    cmd->add_option("--max-ref-length", gen.cfg.synth.max_ref_length,
                    "Longest lattice reference (0 = unbounded)");
    cmd->add_option("--branching", gen.cfg.synth.branching, "Word arcs per lattice slot");
    cmd->add_option("--confusion-size", gen.cfg.synth.confusion_size, "Confusion set size");
    cmd->add_option("--sub-prob", gen.cfg.synth.sub_prob, "Substitution probability");
    cmd->add_option("--del-prob", gen.cfg.synth.del_prob, "Deletion probability");
    cmd->add_option("--ins-prob", gen.cfg.synth.ins_prob, "Insertion probability");
    cmd->add_option("--ref-prob", gen.cfg.synth.ref_include_prob,
                    "Probability that the reference word is in its slot");
    cmd->add_option("--am-noise", gen.cfg.synth.am_noise, "Acoustic score noise");
    cmd->add_option("--train-sentences", gen.cfg.train_sentences, "Training sentences");
    cmd->add_option("--valid-sentences", gen.cfg.valid_sentences, "Validation sentences");
    cmd->add_option("--test-sentences", gen.cfg.test_sentences, "Test sentences");
    cmd->add_option("--train-lattices", gen.cfg.train_lattices, "Training lattices");
    cmd->add_option("--test-lattices", gen.cfg.test_lattices, "Test lattices");
    cmd->add_option("--order", gen.cfg.ngram_order, "Order of the estimated n-gram (1 or 2)");
    cmd->callback([&] { action = [&] { run_gen(gen); }; });
  }

  // train-nce
  struct {
    std::string vocab, train, valid, out, init;
    int hidden = 32;
    NceConfig nce;
  } tn;
  {
    auto* cmd = app.add_subcommand("train-nce", "Pretrain a GRU language model with NCE");
    cmd->add_option("--vocab", tn.vocab, "Vocabulary file")->required();
    cmd->add_option("--train", tn.train, "Training text")->required();
    cmd->add_option("--valid", tn.valid, "Validation text")->required();
    cmd->add_option("--out", tn.out, "Output checkpoint")->required();
    cmd->add_option("--init", tn.init, "Initial checkpoint (default: random)");
    cmd->add_option("--hidden", tn.hidden, "Hidden size")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", tn.nce.epochs, "Epochs");
    cmd->add_option("--lr", tn.nce.learning_rate, "Learning rate");
    cmd->add_option("--k", tn.nce.noise_samples, "Noise samples per token");
    cmd->add_option("--seed", tn.nce.seed, "Random seed");
    cmd->callback([&] {
      action = [&] {
        const Vocabulary vocab = read_vocabulary_file(tn.vocab);
        const auto train = encode_corpus(vocab, read_corpus_file(tn.train));
        const auto valid = encode_corpus(vocab, read_corpus_file(tn.valid));
        RnnLmParams init = tn.init.empty()
                               ? init_rnnlm(vocab, tn.hidden, derive_seed(tn.nce.seed, "init"))
                               : load_checkpoint_file(tn.init);
        std::vector<NceEpoch> log;
        const RnnLmParams out = train_nce(init, train, valid, tn.nce, &log);
        save_checkpoint_file(tn.out, out);
        std::cout << "epoch\ttrain_loss\tvalid_ppl\tlearning_rate\n";
        for (const auto& e : log)
          std::cout << e.epoch << '\t' << format_real(e.train_loss) << '\t'
                    << format_real(e.valid_ppl) << '\t'
                    << format_real(e.learning_rate) << '\n';
      };
    });
  }

  // annotate
  struct { std::string lattices, refs, out; } an;
  {
    auto* cmd = app.add_subcommand("annotate", "Add exact edit costs to lattice arcs");
    cmd->add_option("--lattices", an.lattices, "Input lattices")->required();
    cmd->add_option("--refs", an.refs, "Reference transcripts")->required();
    cmd->add_option("--out", an.out, "Output lattices (default stdout)");
    cmd->callback([&] {
      action = [&] {
        const auto lats = read_lattices_file(an.lattices);
        const auto refs = read_transcripts_file(an.refs);
        std::unordered_map<std::string, const Transcript*> idx;
        for (const auto& r : refs) idx.emplace(r.utt_id, &r);
        std::vector<Lattice> out;
        std::size_t in_states = 0, out_states = 0;
        for (const auto& lat : lats) {
          auto it = idx.find(lat.utt_id);
          if (it == idx.end()) throw Error("no reference for utterance " + lat.utt_id);
          out.push_back(annotate_lattice(lat, it->second->words).lattice);
          in_states += static_cast<std::size_t>(lat.num_states);
          out_states += static_cast<std::size_t>(out.back().num_states);
        }
        with_output(an.out, [&](std::ostream& os) {
          for (const auto& l : out) write_lattice(os, l);
        });
        std::cerr << "annotate: " << lats.size() << " lattices, state ratio "
                  << format_real(in_states ? double(out_states) / double(in_states) : 1.0)
                  << '\n';
      };
    });
  }

  // expand
  struct { std::string lattices, lm, out; } ex;
  {
    auto* cmd = app.add_subcommand("expand", "Expand lattices by n-gram history");
    cmd->add_option("--lattices", ex.lattices, "Input lattices")->required();
    cmd->add_option("--lm", ex.lm, "ARPA language model")->required();
    cmd->add_option("--out", ex.out, "Output lattices (default stdout)");
    cmd->callback([&] {
      action = [&] {
        const NGramModel lm = load_arpa_file(ex.lm);
        const auto lats = read_lattices_file(ex.lattices);
        with_output(ex.out, [&](std::ostream& os) {
          for (const auto& l : lats) write_lattice(os, expand_lattice(l, lm).lattice);
        });
      };
    });
  }

  // rescore
  struct {
    std::string lattices, lm, model, out;
    ScaleConfig scales;
    Interpolation w;
  } rs;
  {
    auto* cmd = app.add_subcommand("rescore", "Rescore lattices with the interpolated RNNLM");
    cmd->add_option("--lattices", rs.lattices, "Input lattices")->required();
    cmd->add_option("--lm", rs.lm, "ARPA language model")->required();
    cmd->add_option("--model", rs.model, "RNNLM checkpoint")->required();
    cmd->add_option("--out", rs.out, "Output lattices (default stdout)");
    add_scales(cmd, &rs.scales);
    add_interpolation(cmd, &rs.w);
    cmd->callback([&] {
      action = [&] {
        const NGramModel lm = load_arpa_file(rs.lm);
        const RnnLmParams model = load_checkpoint_file(rs.model);
        const auto lats = read_lattices_file(rs.lattices);
        with_output(rs.out, [&](std::ostream& os) {
          for (const auto& l : lats)
            write_lattice(os, rescore_lattice(expand_lattice(l, lm), model, lm,
                                              rs.w, rs.scales));
        });
      };
    });
  }

  // finetune-embr
  struct {
    std::string model, lm, train_lat, train_ref, test_lat, test_ref, out, metrics;
    TrainConfig cfg;
  } ft;
  auto add_train_opts = [](CLI::App* cmd, TrainConfig* cfg) {
    cmd->add_option("--alpha", cfg->alpha, "Weight of the NCE term");
    cmd->add_option("--lr", cfg->learning_rate, "Learning rate");
    cmd->add_option("--epochs", cfg->epochs, "Epochs");
    cmd->add_option("--batch-size", cfg->batch_size, "Lattices per batch");
    cmd->add_option("--batch-states", cfg->batch_states,
                    "Batch by total state count instead (0 = off)");
    cmd->add_option("--k", cfg->noise_samples, "NCE noise samples per token");
    cmd->add_option("--seed", cfg->seed, "Random seed");
    add_scales(cmd, &cfg->scales);
    add_interpolation(cmd, &cfg->interpolation);
  };
  {
    auto* cmd = app.add_subcommand("finetune-embr", "Fine-tune the RNNLM with the EMBR loss");
    cmd->add_option("--model", ft.model, "Pretrained checkpoint")->required();
    cmd->add_option("--lm", ft.lm, "ARPA language model")->required();
    cmd->add_option("--train-lattices", ft.train_lat, "Training lattices")->required();
    cmd->add_option("--train-refs", ft.train_ref, "Training references")->required();
    cmd->add_option("--test-lattices", ft.test_lat, "Held-out lattices");
    cmd->add_option("--test-refs", ft.test_ref, "Held-out references");
    cmd->add_option("--out", ft.out, "Output checkpoint")->required();
    cmd->add_option("--metrics", ft.metrics, "Metrics TSV (default stdout)");
    add_train_opts(cmd, &ft.cfg);
    cmd->callback([&] {
      action = [&] {
        if (ft.test_lat.empty() != ft.test_ref.empty())
          throw Error("--test-lattices and --test-refs go together");
        const NGramModel lm = load_arpa_file(ft.lm);
        const RnnLmParams model = load_checkpoint_file(ft.model);
        const auto train = load_items(ft.train_lat, ft.train_ref, lm, model.vocab);
        std::vector<TrainingItem> test;
        if (!ft.test_lat.empty())
          test = load_items(ft.test_lat, ft.test_ref, lm, model.vocab);
        with_output(ft.metrics, [&](std::ostream& os) {
          write_metrics_header(os);
          const RnnLmParams out = finetune_embr(
              model, train, test, lm, ft.cfg, nullptr,
              [&](const EpochMetrics& m) { write_metrics_row(os, m); });
          save_checkpoint_file(ft.out, out);
        });
      };
    });
  }

  // adapt
  struct {
    std::string model, text, lattices, refs, out;
    NceConfig nce;
  } ad;
  {
    auto* cmd = app.add_subcommand(
        "adapt", "NCE fine-tuning on text, or on oracle transcripts of lattices");
    cmd->add_option("--model", ad.model, "Pretrained checkpoint")->required();
    auto* text = cmd->add_option("--text", ad.text, "Adaptation text");
    auto* lats = cmd->add_option("--lattices", ad.lattices,
                                 "Lattices whose oracle paths form the text");
    cmd->add_option("--refs", ad.refs, "References for --lattices")->needs(lats);
    lats->needs("--refs");
    text->excludes(lats);
    cmd->add_option("--out", ad.out, "Output checkpoint")->required();
    cmd->add_option("--epochs", ad.nce.epochs, "Epochs");
    cmd->add_option("--lr", ad.nce.learning_rate, "Learning rate");
    cmd->add_option("--k", ad.nce.noise_samples, "Noise samples per token");
    cmd->add_option("--seed", ad.nce.seed, "Random seed");
    cmd->callback([&] {
      action = [&] {
        const RnnLmParams model = load_checkpoint_file(ad.model);
        std::vector<std::vector<std::string>> text;
        if (!ad.text.empty()) {
          text = read_corpus_file(ad.text);
        } else if (!ad.lattices.empty()) {
          for (auto& t : oracle_transcripts(read_lattices_file(ad.lattices),
                                            read_transcripts_file(ad.refs)))
            text.push_back(std::move(t.words));
        } else {
          throw Error("adapt needs --text or --lattices");
        }
        const auto ids = encode_corpus(model.vocab, text);
        const RnnLmParams out = adapt_baseline(model, ids, ad.nce);
        save_checkpoint_file(ad.out, out);
        std::cout << "ppl_before\tppl_after\n"
                  << format_real(perplexity(model, ids)) << '\t'
                  << format_real(perplexity(out, ids)) << '\n';
      };
    });
  }

  // nbest
  struct {
    std::string lattices, out;
    std::size_t n = 10;
    ScaleConfig scales;
  } nb;
  {
    auto* cmd = app.add_subcommand("nbest", "Write the n best paths of each lattice");
    cmd->add_option("--lattices", nb.lattices, "Input lattices")->required();
    cmd->add_option("--n", nb.n, "Paths per lattice")->check(CLI::PositiveNumber);
    cmd->add_option("--out", nb.out, "Output TSV (default stdout)");
    add_scales(cmd, &nb.scales);
    cmd->callback([&] {
      action = [&] {
        const auto lats = read_lattices_file(nb.lattices);
        with_output(nb.out, [&](std::ostream& os) {
          os << "utt_id\trank\tscore\twords\n";
          for (const auto& l : lats) {
            const auto paths = nbest(l, nb.n, nb.scales);
            for (std::size_t i = 0; i < paths.size(); ++i) {
              os << l.utt_id << '\t' << i + 1 << '\t' << format_real(paths[i].score) << '\t';
              for (std::size_t j = 0; j < paths[i].words.size(); ++j)
                os << (j ? " " : "") << paths[i].words[j];
              os << '\n';
            }
          }
        });
      };
    });
  }

  // expected-wer
  struct {
    std::string lattices, refs, out;
    std::optional<std::size_t> k, n;
    std::uint64_t seed = 1;
    ScaleConfig scales;
  } ew;
  {
    auto* cmd = app.add_subcommand("expected-wer",
                                   "Expected edit distance of each lattice");
    cmd->add_option("--lattices", ew.lattices,
                    "Lattices (annotated unless --refs is given)")->required();
    cmd->add_option("--refs", ew.refs, "References; annotates the lattices first");
    cmd->add_option("--k", ew.k, "Also report the sampled estimate with k paths");
    cmd->add_option("--n", ew.n, "Also report the n-best estimate");
    cmd->add_option("--seed", ew.seed, "Seed of the sampled estimate");
    cmd->add_option("--out", ew.out, "Output TSV (default stdout)");
    add_scales(cmd, &ew.scales);
    cmd->callback([&] {
      action = [&] {
        auto lats = read_lattices_file(ew.lattices);
        if (!ew.refs.empty()) {
          const auto refs = read_transcripts_file(ew.refs);
          std::unordered_map<std::string, const Transcript*> idx;
          for (const auto& r : refs) idx.emplace(r.utt_id, &r);
          for (auto& l : lats) {
            auto it = idx.find(l.utt_id);
            if (it == idx.end()) throw Error("no reference for utterance " + l.utt_id);
            l = annotate_lattice(l, it->second->words).lattice;
          }
        }
        with_output(ew.out, [&](std::ostream& os) {
          os << "utt_id\texpected_errors";
          if (ew.k) os << "\tsampled";
          if (ew.n) os << "\tnbest";
          os << '\n';
          for (const auto& l : lats) {
            if (!l.annotated())
              throw Error("lattice " + l.utt_id + " is not annotated; pass --refs");
            os << l.utt_id << '\t'
               << format_real(expected_edit_distance(l, ew.scales).expected_loss);
            if (ew.k)
              os << '\t' << format_real(sampled_embr(
                                l, *ew.k, ew.scales, derive_seed(ew.seed, l.utt_id)));
            if (ew.n) os << '\t' << format_real(nbest_embr(l, *ew.n, ew.scales));
            os << '\n';
          }
        });
      };
    });
  }

  // score
  struct {
    std::string lattices, hyps, refs, out, details;
    std::optional<double> baseline;
    ScaleConfig scales;
  } sc;
  {
    auto* cmd = app.add_subcommand("score", "WER, oracle WER and I/D/S breakdown");
    auto* lats = cmd->add_option("--lattices", sc.lattices, "Lattices (best path is scored)");
    auto* hyps = cmd->add_option("--hyps", sc.hyps, "Hypothesis transcripts");
    lats->excludes(hyps);
    cmd->add_option("--refs", sc.refs, "Reference transcripts")->required();
    cmd->add_option("--baseline-wer", sc.baseline, "WER of the baseline, for relative gain");
    cmd->add_option("--out", sc.out, "Summary TSV (default stdout)");
    cmd->add_option("--details", sc.details, "Per-utterance TSV");
    add_scales(cmd, &sc.scales);
    cmd->callback([&] {
      action = [&] {
        const auto refs = read_transcripts_file(sc.refs);
        ScoreReport rep;
        if (!sc.lattices.empty())
          rep = score_lattices(read_lattices_file(sc.lattices), refs, sc.scales);
        else if (!sc.hyps.empty())
          rep = score_hypotheses(read_transcripts_file(sc.hyps), refs);
        else
          throw Error("score needs --lattices or --hyps");
        with_output(sc.out, [&](std::ostream& os) {
          write_report_summary(os, rep, sc.baseline);
        });
        if (!sc.details.empty())
          with_output(sc.details, [&](std::ostream& os) { write_report_details(os, rep); });
      };
    });
  }

  // sweep-alpha
  struct {
    std::string model, lm, train_lat, train_ref, test_lat, test_ref, out;
    std::vector<double> alphas;
    TrainConfig cfg;
  } sw;
  {
    auto* cmd = app.add_subcommand("sweep-alpha", "Fine-tune once per NCE weight");
    cmd->add_option("--model", sw.model, "Pretrained checkpoint")->required();
    cmd->add_option("--lm", sw.lm, "ARPA language model")->required();
    cmd->add_option("--train-lattices", sw.train_lat, "Training lattices")->required();
    cmd->add_option("--train-refs", sw.train_ref, "Training references")->required();
    cmd->add_option("--test-lattices", sw.test_lat, "Held-out lattices")->required();
    cmd->add_option("--test-refs", sw.test_ref, "Held-out references")->required();
    cmd->add_option("--alphas", sw.alphas, "Comma-separated NCE weights")
        ->required()
        ->delimiter(',');
    cmd->add_option("--out", sw.out, "Output TSV (default stdout)");
    add_train_opts(cmd, &sw.cfg);
    cmd->callback([&] {
      action = [&] {
        const NGramModel lm = load_arpa_file(sw.lm);
        const RnnLmParams model = load_checkpoint_file(sw.model);
        const auto train = load_items(sw.train_lat, sw.train_ref, lm, model.vocab);
        const auto test = load_items(sw.test_lat, sw.test_ref, lm, model.vocab);
        const auto rows = run_alpha_sweep(model, train, test, lm, sw.cfg, sw.alphas);
        with_output(sw.out, [&](std::ostream& os) { write_sweep(os, rows); });
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    action();
  } catch (const std::exception& e) {
    std::cerr << "embr-tool: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
