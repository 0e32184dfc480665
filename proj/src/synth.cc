// embr/synth.cc

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

#include "embr/synth.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace embr {

void SynthSpec::check() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(std::string("synth: ") + name + " must be in [0, 1]");
  };
  if (vocab_size < 3) throw Error("synth: vocabulary needs at least 3 words");
  if (num_classes < 1) throw Error("synth: need at least one class");
  if (zipf < 0) throw Error("synth: zipf exponent must be non-negative");
  prob(end_prob, "end_prob");
  if (end_prob <= 0.0 || end_prob >= 1.0)
    throw Error("synth: end_prob must be strictly between 0 and 1");
  prob(sub_prob, "sub_prob");
  prob(del_prob, "del_prob");
  prob(ins_prob, "ins_prob");
  prob(ref_include_prob, "ref_include_prob");
  if (branching < 1) throw Error("synth: branching must be at least 1");
  if (confusion_size < 1 ||
      static_cast<std::size_t>(confusion_size) >= vocab_size)
    throw Error("synth: confusion_size must be in [1, vocab_size)");
  if (am_noise < 0) throw Error("synth: am_noise must be non-negative");
}

namespace {

std::string word_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "w%03zu", i);
  return buf;
}

std::vector<double> make_cdf(const std::vector<double>& p) {
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  return cdf;
}

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace

TextGenerator::TextGenerator(const SynthSpec& spec) : spec_(spec) {
  spec.check();
  const std::size_t V = spec.vocab_size;
  for (std::size_t i = 0; i < V; ++i) words_.push_back(word_name(i));
  vocab_ = Vocabulary(words_);

  Rng rng(spec.seed, "generator");
  const int contexts = spec.num_classes + 1;
  dist_.resize(contexts);
  for (int c = 0; c < contexts; ++c) {
    std::vector<std::size_t> perm(V);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = V; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<double>& p = dist_[c];
    p.assign(V + 1, 0.0);
    double z = 0.0;
    for (std::size_t rank = 0; rank < V; ++rank) {
      p[perm[rank]] = std::pow(static_cast<double>(rank + 1), -spec.zipf);
      z += p[perm[rank]];
    }
    const double word_mass = c == 0 ? 1.0 : 1.0 - spec.end_prob;
    for (std::size_t w = 0; w < V; ++w) p[w] *= word_mass / z;
    p[V] = c == 0 ? 0.0 : spec.end_prob;
    cdf_.push_back(make_cdf(p));
  }
}

int TextGenerator::context_of(int previous) const {
  return previous < 0 ? 0 : 1 + previous % spec_.num_classes;
}

std::vector<std::string> TextGenerator::sample(Rng& rng) const {
  std::vector<std::string> out;
  int prev = -1;
  while (true) {
    const std::size_t w = draw(cdf_[context_of(prev)], rng);
    if (w == words_.size()) break;
    out.push_back(words_[w]);
    prev = static_cast<int>(w);
  }
  return out;
}

double TextGenerator::logprob(int previous, int next) const {
  return std::log(dist_[context_of(previous)][next]);
}

double TextGenerator::analytic_perplexity() const {
  const int C = static_cast<int>(dist_.size());
  const std::size_t V = words_.size();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(C, C);
  Eigen::VectorXd entropy = Eigen::VectorXd::Zero(C);
  for (int c = 0; c < C; ++c) {
    for (std::size_t w = 0; w <= V; ++w) {
      const double p = dist_[c][w];
      if (p <= 0) continue;
      entropy(c) -= p * std::log(p);
      if (w < V) T(c, context_of(static_cast<int>(w))) += p;
    }
  }
  // Expected visits to each context before absorption, starting at 0.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(C, C);
  const Eigen::RowVectorXd visits =
      (I - T).transpose().partialPivLu().solve(Eigen::VectorXd::Unit(C, 0)).transpose();
  return std::exp(visits.dot(entropy) / visits.sum());
}

Corpus gen_corpus(const SynthSpec& spec, std::size_t train, std::size_t valid,
                  std::size_t test) {
  const TextGenerator gen(spec);
  Corpus c;
  auto fill = [&](std::vector<std::vector<std::string>>& out, std::size_t n,
                  const char* stream) {
    Rng rng(spec.seed, stream);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(gen.sample(rng));
  };
  fill(c.train, train, "corpus_train");
  fill(c.valid, valid, "corpus_valid");
  fill(c.test, test, "corpus_test");
  return c;
}

std::vector<Transcript> gen_references(const SynthSpec& spec,
                                       std::size_t count,
                                       const std::string& prefix) {
  const TextGenerator gen(spec);
  Rng rng(spec.seed, "references:" + prefix);
  std::vector<Transcript> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "-%05zu", i);
    auto words = gen.sample(rng);
    while (spec.max_ref_length > 0 && words.size() > spec.max_ref_length)
      words = gen.sample(rng);
    out.push_back({prefix + id, std::move(words)});
  }
  return out;
}

std::vector<Lattice> gen_lattices(std::span<const Transcript> refs,
                                  const SynthSpec& spec) {
  spec.check();
  const TextGenerator gen(spec);
  const auto& words = gen.words();
  const std::size_t V = words.size();
  const double uniform_lm = -std::log(static_cast<double>(V));

  // Fixed confusion sets: the words each word tends to be mistaken for.
  std::vector<std::vector<std::string>> confusable(V);
  {
    Rng rng(spec.seed, "confusion_sets");
    for (std::size_t w = 0; w < V; ++w) {
      while (confusable[w].size() < static_cast<std::size_t>(spec.confusion_size)) {
        const std::size_t c = rng.below(V);
        if (c == w) continue;
        if (std::find(confusable[w].begin(), confusable[w].end(), words[c]) ==
            confusable[w].end())
          confusable[w].push_back(words[c]);
      }
    }
  }
  const Vocabulary& vocab = gen.vocab();

  std::vector<Lattice> out;
  out.reserve(refs.size());
  for (const Transcript& ref : refs) {
    Rng rng(spec.seed, "lattice:" + ref.utt_id);
    Lattice lat;
    lat.utt_id = ref.utt_id;
    const auto T = static_cast<StateId>(ref.words.size());
    StateId next_state = T + 1;
    auto add = [&](StateId src, StateId dst, const std::string& label,
                   double mean) {
      Arc a;
      a.src = src;
      a.dst = dst;
      a.label = label;
      a.am_logp = mean + spec.am_noise * rng.normal();
      a.lm_logp = label == kEpsilon ? 0.0 : uniform_lm;
      lat.arcs.push_back(std::move(a));
    };
    for (StateId i = 0; i < T; ++i) {
      const std::string& word = ref.words[i];
      const WordId wid = vocab.find(word);
      const bool keep_ref = rng.bernoulli(spec.ref_include_prob);
      std::vector<std::string> alts;
      const std::size_t room =
          static_cast<std::size_t>(spec.branching - (keep_ref ? 1 : 0));
      if (wid >= 0 && static_cast<std::size_t>(wid) < V) {
        for (const auto& c : confusable[wid])
          if (alts.size() < room && rng.bernoulli(spec.sub_prob)) alts.push_back(c);
        if (!keep_ref && alts.empty()) alts.push_back(confusable[wid].front());
      }
      if (keep_ref || alts.empty()) add(i, i + 1, word, spec.am_ref_mean);
      for (const auto& a : alts) add(i, i + 1, a, spec.am_sub_mean);
      if (rng.bernoulli(spec.del_prob))
        add(i, i + 1, std::string(kEpsilon), spec.am_del_mean);
      if (rng.bernoulli(spec.ins_prob)) {
        const StateId mid = next_state++;
        add(i, mid, word, spec.am_ref_mean);
        add(mid, i + 1, words[rng.below(V)], spec.am_ins_mean);
      }
    }
    lat.num_states = next_state;
    lat.finals = {T};
    out.push_back(std::move(lat));
  }
  return out;
}

}  // namespace embr
