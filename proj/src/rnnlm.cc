// embr/rnnlm.cc

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

#include "embr/rnnlm.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace embr {

RnnLmParams init_rnnlm(Vocabulary vocab, int hidden, std::uint64_t seed,
                       double scale) {
  if (hidden <= 0) throw Error("hidden size must be positive");
  if (vocab.bos() < 0 || vocab.eos() < 0 || vocab.unk() < 0)
    throw Error("RNNLM vocabulary needs <s>, </s> and <unk>");
  RnnLmParams p;
  const auto V = static_cast<Eigen::Index>(vocab.size());
  p.vocab = std::move(vocab);
  p.weights = Weights::zeros(V, hidden);
  Rng rng(seed, "init_rnnlm");
  p.weights.for_each_tensor([&](std::string_view name, auto& t) {
    if (name.ends_with("bias")) return;
    for (Eigen::Index i = 0; i < t.size(); ++i)
      t.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
  });
  p.weights.output_bias.setConstant(-std::log(static_cast<double>(V)));
  return p;
}

namespace {

constexpr char kMagic[8] = {'E', 'M', 'B', 'R', 'G', 'R', 'U', '\0'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw Error("checkpoint truncated");
  return to_little(v);
}

}  // namespace

void save_checkpoint(std::ostream& out, const RnnLmParams& p) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, RnnLmParams::kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.hidden()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.vocab.size()));
  for (const auto& w : p.vocab.words()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  p.weights.for_each_tensor([&](std::string_view, const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) put<double>(out, t.data()[i]);
  });
  if (!out) throw Error("checkpoint write failed");
}

RnnLmParams load_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("not an RNNLM checkpoint");
  const auto version = get<std::uint32_t>(in);
  if (version != RnnLmParams::kVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto d = get<std::uint32_t>(in);
  const auto V = get<std::uint32_t>(in);
  RnnLmParams p;
  for (std::uint32_t i = 0; i < V; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string w(len, '\0');
    if (!in.read(w.data(), len)) throw Error("checkpoint truncated");
    if (p.vocab.find(w) >= 0) throw Error("checkpoint: duplicate word " + w);
    p.vocab.add(w);
  }
  p.weights = Weights::zeros(V, d);
  p.weights.for_each_tensor([&](std::string_view, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = get<double>(in);
  });
  return p;
}

void save_checkpoint_file(const std::string& path, const RnnLmParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  save_checkpoint(out, params);
}

RnnLmParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

Vector start_hidden(const RnnLmParams& p, StepCache* cache) {
  return rnn_step(p, Vector::Zero(p.hidden()), p.vocab.bos(), cache);
}

double sentence_score(const RnnLmParams& p, std::span<const WordId> words) {
  Vector h = start_hidden(p);
  double total = 0.0;
  for (WordId w : words) {
    total += score_word(p, h, w);
    h = rnn_step(p, h, w);
  }
  return total + score_word(p, h, p.vocab.eos());
}

double perplexity(const RnnLmParams& p, std::span<const Sentence> corpus) {
  double nll = 0.0;
  std::size_t tokens = 0;
  const auto& W = p.weights;
  for (const Sentence& s : corpus) {
    Vector h = start_hidden(p);
    for (std::size_t t = 0; t <= s.size(); ++t) {
      const WordId target = t < s.size() ? s[t] : p.vocab.eos();
      const Vector logits = W.output * h + W.output_bias;
      const double mx = logits.maxCoeff();
      const double log_z = mx + std::log((logits.array() - mx).exp().sum());
      nll -= logits(target) - log_z;
      ++tokens;
      if (t < s.size()) h = rnn_step(p, h, s[t]);
    }
  }
  if (tokens == 0) throw Error("perplexity: empty corpus");
  return std::exp(nll / static_cast<double>(tokens));
}

}  // namespace embr
