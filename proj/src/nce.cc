// embr/nce.cc

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
#include <numeric>

#include "embr/rnnlm.h"

namespace embr {

NoiseDistribution NoiseDistribution::from_corpus(
    std::span<const Sentence> corpus, const Vocabulary& vocab, int samples,
    double floor) {
  if (samples < 1) throw Error("NCE needs at least one noise sample");
  NoiseDistribution q;
  q.samples = samples;
  const std::size_t V = vocab.size();
  std::vector<double> counts(V, 0.0);
  double total = 0.0;
  for (const Sentence& s : corpus) {
    for (WordId w : s) counts[w] += 1.0;
    counts[vocab.eos()] += 1.0;
    total += static_cast<double>(s.size() + 1);
  }
  q.prob.resize(V);
  double z = 0.0;
  for (std::size_t w = 0; w < V; ++w) {
    q.prob[w] = std::max(total > 0 ? counts[w] / total : 1.0 / V, floor);
    z += q.prob[w];
  }
  q.log_prob.resize(V);
  q.cdf.resize(V);
  double acc = 0.0;
  for (std::size_t w = 0; w < V; ++w) {
    q.prob[w] /= z;
    q.log_prob[w] = std::log(q.prob[w]);
    acc += q.prob[w];
    q.cdf[w] = acc;
  }
  return q;
}

WordId NoiseDistribution::sample(Rng& rng) const {
  const double u = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<WordId>(it - cdf.begin());
}

NceResult nce_loss_and_grads(const RnnLmParams& p,
                             std::span<const Sentence> batch,
                             const NoiseDistribution& noise,
                             std::uint64_t seed) {
  if (noise.samples < 1) throw Error("NCE needs at least one noise sample");
  const auto& W = p.weights;
  const double log_k = std::log(static_cast<double>(noise.samples));
  NceResult res;
  res.grads = W.zeros_like();
  Rng rng(seed, "nce_noise");

  std::vector<Vector> hs;
  std::vector<StepCache> steps;
  std::vector<Vector> d_h;
  StepCache start;
  for (const Sentence& s : batch) {
    const std::size_t T = s.size();
    hs.assign(1, start_hidden(p, &start));
    steps.resize(T);
    for (std::size_t t = 0; t < T; ++t)
      hs.push_back(rnn_step(p, hs[t], s[t], &steps[t]));

    d_h.assign(T + 1, Vector::Zero(p.hidden()));
    auto term = [&](std::size_t t, WordId w, bool is_data) {
      // Logit of "w came from the data" against k noise draws.
      const double delta =
          score_word(p, hs[t], w) - (log_k + noise.log_prob[w]);
      double d;
      if (is_data) {
        res.loss -= log_sigmoid(delta);
        d = sigmoid(delta) - 1.0;
      } else {
        res.loss -= log_sigmoid(-delta);
        d = sigmoid(delta);
      }
      res.grads.output.row(w) += d * hs[t].transpose();
      res.grads.output_bias(w) += d;
      d_h[t] += d * W.output.row(w).transpose();
    };
    for (std::size_t t = 0; t <= T; ++t) {
      term(t, t < T ? s[t] : p.vocab.eos(), true);
      for (int i = 0; i < noise.samples; ++i) term(t, noise.sample(rng), false);
    }
    res.tokens += T + 1;

    Vector carry = Vector::Zero(p.hidden());
    for (std::size_t t = T + 1; t-- > 0;) {
      const Vector g = d_h[t] + carry;
      if (t > 0) carry = gru_step_backward(W, steps[t - 1], g, &res.grads);
      else gru_step_backward(W, start, g, &res.grads);
    }
  }
  return res;
}

RnnLmParams train_nce(const RnnLmParams& init, std::span<const Sentence> train,
                      std::span<const Sentence> valid, const NceConfig& config,
                      std::vector<NceEpoch>* log) {
  if (train.empty()) throw Error("train_nce: empty training corpus");
  if (valid.empty()) throw Error("train_nce: empty validation corpus");
  const NoiseDistribution noise = NoiseDistribution::from_corpus(
      train, init.vocab, config.noise_samples);

  RnnLmParams params = init;
  RnnLmParams best = init;
  double best_ppl = perplexity(init, valid);
  double prev_ppl = best_ppl;
  double lr = config.learning_rate;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_sentences);

  std::vector<std::size_t> order(train.size());
  std::vector<Sentence> chunk;
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(mix_seed(config.seed + static_cast<std::uint64_t>(epoch)),
                "nce_shuffle");
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.below(i)]);

    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      chunk.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + batch); ++i)
        chunk.push_back(train[order[i]]);
      NceResult r = nce_loss_and_grads(
          params, chunk, noise, derive_seed(config.seed, "nce_step") + step++);
      epoch_loss += r.loss;
      epoch_tokens += r.tokens;
      double scale = 1.0 / static_cast<double>(r.tokens);
      if (config.max_grad_norm > 0) {
        const double norm = std::sqrt(r.grads.squared_norm()) * scale;
        if (norm > config.max_grad_norm) scale *= config.max_grad_norm / norm;
      }
      params.weights.add_scaled(-lr * scale, r.grads);
    }

    const double ppl = perplexity(params, valid);
    if (log)
      log->push_back({epoch, epoch_loss / static_cast<double>(epoch_tokens), ppl, lr});
    if (ppl < best_ppl) {
      best_ppl = ppl;
      best = params;
    }
    if (prev_ppl - ppl < config.min_improvement) lr /= config.decay_factor;
    prev_ppl = ppl;
  }
  return best;
}

}  // namespace embr
