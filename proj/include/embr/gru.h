// embr/gru.h

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

#ifndef EMBR_GRU_H_
#define EMBR_GRU_H_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace embr {

/// Parameters of a single-layer GRU language model with a word embedding
/// and a linear output layer (one row per vocabulary word).
///
///   z  = sigmoid(Wz_in x + Wz_rec h + bz)
///   r  = sigmoid(Wr_in x + Wr_rec h + br)
///   h~ = tanh(Wh_in x + Wh_rec (r .* h) + bh)
///   h' = (1 - z) .* h + z .* h~
///
/// The same struct holds gradients.
template <typename Scalar>
struct GruWeights {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix embedding;  // V x d
  Matrix update_in, update_rec;
  Matrix reset_in, reset_rec;
  Matrix cand_in, cand_rec;
  Vector update_bias, reset_bias, cand_bias;
  Matrix output;       // V x d
  Vector output_bias;  // V

  static GruWeights zeros(Eigen::Index vocab, Eigen::Index hidden) {
    GruWeights w;
    w.embedding = Matrix::Zero(vocab, hidden);
    for (Matrix* m : {&w.update_in, &w.update_rec, &w.reset_in, &w.reset_rec,
                      &w.cand_in, &w.cand_rec})
      *m = Matrix::Zero(hidden, hidden);
    for (Vector* v : {&w.update_bias, &w.reset_bias, &w.cand_bias})
      *v = Vector::Zero(hidden);
    w.output = Matrix::Zero(vocab, hidden);
    w.output_bias = Vector::Zero(vocab);
    return w;
  }

  Eigen::Index hidden() const { return update_rec.rows(); }
  Eigen::Index vocab_size() const { return embedding.rows(); }

  /// Calls f(name, tensor) for every tensor in declaration order; this is
  /// also the serialisation order.
  template <typename F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  GruWeights zeros_like() const { return zeros(vocab_size(), hidden()); }

  /// this += alpha * other
  void add_scaled(Scalar alpha, const GruWeights& other) {
    zip(*this, other, [alpha](std::string_view, auto& a, const auto& b) {
      a += alpha * b;
    });
  }

  Scalar squared_norm() const {
    Scalar s(0);
    for_each_tensor([&](std::string_view, const auto& t) { s += t.squaredNorm(); });
    return s;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
    return ok;
  }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for_each_tensor([&](std::string_view, const auto& t) { n += t.size(); });
    return n;
  }

  bool operator==(const GruWeights& o) const {
    bool eq = true;
    zip(*this, o, [&](std::string_view, const auto& a, const auto& b) {
      eq = eq && a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    });
    return eq;
  }

  /// Calls f(name, a.tensor, b.tensor) for matching tensors of a and b.
  template <typename A, typename B, typename F>
  static void zip(A& a, B& b, F&& f) {
    f("embedding", a.embedding, b.embedding);
    f("update_in", a.update_in, b.update_in);
    f("update_rec", a.update_rec, b.update_rec);
    f("update_bias", a.update_bias, b.update_bias);
    f("reset_in", a.reset_in, b.reset_in);
    f("reset_rec", a.reset_rec, b.reset_rec);
    f("reset_bias", a.reset_bias, b.reset_bias);
    f("cand_in", a.cand_in, b.cand_in);
    f("cand_rec", a.cand_rec, b.cand_rec);
    f("cand_bias", a.cand_bias, b.cand_bias);
    f("output", a.output, b.output);
    f("output_bias", a.output_bias, b.output_bias);
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& w, F& f) {
    zip(w, w, [&f](std::string_view name, auto& t, auto&) { f(name, t); });
  }
};

/// Activations of one step, kept for the backward pass.
template <typename Scalar>
struct GruStepCache {
  using Vector = typename GruWeights<Scalar>::Vector;
  std::int32_t word = -1;
  Vector h_prev, update, reset, cand;
};

template <typename Scalar>
typename GruWeights<Scalar>::Vector gru_step(
    const GruWeights<Scalar>& w,
    const typename GruWeights<Scalar>::Vector& h, std::int32_t word,
    GruStepCache<Scalar>* cache = nullptr) {
  using Vector = typename GruWeights<Scalar>::Vector;
  auto logistic = [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); };
  const Vector x = w.embedding.row(word).transpose();
  const Vector z = (w.update_in * x + w.update_rec * h + w.update_bias)
                       .unaryExpr(logistic);
  const Vector r = (w.reset_in * x + w.reset_rec * h + w.reset_bias)
                       .unaryExpr(logistic);
  const Vector c = (w.cand_in * x + w.cand_rec * r.cwiseProduct(h) + w.cand_bias)
                       .array()
                       .tanh()
                       .matrix();
  Vector out = (Vector::Ones(h.size()) - z).cwiseProduct(h) + z.cwiseProduct(c);
  if (cache) {
    cache->word = word;
    cache->h_prev = h;
    cache->update = z;
    cache->reset = r;
    cache->cand = c;
  }
  return out;
}

/// Accumulates parameter gradients of one step into grads and returns the
/// gradient with respect to the previous hidden state.
template <typename Scalar>
typename GruWeights<Scalar>::Vector gru_step_backward(
    const GruWeights<Scalar>& w, const GruStepCache<Scalar>& cache,
    const typename GruWeights<Scalar>::Vector& d_out,
    GruWeights<Scalar>* grads) {
  using Vector = typename GruWeights<Scalar>::Vector;
  const Vector& h = cache.h_prev;
  const Vector& z = cache.update;
  const Vector& r = cache.reset;
  const Vector& c = cache.cand;
  const Vector x = w.embedding.row(cache.word).transpose();
  const auto ones = Vector::Ones(h.size());

  Vector d_prev = d_out.cwiseProduct(ones - z);
  const Vector d_cand_pre =
      d_out.cwiseProduct(z).cwiseProduct(ones - c.cwiseProduct(c));
  const Vector d_update_pre = d_out.cwiseProduct(c - h)
                                  .cwiseProduct(z)
                                  .cwiseProduct(ones - z);
  const Vector rh = r.cwiseProduct(h);
  const Vector d_rh = w.cand_rec.transpose() * d_cand_pre;
  const Vector d_reset_pre =
      d_rh.cwiseProduct(h).cwiseProduct(r).cwiseProduct(ones - r);
  d_prev += d_rh.cwiseProduct(r);
  d_prev += w.update_rec.transpose() * d_update_pre;
  d_prev += w.reset_rec.transpose() * d_reset_pre;

  grads->cand_in.noalias() += d_cand_pre * x.transpose();
  grads->cand_rec.noalias() += d_cand_pre * rh.transpose();
  grads->cand_bias += d_cand_pre;
  grads->update_in.noalias() += d_update_pre * x.transpose();
  grads->update_rec.noalias() += d_update_pre * h.transpose();
  grads->update_bias += d_update_pre;
  grads->reset_in.noalias() += d_reset_pre * x.transpose();
  grads->reset_rec.noalias() += d_reset_pre * h.transpose();
  grads->reset_bias += d_reset_pre;

  const Vector d_x = w.cand_in.transpose() * d_cand_pre +
                     w.update_in.transpose() * d_update_pre +
                     w.reset_in.transpose() * d_reset_pre;
  grads->embedding.row(cache.word) += d_x.transpose();
  return d_prev;
}

}  // namespace embr

#endif  // EMBR_GRU_H_
