// embr/expected_loss.cc

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

#include "embr/embr.h"

namespace embr {

namespace {

double arc_cost(const Arc& a) {
  if (!a.edit_cost) throw Error("expected loss needs an annotated lattice");
  return static_cast<double>(*a.edit_cost);
}

double path_cost(const Lattice& lat, const Path& p) {
  double c = 0.0;
  for (std::int32_t a : p.arcs) c += arc_cost(lat.arcs[a]);
  return c;
}

}  // namespace

ExpectationStats expected_edit_distance(const Lattice& lat,
                                        std::span<const double> score) {
  if (score.size() != lat.arcs.size())
    throw Error("expected_edit_distance: one score per arc required");
  const auto order = topological_order(lat);
  const auto in = incoming_arcs(lat);
  const auto out = outgoing_arcs(lat);
  const StateId N = lat.num_states;

  ExpectationStats st;
  st.alpha = forward_logprobs(lat, score, order);
  st.beta = backward_logprobs(lat, score, order);
  st.log_total = st.beta[0];
  if (st.log_total == kLogZero)
    throw Error("no complete path in lattice '" + lat.utt_id + "'");

  // Loss accumulators: weighted means over incoming / outgoing options.
  st.alpha_loss.assign(N, 0.0);
  for (StateId s : order) {
    if (s == 0 || st.alpha[s] == kLogZero) continue;
    double acc = 0.0;
    for (std::int32_t ai : in[s]) {
      const Arc& a = lat.arcs[ai];
      const double w = std::exp(st.alpha[a.src] + score[ai] - st.alpha[s]);
      if (w > 0) acc += w * (st.alpha_loss[a.src] + arc_cost(a));
    }
    st.alpha_loss[s] = acc;
  }
  st.beta_loss.assign(N, 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const StateId s = *it;
    if (st.beta[s] == kLogZero) continue;
    double acc = 0.0;  // the stop option contributes zero loss
    for (std::int32_t ai : out[s]) {
      const Arc& a = lat.arcs[ai];
      const double w = std::exp(score[ai] + st.beta[a.dst] - st.beta[s]);
      if (w > 0) acc += w * (arc_cost(a) + st.beta_loss[a.dst]);
    }
    st.beta_loss[s] = acc;
  }
  st.expected_loss = st.beta_loss[0];

  st.posterior.assign(lat.arcs.size(), 0.0);
  st.arc_loss.assign(lat.arcs.size(), 0.0);
  for (std::size_t i = 0; i < lat.arcs.size(); ++i) {
    const Arc& a = lat.arcs[i];
    const double lp = st.alpha[a.src] + score[i] + st.beta[a.dst] - st.log_total;
    if (lp == kLogZero || std::isnan(lp)) continue;
    st.posterior[i] = std::min(1.0, std::exp(lp));
    st.arc_loss[i] = st.alpha_loss[a.src] + arc_cost(a) + st.beta_loss[a.dst];
  }
  return st;
}

ExpectationStats expected_edit_distance(const Lattice& lat,
                                        const ScaleConfig& scales) {
  std::vector<double> score(lat.arcs.size());
  for (std::size_t i = 0; i < lat.arcs.size(); ++i)
    score[i] = scales.score(lat.arcs[i]);
  return expected_edit_distance(lat, score);
}

std::vector<double> embr_arc_gradients(const ExpectationStats& st) {
  std::vector<double> g(st.posterior.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = st.posterior[i] * (st.arc_loss[i] - st.expected_loss);
  return g;
}

double sampled_embr(const Lattice& lat, std::size_t k,
                    const ScaleConfig& scales, std::uint64_t seed) {
  if (k == 0) throw Error("sampled_embr: k must be at least 1");
  const auto paths = sample_paths(lat, k, scales, seed);
  double sum = 0.0;
  for (const Path& p : paths) sum += path_cost(lat, p);
  return sum / static_cast<double>(k);
}

double nbest_embr(const Lattice& lat, std::size_t n,
                  const ScaleConfig& scales) {
  if (n == 0) throw Error("nbest_embr: n must be at least 1");
  const auto paths = nbest(lat, n, scales);
  if (paths.empty())
    throw Error("no complete path in lattice '" + lat.utt_id + "'");
  const double top = paths.front().score;
  double z = 0.0, mass = 0.0;
  for (const Path& p : paths) {
    const double w = std::exp(p.score - top);
    z += w;
    mass += w * path_cost(lat, p);
  }
  return mass / z;
}

}  // namespace embr
