// embr/rescore.cc

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

namespace embr {

namespace {

void check_expanded(const ExpandedLattice& ex, const NGramModel& ngram) {
  const auto& lat = ex.lattice;
  if (ex.order != ngram.order() || ex.arc_kind.size() != lat.arcs.size() ||
      ex.history.size() != static_cast<std::size_t>(lat.num_states))
    throw Error("rescore: lattice '" + lat.utt_id +
                "' is not expanded with this n-gram model");
}

double safe_log(double w) { return w > 0 ? std::log(w) : kLogZero; }

}  // namespace

Lattice rescore_lattice(const ExpandedLattice& expanded,
                        const RnnLmParams& params, const NGramModel& ngram,
                        const Interpolation& weights, const ScaleConfig& scales,
                        RescoreTrace* trace,
                        std::span<const std::int32_t> frozen_tree) {
  if (weights.w_rnn < 0 || weights.w_ng < 0 ||
      std::abs(weights.w_rnn + weights.w_ng - 1.0) > 1e-9)
    throw Error("rescore: interpolation weights must be non-negative and sum to 1");
  check_expanded(expanded, ngram);
  const Lattice& in = expanded.lattice;
  const StateId N = in.num_states;
  if (!frozen_tree.empty() && frozen_tree.size() != static_cast<std::size_t>(N))
    throw Error("rescore: frozen tree has the wrong size");

  RescoreTrace local;
  RescoreTrace& tr = trace ? *trace : local;
  tr = RescoreTrace();
  tr.hidden.assign(N, Vector());
  tr.chosen_arc.assign(N, -1);
  tr.step.assign(N, StepCache());
  tr.arc_word.assign(in.arcs.size(), -1);
  tr.rnn_score.assign(in.arcs.size(), 0.0);
  tr.ngram_score.assign(in.arcs.size(), 0.0);
  tr.rnn_share.assign(in.arcs.size(), 0.0);

  const double log_w_rnn = safe_log(weights.w_rnn);
  const double log_w_ng = safe_log(weights.w_ng);

  Lattice out = in;
  const auto order = topological_order(in);
  const auto incoming = incoming_arcs(in);
  std::vector<double> best(N, kLogZero);
  for (StateId s : order) {
    if (s == 0) {
      tr.hidden[0] = start_hidden(params, &tr.start_step);
      best[0] = 0.0;
      continue;
    }
    std::int32_t chosen = -1;
    for (std::int32_t ai : incoming[s]) {
      Arc& arc = out.arcs[ai];
      const ArcKind kind = expanded.arc_kind[ai];
      if (kind != ArcKind::kEpsilon) {
        const WordId w = kind == ArcKind::kWord ? params.vocab.id(arc.label)
                                                : params.vocab.eos();
        const double rnn = score_word(params, tr.hidden[arc.src], w);
        const double ng = in.arcs[ai].lm_logp;
        const double lm = log_add(log_w_rnn + rnn, log_w_ng + ng);
        tr.arc_word[ai] = w;
        tr.rnn_score[ai] = rnn;
        tr.ngram_score[ai] = ng;
        tr.rnn_share[ai] = std::exp(log_w_rnn + rnn - lm);
        arc.lm_logp = lm;
      }
      const double v = best[arc.src] + scales.score(arc);
      if (frozen_tree.empty() ? (chosen < 0 || v > best[s])
                              : ai == frozen_tree[s]) {
        best[s] = v;
        chosen = ai;
      }
    }
    if (chosen < 0) throw Error("rescore: frozen tree does not reach a state");
    tr.chosen_arc[s] = chosen;
    const Arc& c = out.arcs[chosen];
    if (expanded.arc_kind[chosen] == ArcKind::kWord)
      tr.hidden[s] = rnn_step(params, tr.hidden[c.src], tr.arc_word[chosen],
                              &tr.step[s]);
    else
      tr.hidden[s] = tr.hidden[c.src];
  }
  return out;
}

void rescore_backward(const ExpandedLattice& expanded,
                      const RnnLmParams& params, const RescoreTrace& trace,
                      std::span<const double> d_lm, Weights* grads) {
  const Lattice& lat = expanded.lattice;
  const auto& W = params.weights;
  std::vector<Vector> d_h(lat.num_states, Vector::Zero(params.hidden()));
  for (std::size_t a = 0; a < lat.arcs.size(); ++a) {
    const WordId w = trace.arc_word[a];
    if (w < 0 || d_lm[a] == 0.0) continue;
    const double g = d_lm[a] * trace.rnn_share[a];
    const StateId src = lat.arcs[a].src;
    grads->output.row(w) += g * trace.hidden[src].transpose();
    grads->output_bias(w) += g;
    d_h[src] += g * W.output.row(w).transpose();
  }
  const auto order = topological_order(lat);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const StateId s = *it;
    if (s == 0) {
      gru_step_backward(W, trace.start_step, d_h[0], grads);
      continue;
    }
    const std::int32_t c = trace.chosen_arc[s];
    if (c < 0) continue;
    const StateId src = lat.arcs[c].src;
    if (expanded.arc_kind[c] == ArcKind::kWord)
      d_h[src] += gru_step_backward(W, trace.step[s], d_h[s], grads);
    else
      d_h[src] += d_h[s];
  }
}

}  // namespace embr
