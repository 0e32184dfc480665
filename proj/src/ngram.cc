// embr/ngram.cc

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

#include "embr/ngram.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>

namespace embr {

namespace {
constexpr double kLn10 = std::numbers::ln10;
}

std::size_t NGramModel::KeyHash::operator()(
    const std::vector<WordId>& k) const noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (WordId w : k) h = mix_seed(h ^ static_cast<std::uint32_t>(w));
  return static_cast<std::size_t>(h);
}

NGramModel::NGramModel(int order, Vocabulary vocab)
    : order_(order), vocab_(std::move(vocab)), tables_(order) {
  if (order < 1) throw Error("n-gram order must be at least 1");
}

void NGramModel::set(std::span<const WordId> ngram, Entry entry) {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(order_))
    throw Error("n-gram length out of range");
  tables_[ngram.size() - 1][std::vector<WordId>(ngram.begin(), ngram.end())] =
      entry;
}

const NGramModel::Entry* NGramModel::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(order_))
    return nullptr;
  const Table& t = tables_[ngram.size() - 1];
  auto it = t.find(std::vector<WordId>(ngram.begin(), ngram.end()));
  return it == t.end() ? nullptr : &it->second;
}

std::vector<std::size_t> NGramModel::counts() const {
  std::vector<std::size_t> c;
  for (const Table& t : tables_) c.push_back(t.size());
  return c;
}

WordId NGramModel::lookup(std::string_view word) const {
  WordId w = vocab_.find(word);
  if (w >= 0 && find(std::span<const WordId>(&w, 1))) return w;
  return vocab_.unk();
}

double NGramModel::log10_prob(WordId word,
                              std::span<const WordId> history) const {
  std::vector<WordId> key(history.begin(), history.end());
  key.push_back(word);
  if (const Entry* e = find(key)) return e->log10_prob;
  // history is non-empty here: a missing unigram is handled by the caller.
  const Entry* ctx = find(history);
  const double backoff = ctx ? ctx->log10_backoff : 0.0;
  return backoff + log10_prob(word, history.subspan(1));
}

double NGramModel::logprob(WordId word, std::span<const WordId> history) const {
  if (word < 0 || !find(std::span<const WordId>(&word, 1))) {
    const WordId unk = vocab_.unk();
    if (unk < 0 || !find(std::span<const WordId>(&unk, 1)))
      return unknown_floor_;
    word = unk;
  }
  const std::size_t keep =
      std::min(history.size(), static_cast<std::size_t>(order_ - 1));
  return kLn10 * log10_prob(word, history.subspan(history.size() - keep));
}

double NGramModel::logprob(std::string_view word,
                           std::span<const WordId> history) const {
  return logprob(vocab_.find(word), history);
}

HistoryState NGramModel::initial_history() const {
  HistoryState h;
  if (order_ > 1) h.push_back(vocab_.bos());
  return h;
}

HistoryState NGramModel::advance(std::span<const WordId> history,
                                 WordId word) const {
  HistoryState h(history.begin(), history.end());
  h.push_back(word);
  const std::size_t keep = static_cast<std::size_t>(order_ - 1);
  if (h.size() > keep) h.erase(h.begin(), h.end() - keep);
  return h;
}

double NGramModel::sentence_logprob(std::span<const std::string> words) const {
  HistoryState h = initial_history();
  double total = 0.0;
  for (const auto& w : words) {
    total += logprob(w, h);
    h = advance(h, lookup(w));
  }
  return total + logprob(vocab_.eos(), h);
}

// --------------------------------------------------------------------------
// ARPA

NGramModel load_arpa(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw Error("ARPA line " + std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!split_words(line).empty()) return true;
    }
    return false;
  };

  // Header.
  while (next_line() && line != "\\data\\") {}
  if (line != "\\data\\") fail("missing \\data\\ section");
  std::map<int, std::size_t> declared;
  while (next_line() && line.rfind("ngram ", 0) == 0) {
    auto eq = line.find('=');
    int n = 0;
    std::size_t cnt = 0;
    if (eq == std::string::npos) fail("malformed count line");
    auto lhs = split_words(std::string_view(line).substr(6, eq - 6));
    auto rhs = split_words(std::string_view(line).substr(eq + 1));
    if (lhs.size() != 1 || rhs.size() != 1 ||
        std::from_chars(lhs[0].data(), lhs[0].data() + lhs[0].size(), n).ec !=
            std::errc() ||
        std::from_chars(rhs[0].data(), rhs[0].data() + rhs[0].size(), cnt).ec !=
            std::errc() ||
        n < 1)
      fail("malformed count line");
    declared[n] = cnt;
  }
  if (declared.empty()) fail("no ngram counts declared");
  const int order = declared.rbegin()->first;
  for (int n = 1; n <= order; ++n)
    if (!declared.count(n)) fail("missing count for order " + std::to_string(n));

  struct Raw {
    std::vector<std::string> words;
    NGramModel::Entry entry;
    std::size_t line;
  };
  std::vector<std::vector<Raw>> raw(order);
  int section = 0;
  bool ended = false;
  do {
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    if (line.size() > 1 && line[0] == '\\' && line.find("-grams:") != std::string::npos) {
      int n = 0;
      auto r = std::from_chars(line.data() + 1, line.data() + line.size(), n);
      if (r.ec != std::errc() || n < 1 || n > order)
        fail("unexpected section " + line);
      section = n;
      continue;
    }
    if (section == 0) fail("entry outside an n-gram section");
    auto tok = split_words(line);
    const std::size_t n = static_cast<std::size_t>(section);
    if (tok.size() != n + 1 && tok.size() != n + 2) fail("malformed entry");
    Raw r;
    try {
      r.entry.log10_prob = parse_real(tok[0]);
      if (tok.size() == n + 2) r.entry.log10_backoff = parse_real(tok[n + 1]);
    } catch (const Error& e) {
      fail(e.what());
    }
    r.words.assign(tok.begin() + 1, tok.begin() + 1 + n);
    r.line = line_no;
    raw[section - 1].push_back(std::move(r));
  } while (next_line());
  if (!ended) fail("missing \\end\\");

  for (int n = 1; n <= order; ++n)
    if (raw[n - 1].size() != declared[n])
      throw Error("ARPA: declared " + std::to_string(declared[n]) + " " +
                  std::to_string(n) + "-grams but found " +
                  std::to_string(raw[n - 1].size()));

  Vocabulary vocab;
  for (const Raw& r : raw[0]) vocab.add(r.words[0]);
  NGramModel model(order, std::move(vocab));
  for (int n = 1; n <= order; ++n) {
    for (const Raw& r : raw[n - 1]) {
      std::vector<WordId> ids;
      for (const auto& w : r.words) {
        WordId id = model.vocab().find(w);
        if (id < 0)
          throw Error("ARPA line " + std::to_string(r.line) + ": word '" + w +
                      "' has no unigram");
        ids.push_back(id);
      }
      model.set(ids, r.entry);
    }
  }
  return model;
}

NGramModel load_arpa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ARPA file " + path);
  return load_arpa(in);
}

void write_arpa(std::ostream& out, const NGramModel& model) {
  const auto counts = model.counts();
  if (counts.size() > 2) throw Error("write_arpa supports orders 1 and 2");
  out << "\\data\\\n";
  for (std::size_t n = 0; n < counts.size(); ++n)
    out << "ngram " << n + 1 << '=' << counts[n] << '\n';
  // Entries in lexicographic id order, so output is deterministic.
  const WordId V = static_cast<WordId>(model.vocab().size());
  auto emit = [&](std::span<const WordId> key) {
    const auto* e = model.find(key);
    if (!e) return;
    out << format_real(e->log10_prob);
    for (WordId w : key) out << ' ' << model.vocab().word(w);
    if (e->log10_backoff != 0.0) out << ' ' << format_real(e->log10_backoff);
    out << '\n';
  };
  out << "\n\\1-grams:\n";
  for (WordId w = 0; w < V; ++w) emit(std::span<const WordId>(&w, 1));
  if (counts.size() == 2) {
    out << "\n\\2-grams:\n";
    for (WordId h = 0; h < V; ++h)
      for (WordId w = 0; w < V; ++w) {
        WordId key[2] = {h, w};
        emit(key);
      }
  }
  out << "\n\\end\\\n";
}

NGramModel estimate_add_one(std::span<const std::vector<std::string>> corpus,
                            const Vocabulary& vocab, int order) {
  if (order != 1 && order != 2)
    throw Error("estimate_add_one supports orders 1 and 2");
  const std::size_t V = vocab.size();
  const WordId bos = vocab.bos(), eos = vocab.eos();
  std::vector<double> uni(V, 0.0);
  std::vector<double> bi(order == 2 ? V * V : 0, 0.0);
  std::vector<double> ctx(V, 0.0);
  for (const auto& sent : corpus) {
    WordId prev = bos;
    auto count = [&](WordId w) {
      uni[w] += 1.0;
      if (order == 2) {
        bi[static_cast<std::size_t>(prev) * V + w] += 1.0;
        ctx[prev] += 1.0;
      }
      prev = w;
    };
    for (const auto& w : sent) count(vocab.id(w));
    count(eos);
  }
  // Every word except <s> is predictable.
  const double outcomes = static_cast<double>(V - 1);
  double total = 0.0;
  for (std::size_t w = 0; w < V; ++w)
    if (static_cast<WordId>(w) != bos) total += uni[w];

  NGramModel model(order, vocab);
  for (std::size_t w = 0; w < V; ++w) {
    WordId id = static_cast<WordId>(w);
    double lp = id == bos ? -99.0 : std::log10((uni[w] + 1.0) / (total + outcomes));
    model.set(std::span<const WordId>(&id, 1), {lp, 0.0});
  }
  if (order == 2) {
    for (std::size_t h = 0; h < V; ++h) {
      if (static_cast<WordId>(h) == eos) continue;
      for (std::size_t w = 0; w < V; ++w) {
        if (static_cast<WordId>(w) == bos) continue;
        WordId key[2] = {static_cast<WordId>(h), static_cast<WordId>(w)};
        model.set(key, {std::log10((bi[h * V + w] + 1.0) / (ctx[h] + outcomes)),
                        0.0});
      }
    }
  }
  return model;
}

// --------------------------------------------------------------------------
// Expansion

ExpandedLattice expand_lattice(const Lattice& lat, const NGramModel& model) {
  require_valid(lat);
  ExpandedLattice out;
  out.order = model.order();
  out.lattice.utt_id = lat.utt_id;
  const bool annotated = lat.annotated();

  std::map<std::pair<StateId, HistoryState>, StateId> index;
  std::vector<std::vector<StateId>> expansions(lat.num_states);
  auto state_of = [&](StateId orig, HistoryState h) {
    auto [it, inserted] = index.emplace(
        std::make_pair(orig, h), static_cast<StateId>(out.history.size()));
    if (inserted) {
      out.history.push_back(std::move(h));
      out.state_origin.push_back(orig);
      expansions[orig].push_back(it->second);
    }
    return it->second;
  };
  state_of(0, model.initial_history());

  std::vector<StateId> end_states;
  const auto out_arcs = outgoing_arcs(lat);
  for (StateId s : topological_order(lat)) {
    for (std::size_t e = 0; e < expansions[s].size(); ++e) {
      const StateId from = expansions[s][e];
      for (std::int32_t ai : out_arcs[s]) {
        const Arc& arc = lat.arcs[ai];
        Arc na = arc;
        HistoryState h = out.history[from];
        if (arc.is_epsilon()) {
          na.lm_logp = 0.0;
          out.arc_kind.push_back(ArcKind::kEpsilon);
        } else {
          na.lm_logp = model.logprob(arc.label, h);
          h = model.advance(h, model.lookup(arc.label));
          out.arc_kind.push_back(ArcKind::kWord);
        }
        na.src = from;
        na.dst = state_of(arc.dst, std::move(h));
        out.lattice.arcs.push_back(std::move(na));
        out.arc_origin.push_back(ai);
      }
      if (lat.is_final(s)) end_states.push_back(from);
    }
  }

  out.super_final = static_cast<StateId>(out.history.size());
  out.history.emplace_back();
  out.state_origin.push_back(-1);
  for (StateId from : end_states) {
    Arc na;
    na.src = from;
    na.dst = out.super_final;
    na.label = std::string(kEpsilon);
    na.lm_logp = model.logprob(model.vocab().eos(), out.history[from]);
    if (annotated) na.edit_cost = 0;
    out.lattice.arcs.push_back(std::move(na));
    out.arc_origin.push_back(-1);
    out.arc_kind.push_back(ArcKind::kSentenceEnd);
  }
  out.lattice.num_states = out.super_final + 1;
  out.lattice.finals = {out.super_final};
  return out;
}

}  // namespace embr
