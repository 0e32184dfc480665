// embr/lattice_io.cc

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
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "embr/lattice.h"

namespace embr {

LatticeParseError::LatticeParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw Error("not a real number: '" + std::string(s) + "'");
  return v;
}

namespace {

template <typename Int>
bool parse_int(std::string_view s, Int* out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

class BlockParser {
 public:
  explicit BlockParser(std::istream& in) : in_(in) {}

  // Returns false at clean end of input.
  bool next(Lattice* lat) {
    std::string line;
    bool in_block = false;
    bool have_states = false;
    std::size_t annotated_arcs = 0;
    *lat = Lattice();
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty() || line[0] == '#') continue;
      auto tok = split_words(line);
      if (tok.empty()) continue;
      const std::string& tag = tok[0];
      if (!in_block) {
        if (tag != "UTT") fail("expected UTT, got '" + tag + "'");
        if (tok.size() != 2) fail("UTT needs exactly one utterance id");
        lat->utt_id = tok[1];
        in_block = true;
        continue;
      }
      if (tag == "S") {
        if (have_states) fail("duplicate S record");
        if (tok.size() != 2 || !parse_int(tok[1], &lat->num_states) ||
            lat->num_states <= 0)
          fail("S needs one positive state count");
        have_states = true;
      } else if (tag == "A") {
        if (!have_states) fail("A record before S");
        if (tok.size() != 6 && tok.size() != 7)
          fail("A record needs 5 or 6 fields");
        Arc arc;
        if (!parse_int(tok[1], &arc.src) || !parse_int(tok[2], &arc.dst))
          fail("malformed state id");
        check_state(arc.src, lat->num_states);
        check_state(arc.dst, lat->num_states);
        arc.label = tok[3];
        arc.am_logp = real(tok[4]);
        arc.lm_logp = real(tok[5]);
        if (tok.size() == 7) {
          std::int32_t c = 0;
          if (!parse_int(tok[6], &c) || c < 0)
            fail("edit cost must be a non-negative integer");
          arc.edit_cost = c;
          ++annotated_arcs;
        }
        lat->arcs.push_back(std::move(arc));
      } else if (tag == "F") {
        if (!have_states) fail("F record before S");
        StateId s = 0;
        if (tok.size() != 2 || !parse_int(tok[1], &s)) fail("malformed F record");
        check_state(s, lat->num_states);
        lat->finals.push_back(s);
      } else if (tag == "END") {
        if (!have_states) fail("block has no S record");
        if (annotated_arcs != 0 && annotated_arcs != lat->arcs.size())
          fail("edit cost present on only some arcs");
        std::sort(lat->finals.begin(), lat->finals.end());
        lat->finals.erase(std::unique(lat->finals.begin(), lat->finals.end()),
                          lat->finals.end());
        return true;
      } else {
        fail("unknown record tag '" + tag + "'");
      }
    }
    if (in_block) fail("missing END");
    return false;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw LatticeParseError(line_no_, what);
  }
  void check_state(StateId s, StateId n) const {
    if (s < 0 || s >= n) fail("state id out of range: " + std::to_string(s));
  }
  double real(std::string_view s) const {
    double v = 0.0;
    try {
      v = parse_real(s);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (!std::isfinite(v)) fail("non-finite score");
    return v;
  }

  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

std::vector<Lattice> read_lattices(std::istream& in) {
  BlockParser parser(in);
  std::vector<Lattice> out;
  Lattice lat;
  while (parser.next(&lat)) out.push_back(std::move(lat));
  return out;
}

std::vector<Lattice> read_lattices_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lattice file " + path);
  return read_lattices(in);
}

Lattice parse_lattice(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto lats = read_lattices(in);
  if (lats.size() != 1)
    throw Error("expected exactly one lattice, found " +
                std::to_string(lats.size()));
  return std::move(lats.front());
}

void write_lattice(std::ostream& out, const Lattice& lat) {
  std::vector<const Arc*> arcs;
  arcs.reserve(lat.arcs.size());
  for (const Arc& a : lat.arcs) arcs.push_back(&a);
  std::stable_sort(arcs.begin(), arcs.end(), [](const Arc* x, const Arc* y) {
    return std::tie(x->src, x->dst, x->label, x->am_logp, x->lm_logp,
                    x->edit_cost) < std::tie(y->src, y->dst, y->label,
                                             y->am_logp, y->lm_logp,
                                             y->edit_cost);
  });
  out << "UTT " << lat.utt_id << '\n' << "S " << lat.num_states << '\n';
  for (const Arc* a : arcs) {
    out << "A " << a->src << ' ' << a->dst << ' ' << a->label << ' '
        << format_real(a->am_logp) << ' ' << format_real(a->lm_logp);
    if (a->edit_cost) out << ' ' << *a->edit_cost;
    out << '\n';
  }
  std::vector<StateId> finals = lat.finals;
  std::sort(finals.begin(), finals.end());
  finals.erase(std::unique(finals.begin(), finals.end()), finals.end());
  for (StateId f : finals) out << "F " << f << '\n';
  out << "END\n";
}

std::string write_lattice(const Lattice& lat) {
  std::ostringstream out;
  write_lattice(out, lat);
  return out.str();
}

void write_lattices_file(const std::string& path,
                         std::span<const Lattice> lats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const Lattice& l : lats) write_lattice(out, l);
  if (!out) throw Error("write failed: " + path);
}

std::vector<Transcript> read_transcripts(std::istream& in) {
  std::vector<Transcript> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    Transcript t;
    if (tab == std::string::npos) {
      // An utterance id alone is an empty transcript.
      auto tok = split_words(line);
      if (tok.size() != 1)
        throw Error("transcript line " + std::to_string(line_no) +
                    ": expected <utt_id>\\t<words>");
      t.utt_id = tok[0];
    } else {
      t.utt_id = line.substr(0, tab);
      t.words = split_words(std::string_view(line).substr(tab + 1));
    }
    if (t.utt_id.empty())
      throw Error("transcript line " + std::to_string(line_no) +
                  ": empty utterance id");
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Transcript> read_transcripts_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open transcript file " + path);
  return read_transcripts(in);
}

void write_transcripts(std::ostream& out, std::span<const Transcript> ts) {
  for (const Transcript& t : ts) {
    out << t.utt_id << '\t';
    for (std::size_t i = 0; i < t.words.size(); ++i)
      out << (i ? " " : "") << t.words[i];
    out << '\n';
  }
}

}  // namespace embr
