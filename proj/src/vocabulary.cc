// embr/vocabulary.cc

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

#include "embr/vocabulary.h"

#include <fstream>
#include <istream>
#include <ostream>

#include "embr/common.h"
#include "embr/lattice.h"

namespace embr {

Vocabulary::Vocabulary(std::span<const std::string> words) {
  for (const auto& w : words) add(w);
  add(kSentenceBegin);
  add(kSentenceEnd);
  add(kUnknown);
}

WordId Vocabulary::add(std::string_view word) {
  auto [it, inserted] =
      ids_.emplace(std::string(word), static_cast<WordId>(words_.size()));
  if (inserted) words_.emplace_back(word);
  return it->second;
}

WordId Vocabulary::find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? -1 : it->second;
}

WordId Vocabulary::id(std::string_view word) const {
  WordId w = find(word);
  return w >= 0 ? w : unk();
}

std::vector<WordId> Vocabulary::encode(std::span<const std::string> words) const {
  std::vector<WordId> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

Vocabulary read_vocabulary(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) throw Error("vocabulary: empty line");
    words.push_back(line);
  }
  Vocabulary v;
  for (const auto& w : words)
    if (v.find(w) >= 0) throw Error("vocabulary: duplicate word " + w);
    else v.add(w);
  if (v.bos() < 0 || v.eos() < 0 || v.unk() < 0)
    throw Error("vocabulary must contain <s>, </s> and <unk>");
  return v;
}

Vocabulary read_vocabulary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path);
  return read_vocabulary(in);
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& w : vocab.words()) out << w << '\n';
}

std::vector<std::vector<std::string>> read_corpus(std::istream& in) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(split_words(line));
  return out;
}

std::vector<std::vector<std::string>> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out,
                  std::span<const std::vector<std::string>> sentences) {
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
    out << '\n';
  }
}

}  // namespace embr
