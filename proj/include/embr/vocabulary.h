// embr/vocabulary.h

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

#ifndef EMBR_VOCABULARY_H_
#define EMBR_VOCABULARY_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace embr {

using WordId = std::int32_t;

inline constexpr std::string_view kSentenceBegin = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknown = "<unk>";

/// Word <-> id map.  Ids are dense and follow insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Builds from a word list; the three special tokens are appended if
  /// missing.
  explicit Vocabulary(std::span<const std::string> words);

  WordId add(std::string_view word);
  /// Id of word, or -1 if absent.
  WordId find(std::string_view word) const;
  /// Id of word, or the unknown-token id if absent.
  WordId id(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  WordId bos() const { return find(kSentenceBegin); }
  WordId eos() const { return find(kSentenceEnd); }
  WordId unk() const { return find(kUnknown); }

  std::vector<WordId> encode(std::span<const std::string> words) const;

  bool operator==(const Vocabulary& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

/// One word per line; line number is the id.
Vocabulary read_vocabulary(std::istream& in);
Vocabulary read_vocabulary_file(const std::string& path);
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);

/// Whitespace-tokenised corpus, one sentence per line.
std::vector<std::vector<std::string>> read_corpus(std::istream& in);
std::vector<std::vector<std::string>> read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out,
                  std::span<const std::vector<std::string>> sentences);

}  // namespace embr

#endif  // EMBR_VOCABULARY_H_
