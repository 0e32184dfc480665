// tests/test_edit_distance.cc

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

#include <set>

#include "doctest.h"
#include "embr/edit_distance.h"
#include "oracles.h"

using namespace embr;

namespace {

std::vector<std::string> W(std::string_view s) { return split_words(s); }

Lattice linear(const std::vector<std::string>& words) {
  Lattice lat;
  lat.utt_id = "lin";
  lat.num_states = static_cast<StateId>(words.size() + 1);
  for (std::size_t i = 0; i < words.size(); ++i)
    lat.arcs.push_back({static_cast<StateId>(i), static_cast<StateId>(i + 1), words[i],
                        -1.0, -1.0, std::nullopt});
  lat.finals = {lat.num_states - 1};
  return lat;
}

}  // namespace

TEST_SUITE("edit_distance") {

TEST_CASE("edit distance examples") {
  CHECK(edit_distance(W("a b c"), W("a b c")).total() == 0);
  CHECK(edit_distance(W("a b c"), W("a b c")).matches == 3);
  const EditCounts s = edit_distance(W("a x c"), W("a b c"));
  CHECK(s.total() == 1);
  CHECK(s.substitutions == 1);
  const EditCounts d = edit_distance(W(""), W("a b"));
  CHECK(d.total() == 2);
  CHECK(d.deletions == 2);
  const EditCounts i = edit_distance(W("a b"), W(""));
  CHECK(i.insertions == 2);
  // Tie between substitution and deletion+insertion: substitution wins.
  const EditCounts t = edit_distance(W("x"), W("y"));
  CHECK(t.substitutions == 1);
  CHECK(t.total() == 1);
}

TEST_CASE("edit distance matches exhaustive alignment") {
  Rng rng(21);
  const std::vector<std::string> vocab{"a", "b", "c"};
  for (int iter = 0; iter < 1000; ++iter) {
    const auto hyp = oracle::random_words(rng, vocab, rng.below(9));
    const auto ref = oracle::random_words(rng, vocab, rng.below(9));
    const EditCounts c = edit_distance(hyp, ref);
    CHECK(c.total() == oracle::brute_force_distance(hyp, ref));
    CHECK(c.ref_length() == static_cast<std::int64_t>(ref.size()));
    CHECK(c.hyp_length() == static_cast<std::int64_t>(hyp.size()));

    // Swapping sides exchanges insertions and deletions in the total.
    CHECK(edit_distance(ref, hyp).total() == c.total());

    const auto third = oracle::random_words(rng, vocab, rng.below(9));
    CHECK(edit_distance(hyp, ref).total() <=
          edit_distance(hyp, third).total() + edit_distance(third, ref).total());
  }
}

TEST_CASE("wer") {
  EditCounts c;
  c.insertions = 1;
  c.deletions = 2;
  c.substitutions = 3;
  CHECK(wer(c, 60) == 10.0);
  CHECK(wer(EditCounts{}, 5) == 0.0);
  CHECK_THROWS_AS(wer(c, 0), Error);

  // Corpus WER sums counts before dividing.
  const EditCounts u1 = edit_distance(W("a"), W("a b c d"));
  const EditCounts u2 = edit_distance(W("x"), W("y"));
  EditCounts sum = u1;
  sum += u2;
  CHECK(wer(sum, 5) == 80.0);
}

TEST_CASE("annotation of linear lattices") {
  const AnnotatedLattice exact = annotate_lattice(linear(W("a b c")), W("a b c"));
  for (const Arc& a : exact.lattice.arcs) CHECK(*a.edit_cost == 0);

  const AnnotatedLattice one = annotate_lattice(linear(W("a x c")), W("a b c"));
  const auto paths = oracle::enumerate_paths(one.lattice);
  REQUIRE(paths.size() == 1);
  CHECK(oracle::path_edit_cost(one.lattice, paths[0]) == 1);

  // Scores are copied; the super-final arcs carry zero scores.
  for (std::size_t a = 0; a < one.lattice.arcs.size(); ++a) {
    const Arc& arc = one.lattice.arcs[a];
    if (one.arc_origin[a] < 0) {
      CHECK(arc.dst == one.super_final);
      CHECK(arc.is_epsilon());
      CHECK(arc.am_logp == 0.0);
      CHECK(arc.lm_logp == 0.0);
    } else {
      CHECK(arc.am_logp == -1.0);
      CHECK(arc.label == linear(W("a x c")).arcs[one.arc_origin[a]].label);
    }
  }
  CHECK(validate(one.lattice).empty());
}

TEST_CASE("annotation is exact on random lattices") {
  Rng rng(33);
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  for (int iter = 0; iter < 300; ++iter) {
    const Lattice lat = oracle::random_dag(rng);
    const auto ref = oracle::random_words(rng, vocab, rng.below(7));
    const AnnotatedLattice ann = annotate_lattice(lat, ref);
    REQUIRE(validate(ann.lattice).empty());
    CHECK(ann.lattice.annotated());

    const auto orig = oracle::enumerate_paths(lat);
    const auto paths = oracle::enumerate_paths(ann.lattice);
    CHECK(paths.size() == orig.size());

    // Every annotated path maps onto a distinct original path with the same
    // words and scores, and its arc costs add up to the edit distance.
    std::set<oracle::ArcSeq> images;
    for (const auto& p : paths) {
      oracle::ArcSeq image;
      for (std::int32_t a : p)
        if (ann.arc_origin[a] >= 0) image.push_back(ann.arc_origin[a]);
      images.insert(image);
      const auto words = oracle::path_words(ann.lattice, p);
      CHECK(words == oracle::path_words(lat, image));
      CHECK(oracle::path_score(ann.lattice, p) == oracle::path_score(lat, image));
      CHECK(oracle::path_edit_cost(ann.lattice, p) == edit_distance(words, ref).total());
    }
    CHECK(images.size() == orig.size());
  }
}

TEST_CASE("oracle path") {
  const auto ref = W("a b c");
  const Lattice with_ref = parse_lattice(
      "UTT o\nS 4\nA 0 1 a -5 0\nA 0 1 x 0 0\nA 1 2 b -5 0\nA 1 2 <eps> 0 0\n"
      "A 2 3 c 0 0\nF 3\nEND\n");
  CHECK(oracle_counts(with_ref, ref).total() == 0);
  CHECK(oracle_path(with_ref, ref).words == ref);

  const Lattice single = linear(W("a x"));
  CHECK(oracle_counts(single, ref) == edit_distance(W("a x"), ref));

  Rng rng(44);
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  for (int iter = 0; iter < 300; ++iter) {
    const Lattice lat = oracle::random_dag(rng);
    const auto r = oracle::random_words(rng, vocab, rng.below(7));
    std::int64_t best = -1;
    for (const auto& p : oracle::enumerate_paths(lat)) {
      const std::int64_t d = edit_distance(oracle::path_words(lat, p), r).total();
      if (best < 0 || d < best) best = d;
    }
    const Path op = oracle_path(lat, r);
    CHECK(oracle_counts(lat, r).total() == best);
    CHECK(edit_distance(op.words, r).total() == best);
    CHECK(op.words == oracle::path_words(lat, op.arcs));
  }
}

TEST_CASE("annotation state budget") {
  const Lattice lat = linear(W("a b c d"));
  CHECK_THROWS_AS(annotate_lattice(lat, W("a b"), 3), Error);
  CHECK_NOTHROW(annotate_lattice(lat, W("a b"), 100));
}

}  // TEST_SUITE
