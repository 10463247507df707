#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "posnmt/bleu.hpp"

using namespace posnmt;

namespace {
using Sent = std::vector<std::string>;
using Corpus = std::vector<Sent>;
}  // namespace

TEST_SUITE("bleu") {

TEST_CASE("identical corpora score exactly 100") {
  Corpus c = {{"the", "cat"}, {"a"}, {"one", "two", "three", "four", "five"}};
  auto r = bleu_corpus(c, c);
  CHECK(r.bleu == 100.0);
  CHECK(r.brevity_penalty == 1.0);
  for (double p : r.precisions) CHECK(p == 1.0);
  CHECK(r.to_string().rfind("BLEU = 100.00", 0) == 0);
}

TEST_CASE("clipped unigram example: seven 'the' against two in the reference") {
  Corpus cand = {{"the", "the", "the", "the", "the", "the", "the"}};
  Corpus ref = {{"the", "cat", "is", "on", "the", "mat"}};
  auto [matches, total] = modified_precision(cand, ref, 1);
  CHECK(matches == 2);
  CHECK(total == 7);
}

TEST_CASE("disjoint vocabulary gives zero matches and zero bleu") {
  Corpus cand = {{"x", "y", "z", "w"}};
  Corpus ref = {{"a", "b", "c", "d"}};
  auto [matches, total] = modified_precision(cand, ref, 1);
  CHECK(matches == 0);
  CHECK(total == 4);
  auto r = bleu_corpus(cand, ref);
  CHECK(r.bleu == 0.0);
  CHECK(r.precisions[0] == 0.0);
}

TEST_CASE("brevity penalty at half length equals exp(-1)") {
  // candidate is the first half of a repeating reference: all measured
  // precisions are 1, only BP bites
  Corpus cand = {{"a", "b"}};
  Corpus ref = {{"a", "b", "a", "b"}};
  auto r = bleu_corpus(cand, ref);
  CHECK(std::abs(r.brevity_penalty - std::exp(-1.0)) < 1e-9);
  CHECK(r.bleu == doctest::Approx(100.0 * std::exp(-1.0)).epsilon(1e-9));
  CHECK(r.precisions[0] == 1.0);
  CHECK(r.precisions[1] == 1.0);
  CHECK(r.precisions[2] == 1.0);  // vacuous: no candidate trigram exists
}

TEST_CASE("candidate longer than reference has BP 1") {
  Corpus cand = {{"a", "b", "c", "d", "e"}};
  Corpus ref = {{"a", "b", "c"}};
  CHECK(bleu_corpus(cand, ref).brevity_penalty == 1.0);
}

TEST_CASE("any measured zero precision zeroes bleu but reports the others") {
  // unigrams match, bigrams never do
  Corpus cand = {{"a", "c", "b"}};
  Corpus ref = {{"a", "b", "c"}};
  auto r = bleu_corpus(cand, ref);
  CHECK(r.precisions[0] == 1.0);
  CHECK(r.precisions[1] == 0.0);
  CHECK(r.bleu == 0.0);
}

TEST_CASE("empty candidate sentences contribute nothing") {
  Corpus cand = {{}, {"a", "b"}};
  Corpus ref = {{"x"}, {"a", "b"}};
  auto r = bleu_corpus(cand, ref);
  CHECK(r.candidate_len == 2);
  CHECK(r.reference_len == 3);
  CHECK(r.precisions[0] == 1.0);  // 2 matches / 2 total
  CHECK(r.bleu == doctest::Approx(100.0 * std::exp(1.0 - 3.0 / 2.0)));
}

TEST_CASE("sentence count mismatch is a data error") {
  CHECK_THROWS_AS(bleu_corpus({{"a"}}, {{"a"}, {"b"}}), DataError);
  CHECK_THROWS_AS(modified_precision({{"a"}}, {}, 1), DataError);
  CHECK_THROWS_AS(modified_precision({{"a"}}, {{"a"}}, 5), ConfigError);
}

TEST_CASE("adding a reference occurrence never decreases clipped matches") {
  Corpus cand = {{"the", "the", "the"}};
  Corpus ref1 = {{"the", "cat"}};
  Corpus ref2 = {{"the", "cat", "the"}};
  auto m1 = modified_precision(cand, ref1, 1).first;
  auto m2 = modified_precision(cand, ref2, 1).first;
  CHECK(m2 >= m1);
  CHECK(m1 == 1);
  CHECK(m2 == 2);
}

TEST_CASE("report line format") {
  Corpus c = {{"a", "b", "c", "d"}};
  auto s = bleu_corpus(c, c).to_string();
  CHECK(s == "BLEU = 100.00, p1/p2/p3/p4 = 100.0/100.0/100.0/100.0, BP = 1.000, "
             "ratio = 1.000");
}

}  // TEST_SUITE
