// Copyright 2026 The lcwl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "lcwl/error.hpp"
#include "lcwl/io.hpp"
#include "lcwl/metrics.hpp"
#include "lcwl/rng.hpp"
#include "oracle/ngram_oracle.hpp"
#include "test_util.hpp"

using namespace lcwl;

namespace {

Tokens T(const char* s) { return tokenize(s).tokens; }

Tokens random_sentence(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  Tokens out;
  const auto len = 1 + rng.below(max_len);
  for (std::uint64_t i = 0; i < len; ++i) out.push_back(std::string(1, 'a' + rng.below(alphabet)));
  return out;
}

}  // namespace

TEST_CASE("bleu identity and disjoint cases") {
  CHECK(bleu(T("the cat sat"), {T("the cat sat")}) == 1.0);
  CHECK(bleu(T("a b"), {T("c d")}) == 0.0);
  CHECK_THROWS_AS(bleu({}, {T("a")}), EmptyInput);
  CHECK_THROWS_AS(bleu(T("a"), {}), EmptyInput);
  CHECK_THROWS_AS(bleu(T("a"), {Tokens{}}), EmptyInput);
}

TEST_CASE("bleu frozen values") {
  // Unigram and smoothed higher orders are all 1; only the brevity penalty bites.
  CHECK(std::fabs(bleu(T("the cat sat"), {T("the cat sat down")}) - std::exp(-1.0 / 3.0)) < 1e-12);
  // p = (4/6, 3/6, 2/5, 1/4) with no brevity penalty: (1/30)^(1/4).
  const double v = bleu(T("the cat lay on the mat"), {T("the dog sat on the mat")});
  CHECK(std::fabs(v - std::pow(1.0 / 30.0, 0.25)) < 1e-12);
  CHECK(std::fabs(v - 0.427287) < 1e-6);
}

TEST_CASE("bleu brevity penalty picks the closest reference, shorter on ties") {
  // Lengths 4 and 2 are equally close to 3; the shorter one means no penalty.
  CHECK(bleu(T("a b c"), {T("a b c d"), T("a b")}) == 1.0);
  CHECK(bleu(T("a b c"), {T("a b"), T("a b c d")}) == 1.0);
  CHECK(std::fabs(bleu(T("a b c"), {T("a b c d")}) - std::exp(1.0 - 4.0 / 3.0)) < 1e-12);
}

TEST_CASE("bleu matches the brute-force oracle on random sentences") {
  Rng rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const auto hyp = random_sentence(rng, 9, 5);
    std::vector<Tokens> refs;
    const auto nref = 1 + rng.below(3);
    for (std::uint64_t r = 0; r < nref; ++r) refs.push_back(random_sentence(rng, 9, 5));
    CHECK(std::fabs(bleu(hyp, refs) - oracle::bleu(hyp, refs)) < 1e-9);
  }
}

TEST_CASE("bleu identity and range properties") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = random_sentence(rng, 12, 6);
    CHECK(bleu(h, {h}) == doctest::Approx(1.0).epsilon(1e-12));
    const auto r = random_sentence(rng, 12, 6);
    const double v = bleu(h, {r});
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("single-token bleu depends only on equality and length") {
  CHECK(bleu(T("a"), {T("a")}) == 1.0);
  CHECK(bleu(T("a"), {T("b")}) == 0.0);
  CHECK(bleu(T("a"), {T("a b")}) == doctest::Approx(std::exp(1.0 - 2.0)));
  CHECK(bleu(T("b"), {T("b a")}) == bleu(T("a"), {T("a b")}));
}

TEST_CASE("sari frozen values") {
  CHECK(std::fabs(sari(T("a b c"), T("a c"), {T("a b")}) - 200.0 / 3.0) < 1e-9);
  CHECK(sari(T("the old car ."), T("the car ."), {T("the car .")}) == doctest::Approx(100.0));
  CHECK(sari(T("a b"), T("a b"), {T("a b")}) == doctest::Approx(100.0));
  CHECK_THROWS_AS(sari({}, T("a"), {T("a")}), EmptyInput);
  CHECK_THROWS_AS(sari(T("a"), T("a"), {}), EmptyInput);
}

TEST_CASE("five frozen cases agree with the oracle") {
  struct Case {
    const char* src;
    const char* hyp;
    std::vector<const char*> refs;
    double frozen;
  };
  // Frozen values were produced by the oracle before the library existed.
  const std::vector<Case> cases = {
      {"a b c", "a c", {"a b"}, 66.666666666666657},
      {"the automobile consumed the residence", "the car ate the home",
       {"the car consumed the home"}, 62.123015873016},
      {"a b a b", "a b", {"a b a"}, 75.198412698413},
      {"x y z w v", "x y z", {"x z w"}, 55.555555555556},
      {"the old car is red .", "the car is red .", {"the car is red .", "the old car is red ."},
       73.547979797980},
  };
  for (const auto& c : cases) {
    std::vector<Tokens> refs;
    for (const auto* r : c.refs) refs.push_back(T(r));
    const double lib = sari(T(c.src), T(c.hyp), refs);
    const double orc = oracle::sari(T(c.src), T(c.hyp), refs);
    CAPTURE(c.src);
    CHECK(std::fabs(lib - orc) < 1e-9);
    CHECK(std::fabs(lib - c.frozen) < 1e-9);
  }
}

TEST_CASE("sari matches the oracle and stays in range on random triples") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_sentence(rng, 8, 4);
    const auto h = random_sentence(rng, 8, 5);
    std::vector<Tokens> refs;
    const auto nref = 1 + rng.below(3);
    for (std::uint64_t r = 0; r < nref; ++r) refs.push_back(random_sentence(rng, 8, 5));
    const double v = sari(s, h, refs);
    CHECK(std::fabs(v - oracle::sari(s, h, refs)) < 1e-9);
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }
}

TEST_CASE("sari of the only reference is 100 for any source") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_sentence(rng, 10, 3);  // small alphabet forces repeats
    const auto r = random_sentence(rng, 10, 4);
    CHECK(sari(s, r, {r}) == doctest::Approx(100.0).epsilon(1e-12));
  }
}

TEST_CASE("sari components on a hand example") {
  // Source "a b c", hypothesis "a c", reference "a b" at n = 1.
  const auto c = sari_ngram(T("a b c"), T("a c"), {T("a b")}, 1);
  CHECK(c.keep_f1 == doctest::Approx(0.5));
  CHECK(c.delete_precision == doctest::Approx(0.0));
  CHECK(c.add_f1 == doctest::Approx(1.0));
}

TEST_CASE("delta fkgl") {
  CHECK(delta_fkgl("The cat sat on the mat.", "The cat sat on the mat.") == 0.0);
  const double d = delta_fkgl("The automobile consumed the residence.", "The car ate the home.");
  CHECK(d > 0);
  CHECK(std::fabs(d - (fkgl("The automobile consumed the residence.") -
                       fkgl("The car ate the home."))) < 1e-12);
  CHECK(std::fabs(delta_fkgl("The cat sat on the mat.", "Go.") - (-1.45 - -3.40)) < 1e-9);
  CHECK_THROWS_AS(delta_fkgl("", "Go."), EmptyInput);
}

TEST_CASE("pairwise bleu filter keeps the inclusive range") {
  const std::vector<SentencePair> pairs = {
      {"the cat sat", "the cat sat"},                        // 1.0
      {"red green blue", "one two three"},                   // 0.0
      {"the cat lay on the mat", "the dog sat on the mat"},  // 0.427
  };
  const auto kept = pairwise_bleu_filter(pairs);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == pairs[2]);
  // Bounds are inclusive.
  const double v = bleu(T("the cat lay on the mat"), {T("the dog sat on the mat")});
  CHECK(pairwise_bleu_filter({pairs[2]}, v, 0.9).size() == 1);
  CHECK(pairwise_bleu_filter({pairs[2]}, 0.1, v).size() == 1);
  CHECK(pairwise_bleu_filter({pairs[0]}, 0.1, 1.0).size() == 1);
  CHECK_THROWS_AS(pairwise_bleu_filter(pairs, 0.5, 0.5), InvalidArgument);
}

TEST_CASE("average rank basics") {
  const MetricDirections dirs = {{"sari", RankDirection::higher_better()},
                                 {"bleu", RankDirection::higher_better()},
                                 {"fkgl", RankDirection::higher_better()}};
  const auto one = average_rank({{"solo", {{"sari", 1}, {"bleu", 2}, {"fkgl", 3}}}}, dirs);
  CHECK(one.average_rank.at("solo") == 1.0);

  const auto two = average_rank({{"A", {{"sari", 2}, {"bleu", 2}, {"fkgl", 2}}},
                                 {"B", {{"sari", 1}, {"bleu", 1}, {"fkgl", 1}}}},
                                dirs);
  CHECK(two.average_rank.at("A") == 1.0);
  CHECK(two.average_rank.at("B") == 2.0);

  const auto tied = average_rank({{"A", {{"sari", 2}, {"bleu", 5}, {"fkgl", 2}}},
                                  {"B", {{"sari", 1}, {"bleu", 5}, {"fkgl", 1}}}},
                                 dirs);
  CHECK(tied.per_metric_ranks.at("bleu") == std::vector<double>{1.5, 1.5});
  CHECK(tied.average_rank.at("A") == doctest::Approx((1 + 1.5 + 1) / 3.0));
}

TEST_CASE("closer-to ranking and missing cells") {
  const MetricDirections dirs = {{"fkgl", RankDirection::closer_to(5.0)}};
  const auto t = average_rank({{"A", {{"fkgl", 9}}}, {"B", {{"fkgl", 4}}}, {"C", {{"fkgl", 6.5}}}},
                              dirs);
  CHECK(t.per_metric_ranks.at("fkgl") == std::vector<double>{3, 1, 2});
  CHECK_THROWS_AS(average_rank({{"A", {{"sari", 1}}}}, dirs), MissingScore);
}

TEST_CASE("rank columns sum to n(n+1)/2") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.below(6);
    SystemScores scores;
    for (std::uint64_t i = 0; i < n; ++i) {
      scores.emplace_back("s" + std::to_string(i),
                          std::map<std::string, double>{
                              {"a", static_cast<double>(rng.below(3))},
                              {"b", static_cast<double>(rng.below(4)) - 1.5}});
    }
    const auto t = average_rank(scores, {{"a", RankDirection::higher_better()},
                                         {"b", RankDirection::closer_to(0)}});
    for (const auto& [metric, ranks] : t.per_metric_ranks) {
      double sum = 0;
      for (double r : ranks) sum += r;
      CHECK(sum == static_cast<double>(n * (n + 1)) / 2.0);
    }
  }
}

TEST_CASE("scores jsonl round trip and errors") {
  testing::TempDir dir("scores");
  const SystemScores scores = {{"lcwl", {{"sari", 93.25}, {"bleu", 0.125}}},
                               {"base", {{"sari", 0.1}, {"bleu", 1.0 / 3.0}}}};
  write_file(dir / "s.jsonl", scores_to_jsonl(scores));
  CHECK(read_scores_jsonl(dir / "s.jsonl") == scores);

  write_file(dir / "bad.jsonl", "{\"system\": \"a\", \"scores\": {\"sari\": 1}}\n{oops\n");
  try {
    read_scores_jsonl(dir / "bad.jsonl");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
  }
  write_file(dir / "str.jsonl", "{\"system\": \"a\", \"scores\": {\"sari\": \"x\"}}\n");
  CHECK_THROWS_AS(read_scores_jsonl(dir / "str.jsonl"), ParseError);
  CHECK_THROWS_AS(read_scores_jsonl(dir / "none.jsonl"), IoError);
}

TEST_CASE("rank table formatting") {
  const SystemScores scores = {{"A", {{"sari", 50}}}, {"B", {{"sari", 40}}}};
  const auto t = average_rank(scores, {{"sari", RankDirection::higher_better()}});
  const auto tsv = format_rank_table(t, scores);
  CHECK(tsv.rfind("system\tsari\tsari_rank\taverage_rank\n", 0) == 0);
  CHECK(tsv.find("A\t50") != std::string::npos);
}
