/*
 * Copyright 2026 The hiexpl Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "hiexpl/attribution.hpp"
#include "hiexpl/error.hpp"
#include "hiexpl/hierarchy.hpp"

using namespace hiexpl;

namespace {

// Binary score whose display value is `v`.
AttributionScore signed_score(double v) { return AttributionScore(Vec{0.0, v}, v >= 0 ? 1 : 0); }

struct CountingScorer {
  std::map<Span, double> values;
  std::size_t* calls;
  AttributionScore operator()(const TokenSeq&, Span span) const {
    ++*calls;
    const auto it = values.find(span);
    return signed_score(it == values.end() ? 0.0 : it->second);
  }
};

std::vector<std::string> words(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("explain_tree scores every node once") {
  std::size_t calls = 0;
  const CountingScorer scorer{{{Span{0, 1}, 0.5}}, &calls};
  const AnnotatedTree leaf = parse_tree("(1.0 ok)");
  const ExplainedNode one = explain_tree(scorer, TokenSeq{5}, leaf);
  CHECK(node_count(one) == 1);
  CHECK(one.display == 0.5);
  CHECK(calls == 1);

  calls = 0;
  const AnnotatedTree two = parse_tree("(0.5 (0.9 good) (0.5 movie))");
  const ExplainedNode t = explain_tree(scorer, TokenSeq{5, 6}, two);
  CHECK(node_count(t) == 3);
  CHECK(calls == 3);
  CHECK(t.children[0].span == Span{0, 1});

  calls = 0;
  const AnnotatedTree big =
      parse_tree("(0.2 (0.5 (0.5 a) (0.3 plot)) (0.1 (0.0 was) (0.1 (0.1 very) (0.0 dull))))");
  const ExplainedNode b = explain_tree(scorer, TokenSeq{5, 6, 7, 8, 9}, big);
  CHECK(node_count(b) == tree_node_count(big));
  CHECK(calls == tree_node_count(big));
  CHECK_NOTHROW(check_tiling(b));
  CHECK_THROWS_AS((explain_tree(scorer, TokenSeq{5, 6, 7}, two)), InvalidArgument);
}

TEST_CASE("the root of a tree explanation is the full-span score") {
  const LstmParams p = hiexpl::testing::random_lstm(9, 3, 4, 2, 3);
  const LstmClassifier model(p);
  const LmParams lm = hiexpl::testing::random_lm(9, 3, 4, 4);
  const TokenSeq seq{5, 6, 7};
  AttributionQuery base;
  base.context_size = 2;
  base.samples = 5;
  const PhraseScorer scorer = [&](const TokenSeq& s, Span span) {
    AttributionQuery q = base;
    q.phrase = span;
    return soc(model, &lm, s, q);
  };
  const ExplainedNode root = explain_tree(scorer, seq, parse_tree("(0 (0 a) (0 (0 b) (0 c)))"));
  base.phrase = Span{0, 3};
  CHECK(root.score == soc(model, &lm, seq, base));
  CHECK(explain_span(scorer, seq, Span{1, 3}).score == scorer(seq, Span{1, 3}));
}

TEST_CASE("scorer failures name the span") {
  const PhraseScorer bad = [](const TokenSeq&, Span span) -> AttributionScore {
    if (span == Span{1, 2}) throw NumericError("boom");
    return signed_score(0.0);
  };
  try {
    explain_tree(bad, TokenSeq{5, 6}, parse_tree("(0 (0 a) (0 b))"));
    FAIL("expected a ScoringError");
  } catch (const ScoringError& e) {
    CHECK(std::string(e.what()).find("1:2") != std::string::npos);
  }
}

TEST_CASE("agglomeration examples") {
  std::size_t calls = 0;
  const Agglomeration one = agglomerate(CountingScorer{{}, &calls}, TokenSeq{5});
  CHECK(one.levels.size() == 1);
  CHECK(one.levels[0].spans == std::vector<Span>{Span{0, 1}});
  CHECK(node_count(one.tree) == 1);

  const Agglomeration two = agglomerate(CountingScorer{{}, &calls}, TokenSeq{5, 6});
  CHECK(two.levels.size() == 2);
  CHECK(two.levels.back().spans == std::vector<Span>{Span{0, 2}});

  const CountingScorer stub{{{Span{0, 2}, 5.0}, {Span{1, 3}, -1.0}}, &calls};
  const Agglomeration three = agglomerate(stub, TokenSeq{5, 6, 7});
  REQUIRE(three.levels.size() == 3);
  CHECK(three.levels[1].spans == std::vector<Span>{Span{0, 2}, Span{2, 3}});
  CHECK(three.tree.children[0].span == Span{0, 2});

  // Ties go to the leftmost pair.
  const Agglomeration tie = agglomerate(CountingScorer{{}, &calls}, TokenSeq{5, 6, 7, 8});
  CHECK(tie.levels[1].spans.front() == Span{0, 2});
}

TEST_CASE("agglomeration makes T-1 merges that tile each level") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = 1 + gen() % 10;
    std::map<Span, double> values;
    for (std::size_t a = 0; a < t; ++a) {
      for (std::size_t b = a + 1; b <= t; ++b) {
        values[Span{a, b}] = std::uniform_real_distribution<double>(-1, 1)(gen);
      }
    }
    std::size_t calls = 0;
    const Agglomeration ag =
        agglomerate(CountingScorer{values, &calls}, hiexpl::testing::random_seq(9, t, gen));
    CHECK(ag.levels.size() == t);
    for (std::size_t k = 0; k < ag.levels.size(); ++k) {
      const auto& spans = ag.levels[k].spans;
      CHECK(spans.size() == t - k);
      std::size_t at = 0;
      for (Span s : spans) {
        CHECK(s.start == at);
        at = s.end;
      }
      CHECK(at == t);
      if (k > 0) {
        for (Span s : spans) {
          bool made_of_previous = false;
          const auto& prev = ag.levels[k - 1].spans;
          for (std::size_t i = 0; i < prev.size(); ++i) {
            if (prev[i] == s) made_of_previous = true;
            if (i + 1 < prev.size() && prev[i].start == s.start && prev[i + 1].end == s.end) {
              made_of_previous = true;
            }
          }
          CHECK(made_of_previous);
        }
      }
    }
    CHECK(node_count(ag.tree) == 2 * t - 1);
    CHECK_NOTHROW(check_tiling(ag.tree));
    CHECK(calls == ag.scores.size());
    std::size_t again = 0;
    CHECK(agglomerate(CountingScorer{values, &again}, TokenSeq(std::vector<TokenId>(t, 5))).tree ==
          agglomerate(CountingScorer{values, &again}, TokenSeq(std::vector<TokenId>(t, 5))).tree);
  }
}

TEST_CASE("html colouring") {
  std::size_t calls = 0;
  const ExplainedNode zeros =
      explain_tree(CountingScorer{{}, &calls}, TokenSeq{5, 6}, parse_tree("(0 (0 a) (0 b))"));
  const std::string white = render_html(zeros, words(2));
  CHECK(white.find("background:#ffffff") != std::string::npos);
  std::size_t boxes = 0, white_boxes = 0;
  for (auto at = white.find("background:#"); at != std::string::npos;
       at = white.find("background:#", at + 1)) {
    ++boxes;
    if (white.compare(at, 18, "background:#ffffff") == 0) ++white_boxes;
  }
  CHECK(boxes == 3);
  CHECK(white_boxes == 3);

  const ExplainedNode red =
      explain_tree(CountingScorer{{{Span{0, 1}, 1.0}}, &calls}, TokenSeq{5}, parse_tree("(1 a)"));
  const std::string html = render_html(red, words(1));
  CHECK(html.find("background:#ff0000") != std::string::npos);
  CHECK(html.find("<script") == std::string::npos);
  CHECK(html.find("http") == std::string::npos);

  const ExplainedNode blue =
      explain_tree(CountingScorer{{{Span{0, 1}, -2.0}}, &calls}, TokenSeq{5}, parse_tree("(1 a)"));
  CHECK(render_html(blue, words(1)).find("background:#0000ff") != std::string::npos);

  nlohmann::json meta;
  meta["note"] = "a--b";
  const std::string with_meta = render_html(red, words(1), meta);
  CHECK(with_meta.find("a- -b") != std::string::npos);
  CHECK(with_meta.rfind("<!DOCTYPE html>", 0) == 0);
}

TEST_CASE("json sidecar round trip") {
  const LstmParams p = hiexpl::testing::random_lstm(9, 3, 4, 3, 8);
  const LstmClassifier model(p);
  const TokenSeq seq{5, 6, 7, 8};
  const PhraseScorer scorer = [&](const TokenSeq& s, Span span) {
    return input_occlusion(model, s, span);
  };
  const ExplainedNode tree = agglomerate(scorer, seq).tree;
  const auto j = nlohmann::json::parse(to_json(tree).dump());
  CHECK(node_from_json(j) == tree);

  const auto dir = std::filesystem::temp_directory_path() / "hiexpl_hier_test";
  std::filesystem::create_directories(dir);
  write_explanation(tree, words(4), dir / "x.html", nlohmann::json{{"seed", 1}});
  std::ifstream in(dir / "x.json");
  const auto side = nlohmann::json::parse(in);
  CHECK(side.at("config").at("seed") == 1);
  CHECK(side.at("tokens").size() == 4);
  CHECK(node_from_json(side.at("tree")) == tree);
  CHECK(std::filesystem::exists(dir / "x.html"));

  CHECK_THROWS_AS((node_from_json(nlohmann::json{{"span", {0}}})), ParseError);
  CHECK_THROWS_AS(node_from_json(nlohmann::json::object()), ParseError);
}
