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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "hiexpl/error.hpp"
#include "hiexpl/eval.hpp"
#include "hiexpl/synthetic.hpp"

using namespace hiexpl;

namespace {

struct SurrogateFixture {
  Vocab vocab;
  std::vector<LabeledExample> train;
  std::vector<TokenSeq> eval;
  LinearSurrogate surrogate;
  SurrogateStats stats;
};

SurrogateFixture make_fixture() {
  const auto raw = sentiment_grammar(300, 17);
  Vocab vocab = build_vocab(raw);
  auto train = encode_examples(raw, vocab);
  std::vector<TokenSeq> eval;
  for (std::size_t i = 0; i < 25; ++i) eval.push_back(train[i].seq);
  SurrogateStats stats;
  LinearSurrogate sur = train_surrogate(train, vocab.size(), 2, {}, &stats);
  return SurrogateFixture{std::move(vocab), std::move(train), std::move(eval), std::move(sur),
                          stats};
}

const SurrogateFixture& fixture() {
  static const SurrogateFixture f = make_fixture();
  return f;
}

PhraseScorer occlusion_of(const SequenceClassifier& model) {
  return [&model](const TokenSeq& seq, Span span) { return input_occlusion(model, seq, span); };
}

}  // namespace

TEST_CASE("pearson examples") {
  const std::vector<double> a{1, 2, 3};
  CHECK(pearson(a, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(a, std::vector<double>{-1, -2, -3}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(pearson(a, std::vector<double>{1, 3, 2}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS((pearson(a, std::vector<double>{4, 4, 4})), DegenerateError);
  CHECK_THROWS_AS((pearson(a, std::vector<double>{1, 2})), InvalidArgument);
  CHECK_THROWS_AS((pearson(std::vector<double>{1}, std::vector<double>{2})), InvalidArgument);
}

TEST_CASE("pearson properties") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 20;
    std::vector<double> x(n), y(n), shifted(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = normal(gen);
      y[i] = 0.5 * x[i] + normal(gen);
    }
    const double shift = normal(gen) * 10, scale = 0.1 + std::abs(normal(gen)) * 5;
    for (std::size_t i = 0; i < n; ++i) {
      shifted[i] = scale * y[i] + shift;
      neg[i] = -y[i];
    }
    const double r = pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(pearson(y, x) == doctest::Approx(r).epsilon(1e-12));
    CHECK(pearson(x, shifted) == doctest::Approx(r).epsilon(1e-9));
    CHECK(pearson(x, neg) == doctest::Approx(-r).epsilon(1e-12));
  }
}

TEST_CASE("surrogate training converges to a bag-of-words model") {
  const SurrogateFixture& f = fixture();
  CHECK(f.stats.converged);
  CHECK(f.stats.gradient_norm < 1e-6);
  CHECK(f.surrogate.column(kPad) == Vec{0, 0});
  std::size_t correct = 0;
  for (const auto& ex : f.train) correct += argmax(f.surrogate.scores(ex.seq)) == ex.label;
  CHECK(static_cast<double>(correct) / static_cast<double>(f.train.size()) >= 0.95);

  const TokenSeq seq{6, 7, 8, 7};
  Vec expected = f.surrogate.bias();
  for (TokenId id : seq) expected += f.surrogate.column(id);
  CHECK(max_abs_diff(f.surrogate.scores(seq), expected) <= 1e-12);
  CHECK(max_abs_diff(f.surrogate.scores(TokenSeq{7, 8, 6, 7}), expected) <= 1e-12);
  CHECK(train_surrogate(f.train, f.vocab.size(), 2).coefficients() ==
        f.surrogate.coefficients());

  // A positive word should lean towards class 1.
  const Vec good = f.surrogate.column(f.vocab.lookup("good"));
  CHECK(good[1] > good[0]);
  CHECK_THROWS_AS(LinearSurrogate(Mat(2, 4), Vec(3)), DimensionError);
}

TEST_CASE("word_rho oracles") {
  const SurrogateFixture& f = fixture();
  std::vector<InstanceRecord> records;
  CHECK(word_rho(occlusion_of(f.surrogate), f.surrogate, f.eval, &records) ==
        doctest::Approx(1.0).epsilon(1e-9));
  std::size_t words = 0;
  for (const auto& s : f.eval) words += s.size();
  CHECK(records.size() == words);

  const PhraseScorer negated = [&](const TokenSeq& seq, Span span) {
    const AttributionScore s = input_occlusion(f.surrogate, seq, span);
    return AttributionScore(-1.0 * s.per_class(), s.target_class());
  };
  CHECK(word_rho(negated, f.surrogate, f.eval) == doctest::Approx(-1.0).epsilon(1e-9));
  const PhraseScorer flat = [](const TokenSeq&, Span) { return AttributionScore(Vec{0, 0}, 0); };
  CHECK_THROWS_AS(word_rho(flat, f.surrogate, f.eval), DegenerateError);
}

TEST_CASE("phrase_rho examples") {
  const std::vector<AnnotatedTree> trees = parse_trees(
      "(0.8 (0.1 the) (0.9 (0.2 movie) (0.9 good)))\n"
      "(0.2 (0.5 (0.5 a) (0.3 plot)) (0.1 (0.0 was) (0.1 (0.1 very) (0.0 dull))))\n");
  Vocab vocab;
  for (const auto& t : trees) {
    for (const auto& w : tree_tokens(t)) vocab.add(w);
  }
  const auto annotated = [&](double shift) {
    return [&trees, &vocab, shift](const TokenSeq& seq, Span span) {
      for (const auto& t : trees) {
        if (encode(tree_tokens(t), vocab) != seq) continue;
        for (const auto& [s, v] : tree_nodes(t)) {
          if (s == span) return AttributionScore(Vec{0.0, v + shift}, 1);
        }
      }
      throw InvalidArgument("unknown span");
    };
  };
  std::vector<InstanceRecord> records;
  CHECK(phrase_rho(annotated(0.0), trees, vocab, &records) == doctest::Approx(1.0));
  CHECK(records.size() == 6);
  CHECK(phrase_rho(annotated(3.5), trees, vocab) == doctest::Approx(1.0));

  const std::vector<AnnotatedTree> single = {trees[0]};
  const PhraseScorer any = [](const TokenSeq&, Span span) {
    return AttributionScore(Vec{0.0, static_cast<double>(span.length())}, 1);
  };
  CHECK(std::abs(phrase_rho(any, single, vocab)) == doctest::Approx(1.0));
}

TEST_CASE("make_scorer sets the phrase") {
  const SurrogateFixture& f = fixture();
  const ExplainContext ctx{&f.surrogate, nullptr, nullptr, {}};
  AttributionQuery base;
  base.method = AttributionMethod::kOcclusion;
  const PhraseScorer scorer = make_scorer(ctx, base);
  const TokenSeq& seq = f.eval[0];
  CHECK(scorer(seq, Span{0, 1}) == input_occlusion(f.surrogate, seq, Span{0, 1}));
}

TEST_CASE("sweep grids") {
  const SurrogateFixture& f = fixture();
  const LmParams lm = hiexpl::testing::random_lm(f.vocab.size(), 4, 6, 5);
  const LstmParams p = hiexpl::testing::random_lstm(f.vocab.size(), 4, 6, 2, 6);
  const LstmClassifier model(p);
  const std::vector<TokenSeq> eval(f.eval.begin(), f.eval.begin() + 6);
  const ScorerFactory factory = [&](std::size_t n, std::size_t k, SamplerKind sampler,
                                    std::uint64_t seed) {
    AttributionQuery q;
    q.context_size = n;
    q.samples = k;
    q.sampler = sampler;
    q.seed = seed;
    return make_scorer(ExplainContext{&model, &p, &lm, {}}, q);
  };
  const SweepReport one = sweep(factory, f.surrogate, eval, SweepGrid{{1}, {2}, {0}, false});
  REQUIRE(one.rows.size() == 1);
  CHECK(one.rows[0].method == "soc");
  CHECK(one.rows[0].variance == 0.0);

  const SweepReport both = sweep(factory, f.surrogate, eval, SweepGrid{{1}, {2, 4}, {0, 1, 2}});
  CHECK(both.rows.size() == 12);
  const SweepReport k2 = sweep(factory, f.surrogate, eval, SweepGrid{{1}, {2}, {0, 1, 2}});
  for (std::size_t i = 0; i < 6; ++i) CHECK(k2.rows[i] == both.rows[i]);
  for (std::size_t i = 0; i < 3; ++i) CHECK(both.rows[i].variance == both.rows[0].variance);
  CHECK(both.rows[3].method == "soc-pad");

  const std::string csv = to_csv(both);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "N,K,seed,method,word_rho,variance");
  std::size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 12);
  CHECK(to_json(both).at("rows").size() == 12);
  CHECK_THROWS_AS((sweep(factory, f.surrogate, eval, SweepGrid{{}, {2}, {0}})), InvalidArgument);
}

TEST_CASE("eval report json carries its config") {
  EvalReport r;
  r.method = "soc";
  r.word_rho = 0.5;
  r.records.push_back(InstanceRecord{0, Span{0, 1}, 0.1, 0.2});
  r.config = {{"seed", 3}};
  const auto j = to_json(r);
  CHECK(j.at("method") == "soc");
  CHECK(j.at("config").at("seed") == 3);
  CHECK(j.at("phrase_rho").is_null());
}
