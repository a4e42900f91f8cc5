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
#include <cstring>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "hiexpl/error.hpp"
#include "hiexpl/model.hpp"
#include "hiexpl/serialize.hpp"

using namespace hiexpl;
using hiexpl::testing::random_lstm;
using hiexpl::testing::random_seq;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("zero parameters give zero scores") {
  const LstmParams p = LstmParams::zeros(8, 3, 4, 2);
  const ForwardResult r = forward(p, TokenSeq{5, 6, 7});
  CHECK(r.scores == Vec{0, 0});
  CHECK(r.trace.size() == 3);
}

TEST_CASE("one hand-sized LSTM cell") {
  LstmParams p = LstmParams::zeros(6, 1, 1, 2);
  p.embedding(5, 0) = 1.0;
  // Columns: [x, h_prev]. Gates i, f, o, g.
  p.gate_w[kGateInput] = Mat{{0.5, 0.3}};
  p.gate_w[kGateForget] = Mat{{-0.2, 0.1}};
  p.gate_w[kGateOutput] = Mat{{1.0, -0.4}};
  p.gate_w[kGateCell] = Mat{{2.0, 0.7}};
  p.gate_b[kGateInput] = Vec{0.1};
  p.gate_b[kGateOutput] = Vec{-0.3};
  p.head_w = Mat{{1.5}, {-2.0}};
  p.head_b = Vec{0.25, 0.0};
  const double i = sig(0.5 + 0.1);
  const double o = sig(1.0 - 0.3);
  const double g = std::tanh(2.0);
  const double c = i * g;
  const double h = o * std::tanh(c);
  const Vec s = classify(p, TokenSeq{5});
  CHECK(s[0] == doctest::Approx(1.5 * h + 0.25).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(-2.0 * h).epsilon(1e-14));
}

TEST_CASE("forward matches the scalar reference and is deterministic") {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    const LstmParams p = random_lstm(12, 3, 4, 3, 100 + trial, 0.8);
    const TokenSeq seq = random_seq(12, 1 + trial % 6, gen);
    const ForwardResult a = forward(p, seq);
    const ForwardResult b = forward(p, seq);
    CHECK(a.scores == b.scores);
    const auto ref = hiexpl::testing::ref_scores(p, seq.ids());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(a.scores[k] == doctest::Approx(ref[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("trace fidelity: stored gate inputs reproduce stored outputs") {
  std::mt19937_64 gen(4);
  const LstmParams p = random_lstm(10, 3, 5, 2, 77);
  const ForwardResult r = forward(p, random_seq(10, 6, gen));
  for (const TraceStep& s : r.trace) {
    for (std::size_t k = 0; k < kNumGates; ++k) {
      CHECK(apply_activation(kGateActivation[k], s.pre[k]) == s.act[k]);
    }
    CHECK(apply_activation(ActivationKind::kTanh, s.c) == s.tanh_c);
    CHECK(hadamard(s.act[kGateOutput], s.tanh_c) == s.h);
  }
}

namespace {

// Relative error with an absolute floor for near-zero gradients.
bool grad_close(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-7) return std::abs(analytic - numeric) < 1e-9;
  return std::abs(analytic - numeric) / scale <= 1e-4;
}

template <typename Loss>
void check_gradients(LstmParams p, const LstmParams& grads, Loss loss) {
  auto params = p.tensors();
  const auto g = grads.tensors();
  const double eps = 1e-5;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double keep = params[t][i];
      params[t][i] = keep + eps;
      const double up = loss(p);
      params[t][i] = keep - eps;
      const double down = loss(p);
      params[t][i] = keep;
      const double numeric = (up - down) / (2 * eps);
      INFO("tensor " << t << " index " << i);
      CHECK(grad_close(g[t][i], numeric));
    }
  }
}

}  // namespace

TEST_CASE("classifier gradients match central differences") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 4; ++trial) {
    const LstmParams p = random_lstm(8, 3, 3, 2, 500 + trial, 0.7);
    const LabeledExample ex{random_seq(8, 1 + trial, gen),
                            static_cast<std::size_t>(trial % 2)};
    LstmParams grads = LstmParams::zeros(8, 3, 3, 2);
    classifier_loss(p, ex, &grads);
    check_gradients(p, grads, [&](const LstmParams& q) { return classifier_loss(q, ex); });
  }
}

TEST_CASE("language model gradients match central differences") {
  std::mt19937_64 gen(22);
  const LstmParams p = random_lstm(8, 3, 3, 8, 900, 0.7);
  const TokenSeq seq = random_seq(8, 3, gen);
  std::vector<TokenId> in, out;
  lm_io(seq, Direction::kBackward, in, out);
  LstmParams grads = LstmParams::zeros(8, 3, 3, 8);
  lm_sequence_loss(p, in, out, &grads);
  check_gradients(p, grads, [&](const LstmParams& q) {
    return lm_sequence_loss(q, in, out);
  });
}

TEST_CASE("lm_io layouts") {
  std::vector<TokenId> in, out;
  lm_io(TokenSeq{5, 6}, Direction::kForward, in, out);
  CHECK(in == std::vector<TokenId>{kBos, 5, 6});
  CHECK(out == std::vector<TokenId>{5, 6, kEos});
  lm_io(TokenSeq{5, 6}, Direction::kBackward, in, out);
  CHECK(in == std::vector<TokenId>{kEos, 6, 5});
  CHECK(out == std::vector<TokenId>{6, 5, kBos});
}

TEST_CASE("classifier training on a separable toy set") {
  // "good" alone or with filler is positive, "bad" negative.
  std::vector<LabeledExample> data;
  for (TokenId filler : {7, 8}) {
    data.push_back({TokenSeq{5, filler}, 1});
    data.push_back({TokenSeq{filler, 5}, 1});
    data.push_back({TokenSeq{6, filler}, 0});
    data.push_back({TokenSeq{filler, 6}, 0});
  }
  TrainConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 4;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  TrainStats stats;
  const LstmParams p = train_classifier(data, 9, 2, cfg, &stats);
  CHECK(stats.accuracy == 1.0);
  CHECK(accuracy(p, data) == 1.0);
  CHECK(train_classifier(data, 9, 2, cfg) == p);

  cfg.epochs = 0;
  CHECK(train_classifier(data, 9, 2, cfg) == init_classifier(9, 2, cfg));
  CHECK_THROWS_AS(train_classifier(data, 9, 1, cfg), InvalidArgument);
  data.push_back({TokenSeq{5}, 4});
  CHECK_THROWS_AS(train_classifier(data, 9, 2, cfg), InvalidArgument);
}

TEST_CASE("PAD embedding stays zero through training") {
  std::vector<LabeledExample> data = {{TokenSeq{5, kPad}, 1}, {TokenSeq{6, kPad}, 0}};
  TrainConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 3;
  cfg.epochs = 5;
  const LstmParams p = train_classifier(data, 7, 2, cfg);
  for (double v : p.embedding.row(kPad)) CHECK(v == 0.0);
}

TEST_CASE("language model on a repeated bigram") {
  const Vocab vocab = Vocab::build(std::vector<std::vector<std::string>>{{"a", "b"}});
  const TokenId a = vocab.lookup("a");
  const TokenId b = vocab.lookup("b");
  std::vector<TokenSeq> corpus(20, TokenSeq{a, b});
  TrainConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 8;
  cfg.epochs = 60;
  cfg.adam.learning_rate = 0.05;
  cfg.mask_prob = 0.0;
  const LmParams lm = train_lm(corpus, vocab.size(), cfg);
  const std::vector<TokenId> ctx = {a};
  const Vec d = lm_next_dist(lm, ctx, Direction::kForward);
  CHECK(d[b] > 0.95);
  CHECK(argmax(d) == b);
  CHECK(train_lm(corpus, vocab.size(), cfg) == lm);

  cfg.epochs = 0;
  const LmParams fresh = train_lm(corpus, vocab.size(), cfg);
  const Vec u = lm_next_dist(fresh, ctx, Direction::kForward);
  CHECK(u[a] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lm distributions are normalized with no reserved mass") {
  std::mt19937_64 gen(31);
  const LmParams lm = hiexpl::testing::random_lm(11, 4, 5, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const TokenSeq ctx = random_seq(11, 1 + trial % 5, gen);
    std::vector<TokenId> ids = ctx.ids();
    ids[0] = kMask;
    for (Direction dir : {Direction::kForward, Direction::kBackward}) {
      const Vec d = lm_next_dist(lm, ids, dir);
      double total = 0.0;
      for (double v : d) {
        CHECK(v >= 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
      for (TokenId r = 0; r < kNumReserved; ++r) CHECK(d[r] == 0.0);
    }
  }
}

TEST_CASE("cursor agrees with lm_next_dist") {
  const LmParams lm = hiexpl::testing::random_lm(9, 3, 4, 8);
  const std::vector<TokenId> right = {6, 7, 8};
  LmCursor cur(lm, Direction::kBackward);
  for (auto it = right.rbegin(); it != right.rend(); ++it) cur.feed(*it);
  CHECK(cur.next_dist() == lm_next_dist(lm, right, Direction::kBackward));
}

TEST_CASE("model files round trip bit-identically") {
  const LstmParams p = random_lstm(9, 3, 4, 2, 55);
  const Vocab v = Vocab::build(std::vector<std::vector<std::string>>{{"w", "x", "y", "z"}});
  const std::string bytes = encode_classifier(v, p);
  CHECK(bytes.substr(0, 7) == "HIEXPL1");
  const ClassifierBundle back = decode_classifier(bytes);
  CHECK(back.params == p);
  CHECK(back.vocab == v);

  const LmParams lm = hiexpl::testing::random_lm(9, 2, 3, 5);
  const LmBundle lb = decode_lm(encode_lm(v, lm));
  CHECK(lb.lm == lm);
  CHECK_THROWS_AS(decode_lm(bytes), VersionError);
}

TEST_CASE("corrupted model files raise distinct errors") {
  const LstmParams p = random_lstm(9, 3, 4, 2, 56);
  const Vocab v = Vocab::build(std::vector<std::vector<std::string>>{{"w", "x", "y", "z"}});
  const std::string bytes = encode_classifier(v, p);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_classifier(bad_magic), VersionError);

  std::string bad_version = bytes;
  bad_version[7] = 9;
  CHECK_THROWS_AS(decode_classifier(bad_version), VersionError);

  CHECK_THROWS_AS(decode_classifier(bytes.substr(0, bytes.size() - 3)), TruncatedError);
  CHECK_THROWS_AS(decode_classifier(bytes.substr(0, 20)), TruncatedError);

  // Bump the declared row count of the head bias.
  std::string bad_shape = bytes;
  const std::size_t at = bad_shape.find("head_b") + 6;
  bad_shape[at] = static_cast<char>(bad_shape[at] + 1);
  CHECK_THROWS_AS(decode_classifier(bad_shape), ShapeError);

  CHECK_THROWS_AS(decode_classifier(bytes + "x"), ShapeError);
}
