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

// Shared fixtures for the test binaries: random models and sentences, plus
// scalar reference implementations written independently of the library.

#ifndef HIEXPL_TESTS_FIXTURES_HPP_
#define HIEXPL_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hiexpl/corpus.hpp"
#include "hiexpl/model.hpp"
#include "hiexpl/numerics.hpp"

namespace hiexpl::testing {

inline void fill_uniform(std::span<double> xs, std::mt19937_64& gen, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& x : xs) x = u(gen);
}

// Every parameter uniform in (-scale, scale); PAD embedding stays zero.
inline LstmParams random_lstm(std::size_t vocab, std::size_t d_e, std::size_t d_h,
                              std::size_t outputs, std::uint64_t seed,
                              double scale = 1.0) {
  std::mt19937_64 gen(seed);
  LstmParams p = LstmParams::zeros(vocab, d_e, d_h, outputs);
  for (std::span<double> t : p.tensors()) fill_uniform(t, gen, scale);
  for (double& x : p.embedding.row(kPad)) x = 0.0;
  return p;
}

inline LmParams random_lm(std::size_t vocab, std::size_t d_e, std::size_t d_h,
                          std::uint64_t seed, double scale = 1.0) {
  return LmParams{random_lstm(vocab, d_e, d_h, vocab, seed, scale),
                  random_lstm(vocab, d_e, d_h, vocab, seed + 7919, scale)};
}

// Ordinary (non-reserved) ids only.
inline TokenSeq random_seq(std::size_t vocab, std::size_t length,
                           std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> pick(kNumReserved, vocab - 1);
  std::vector<TokenId> ids(length);
  for (TokenId& id : ids) id = static_cast<TokenId>(pick(gen));
  return TokenSeq(std::move(ids));
}

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar LSTM following the textbook gate equations with gates i, f, o, g.
struct RefStep {
  std::vector<double> pre[4];
  std::vector<double> c;
  std::vector<double> h;
};

inline std::vector<RefStep> ref_lstm(const LstmParams& p,
                                     const std::vector<TokenId>& ids) {
  const std::size_t de = p.embed_dim();
  const std::size_t dh = p.hidden_dim();
  std::vector<double> h(dh, 0.0);
  std::vector<double> c(dh, 0.0);
  std::vector<RefStep> out;
  for (TokenId id : ids) {
    std::vector<double> z(de + dh);
    for (std::size_t j = 0; j < de; ++j) z[j] = p.embedding(id, j);
    for (std::size_t j = 0; j < dh; ++j) z[de + j] = h[j];
    RefStep s;
    for (int k = 0; k < 4; ++k) {
      s.pre[k].assign(dh, 0.0);
      for (std::size_t r = 0; r < dh; ++r) {
        double acc = p.gate_b[k][r];
        for (std::size_t q = 0; q < de + dh; ++q) acc += p.gate_w[k](r, q) * z[q];
        s.pre[k][r] = acc;
      }
    }
    for (std::size_t r = 0; r < dh; ++r) {
      const double i = ref_sigmoid(s.pre[0][r]);
      const double f = ref_sigmoid(s.pre[1][r]);
      const double o = ref_sigmoid(s.pre[2][r]);
      const double g = std::tanh(s.pre[3][r]);
      c[r] = f * c[r] + i * g;
      h[r] = o * std::tanh(c[r]);
    }
    s.c = c;
    s.h = h;
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<double> ref_scores(const LstmParams& p,
                                      const std::vector<TokenId>& ids) {
  const std::vector<double> h = ref_lstm(p, ids).back().h;
  std::vector<double> s(p.num_outputs());
  for (std::size_t k = 0; k < s.size(); ++k) {
    s[k] = p.head_b[k];
    for (std::size_t j = 0; j < h.size(); ++j) s[k] += p.head_w(k, j) * h[j];
  }
  return s;
}

// Phrase part of the final hidden state under the single-context rule: each
// activation credits the phrase with s(v) - s(v - beta) where v is the
// actual input, each product (b1+g1)(b2+g2) - g1 g2, and the bias belongs
// to the context. Returns W_l beta_T.
inline std::vector<double> ref_remove_beta_score(const LstmParams& p,
                                                 const std::vector<TokenId>& ids,
                                                 Span phrase) {
  const std::size_t de = p.embed_dim();
  const std::size_t dh = p.hidden_dim();
  std::vector<double> hb(dh, 0.0), hv(dh, 0.0), cb(dh, 0.0), cv(dh, 0.0);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const bool in = phrase.contains(t);
    std::vector<double> zb(de + dh, 0.0), zv(de + dh, 0.0);
    for (std::size_t j = 0; j < de; ++j) {
      zv[j] = p.embedding(ids[t], j);
      zb[j] = in ? zv[j] : 0.0;
    }
    for (std::size_t j = 0; j < dh; ++j) {
      zb[de + j] = hb[j];
      zv[de + j] = hv[j];
    }
    std::vector<double> nb(dh), nv(dh), ncb(dh), ncv(dh);
    for (std::size_t r = 0; r < dh; ++r) {
      double pb[4], pv[4];
      for (int k = 0; k < 4; ++k) {
        pb[k] = 0.0;
        pv[k] = p.gate_b[k][r];
        for (std::size_t q = 0; q < de + dh; ++q) {
          pb[k] += p.gate_w[k](r, q) * zb[q];
          pv[k] += p.gate_w[k](r, q) * zv[q];
        }
      }
      double ab[4], av[4];
      for (int k = 0; k < 4; ++k) {
        const bool tanh_gate = k == 3;
        const auto s = [&](double x) { return tanh_gate ? std::tanh(x) : ref_sigmoid(x); };
        av[k] = s(pv[k]);
        ab[k] = av[k] - s(pv[k] - pb[k]);
      }
      const auto prod_beta = [](double b1, double v1, double b2, double v2) {
        return v1 * v2 - (v1 - b1) * (v2 - b2);
      };
      ncv[r] = av[1] * cv[r] + av[0] * av[3];
      ncb[r] = prod_beta(ab[1], av[1], cb[r], cv[r]) +
               prod_beta(ab[0], av[0], ab[3], av[3]);
      const double tv = std::tanh(ncv[r]);
      const double tb = tv - std::tanh(ncv[r] - ncb[r]);
      nv[r] = av[2] * tv;
      nb[r] = prod_beta(ab[2], av[2], tb, tv);
    }
    hb = nb;
    hv = nv;
    cb = ncb;
    cv = ncv;
  }
  std::vector<double> s(p.num_outputs(), 0.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (std::size_t j = 0; j < dh; ++j) s[k] += p.head_w(k, j) * hb[j];
  }
  return s;
}

}  // namespace hiexpl::testing

#endif  // HIEXPL_TESTS_FIXTURES_HPP_
