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

#include "hiexpl/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "hiexpl/error.hpp"

namespace hiexpl {
namespace {

void check_decomp(const Decomp& d, const char* op) {
  if (d.gamma.size() != d.beta.size() || d.zeta.size() != d.beta.size()) {
    throw DimensionError(std::string(op) + ": ragged decomposition");
  }
}

void check_same(const Decomp& a, const Decomp& b, const char* op) {
  check_decomp(a, op);
  check_decomp(b, op);
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": length mismatch");
  }
}

void check_weights(std::span<const double> weights, std::size_t n,
                   const char* op) {
  if (!weights.empty() && weights.size() != n) {
    throw InvalidArgument(std::string(op) + ": " + std::to_string(weights.size()) +
                          " weights for " + std::to_string(n) + " samples");
  }
}

// Divisor turning a weighted sum into a mean.
double weight_norm(std::span<const double> weights, std::size_t n) {
  if (weights.empty()) return static_cast<double>(n);
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InvalidArgument("sample weights sum to zero");
  return total;
}

double max_error(const Decomp& d, const Vec& actual) {
  return max_abs_diff(d.total(), actual);
}

// Holds the sampled traces for one SCD pass and hands out the values seen
// at a site across all draws.
class SiteSamples {
 public:
  SiteSamples(const ActivationSampleSet& set, std::size_t hidden)
      : set_(set), zero_(hidden) {}

  std::vector<Vec> gate_pre(std::size_t t, std::size_t k) const {
    return collect([&](const std::vector<TraceStep>& tr) { return tr[t].pre[k]; });
  }
  std::vector<Vec> gate_act(std::size_t t, std::size_t k) const {
    return collect([&](const std::vector<TraceStep>& tr) { return tr[t].act[k]; });
  }
  std::vector<Vec> cell(std::size_t t) const {
    return collect([&](const std::vector<TraceStep>& tr) { return tr[t].c; });
  }
  std::vector<Vec> prev_cell(std::size_t t) const {
    return collect([&](const std::vector<TraceStep>& tr) {
      return t == 0 ? zero_ : tr[t - 1].c;
    });
  }
  std::vector<Vec> tanh_cell(std::size_t t) const {
    return collect([&](const std::vector<TraceStep>& tr) { return tr[t].tanh_c; });
  }

 private:
  template <typename F>
  std::vector<Vec> collect(F&& get) const {
    std::vector<Vec> out;
    out.reserve(set_.size());
    for (std::size_t s = 0; s < set_.size(); ++s) out.push_back(get(set_.trace(s)));
    return out;
  }

  const ActivationSampleSet& set_;
  Vec zero_;
};

// Sampled operand values h_s become (beta, h_s - beta) pairs.
std::vector<SampledOperand> as_operands(const Vec& beta,
                                        const std::vector<Vec>& values) {
  std::vector<SampledOperand> out;
  out.reserve(values.size());
  for (const Vec& h : values) out.push_back(SampledOperand{beta, h - beta});
  return out;
}

class Engine {
 public:
  Engine(const LstmParams& params, DecompMethod method,
         const ActivationSampleSet* samples, const DecompOptions& options)
      : params_(params), method_(method), options_(options) {
    if (samples) {
      sites_.emplace(*samples, params.hidden_dim());
      weights_ = samples->weights();
    }
  }

  Decomp linear(const Decomp& input, std::size_t gate) const {
    const Mat& w = params_.gate_w[gate];
    const Vec& b = params_.gate_b[gate];
    switch (method_) {
      case DecompMethod::kCD:
        return cd_linear(input, w, b);
      case DecompMethod::kACD:
        return acd_linear(input, w, b, options_.acd_split);
      case DecompMethod::kSCD: {
        // SCD carries no separate bias term.
        Decomp d = cd_linear(input, w, b);
        d.gamma += d.zeta;
        d.zeta = Vec(d.size());
        return d;
      }
    }
    throw InvalidArgument("unknown decomposition method");
  }

  Decomp activation(const Decomp& d, ActivationKind kind,
                    const std::vector<Vec>* sampled_inputs) const {
    switch (method_) {
      case DecompMethod::kCD:
        return cd_activation(d, kind);
      case DecompMethod::kACD:
        return acd_activation(d, kind);
      case DecompMethod::kSCD:
        return scd_activation(d.beta, *sampled_inputs, kind, d.total(),
                              weights_);
    }
    throw InvalidArgument("unknown decomposition method");
  }

  Decomp product(const Decomp& a, const Decomp& b,
                 const std::vector<Vec>* sampled_a,
                 const std::vector<Vec>* sampled_b) const {
    if (method_ != DecompMethod::kSCD) return cd_multiply(a, b);
    const auto pa = as_operands(a.beta, *sampled_a);
    const auto pb = as_operands(b.beta, *sampled_b);
    return scd_multiply(pa, pb, a, b, weights_);
  }

  StepDecomp step(std::size_t t, TokenId token, bool in_phrase,
                  const Decomp& h_prev, const Decomp& c_prev) const {
    const std::size_t d_e = params_.embed_dim();
    const std::size_t d_h = params_.hidden_dim();
    Decomp input = Decomp::zeros(d_e + d_h);
    const auto emb = params_.embedding.row(token);
    Vec& target = in_phrase ? input.beta : input.gamma;
    std::copy(emb.begin(), emb.end(), target.begin());
    for (std::size_t j = 0; j < d_h; ++j) {
      input.beta[d_e + j] = h_prev.beta[j];
      input.gamma[d_e + j] = h_prev.gamma[j];
      input.zeta[d_e + j] = h_prev.zeta[j];
    }

    const bool scd = method_ == DecompMethod::kSCD;
    StepDecomp s;
    for (std::size_t k = 0; k < kNumGates; ++k) {
      s.pre[k] = linear(input, k);
      std::vector<Vec> sampled;
      if (scd) sampled = sites_->gate_pre(t, k);
      s.act[k] = activation(s.pre[k], kGateActivation[k], &sampled);
    }

    std::vector<Vec> sf, sc_prev, si, sg, so, sc, stanh;
    if (scd) {
      sf = sites_->gate_act(t, kGateForget);
      sc_prev = sites_->prev_cell(t);
      si = sites_->gate_act(t, kGateInput);
      sg = sites_->gate_act(t, kGateCell);
      so = sites_->gate_act(t, kGateOutput);
      sc = sites_->cell(t);
      stanh = sites_->tanh_cell(t);
    }
    s.c = product(s.act[kGateForget], c_prev, &sf, &sc_prev) +
          product(s.act[kGateInput], s.act[kGateCell], &si, &sg);
    s.tanh_c = activation(s.c, ActivationKind::kTanh, &sc);
    s.h = product(s.act[kGateOutput], s.tanh_c, &so, &stanh);
    return s;
  }

 private:
  const LstmParams& params_;
  DecompMethod method_;
  DecompOptions options_;
  std::optional<SiteSamples> sites_;
  std::span<const double> weights_;
};

}  // namespace

Vec Decomp::total() const { return (beta + gamma) + zeta; }

Decomp operator+(const Decomp& a, const Decomp& b) {
  check_same(a, b, "Decomp add");
  return Decomp{a.beta + b.beta, a.gamma + b.gamma, a.zeta + b.zeta};
}

Decomp cd_linear(const Vec& x, const Mat& w, const Vec& b, bool in_phrase) {
  if (w.rows() != b.size()) throw DimensionError("cd_linear: bias length");
  Vec wx = matvec(w, x);
  Vec zero(w.rows());
  if (in_phrase) return Decomp{std::move(wx), std::move(zero), b};
  return Decomp{std::move(zero), std::move(wx), b};
}

Decomp cd_linear(const Decomp& d, const Mat& w, const Vec& b) {
  check_decomp(d, "cd_linear");
  if (w.rows() != b.size()) throw DimensionError("cd_linear: bias length");
  return Decomp{matvec(w, d.beta), matvec(w, d.gamma), matvec(w, d.zeta) + b};
}

Decomp cd_multiply(const Decomp& a, const Decomp& b) {
  check_same(a, b, "cd_multiply");
  const std::size_t n = a.size();
  Decomp out = Decomp::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double full = ((a.beta[i] + a.gamma[i]) + a.zeta[i]) *
                        ((b.beta[i] + b.gamma[i]) + b.zeta[i]);
    out.beta[i] = a.beta[i] * b.beta[i] + a.beta[i] * b.zeta[i] +
                  a.zeta[i] * b.beta[i];
    out.zeta[i] = a.zeta[i] * b.zeta[i];
    out.gamma[i] = full - out.beta[i] - out.zeta[i];
  }
  return out;
}

Decomp cd_activation(const Decomp& d, ActivationKind kind) {
  check_decomp(d, "cd_activation");
  const std::size_t n = d.size();
  Decomp out = Decomp::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = d.beta[i];
    const double g = d.gamma[i];
    const double z = d.zeta[i];
    const double all = activate(kind, (b + g) + z);
    const double without_beta = activate(kind, g + z);
    const double beta_bias = activate(kind, b + z);
    const double bias = activate(kind, z);
    out.beta[i] = 0.5 * (all - without_beta) + 0.5 * (beta_bias - bias);
    out.zeta[i] = bias;
    out.gamma[i] = all - out.beta[i] - out.zeta[i];
  }
  return out;
}

Decomp acd_activation(const Decomp& d, ActivationKind kind) {
  check_decomp(d, "acd_activation");
  const std::size_t n = d.size();
  Decomp out = Decomp::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sb = activate(kind, d.beta[i]);
    out.beta[i] = sb;
    out.gamma[i] = activate(kind, d.beta[i] + d.gamma[i]) - sb;
  }
  return out;
}

Decomp acd_linear(const Decomp& d, const Mat& w, const Vec& b,
                  AcdBiasSplit split) {
  check_decomp(d, "acd_linear");
  if (w.rows() != b.size()) throw DimensionError("acd_linear: bias length");
  // zeta is empty under ACD; fold it into gamma if a caller passed one.
  const Vec wb = matvec(w, d.beta);
  const Vec wg = matvec(w, d.gamma + d.zeta);
  const std::size_t n = w.rows();
  Decomp out = Decomp::zeros(n);

  double whole_share = 0.5;
  if (split == AcdBiasSplit::kWholeVector) {
    double nb = 0.0;
    double ng = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nb += std::abs(wb[i]);
      ng += std::abs(wg[i]);
    }
    if (nb + ng > 0.0) whole_share = nb / (nb + ng);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double share = whole_share;
    if (split == AcdBiasSplit::kPerDimension) {
      const double mb = std::abs(wb[i]);
      const double mg = std::abs(wg[i]);
      share = (mb + mg > 0.0) ? mb / (mb + mg) : 0.5;
    }
    out.beta[i] = wb[i] + share * b[i];
    out.gamma[i] = (wg[i] + b[i]) - share * b[i];
  }
  return out;
}

Decomp scd_activation(const Vec& beta, std::span<const Vec> samples,
                      ActivationKind kind, const Vec& h_actual,
                      std::span<const double> weights) {
  if (samples.empty()) throw InvalidArgument("scd_activation: empty sample set");
  check_weights(weights, samples.size(), "scd_activation");
  const std::size_t n = beta.size();
  if (h_actual.size() != n) throw DimensionError("scd_activation: h_actual length");
  Decomp out = Decomp::zeros(n);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Vec& h = samples[s];
    if (h.size() != n) throw DimensionError("scd_activation: sample length");
    const double w = weights.empty() ? 1.0 : weights[s];
    for (std::size_t i = 0; i < n; ++i) {
      out.beta[i] += w * (activate(kind, h[i]) - activate(kind, h[i] - beta[i]));
    }
  }
  const double norm = weight_norm(weights, samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    out.beta[i] /= norm;
    out.gamma[i] = activate(kind, h_actual[i]) - out.beta[i];
  }
  return out;
}

Decomp scd_multiply(std::span<const SampledOperand> a,
                    std::span<const SampledOperand> b, const Decomp& actual_a,
                    const Decomp& actual_b, std::span<const double> weights) {
  if (a.size() != b.size()) {
    throw InvalidArgument("scd_multiply: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + " samples");
  }
  if (a.empty()) throw InvalidArgument("scd_multiply: empty sample set");
  check_weights(weights, a.size(), "scd_multiply");
  check_same(actual_a, actual_b, "scd_multiply");
  const std::size_t n = actual_a.size();
  Decomp out = Decomp::zeros(n);
  for (std::size_t s = 0; s < a.size(); ++s) {
    const SampledOperand& x = a[s];
    const SampledOperand& y = b[s];
    if (x.beta.size() != n || x.gamma.size() != n || y.beta.size() != n ||
        y.gamma.size() != n) {
      throw DimensionError("scd_multiply: sample length");
    }
    const double w = weights.empty() ? 1.0 : weights[s];
    for (std::size_t i = 0; i < n; ++i) {
      out.beta[i] += w * ((x.beta[i] + x.gamma[i]) * (y.beta[i] + y.gamma[i]) -
                          x.gamma[i] * y.gamma[i]);
    }
  }
  const double norm = weight_norm(weights, a.size());
  const Vec ta = actual_a.total();
  const Vec tb = actual_b.total();
  for (std::size_t i = 0; i < n; ++i) {
    out.beta[i] /= norm;
    out.gamma[i] = ta[i] * tb[i] - out.beta[i];
  }
  return out;
}

std::string_view method_name(DecompMethod method) {
  switch (method) {
    case DecompMethod::kCD:
      return "cd";
    case DecompMethod::kACD:
      return "acd";
    case DecompMethod::kSCD:
      return "scd";
  }
  return "unknown";
}

ActivationSampleSet::ActivationSampleSet(std::vector<std::vector<TraceStep>> traces,
                                         std::vector<double> weights)
    : traces_(std::move(traces)), weights_(std::move(weights)) {
  if (traces_.empty()) throw InvalidArgument("ActivationSampleSet: no traces");
  check_weights(weights_, traces_.size(), "ActivationSampleSet");
  for (const auto& t : traces_) {
    if (t.size() != traces_.front().size() || t.empty()) {
      throw InvalidArgument("ActivationSampleSet: traces differ in length");
    }
  }
}

ActivationSampleSet ActivationSampleSet::record(const LstmParams& params,
                                                std::span<const TokenSeq> sequences,
                                                std::vector<double> weights) {
  std::vector<std::vector<TraceStep>> traces;
  traces.reserve(sequences.size());
  for (const auto& seq : sequences) traces.push_back(run_lstm(params, seq.view()));
  return ActivationSampleSet(std::move(traces), std::move(weights));
}

DecompResult decompose(const LstmParams& params, const TokenSeq& seq, Span phrase,
                       DecompMethod method, const ActivationSampleSet* samples,
                       const DecompOptions& options) {
  check_span(phrase, seq.size());
  if (method == DecompMethod::kSCD && samples == nullptr) {
    throw InvalidArgument("SCD decomposition requires an activation sample set");
  }
  if (method != DecompMethod::kSCD && samples != nullptr) {
    throw InvalidArgument(std::string(method_name(method)) +
                          " decomposition does not take samples");
  }
  if (samples && samples->sequence_length() != seq.size()) {
    throw InvalidArgument("sample traces have length " +
                          std::to_string(samples->sequence_length()) +
                          ", sequence has " + std::to_string(seq.size()));
  }

  const ForwardResult reference = forward(params, seq);
  const Engine engine(params, method, samples, options);
  const std::size_t d_h = params.hidden_dim();
  Decomp h = Decomp::zeros(d_h);
  Decomp c = Decomp::zeros(d_h);

  DecompResult result;
  double err = 0.0;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    StepDecomp s = engine.step(t, seq[t], phrase.contains(t), h, c);
    const TraceStep& ref = reference.trace[t];
    for (std::size_t k = 0; k < kNumGates; ++k) {
      err = std::max(err, max_error(s.pre[k], ref.pre[k]));
      err = std::max(err, max_error(s.act[k], ref.act[k]));
    }
    err = std::max(err, max_error(s.c, ref.c));
    err = std::max(err, max_error(s.tanh_c, ref.tanh_c));
    err = std::max(err, max_error(s.h, ref.h));
    h = s.h;
    c = s.c;
    if (options.keep_steps) result.steps.push_back(std::move(s));
  }

  result.score = AttributionScore(matvec(params.head_w, h.beta),
                                  argmax(reference.scores));
  result.bias_contribution = matvec(params.head_w, h.zeta);
  result.max_reconstruction_error = err;
  return result;
}

}  // namespace hiexpl
