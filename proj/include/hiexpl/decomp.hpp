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

// Layer-wise decomposition of LSTM hidden states into a phrase part (beta),
// a context part (gamma) and a bias part (zeta).
//
// Three rule sets are provided:
//
//   CD   Linear layers route the input into beta or gamma depending on
//        whether the timestep is inside the phrase; the bias goes to zeta.
//        Activations use the averaged on/off difference for beta and
//        sigma(zeta) for zeta. Products keep the beta*beta, beta*zeta and
//        zeta*beta cross terms in beta and zeta*zeta in zeta.
//   ACD  No zeta: biases are split between beta and gamma in proportion to
//        |W beta| and |W gamma|; activations use beta' = sigma(beta).
//   SCD  Activations and products take beta' as an expectation over
//        activation inputs recorded from forward passes of sampled contexts.
//
// In every rule gamma' is the exact remainder, so beta + gamma + zeta
// reconstructs the undecomposed value at every layer up to rounding.

#ifndef HIEXPL_DECOMP_HPP_
#define HIEXPL_DECOMP_HPP_

#include <array>
#include <span>
#include <vector>

#include "hiexpl/corpus.hpp"
#include "hiexpl/model.hpp"
#include "hiexpl/numerics.hpp"
#include "hiexpl/score.hpp"

namespace hiexpl {

struct Decomp {
  Vec beta;
  Vec gamma;
  Vec zeta;

  static Decomp zeros(std::size_t n) { return Decomp{Vec(n), Vec(n), Vec(n)}; }
  std::size_t size() const { return beta.size(); }
  // beta + gamma + zeta.
  Vec total() const;

  friend bool operator==(const Decomp&, const Decomp&) = default;
};

Decomp operator+(const Decomp& a, const Decomp& b);

// Linear layer W x + b on a raw input. In-phrase input goes to beta,
// out-of-phrase input to gamma; zeta = b.
Decomp cd_linear(const Vec& x, const Mat& w, const Vec& b, bool in_phrase);

// W applied to an already-decomposed input; b joins zeta.
Decomp cd_linear(const Decomp& d, const Mat& w, const Vec& b);

// Elementwise product a * b under the CD rule.
Decomp cd_multiply(const Decomp& a, const Decomp& b);

// sigma(beta + gamma + zeta) under the CD rule:
//   beta'  = 1/2 [s(b+g+z) - s(g+z)] + 1/2 [s(b+z) - s(z)]
//   zeta'  = s(z)
//   gamma' = s(b+g+z) - beta' - zeta'
Decomp cd_activation(const Decomp& d, ActivationKind kind);

// ACD activation: beta' = s(beta), gamma' = s(beta + gamma) - s(beta).
// zeta must already be folded into beta/gamma; it is ignored.
Decomp acd_activation(const Decomp& d, ActivationKind kind);

enum class AcdBiasSplit {
  // Share computed independently for every output dimension.
  kPerDimension,
  // One share for the whole vector from the L1 norms of W beta and W gamma.
  kWholeVector,
};

// ACD linear layer: beta' = W beta + |W beta| / (|W beta| + |W gamma|) * b
// and gamma' gets the complementary share of b. Where both magnitudes are
// zero the bias is split evenly.
Decomp acd_linear(const Decomp& d, const Mat& w, const Vec& b,
                  AcdBiasSplit split = AcdBiasSplit::kPerDimension);

// SCD activation at one site:
//   beta'  = mean over samples h of [s(h) - s(h - beta)]
//   gamma' = s(h_actual) - beta'
// `weights`, when non-empty, gives one probability per sample (exhaustive
// context enumeration); otherwise samples are averaged uniformly. Throws
// InvalidArgument on an empty sample list or a weight count mismatch.
Decomp scd_activation(const Vec& beta, std::span<const Vec> samples,
                      ActivationKind kind, const Vec& h_actual,
                      std::span<const double> weights = {});

// One operand of a sampled product: the fixed phrase part and the context
// part observed in one sampled forward pass.
struct SampledOperand {
  Vec beta;
  Vec gamma;
};

// SCD product at one site:
//   beta'  = mean over aligned samples of (b1+g1)*(b2+g2) - g1*g2
//   gamma' = (actual_a total) * (actual_b total) - beta'
// Weights as in scd_activation. Throws InvalidArgument when the sample lists
// differ in length or are empty.
Decomp scd_multiply(std::span<const SampledOperand> a,
                    std::span<const SampledOperand> b, const Decomp& actual_a,
                    const Decomp& actual_b, std::span<const double> weights = {});

enum class DecompMethod { kCD, kACD, kSCD };

std::string_view method_name(DecompMethod method);

// Forward traces of sampled context sequences. Every activation site
// (timestep, gate) and every product operand is read from the same trace for
// a given draw, so sites are never mixed across draws.
class ActivationSampleSet {
 public:
  // Empty `weights` means every trace counts equally.
  explicit ActivationSampleSet(std::vector<std::vector<TraceStep>> traces,
                               std::vector<double> weights = {});

  // Runs the recurrence over each sequence and keeps the traces.
  static ActivationSampleSet record(const LstmParams& params,
                                    std::span<const TokenSeq> sequences,
                                    std::vector<double> weights = {});

  std::size_t size() const { return traces_.size(); }
  std::size_t sequence_length() const { return traces_.front().size(); }
  const std::vector<TraceStep>& trace(std::size_t k) const { return traces_[k]; }
  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<std::vector<TraceStep>> traces_;
  std::vector<double> weights_;
};

struct DecompOptions {
  AcdBiasSplit acd_split = AcdBiasSplit::kPerDimension;
  // Keep every intermediate decomposition in DecompResult::steps.
  bool keep_steps = false;
};

// Decompositions of every intermediate value at one timestep.
struct StepDecomp {
  std::array<Decomp, kNumGates> pre;
  std::array<Decomp, kNumGates> act;
  Decomp c;
  Decomp tanh_c;
  Decomp h;
};

struct DecompResult {
  // W_l beta_T per class; the target is the model's predicted class.
  AttributionScore score;
  // W_l zeta_T, reported separately and never folded into the score.
  Vec bias_contribution;
  // Largest |beta + gamma + zeta - value| over every intermediate value,
  // measured against an ordinary forward pass.
  double max_reconstruction_error = 0.0;
  std::vector<StepDecomp> steps;
};

// Runs the recurrence applying `method`'s rules at every gate, product and
// activation. SCD requires `samples` (traces of the same length as `seq`);
// CD and ACD require it to be null. Throws InvalidArgument otherwise.
DecompResult decompose(const LstmParams& params, const TokenSeq& seq, Span phrase,
                       DecompMethod method,
                       const ActivationSampleSet* samples = nullptr,
                       const DecompOptions& options = {});

}  // namespace hiexpl

#endif  // HIEXPL_DECOMP_HPP_
