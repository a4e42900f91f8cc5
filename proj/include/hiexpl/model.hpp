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

// Single-layer LSTM stack: the sequence classifier s(x) = W_l h_T + b_l and
// the two-direction language model used to sample contexts.
//
// Gate layout: every gate k in {input, forget, output, cell} has its own
// weight matrix of shape d_h x (d_e + d_h) acting on the concatenation
// [x_t; h_{t-1}], plus a bias. The embedding row of PAD is pinned to zero so
// that padding contributes nothing at the input layer.

#ifndef HIEXPL_MODEL_HPP_
#define HIEXPL_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hiexpl/corpus.hpp"
#include "hiexpl/numerics.hpp"
#include "hiexpl/optim.hpp"

namespace hiexpl {

enum Gate : std::size_t { kGateInput = 0, kGateForget = 1, kGateOutput = 2, kGateCell = 3 };
inline constexpr std::size_t kNumGates = 4;
inline constexpr std::array<ActivationKind, kNumGates> kGateActivation = {
    ActivationKind::kSigmoid, ActivationKind::kSigmoid, ActivationKind::kSigmoid,
    ActivationKind::kTanh};

struct LstmParams {
  Mat embedding;                       // V x d_e
  std::array<Mat, kNumGates> gate_w;   // d_h x (d_e + d_h)
  std::array<Vec, kNumGates> gate_b;   // d_h
  Mat head_w;                          // d_out x d_h
  Vec head_b;                          // d_out

  static LstmParams zeros(std::size_t vocab_size, std::size_t embed_dim,
                          std::size_t hidden_dim, std::size_t num_outputs);

  std::size_t vocab_size() const { return embedding.rows(); }
  std::size_t embed_dim() const { return embedding.cols(); }
  std::size_t hidden_dim() const { return head_w.cols(); }
  std::size_t num_outputs() const { return head_w.rows(); }

  // Throws DimensionError if the shapes are not mutually consistent.
  void validate() const;

  // All tensors in a fixed order: embedding, gate weights, gate biases,
  // head weight, head bias.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

// Everything computed at one timestep. `pre` holds the gate inputs before
// their activation, `act` the gate outputs.
struct TraceStep {
  std::array<Vec, kNumGates> pre;
  std::array<Vec, kNumGates> act;
  Vec c;
  Vec tanh_c;
  Vec h;
};

struct LstmState {
  Vec h;
  Vec c;
};

LstmState initial_state(const LstmParams& params);

// One recurrence step. When `record` is non-null it receives the full trace.
LstmState lstm_step(const LstmParams& params, const LstmState& state,
                    TokenId token, TraceStep* record = nullptr);

// Runs the recurrence over `ids` from the zero state.
std::vector<TraceStep> run_lstm(const LstmParams& params,
                                std::span<const TokenId> ids);

struct ForwardResult {
  Vec scores;
  std::vector<TraceStep> trace;
};

// Classifier forward pass: scores = W_l h_T + b_l with a trace per step.
ForwardResult forward(const LstmParams& params, const TokenSeq& seq);
// Same scores without keeping the trace.
Vec classify(const LstmParams& params, const TokenSeq& seq);

// Backpropagation through time. `dh[t]` is the loss gradient flowing into
// h_t from outside the recurrence (the heads). Gate and embedding gradients
// are accumulated into `grads`; head gradients are left to the caller.
void backprop_lstm(const LstmParams& params, std::span<const TokenId> ids,
                   const std::vector<TraceStep>& trace, std::span<const Vec> dh,
                   LstmParams& grads);

// Softmax cross-entropy of the classifier on one example. When `grads` is
// non-null (and shaped like params) the gradient is accumulated into it.
double classifier_loss(const LstmParams& params, const LabeledExample& example,
                       LstmParams* grads = nullptr);

struct TrainConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  AdamConfig adam;
  // Global gradient-norm clip per batch; 0 disables.
  double clip_norm = 5.0;
  // Weights and embeddings start uniform in (-init_scale, init_scale).
  double init_scale = 0.1;
  double forget_bias = 1.0;
  // Language models only: probability of replacing an input token with MASK
  // during training, so the model learns to condition on masked positions.
  double mask_prob = 0.15;
  std::uint64_t seed = 1;
};

struct TrainStats {
  double final_loss = 0.0;
  double accuracy = 0.0;
  std::size_t steps = 0;
};

LstmParams init_classifier(std::size_t vocab_size, std::size_t num_classes,
                           const TrainConfig& config);

// Minimizes mean cross-entropy with Adam over shuffled mini-batches for a
// fixed number of epochs. Throws InvalidArgument on empty data, fewer than two
// classes, or a label outside [0, num_classes); TrainingError on divergence.
LstmParams train_classifier(std::span<const LabeledExample> data,
                            std::size_t vocab_size, std::size_t num_classes,
                            const TrainConfig& config,
                            TrainStats* stats = nullptr);

double accuracy(const LstmParams& params, std::span<const LabeledExample> data);

// ---------------------------------------------------------------------------
// Language model

enum class Direction { kForward, kBackward };

// Two LSTM language models sharing a vocabulary. The forward model reads
// [BOS, x_0, ..., x_{T-1}] and predicts [x_0, ..., x_{T-1}, EOS]; the
// backward model reads [EOS, x_{T-1}, ..., x_0] and predicts
// [x_{T-1}, ..., x_0, BOS].
struct LmParams {
  LstmParams forward;
  LstmParams backward;

  std::size_t vocab_size() const { return forward.vocab_size(); }
  const LstmParams& direction(Direction d) const {
    return d == Direction::kForward ? forward : backward;
  }
  void validate() const;

  friend bool operator==(const LmParams&, const LmParams&) = default;
};

LmParams init_lm(std::size_t vocab_size, const TrainConfig& config);

struct LmStats {
  double final_loss = 0.0;
  // exp(mean per-token cross-entropy) over the training corpus, both
  // directions averaged, evaluated without masking.
  double perplexity = 0.0;
};

LmParams train_lm(std::span<const TokenSeq> data, std::size_t vocab_size,
                  const TrainConfig& config, LmStats* stats = nullptr);

// Summed next-token cross-entropy over one sequence in one direction, with
// optional gradient accumulation into `grads`.
double lm_sequence_loss(const LstmParams& params, std::span<const TokenId> inputs,
                        std::span<const TokenId> targets,
                        LstmParams* grads = nullptr);

// Input/target id lists for one direction of LM training.
void lm_io(const TokenSeq& seq, Direction direction, std::vector<TokenId>& inputs,
           std::vector<TokenId>& targets);

double lm_perplexity(const LmParams& lm, std::span<const TokenSeq> data);

// Softmax head output with reserved ids zeroed and the rest renormalized.
Vec lm_distribution(const LstmParams& direction_params, const Vec& hidden);

// Incremental reader for one LM direction. Starts after consuming the
// direction's boundary token (BOS forward, EOS backward); each feed() adds
// the next token in reading order.
class LmCursor {
 public:
  LmCursor(const LmParams& lm, Direction direction);

  void feed(TokenId token);
  Vec next_dist() const;

 private:
  const LstmParams* params_;
  LstmState state_;
};

// Next-token distribution at one position. For kForward, `context` holds the
// tokens left of the position in sentence order; for kBackward, the tokens
// right of it, also in sentence order. MASK ids are embedded like any other
// token.
Vec lm_next_dist(const LmParams& lm, std::span<const TokenId> context,
                 Direction direction);

}  // namespace hiexpl

#endif  // HIEXPL_MODEL_HPP_
