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

#include "hiexpl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hiexpl/error.hpp"
#include "hiexpl/rng.hpp"

namespace hiexpl {
namespace {

void fill_uniform(std::span<double> values, Rng& rng, double scale) {
  for (double& v : values) v = rng.uniform(-scale, scale);
}

LstmParams random_lstm(std::size_t vocab_size, std::size_t embed_dim,
                       std::size_t hidden_dim, std::size_t num_outputs,
                       const TrainConfig& config, Rng& rng,
                       bool zero_head) {
  LstmParams p =
      LstmParams::zeros(vocab_size, embed_dim, hidden_dim, num_outputs);
  fill_uniform(p.embedding.span(), rng, config.init_scale);
  std::fill(p.embedding.row(kPad).begin(), p.embedding.row(kPad).end(), 0.0);
  for (auto& w : p.gate_w) fill_uniform(w.span(), rng, config.init_scale);
  for (double& b : p.gate_b[kGateForget]) b = config.forget_bias;
  if (!zero_head) fill_uniform(p.head_w.span(), rng, config.init_scale);
  return p;
}

void scale_tensors(LstmParams& p, double s) {
  for (auto t : p.tensors()) {
    for (double& x : t) x *= s;
  }
}

double squared_norm(const LstmParams& p) {
  double acc = 0.0;
  for (auto t : p.tensors()) {
    for (double x : t) acc += x * x;
  }
  return acc;
}

void clip_gradient(LstmParams& grads, double clip_norm) {
  if (clip_norm <= 0.0) return;
  const double norm = std::sqrt(squared_norm(grads));
  if (!std::isfinite(norm)) throw TrainingError("non-finite gradient");
  if (norm > clip_norm) scale_tensors(grads, clip_norm / norm);
}

void apply_update(LstmParams& params, LstmParams& grads, AdamState& state,
                  const AdamConfig& adam) {
  // PAD stays a zero vector.
  std::fill(grads.embedding.row(kPad).begin(), grads.embedding.row(kPad).end(),
            0.0);
  const auto p = params.tensors();
  const auto g_mut = grads.tensors();
  std::vector<std::span<const double>> g(g_mut.begin(), g_mut.end());
  adam_step(p, g, state, adam);
}

LstmParams zeros_like(const LstmParams& p) {
  return LstmParams::zeros(p.vocab_size(), p.embed_dim(), p.hidden_dim(),
                           p.num_outputs());
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t vocab_size, std::size_t embed_dim,
                             std::size_t hidden_dim, std::size_t num_outputs) {
  LstmParams p;
  p.embedding = Mat(vocab_size, embed_dim);
  for (std::size_t k = 0; k < kNumGates; ++k) {
    p.gate_w[k] = Mat(hidden_dim, embed_dim + hidden_dim);
    p.gate_b[k] = Vec(hidden_dim);
  }
  p.head_w = Mat(num_outputs, hidden_dim);
  p.head_b = Vec(num_outputs);
  return p;
}

void LstmParams::validate() const {
  const std::size_t d_e = embed_dim();
  const std::size_t d_h = hidden_dim();
  if (vocab_size() <= kPad || d_e == 0 || d_h == 0) {
    throw DimensionError("LstmParams: empty embedding or hidden size");
  }
  for (std::size_t k = 0; k < kNumGates; ++k) {
    if (gate_w[k].rows() != d_h || gate_w[k].cols() != d_e + d_h ||
        gate_b[k].size() != d_h) {
      throw DimensionError("LstmParams: gate " + std::to_string(k) +
                           " shape inconsistent with d_e=" +
                           std::to_string(d_e) + ", d_h=" + std::to_string(d_h));
    }
  }
  if (head_b.size() != head_w.rows() || head_w.rows() < 2) {
    throw DimensionError("LstmParams: head needs at least two outputs");
  }
}

std::vector<std::span<double>> LstmParams::tensors() {
  std::vector<std::span<double>> out{embedding.span()};
  for (auto& w : gate_w) out.push_back(w.span());
  for (auto& b : gate_b) out.push_back(b.span());
  out.push_back(head_w.span());
  out.push_back(head_b.span());
  return out;
}

std::vector<std::span<const double>> LstmParams::tensors() const {
  std::vector<std::span<const double>> out{embedding.span()};
  for (const auto& w : gate_w) out.push_back(w.span());
  for (const auto& b : gate_b) out.push_back(b.span());
  out.push_back(head_w.span());
  out.push_back(head_b.span());
  return out;
}

LstmState initial_state(const LstmParams& params) {
  return LstmState{Vec(params.hidden_dim()), Vec(params.hidden_dim())};
}

LstmState lstm_step(const LstmParams& params, const LstmState& state,
                    TokenId token, TraceStep* record) {
  if (token >= params.vocab_size()) {
    throw InvalidArgument("token id " + std::to_string(token) +
                          " outside model vocabulary");
  }
  const std::size_t d_e = params.embed_dim();
  const std::size_t d_h = params.hidden_dim();
  Vec z(d_e + d_h);
  const auto emb = params.embedding.row(token);
  std::copy(emb.begin(), emb.end(), z.begin());
  std::copy(state.h.begin(), state.h.end(), z.begin() + static_cast<long>(d_e));

  TraceStep local;
  TraceStep& t = record ? *record : local;
  for (std::size_t k = 0; k < kNumGates; ++k) {
    t.pre[k] = matvec(params.gate_w[k], z) + params.gate_b[k];
    t.act[k] = apply_activation(kGateActivation[k], t.pre[k]);
  }
  t.c = hadamard(t.act[kGateForget], state.c) +
        hadamard(t.act[kGateInput], t.act[kGateCell]);
  t.tanh_c = apply_activation(ActivationKind::kTanh, t.c);
  t.h = hadamard(t.act[kGateOutput], t.tanh_c);
  return LstmState{t.h, t.c};
}

std::vector<TraceStep> run_lstm(const LstmParams& params,
                                std::span<const TokenId> ids) {
  std::vector<TraceStep> trace(ids.size());
  LstmState state = initial_state(params);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    state = lstm_step(params, state, ids[t], &trace[t]);
  }
  return trace;
}

ForwardResult forward(const LstmParams& params, const TokenSeq& seq) {
  ForwardResult r;
  r.trace = run_lstm(params, seq.view());
  r.scores = matvec(params.head_w, r.trace.back().h) + params.head_b;
  return r;
}

Vec classify(const LstmParams& params, const TokenSeq& seq) {
  LstmState state = initial_state(params);
  for (TokenId id : seq) state = lstm_step(params, state, id);
  return matvec(params.head_w, state.h) + params.head_b;
}

void backprop_lstm(const LstmParams& params, std::span<const TokenId> ids,
                   const std::vector<TraceStep>& trace, std::span<const Vec> dh,
                   LstmParams& grads) {
  const std::size_t d_e = params.embed_dim();
  const std::size_t d_h = params.hidden_dim();
  if (trace.size() != ids.size() || dh.size() != ids.size()) {
    throw DimensionError("backprop_lstm: trace/gradient length mismatch");
  }
  Vec dh_next(d_h);
  Vec dc_next(d_h);
  const Vec zero(d_h);
  for (std::size_t step = ids.size(); step-- > 0;) {
    const TraceStep& s = trace[step];
    const Vec& c_prev = step > 0 ? trace[step - 1].c : zero;
    const Vec& h_prev = step > 0 ? trace[step - 1].h : zero;

    Vec dh_total = dh[step] + dh_next;
    std::array<Vec, kNumGates> dpre;
    Vec dc(d_h);
    Vec d_act_o(d_h);
    for (std::size_t j = 0; j < d_h; ++j) {
      d_act_o[j] = dh_total[j] * s.tanh_c[j];
      dc[j] = dc_next[j] + dh_total[j] * s.act[kGateOutput][j] *
                               (1.0 - s.tanh_c[j] * s.tanh_c[j]);
    }
    Vec d_act_f = hadamard(dc, c_prev);
    Vec d_act_i = hadamard(dc, s.act[kGateCell]);
    Vec d_act_g = hadamard(dc, s.act[kGateInput]);
    dc_next = hadamard(dc, s.act[kGateForget]);

    const std::array<const Vec*, kNumGates> d_act = {&d_act_i, &d_act_f,
                                                     &d_act_o, &d_act_g};
    Vec z(d_e + d_h);
    const auto emb = params.embedding.row(ids[step]);
    std::copy(emb.begin(), emb.end(), z.begin());
    std::copy(h_prev.begin(), h_prev.end(), z.begin() + static_cast<long>(d_e));

    Vec dz(d_e + d_h);
    for (std::size_t k = 0; k < kNumGates; ++k) {
      dpre[k] = Vec(d_h);
      for (std::size_t j = 0; j < d_h; ++j) {
        dpre[k][j] = (*d_act[k])[j] *
                     activation_grad_from_output(kGateActivation[k], s.act[k][j]);
      }
      add_outer(grads.gate_w[k], dpre[k], z);
      grads.gate_b[k] += dpre[k];
      dz += matvec_transposed(params.gate_w[k], dpre[k]);
    }
    auto demb = grads.embedding.row(ids[step]);
    for (std::size_t j = 0; j < d_e; ++j) demb[j] += dz[j];
    for (std::size_t j = 0; j < d_h; ++j) dh_next[j] = dz[d_e + j];
  }
}

double classifier_loss(const LstmParams& params, const LabeledExample& example,
                       LstmParams* grads) {
  const ForwardResult fr = forward(params, example.seq);
  if (example.label >= fr.scores.size()) {
    throw InvalidArgument("label " + std::to_string(example.label) +
                          " outside class range");
  }
  const Vec probs = softmax(fr.scores);
  const double loss = -std::log(std::max(probs[example.label], 1e-300));
  if (grads) {
    Vec dlogits = probs;
    dlogits[example.label] -= 1.0;
    add_outer(grads->head_w, dlogits, fr.trace.back().h);
    grads->head_b += dlogits;
    std::vector<Vec> dh(example.seq.size(), Vec(params.hidden_dim()));
    dh.back() = matvec_transposed(params.head_w, dlogits);
    backprop_lstm(params, example.seq.view(), fr.trace, dh, *grads);
  }
  return loss;
}

LstmParams init_classifier(std::size_t vocab_size, std::size_t num_classes,
                           const TrainConfig& config) {
  if (num_classes < 2) throw InvalidArgument("classifier needs >= 2 classes");
  Rng rng(Rng::derive(config.seed, 0));
  return random_lstm(vocab_size, config.embed_dim, config.hidden_dim,
                     num_classes, config, rng, /*zero_head=*/false);
}

LstmParams train_classifier(std::span<const LabeledExample> data,
                            std::size_t vocab_size, std::size_t num_classes,
                            const TrainConfig& config, TrainStats* stats) {
  if (data.empty()) throw InvalidArgument("train_classifier: empty dataset");
  if (num_classes < 2) throw InvalidArgument("classifier needs >= 2 classes");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].label >= num_classes) {
      throw InvalidArgument("example " + std::to_string(i) + " has label " +
                            std::to_string(data[i].label) + " but only " +
                            std::to_string(num_classes) + " classes");
    }
    data[i].seq.check_ids(vocab_size);
  }
  LstmParams params = init_classifier(vocab_size, num_classes, config);
  Rng order_rng(Rng::derive(config.seed, 1));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  double epoch_loss = 0.0;
  std::size_t steps = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      LstmParams grads = zeros_like(params);
      for (std::size_t i = begin; i < end; ++i) {
        epoch_loss += classifier_loss(params, data[order[i]], &grads);
      }
      scale_tensors(grads, 1.0 / static_cast<double>(end - begin));
      clip_gradient(grads, config.clip_norm);
      apply_update(params, grads, adam, config.adam);
      ++steps;
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("classifier loss diverged at epoch " +
                          std::to_string(epoch));
    }
  }
  if (stats) {
    stats->final_loss = epoch_loss;
    stats->accuracy = accuracy(params, data);
    stats->steps = steps;
  }
  return params;
}

double accuracy(const LstmParams& params, std::span<const LabeledExample> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    if (argmax(classify(params, ex.seq)) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------

void LmParams::validate() const {
  forward.validate();
  backward.validate();
  if (forward.vocab_size() != backward.vocab_size() ||
      forward.num_outputs() != forward.vocab_size() ||
      backward.num_outputs() != backward.vocab_size()) {
    throw DimensionError("LmParams: directions must share the vocabulary");
  }
}

LmParams init_lm(std::size_t vocab_size, const TrainConfig& config) {
  Rng fwd_rng(Rng::derive(config.seed, 0));
  Rng bwd_rng(Rng::derive(config.seed, 1));
  LmParams lm;
  // Zero heads: an untrained LM predicts the uniform distribution.
  lm.forward = random_lstm(vocab_size, config.embed_dim, config.hidden_dim,
                           vocab_size, config, fwd_rng, /*zero_head=*/true);
  lm.backward = random_lstm(vocab_size, config.embed_dim, config.hidden_dim,
                            vocab_size, config, bwd_rng, /*zero_head=*/true);
  return lm;
}

void lm_io(const TokenSeq& seq, Direction direction, std::vector<TokenId>& inputs,
           std::vector<TokenId>& targets) {
  inputs.clear();
  targets.clear();
  if (direction == Direction::kForward) {
    inputs.push_back(kBos);
    inputs.insert(inputs.end(), seq.begin(), seq.end());
    targets.insert(targets.end(), seq.begin(), seq.end());
    targets.push_back(kEos);
  } else {
    inputs.push_back(kEos);
    inputs.insert(inputs.end(), seq.ids().rbegin(), seq.ids().rend());
    targets.insert(targets.end(), seq.ids().rbegin(), seq.ids().rend());
    targets.push_back(kBos);
  }
}

double lm_sequence_loss(const LstmParams& params, std::span<const TokenId> inputs,
                        std::span<const TokenId> targets, LstmParams* grads) {
  if (inputs.size() != targets.size() || inputs.empty()) {
    throw DimensionError("lm_sequence_loss: input/target length mismatch");
  }
  const auto trace = run_lstm(params, inputs);
  double loss = 0.0;
  std::vector<Vec> dh;
  if (grads) dh.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Vec probs =
        softmax(matvec(params.head_w, trace[t].h) + params.head_b);
    loss -= std::log(std::max(probs[targets[t]], 1e-300));
    if (grads) {
      Vec dlogits = probs;
      dlogits[targets[t]] -= 1.0;
      add_outer(grads->head_w, dlogits, trace[t].h);
      grads->head_b += dlogits;
      dh.push_back(matvec_transposed(params.head_w, dlogits));
    }
  }
  if (grads) backprop_lstm(params, inputs, trace, dh, *grads);
  return loss;
}

LmParams train_lm(std::span<const TokenSeq> data, std::size_t vocab_size,
                  const TrainConfig& config, LmStats* stats) {
  if (data.empty()) throw InvalidArgument("train_lm: empty corpus");
  for (const auto& s : data) s.check_ids(vocab_size);
  LmParams lm = init_lm(vocab_size, config);
  Rng order_rng(Rng::derive(config.seed, 2));
  Rng mask_rng(Rng::derive(config.seed, 3));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam_fwd;
  AdamState adam_bwd;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  double epoch_loss = 0.0;
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    epoch_loss = 0.0;
    std::size_t tokens = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      LstmParams g_fwd = zeros_like(lm.forward);
      LstmParams g_bwd = zeros_like(lm.backward);
      std::size_t batch_tokens = 0;
      for (std::size_t i = begin; i < end; ++i) {
        for (Direction d : {Direction::kForward, Direction::kBackward}) {
          lm_io(data[order[i]], d, inputs, targets);
          // Boundary token at position 0 is never masked.
          for (std::size_t t = 1; t < inputs.size(); ++t) {
            if (config.mask_prob > 0.0 && mask_rng.uniform() < config.mask_prob) {
              inputs[t] = kMask;
            }
          }
          const bool fwd = d == Direction::kForward;
          epoch_loss += lm_sequence_loss(fwd ? lm.forward : lm.backward, inputs,
                                         targets, fwd ? &g_fwd : &g_bwd);
          batch_tokens += inputs.size();
        }
      }
      tokens += batch_tokens;
      const double scale = 2.0 / static_cast<double>(batch_tokens);
      scale_tensors(g_fwd, scale);
      scale_tensors(g_bwd, scale);
      clip_gradient(g_fwd, config.clip_norm);
      clip_gradient(g_bwd, config.clip_norm);
      apply_update(lm.forward, g_fwd, adam_fwd, config.adam);
      apply_update(lm.backward, g_bwd, adam_bwd, config.adam);
    }
    epoch_loss /= static_cast<double>(tokens);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("language model loss diverged at epoch " +
                          std::to_string(epoch));
    }
  }
  if (stats) {
    stats->final_loss = epoch_loss;
    stats->perplexity = lm_perplexity(lm, data);
  }
  return lm;
}

double lm_perplexity(const LmParams& lm, std::span<const TokenSeq> data) {
  double loss = 0.0;
  std::size_t tokens = 0;
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  for (const auto& seq : data) {
    for (Direction d : {Direction::kForward, Direction::kBackward}) {
      lm_io(seq, d, inputs, targets);
      loss += lm_sequence_loss(lm.direction(d), inputs, targets);
      tokens += inputs.size();
    }
  }
  return std::exp(loss / static_cast<double>(tokens));
}

Vec lm_distribution(const LstmParams& direction_params, const Vec& hidden) {
  Vec probs =
      softmax(matvec(direction_params.head_w, hidden) + direction_params.head_b);
  for (TokenId r = 0; r < kNumReserved && r < probs.size(); ++r) probs[r] = 0.0;
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) {
    throw NumericError("language model assigns no mass to ordinary words");
  }
  for (double& p : probs) p /= total;
  return probs;
}

LmCursor::LmCursor(const LmParams& lm, Direction direction)
    : params_(&lm.direction(direction)), state_(initial_state(*params_)) {
  feed(direction == Direction::kForward ? kBos : kEos);
}

void LmCursor::feed(TokenId token) { state_ = lstm_step(*params_, state_, token); }

Vec LmCursor::next_dist() const { return lm_distribution(*params_, state_.h); }

Vec lm_next_dist(const LmParams& lm, std::span<const TokenId> context,
                 Direction direction) {
  LmCursor cursor(lm, direction);
  if (direction == Direction::kForward) {
    for (TokenId id : context) cursor.feed(id);
  } else {
    for (auto it = context.rbegin(); it != context.rend(); ++it) cursor.feed(*it);
  }
  return cursor.next_dist();
}

}  // namespace hiexpl
