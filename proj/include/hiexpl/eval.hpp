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

// Quantitative evaluation: Pearson correlation against a linear bag-of-words
// reference model (word rho) and against annotated phrase polarities
// (phrase rho), parameter sweeps, and the adversarial-model experiment.

#ifndef HIEXPL_EVAL_HPP_
#define HIEXPL_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hiexpl/attribution.hpp"
#include "hiexpl/corpus.hpp"
#include "hiexpl/hierarchy.hpp"
#include "hiexpl/model.hpp"
#include "hiexpl/numerics.hpp"
#include "json.hpp"

namespace hiexpl {

// Sample Pearson r, clamped to [-1, 1]. Throws InvalidArgument on unequal
// lengths or fewer than two points, DegenerateError when either series is
// constant.
double pearson(std::span<const double> a, std::span<const double> b);

// Bag-of-words model: scores(x) = bias + sum over tokens of coef[:, token].
// PAD's column is always zero.
class LinearSurrogate final : public SequenceClassifier {
 public:
  LinearSurrogate(Mat coefficients, Vec bias);

  Vec scores(const TokenSeq& seq) const override;
  std::size_t num_classes() const override { return coef_.rows(); }
  std::size_t vocab_size() const { return coef_.cols(); }

  const Mat& coefficients() const { return coef_; }
  const Vec& bias() const { return bias_; }
  // Column of per-class coefficients for one token.
  Vec column(TokenId token) const;

 private:
  Mat coef_;
  Vec bias_;
};

struct SurrogateConfig {
  double l2 = 1e-4;
  double tolerance = 1e-6;
  std::size_t max_iterations = 20000;
};

struct SurrogateStats {
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double loss = 0.0;
  bool converged = false;
};

// Multinomial logistic regression on token counts: mean cross-entropy plus
// l2/2 times the squared coefficients (bias unpenalized), minimized by
// gradient descent with backtracking line search until the gradient norm
// drops below the tolerance or the iteration cap is reached.
LinearSurrogate train_surrogate(std::span<const LabeledExample> data,
                                std::size_t vocab_size, std::size_t num_classes,
                                const SurrogateConfig& config = {},
                                SurrogateStats* stats = nullptr);

// One correlation point.
struct InstanceRecord {
  std::size_t instance = 0;
  Span span;
  double score = 0.0;
  double reference = 0.0;

  friend bool operator==(const InstanceRecord&, const InstanceRecord&) = default;
};

struct EvalReport {
  std::string method;
  double word_rho = 0.0;
  std::optional<double> phrase_rho;
  std::vector<InstanceRecord> records;
  std::vector<InstanceRecord> phrase_records;
  nlohmann::json config = nlohmann::json::object();

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

nlohmann::json to_json(const EvalReport& report);

// Scorer for the query's method: phrase is taken from each call, everything
// else (N, K, sampler, seed) from `base`.
PhraseScorer make_scorer(const ExplainContext& context, AttributionQuery base);

// Scores every word occurrence as a single-token phrase and correlates its
// display value with the reference coefficient column reduced the same way
// (class 1 minus class 0 for binary tasks, margin of the score's target
// class otherwise). Duplicated words count once per occurrence.
double word_rho(const PhraseScorer& scorer, const LinearSurrogate& surrogate,
                std::span<const TokenSeq> eval_set,
                std::vector<InstanceRecord>* records = nullptr);

// Correlates display values of every internal node of the trees with their
// annotations. Tokens are encoded with `vocab`.
double phrase_rho(const PhraseScorer& scorer, std::span<const AnnotatedTree> trees,
                  const Vocab& vocab, std::vector<InstanceRecord>* records = nullptr);

struct SweepGrid {
  std::vector<std::size_t> context_sizes;  // N
  std::vector<std::size_t> sample_counts;  // K
  std::vector<std::uint64_t> seeds;
  // Also run the padding sampler at every grid point.
  bool include_padding = true;
};

struct SweepRow {
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string method;
  double word_rho = 0.0;
  // Variance of word_rho across the seeds of this (N, K, method) cell.
  double variance = 0.0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  nlohmann::json config = nlohmann::json::object();
};

using ScorerFactory =
    std::function<PhraseScorer(std::size_t n, std::size_t k, SamplerKind sampler,
                               std::uint64_t seed)>;

// Cross product of N x K x seeds for the LM sampler (method "soc") and, when
// enabled, the padding sampler ("soc-pad"). Throws InvalidArgument on an
// empty grid axis.
SweepReport sweep(const ScorerFactory& factory, const LinearSurrogate& surrogate,
                  std::span<const TokenSeq> eval_set, const SweepGrid& grid);

nlohmann::json to_json(const SweepReport& report);
// Header "N,K,seed,method,word_rho,variance" and one line per row.
std::string to_csv(const SweepReport& report);

struct AdversarialConfig {
  std::size_t train_size = 400;
  std::size_t eval_size = 60;
  std::uint64_t seed = 7;
  TrainConfig classifier;
  TrainConfig lm;
  std::size_t context_size = kDefaultContextSize;
  std::size_t samples = kDefaultSamples;
  // Largest allowed gap in full-sentence training accuracy between models.
  double accuracy_tolerance = 0.02;

  static AdversarialConfig defaults();
};

struct AdversarialReport {
  double normal_accuracy = 0.0;
  double adversarial_accuracy = 0.0;
  // DirectFeed, SOC, SCD in that order.
  std::vector<EvalReport> normal;
  std::vector<EvalReport> adversarial;
  nlohmann::json config = nlohmann::json::object();
};

// Trains a classifier on the sentiment grammar and another on the same data
// plus inverted-label single-word examples, then reports word rho of
// DirectFeed, SOC and SCD for both against a surrogate fitted to the
// sentence data. Throws TrainingError when the full-sentence training
// accuracies differ by more than the tolerance.
AdversarialReport adversarial_experiment(const AdversarialConfig& config);

nlohmann::json to_json(const AdversarialReport& report);
nlohmann::json to_json(const TrainConfig& config);

}  // namespace hiexpl

#endif  // HIEXPL_EVAL_HPP_
