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

// Phrase importance scorers built on a black-box sequence classifier, plus
// the SCD driver that feeds sampled contexts into the decomposition.

#ifndef HIEXPL_ATTRIBUTION_HPP_
#define HIEXPL_ATTRIBUTION_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hiexpl/corpus.hpp"
#include "hiexpl/decomp.hpp"
#include "hiexpl/model.hpp"
#include "hiexpl/numerics.hpp"
#include "hiexpl/sampler.hpp"
#include "hiexpl/score.hpp"

namespace hiexpl {

// Anything mapping a token sequence to per-class scores.
class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;
  virtual Vec scores(const TokenSeq& seq) const = 0;
  virtual std::size_t num_classes() const = 0;
};

class LstmClassifier final : public SequenceClassifier {
 public:
  // Keeps a reference; `params` must outlive the classifier.
  explicit LstmClassifier(const LstmParams& params);

  Vec scores(const TokenSeq& seq) const override;
  std::size_t num_classes() const override { return params_->num_outputs(); }
  const LstmParams& params() const { return *params_; }

 private:
  const LstmParams* params_;
};

enum class AttributionMethod {
  kSOC,
  kSCD,
  kCD,
  kACD,
  kOcclusion,
  kDirectFeed,
  kStatistic,
};

// "soc", "scd", "cd", "acd", "occlusion", "directfeed", "statistic".
std::string_view method_name(AttributionMethod method);
// Throws InvalidArgument on an unknown name.
AttributionMethod parse_method(std::string_view name);
// "lm", "exhaustive", "pad", "corpus".
SamplerKind parse_sampler(std::string_view name);

inline constexpr std::size_t kDefaultContextSize = 10;
inline constexpr std::size_t kDefaultSamples = 20;

struct AttributionQuery {
  Span phrase;
  std::size_t context_size = kDefaultContextSize;  // N
  std::size_t samples = kDefaultSamples;           // K
  SamplerKind sampler = SamplerKind::kLmMonteCarlo;
  AttributionMethod method = AttributionMethod::kSOC;
  std::uint64_t seed = 0;
  std::size_t enumeration_cap = kDefaultEnumerationCap;

  // Throws InvalidArgument when K is 0 or the sampler cannot serve the
  // method (SCD needs LM or padding contexts).
  void validate() const;
};

// s(x) - s(x with the phrase replaced by PAD). Target is argmax s(x).
AttributionScore input_occlusion(const SequenceClassifier& model,
                                 const TokenSeq& seq, Span phrase);

// s(phrase tokens alone). Target is argmax of that output.
AttributionScore direct_feed(const SequenceClassifier& model, const TokenSeq& seq,
                             Span phrase);

// Context draws for one query: a single empty draw when the windows are
// empty, otherwise whatever the query's sampler produces. `lm` may be null
// for the padding sampler. Throws InvalidArgument for the corpus sampler.
std::vector<ContextDraw> query_contexts(const LmParams* lm, const TokenSeq& seq,
                                        const AttributionQuery& query);

// Per-draw prediction differences behind one SOC score.
struct SocDetail {
  AttributionScore score;
  std::vector<Vec> differences;
  std::vector<double> weights;
};

// Weighted mean of [s(x_hat) - s(x_hat with phrase -> PAD)] over the
// contexts from query_contexts. Target is argmax s(x). Deterministic in
// query.seed.
SocDetail soc_detailed(const SequenceClassifier& model, const LmParams* lm,
                       const TokenSeq& seq, const AttributionQuery& query);
AttributionScore soc(const SequenceClassifier& model, const LmParams* lm,
                     const TokenSeq& seq, const AttributionQuery& query);

// Records forward traces of the query's contexts and decomposes seq under
// SCD with them.
DecompResult scd_decompose(const LstmParams& params, const LmParams* lm,
                           const TokenSeq& seq, const AttributionQuery& query);
AttributionScore scd_score(const LstmParams& params, const LmParams* lm,
                           const TokenSeq& seq, const AttributionQuery& query);

// Mean occlusion difference over every corpus occurrence of the phrase's
// tokens, falling back to input_occlusion on seq when there is none. Target
// is argmax s(seq).
AttributionScore statistic_importance(const SequenceClassifier& model,
                                      std::span<const TokenSeq> corpus,
                                      const TokenSeq& seq, Span phrase);

// Models and data available to the dispatcher. Only what the requested
// method needs must be set.
struct ExplainContext {
  const SequenceClassifier* classifier = nullptr;
  const LstmParams* lstm = nullptr;
  const LmParams* lm = nullptr;
  std::span<const TokenSeq> corpus;
};

// Runs query.method. SOC with the corpus sampler is the Statistic scorer.
// Throws InvalidArgument when a needed model is missing.
AttributionScore attribute(const ExplainContext& context, const TokenSeq& seq,
                           const AttributionQuery& query);

}  // namespace hiexpl

#endif  // HIEXPL_ATTRIBUTION_HPP_
