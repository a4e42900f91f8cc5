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

#include "hiexpl/attribution.hpp"

#include <string>

#include "hiexpl/error.hpp"
#include "hiexpl/rng.hpp"

namespace hiexpl {
namespace {

// Weighted sum of the vectors divided by the summed weight. A single draw
// of weight 1 returns its difference unchanged.
Vec weighted_mean(std::span<const Vec> values, std::span<const double> weights) {
  Vec acc(values.front().size());
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    acc += weights[k] * values[k];
    total += weights[k];
  }
  if (total == 1.0) return acc;
  return (1.0 / total) * acc;
}

const SequenceClassifier& need_classifier(const ExplainContext& ctx) {
  if (ctx.classifier == nullptr) throw InvalidArgument("no classifier loaded");
  return *ctx.classifier;
}

const LstmParams& need_lstm(const ExplainContext& ctx, AttributionMethod m) {
  if (ctx.lstm == nullptr) {
    throw InvalidArgument(std::string(method_name(m)) +
                          " needs an LSTM classifier");
  }
  return *ctx.lstm;
}

}  // namespace

LstmClassifier::LstmClassifier(const LstmParams& params) : params_(&params) {
  params.validate();
}

Vec LstmClassifier::scores(const TokenSeq& seq) const {
  return classify(*params_, seq);
}

std::string_view method_name(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::kSOC:
      return "soc";
    case AttributionMethod::kSCD:
      return "scd";
    case AttributionMethod::kCD:
      return "cd";
    case AttributionMethod::kACD:
      return "acd";
    case AttributionMethod::kOcclusion:
      return "occlusion";
    case AttributionMethod::kDirectFeed:
      return "directfeed";
    case AttributionMethod::kStatistic:
      return "statistic";
  }
  return "unknown";
}

AttributionMethod parse_method(std::string_view name) {
  for (auto m : {AttributionMethod::kSOC, AttributionMethod::kSCD,
                 AttributionMethod::kCD, AttributionMethod::kACD,
                 AttributionMethod::kOcclusion, AttributionMethod::kDirectFeed,
                 AttributionMethod::kStatistic}) {
    if (method_name(m) == name) return m;
  }
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

SamplerKind parse_sampler(std::string_view name) {
  for (auto s : {SamplerKind::kLmMonteCarlo, SamplerKind::kLmExhaustive,
                 SamplerKind::kPadding, SamplerKind::kCorpus}) {
    if (sampler_name(s) == name) return s;
  }
  throw InvalidArgument("unknown sampler '" + std::string(name) + "'");
}

void AttributionQuery::validate() const {
  if (samples == 0) throw InvalidArgument("sample count K must be at least 1");
  if (method == AttributionMethod::kSCD && sampler == SamplerKind::kCorpus) {
    throw InvalidArgument("scd cannot use the corpus sampler");
  }
}

AttributionScore input_occlusion(const SequenceClassifier& model,
                                 const TokenSeq& seq, Span phrase) {
  check_span(phrase, seq.size());
  const Vec full = model.scores(seq);
  const Vec occluded = model.scores(mask_span(seq, phrase, kPad));
  return AttributionScore(full - occluded, argmax(full));
}

AttributionScore direct_feed(const SequenceClassifier& model, const TokenSeq& seq,
                             Span phrase) {
  check_span(phrase, seq.size());
  Vec s = model.scores(seq.slice(phrase));
  const std::size_t target = argmax(s);
  return AttributionScore(std::move(s), target);
}

std::vector<ContextDraw> query_contexts(const LmParams* lm, const TokenSeq& seq,
                                        const AttributionQuery& query) {
  query.validate();
  const ContextWindows w = window(seq, query.phrase, query.context_size);
  if (w.total() == 0) return {ContextDraw{{}, 1.0}};
  if (query.sampler == SamplerKind::kPadding) {
    return padding_contexts(seq, query.phrase, query.context_size);
  }
  if (query.sampler == SamplerKind::kCorpus) {
    throw InvalidArgument("corpus sampler does not produce context draws");
  }
  if (lm == nullptr) {
    throw InvalidArgument(std::string(sampler_name(query.sampler)) +
                          " sampler needs a language model");
  }
  if (query.sampler == SamplerKind::kLmExhaustive) {
    return enumerate_contexts(*lm, seq, query.phrase, query.context_size,
                              query.enumeration_cap);
  }
  Rng rng(query.seed);
  return draw_contexts(*lm, seq, query.phrase, query.context_size, query.samples,
                       rng);
}

SocDetail soc_detailed(const SequenceClassifier& model, const LmParams* lm,
                       const TokenSeq& seq, const AttributionQuery& query) {
  check_span(query.phrase, seq.size());
  const std::size_t target = argmax(model.scores(seq));
  const ContextWindows w = window(seq, query.phrase, query.context_size);
  const std::vector<ContextDraw> draws = query_contexts(lm, seq, query);
  SocDetail out;
  out.differences.reserve(draws.size());
  out.weights.reserve(draws.size());
  for (const ContextDraw& draw : draws) {
    const TokenSeq x = apply_draw(seq, w, draw);
    out.differences.push_back(model.scores(x) -
                              model.scores(mask_span(x, query.phrase, kPad)));
    out.weights.push_back(draw.weight);
  }
  out.score = AttributionScore(weighted_mean(out.differences, out.weights), target);
  return out;
}

AttributionScore soc(const SequenceClassifier& model, const LmParams* lm,
                     const TokenSeq& seq, const AttributionQuery& query) {
  return soc_detailed(model, lm, seq, query).score;
}

DecompResult scd_decompose(const LstmParams& params, const LmParams* lm,
                           const TokenSeq& seq, const AttributionQuery& query) {
  check_span(query.phrase, seq.size());
  const ContextWindows w = window(seq, query.phrase, query.context_size);
  const std::vector<ContextDraw> draws = query_contexts(lm, seq, query);
  std::vector<TokenSeq> sequences;
  sequences.reserve(draws.size());
  std::vector<double> weights;
  bool uniform = true;
  for (const ContextDraw& draw : draws) {
    sequences.push_back(apply_draw(seq, w, draw));
    weights.push_back(draw.weight);
    if (draw.weight != draws.front().weight) uniform = false;
  }
  // Equal weights are averaged as a plain mean.
  if (uniform) weights.clear();
  const ActivationSampleSet samples =
      ActivationSampleSet::record(params, sequences, std::move(weights));
  return decompose(params, seq, query.phrase, DecompMethod::kSCD, &samples);
}

AttributionScore scd_score(const LstmParams& params, const LmParams* lm,
                           const TokenSeq& seq, const AttributionQuery& query) {
  return scd_decompose(params, lm, seq, query).score;
}

AttributionScore statistic_importance(const SequenceClassifier& model,
                                      std::span<const TokenSeq> corpus,
                                      const TokenSeq& seq, Span phrase) {
  check_span(phrase, seq.size());
  const TokenSeq tokens = seq.slice(phrase);
  const std::vector<CorpusHit> hits = corpus_occurrences(corpus, tokens.view());
  if (hits.empty()) return input_occlusion(model, seq, phrase);
  const std::size_t target = argmax(model.scores(seq));
  std::vector<Vec> diffs;
  diffs.reserve(hits.size());
  const std::vector<double> weights(hits.size(), 1.0 / static_cast<double>(hits.size()));
  for (const CorpusHit& hit : hits) {
    const TokenSeq& x = corpus[hit.sentence];
    const Span at{hit.position, hit.position + phrase.length()};
    diffs.push_back(model.scores(x) - model.scores(mask_span(x, at, kPad)));
  }
  return AttributionScore(weighted_mean(diffs, weights), target);
}

AttributionScore attribute(const ExplainContext& context, const TokenSeq& seq,
                           const AttributionQuery& query) {
  query.validate();
  switch (query.method) {
    case AttributionMethod::kSOC:
      if (query.sampler == SamplerKind::kCorpus) {
        return statistic_importance(need_classifier(context), context.corpus, seq,
                                    query.phrase);
      }
      return soc(need_classifier(context), context.lm, seq, query);
    case AttributionMethod::kSCD:
      return scd_score(need_lstm(context, query.method), context.lm, seq, query);
    case AttributionMethod::kCD:
      return decompose(need_lstm(context, query.method), seq, query.phrase,
                       DecompMethod::kCD)
          .score;
    case AttributionMethod::kACD:
      return decompose(need_lstm(context, query.method), seq, query.phrase,
                       DecompMethod::kACD)
          .score;
    case AttributionMethod::kOcclusion:
      return input_occlusion(need_classifier(context), seq, query.phrase);
    case AttributionMethod::kDirectFeed:
      return direct_feed(need_classifier(context), seq, query.phrase);
    case AttributionMethod::kStatistic:
      return statistic_importance(need_classifier(context), context.corpus, seq,
                                  query.phrase);
  }
  throw InvalidArgument("unknown attribution method");
}

}  // namespace hiexpl
