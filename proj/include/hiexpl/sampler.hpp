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

// Context replacement for the N tokens on each side of a phrase.
//
// Conditioning scheme shared by draw_contexts and enumerate_contexts: every
// window position starts as MASK. The left window is filled right to left by
// the backward LM, which reads everything to the right of the position
// (untouched tail, masked right window, phrase, already-filled left
// positions). The right window is then filled left to right by the forward
// LM, which reads everything to the left (untouched head, filled left window,
// phrase, already-filled right positions). Reserved ids are never sampled.

#ifndef HIEXPL_SAMPLER_HPP_
#define HIEXPL_SAMPLER_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hiexpl/corpus.hpp"
#include "hiexpl/model.hpp"
#include "hiexpl/rng.hpp"

namespace hiexpl {

enum class SamplerKind { kLmMonteCarlo, kLmExhaustive, kPadding, kCorpus };

std::string_view sampler_name(SamplerKind kind);

struct ContextWindows {
  Span left;
  Span right;

  std::size_t total() const { return left.length() + right.length(); }
};

// Left [max(0, start - N), start) and right [end, min(T, end + N)).
ContextWindows window(const TokenSeq& seq, Span phrase, std::size_t n);

// Replacement tokens for the left window followed by the right window.
struct ContextDraw {
  std::vector<TokenId> replacement;
  double weight = 1.0;

  friend bool operator==(const ContextDraw&, const ContextDraw&) = default;
};

// Copy of seq with the window positions overwritten by the draw.
TokenSeq apply_draw(const TokenSeq& seq, const ContextWindows& windows,
                    const ContextDraw& draw);

// K Monte-Carlo draws of weight 1/K. K must be at least 1.
std::vector<ContextDraw> draw_contexts(const LmParams& lm, const TokenSeq& seq,
                                       Span phrase, std::size_t n, std::size_t k,
                                       Rng& rng);

inline constexpr std::size_t kDefaultEnumerationCap = 100000;

// Every window assignment with its exact chain-rule probability. Throws
// CapExceededError when (ordinary vocabulary size)^(window length) exceeds
// `cap`.
std::vector<ContextDraw> enumerate_contexts(const LmParams& lm,
                                            const TokenSeq& seq, Span phrase,
                                            std::size_t n,
                                            std::size_t cap = kDefaultEnumerationCap);

// A single draw with every window position set to PAD.
std::vector<ContextDraw> padding_contexts(const TokenSeq& seq, Span phrase,
                                          std::size_t n);

struct CorpusHit {
  std::size_t sentence = 0;
  std::size_t position = 0;

  friend bool operator==(const CorpusHit&, const CorpusHit&) = default;
};

// Every exact occurrence of `phrase` in the corpus, in corpus order; a
// sentence containing the phrase twice yields two hits.
std::vector<CorpusHit> corpus_occurrences(std::span<const TokenSeq> corpus,
                                          std::span<const TokenId> phrase);

}  // namespace hiexpl

#endif  // HIEXPL_SAMPLER_HPP_
