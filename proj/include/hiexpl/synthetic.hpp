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

// Small generated corpora with known structure, used by the evaluation
// experiments and the test suite.

#ifndef HIEXPL_SYNTHETIC_HPP_
#define HIEXPL_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiexpl/corpus.hpp"

namespace hiexpl {

struct SentimentLexicon {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<std::string> neutral;

  static SentimentLexicon standard();
};

// Sentences of 3 to 8 words mixing neutral and polar words. The label is 1
// when positive words outnumber negative ones and 0 when the reverse holds;
// ties are never emitted.
std::vector<RawExample> sentiment_grammar(std::size_t count, std::uint64_t seed,
                                          const SentimentLexicon& lexicon =
                                              SentimentLexicon::standard());

// One-word examples for every polar word of the lexicon with the label it
// does NOT have in context.
std::vector<RawExample> inverted_single_words(const SentimentLexicon& lexicon =
                                                  SentimentLexicon::standard());

// "<neutral*> [not] good|bad <neutral*>" with label 1 for an un-negated
// "good" or a negated "bad", 0 otherwise. Roughly a quarter of the examples
// are the bare polar word.
std::vector<RawExample> negation_grammar(std::size_t count, std::uint64_t seed);

// Token lists of the examples, in order.
std::vector<std::vector<std::string>> sentences_of(std::span<const RawExample> raw);

}  // namespace hiexpl

#endif  // HIEXPL_SYNTHETIC_HPP_
