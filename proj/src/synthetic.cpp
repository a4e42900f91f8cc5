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

#include "hiexpl/synthetic.hpp"

#include "hiexpl/rng.hpp"

namespace hiexpl {
namespace {

const std::string& pick(const std::vector<std::string>& words, Rng& rng) {
  return words[static_cast<std::size_t>(rng.below(words.size()))];
}

}  // namespace

SentimentLexicon SentimentLexicon::standard() {
  return SentimentLexicon{
      {"good", "great", "fun", "lovely", "superb", "charming"},
      {"bad", "awful", "dull", "boring", "poor", "weak"},
      {"the", "movie", "film", "plot", "was", "is", "a", "story", "acting",
       "and", "it", "very"},
  };
}

std::vector<RawExample> sentiment_grammar(std::size_t count, std::uint64_t seed,
                                          const SentimentLexicon& lexicon) {
  Rng rng(seed);
  std::vector<RawExample> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t length = 3 + static_cast<std::size_t>(rng.below(6));
    RawExample ex;
    int balance = 0;
    bool polar = false;
    for (std::size_t i = 0; i < length; ++i) {
      const double u = rng.uniform();
      if (u < 0.55) {
        ex.tokens.push_back(pick(lexicon.neutral, rng));
      } else if (u < 0.775) {
        ex.tokens.push_back(pick(lexicon.positive, rng));
        ++balance;
        polar = true;
      } else {
        ex.tokens.push_back(pick(lexicon.negative, rng));
        --balance;
        polar = true;
      }
    }
    if (!polar || balance == 0) continue;
    ex.label = balance > 0 ? 1 : 0;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<RawExample> inverted_single_words(const SentimentLexicon& lexicon) {
  std::vector<RawExample> out;
  for (const std::string& w : lexicon.positive) out.push_back(RawExample{0, {w}});
  for (const std::string& w : lexicon.negative) out.push_back(RawExample{1, {w}});
  return out;
}

std::vector<RawExample> negation_grammar(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> kNeutral = {"the", "movie", "is", "was",
                                                    "it", "really"};
  Rng rng(seed);
  std::vector<RawExample> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    RawExample ex;
    const bool bare = rng.uniform() < 0.25;
    const std::size_t prefix = bare ? 0 : static_cast<std::size_t>(rng.below(4));
    const std::size_t suffix = bare ? 0 : static_cast<std::size_t>(rng.below(3));
    const bool negated = !bare && rng.uniform() < 0.5;
    const bool good = rng.uniform() < 0.5;
    for (std::size_t i = 0; i < prefix; ++i) ex.tokens.push_back(pick(kNeutral, rng));
    if (negated) ex.tokens.push_back("not");
    ex.tokens.push_back(good ? "good" : "bad");
    for (std::size_t i = 0; i < suffix; ++i) ex.tokens.push_back(pick(kNeutral, rng));
    ex.label = (good != negated) ? 1 : 0;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::vector<std::string>> sentences_of(std::span<const RawExample> raw) {
  std::vector<std::vector<std::string>> out;
  out.reserve(raw.size());
  for (const RawExample& ex : raw) out.push_back(ex.tokens);
  return out;
}

}  // namespace hiexpl
