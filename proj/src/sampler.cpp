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

#include "hiexpl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "hiexpl/error.hpp"

namespace hiexpl {
namespace {

// Cursors positioned just before the first sampled token, shared by all
// draws for one (seq, phrase, N).
struct Conditioning {
  ContextWindows windows;
  // Backward LM after reading the tail, masked right window and phrase.
  LmCursor backward;
  // Forward LM after reading the untouched head.
  LmCursor forward;
};

Conditioning prepare(const LmParams& lm, const TokenSeq& seq, Span phrase,
                     std::size_t n) {
  check_span(phrase, seq.size());
  seq.check_ids(lm.vocab_size());
  const ContextWindows w = window(seq, phrase, n);
  LmCursor bwd(lm, Direction::kBackward);
  for (std::size_t pos = seq.size(); pos-- > w.left.end;) {
    bwd.feed(w.right.contains(pos) ? kMask : seq[pos]);
  }
  LmCursor fwd(lm, Direction::kForward);
  for (std::size_t pos = 0; pos < w.left.start; ++pos) fwd.feed(seq[pos]);
  return Conditioning{w, bwd, fwd};
}

// Steps the forward cursor over the filled left window and the phrase.
void advance_to_right_window(LmCursor& fwd, const TokenSeq& seq, Span phrase,
                             std::span<const TokenId> left_tokens) {
  for (TokenId id : left_tokens) fwd.feed(id);
  for (std::size_t pos = phrase.start; pos < phrase.end; ++pos) fwd.feed(seq[pos]);
}

}  // namespace

std::string_view sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kLmMonteCarlo:
      return "lm";
    case SamplerKind::kLmExhaustive:
      return "exhaustive";
    case SamplerKind::kPadding:
      return "pad";
    case SamplerKind::kCorpus:
      return "corpus";
  }
  return "unknown";
}

ContextWindows window(const TokenSeq& seq, Span phrase, std::size_t n) {
  check_span(phrase, seq.size());
  ContextWindows w;
  w.left = Span{phrase.start > n ? phrase.start - n : 0, phrase.start};
  w.right = Span{phrase.end, std::min(seq.size(), phrase.end + n)};
  return w;
}

TokenSeq apply_draw(const TokenSeq& seq, const ContextWindows& windows,
                    const ContextDraw& draw) {
  if (draw.replacement.size() != windows.total()) {
    throw InvalidArgument("context draw has " +
                          std::to_string(draw.replacement.size()) +
                          " tokens for windows of " +
                          std::to_string(windows.total()));
  }
  std::vector<TokenId> ids = seq.ids();
  std::size_t k = 0;
  for (std::size_t pos = windows.left.start; pos < windows.left.end; ++pos) {
    ids[pos] = draw.replacement[k++];
  }
  for (std::size_t pos = windows.right.start; pos < windows.right.end; ++pos) {
    ids[pos] = draw.replacement[k++];
  }
  return TokenSeq(std::move(ids));
}

std::vector<ContextDraw> draw_contexts(const LmParams& lm, const TokenSeq& seq,
                                       Span phrase, std::size_t n, std::size_t k,
                                       Rng& rng) {
  if (k == 0) throw InvalidArgument("draw_contexts: K must be at least 1");
  const Conditioning base = prepare(lm, seq, phrase, n);
  const ContextWindows& w = base.windows;
  const double weight = 1.0 / static_cast<double>(k);
  std::vector<ContextDraw> draws;
  draws.reserve(k);
  for (std::size_t d = 0; d < k; ++d) {
    std::vector<TokenId> left(w.left.length());
    LmCursor bwd = base.backward;
    for (std::size_t i = w.left.length(); i-- > 0;) {
      const Vec dist = bwd.next_dist();
      left[i] = static_cast<TokenId>(rng.categorical(dist.span()));
      bwd.feed(left[i]);
    }
    LmCursor fwd = base.forward;
    advance_to_right_window(fwd, seq, phrase, left);
    ContextDraw draw;
    draw.replacement = std::move(left);
    for (std::size_t pos = w.right.start; pos < w.right.end; ++pos) {
      const Vec dist = fwd.next_dist();
      const auto id = static_cast<TokenId>(rng.categorical(dist.span()));
      draw.replacement.push_back(id);
      fwd.feed(id);
    }
    draw.weight = weight;
    draws.push_back(std::move(draw));
  }
  return draws;
}

std::vector<ContextDraw> enumerate_contexts(const LmParams& lm,
                                            const TokenSeq& seq, Span phrase,
                                            std::size_t n, std::size_t cap) {
  const Conditioning base = prepare(lm, seq, phrase, n);
  const ContextWindows& w = base.windows;
  const std::size_t words = lm.vocab_size() - kNumReserved;
  double count = 1.0;
  for (std::size_t i = 0; i < w.total(); ++i) {
    count *= static_cast<double>(words);
    if (count > static_cast<double>(cap)) {
      throw CapExceededError(
          "exhaustive enumeration needs " + std::to_string(words) + "^" +
          std::to_string(w.total()) + " assignments (cap " +
          std::to_string(cap) + "); use Monte-Carlo sampling instead");
    }
  }

  std::vector<ContextDraw> draws;
  std::vector<TokenId> tokens(w.total());
  const std::size_t n_left = w.left.length();

  std::function<void(std::size_t, LmCursor, double)> fill_right =
      [&](std::size_t i, LmCursor fwd, double prob) {
        if (i == w.right.length()) {
          draws.push_back(ContextDraw{tokens, prob});
          return;
        }
        const Vec dist = fwd.next_dist();
        for (TokenId id = kNumReserved; id < lm.vocab_size(); ++id) {
          tokens[n_left + i] = id;
          LmCursor next = fwd;
          next.feed(id);
          fill_right(i + 1, next, prob * dist[id]);
        }
      };

  // Left positions are visited right to left: i counts down from n_left.
  std::function<void(std::size_t, LmCursor, double)> fill_left =
      [&](std::size_t i, LmCursor bwd, double prob) {
        if (i == 0) {
          LmCursor fwd = base.forward;
          advance_to_right_window(
              fwd, seq, phrase, std::span<const TokenId>(tokens.data(), n_left));
          fill_right(0, fwd, prob);
          return;
        }
        const Vec dist = bwd.next_dist();
        for (TokenId id = kNumReserved; id < lm.vocab_size(); ++id) {
          tokens[i - 1] = id;
          LmCursor next = bwd;
          next.feed(id);
          fill_left(i - 1, next, prob * dist[id]);
        }
      };

  fill_left(n_left, base.backward, 1.0);
  return draws;
}

std::vector<ContextDraw> padding_contexts(const TokenSeq& seq, Span phrase,
                                          std::size_t n) {
  const ContextWindows w = window(seq, phrase, n);
  return {ContextDraw{std::vector<TokenId>(w.total(), kPad), 1.0}};
}

std::vector<CorpusHit> corpus_occurrences(std::span<const TokenSeq> corpus,
                                          std::span<const TokenId> phrase) {
  std::vector<CorpusHit> hits;
  if (phrase.empty()) return hits;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& ids = corpus[s].ids();
    if (ids.size() < phrase.size()) continue;
    for (std::size_t pos = 0; pos + phrase.size() <= ids.size(); ++pos) {
      if (std::equal(phrase.begin(), phrase.end(),
                     ids.begin() + static_cast<long>(pos))) {
        hits.push_back(CorpusHit{s, pos});
      }
    }
  }
  return hits;
}

}  // namespace hiexpl
