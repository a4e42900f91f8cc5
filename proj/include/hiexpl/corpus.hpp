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

// Tokens, vocabularies, datasets and annotated constituency trees.

#ifndef HIEXPL_CORPUS_HPP_
#define HIEXPL_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hiexpl {

using TokenId = std::uint32_t;

// Reserved ids occupy 0..4 in every vocabulary.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kMask = 2;
inline constexpr TokenId kBos = 3;
inline constexpr TokenId kEos = 4;
inline constexpr TokenId kNumReserved = 5;

inline bool is_reserved(TokenId id) { return id < kNumReserved; }

class Vocab {
 public:
  // A vocabulary holding only the reserved entries.
  Vocab();

  // Builds from training sentences in first-occurrence order (minimum
  // frequency 1). Text matching a reserved display name is treated as an
  // ordinary word.
  static Vocab build(std::span<const std::vector<std::string>> sentences);
  // Rebuilds from the full id-ordered token list (as stored in model files);
  // the first five entries must be the reserved names.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  // Number of non-reserved entries.
  std::size_t word_count() const { return tokens_.size() - kNumReserved; }

  // Adds a word if new and returns its id.
  TokenId add(const std::string& word);
  // Id of a corpus word, UNK when absent. Never returns PAD/MASK/BOS/EOS.
  TokenId lookup(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& token(TokenId id) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Contiguous token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end > start ? end - start : 0; }
  bool empty() const { return end <= start; }
  bool contains(std::size_t i) const { return i >= start && i < end; }

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

std::string to_string(Span span);
// Parses "i:j"; throws ParseError.
Span parse_span(std::string_view text);

// A non-empty sequence of vocabulary ids.
class TokenSeq {
 public:
  explicit TokenSeq(std::vector<TokenId> ids);
  TokenSeq(std::initializer_list<TokenId> ids)
      : TokenSeq(std::vector<TokenId>(ids)) {}

  std::size_t size() const { return ids_.size(); }
  TokenId operator[](std::size_t i) const { return ids_[i]; }
  const std::vector<TokenId>& ids() const { return ids_; }
  std::span<const TokenId> view() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  // Copy of [span.start, span.end) as its own sequence.
  TokenSeq slice(Span span) const;
  // Throws InvalidArgument unless every id is below vocab_size.
  void check_ids(std::size_t vocab_size) const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<TokenId> ids_;
};

// Throws InvalidArgument unless 0 <= start < end <= length.
void check_span(Span span, std::size_t length);

struct LabeledExample {
  TokenSeq seq;
  std::size_t label = 0;
};

// Lowercases ASCII letters and splits on whitespace runs. Punctuation stays
// attached to its word. Throws ParseError on blank input.
std::vector<std::string> tokenize(std::string_view text);
std::string detokenize(std::span<const std::string> tokens);

TokenSeq encode(std::span<const std::string> tokens, const Vocab& vocab);
std::vector<std::string> decode(const TokenSeq& seq, const Vocab& vocab);

struct RawExample {
  std::size_t label = 0;
  std::vector<std::string> tokens;
};

// Reads "label<TAB>sentence" lines. Blank lines are skipped; a file with no
// examples, a line without a TAB, or a non-integer label is a ParseError
// naming the line.
std::vector<RawExample> read_tsv(const std::filesystem::path& path);
std::vector<RawExample> parse_tsv(std::string_view text,
                                  std::string_view source = "<string>");
std::vector<LabeledExample> encode_examples(std::span<const RawExample> raw,
                                            const Vocab& vocab);
// read_tsv followed by encode_examples; unknown words become UNK.
std::vector<LabeledExample> load_tsv(const std::filesystem::path& path,
                                     const Vocab& vocab);

Vocab build_vocab(std::span<const RawExample> train);

// Copy of `seq` with every position of `span` set to `fill`, which must be a
// reserved id (PAD for occlusion, MASK for LM conditioning).
TokenSeq mask_span(const TokenSeq& seq, Span span, TokenId fill);

// Constituency tree with a real-valued score on every node. Leaves hold one
// token; children tile their parent's span left to right.
struct AnnotatedTree {
  Span span;
  double score = 0.0;
  // False when the node label was not numeric (unannotated parses).
  bool annotated = true;
  std::string label;
  // Set on leaves only.
  std::string token;
  std::vector<AnnotatedTree> children;

  bool is_leaf() const { return children.empty(); }
};

// Parses one s-expression "(score child ...)". Each child is either a nested
// s-expression or, for a leaf node, exactly one bare token. With
// require_scores, a non-numeric label is a ParseError; otherwise it yields an
// unannotated node. Errors report the character offset.
AnnotatedTree parse_tree(std::string_view text, bool require_scores = true);
// One tree per non-blank line; errors name the line.
std::vector<AnnotatedTree> load_trees(const std::filesystem::path& path,
                                      bool require_scores = true);
std::vector<AnnotatedTree> parse_trees(std::string_view text,
                                       bool require_scores = true);

std::vector<std::string> tree_tokens(const AnnotatedTree& tree);
std::size_t tree_node_count(const AnnotatedTree& tree);
// Pre-order list of all node spans paired with their scores.
std::vector<std::pair<Span, double>> tree_nodes(const AnnotatedTree& tree);

}  // namespace hiexpl

#endif  // HIEXPL_CORPUS_HPP_
