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

#include "hiexpl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hiexpl/error.hpp"

namespace hiexpl {
namespace {

// Upper case never survives tokenize(), so these cannot collide with words.
constexpr const char* kReservedNames[kNumReserved] = {"<PAD>", "<UNK>", "<MASK>",
                                                      "<BOS>", "<EOS>"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Recursive-descent reader for "(label child ...)".
class TreeParser {
 public:
  TreeParser(std::string_view text, bool require_scores)
      : text_(text), require_scores_(require_scores) {}

  AnnotatedTree parse() {
    skip_space();
    AnnotatedTree tree = parse_node();
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after tree");
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("tree parse error at offset " + std::to_string(pos_) +
                     ": " + msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  std::string_view atom() {
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    return text_.substr(begin, pos_ - begin);
  }

  AnnotatedTree parse_node() {
    if (pos_ >= text_.size() || text_[pos_] != '(') fail("expected '('");
    ++pos_;
    skip_space();
    const std::size_t label_pos = pos_;
    const std::string_view label = atom();
    if (label.empty()) fail("missing node label");

    AnnotatedTree node;
    node.label = std::string(label);
    if (!parse_double(label, node.score)) {
      if (require_scores_) {
        pos_ = label_pos;
        fail("non-numeric score '" + std::string(label) + "'");
      }
      node.annotated = false;
      node.score = 0.0;
    }
    node.span.start = next_leaf_;

    std::vector<std::string> bare;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) fail("unbalanced parentheses: missing ')'");
      if (text_[pos_] == ')') {
        ++pos_;
        break;
      }
      if (text_[pos_] == '(') {
        if (!bare.empty()) fail("node mixes a bare token with subtrees");
        node.children.push_back(parse_node());
      } else {
        if (!node.children.empty()) fail("node mixes a bare token with subtrees");
        bare.push_back(lowercase(atom()));
      }
    }
    if (node.children.empty()) {
      if (bare.size() != 1) fail("leaf node must hold exactly one token");
      node.token = std::move(bare.front());
      ++next_leaf_;
    }
    node.span.end = next_leaf_;
    return node;
  }

  std::string_view text_;
  bool require_scores_;
  std::size_t pos_ = 0;
  std::size_t next_leaf_ = 0;
};

void collect_tokens(const AnnotatedTree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.token);
    return;
  }
  for (const auto& c : t.children) collect_tokens(c, out);
}

void collect_nodes(const AnnotatedTree& t,
                   std::vector<std::pair<Span, double>>& out) {
  out.emplace_back(t.span, t.score);
  for (const auto& c : t.children) collect_nodes(c, out);
}

}  // namespace

Vocab::Vocab() {
  for (const char* name : kReservedNames) tokens_.emplace_back(name);
}

Vocab Vocab::build(std::span<const std::vector<std::string>> sentences) {
  Vocab v;
  for (const auto& s : sentences) {
    for (const auto& w : s) v.add(w);
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved) {
    throw InvalidArgument("vocabulary shorter than the reserved block");
  }
  for (TokenId i = 0; i < kNumReserved; ++i) {
    if (tokens[i] != kReservedNames[i]) {
      throw InvalidArgument("vocabulary reserved entry " + std::to_string(i) +
                            " is '" + tokens[i] + "'");
    }
  }
  Vocab v;
  for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) {
      throw InvalidArgument("duplicate vocabulary entry '" + tokens[i] + "'");
    }
    v.add(tokens[i]);
  }
  return v;
}

TokenId Vocab::add(const std::string& word) {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(word);
  index_.emplace(word, id);
  return id;
}

TokenId Vocab::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw InvalidArgument("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::string to_string(Span span) {
  return std::to_string(span.start) + ":" + std::to_string(span.end);
}

Span parse_span(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("phrase spec '" + std::string(text) + "' is not i:j");
  }
  auto parse_index = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError("phrase spec '" + std::string(text) + "' is not i:j");
    }
    return v;
  };
  return Span{parse_index(text.substr(0, colon)),
              parse_index(text.substr(colon + 1))};
}

TokenSeq::TokenSeq(std::vector<TokenId> ids) : ids_(std::move(ids)) {
  if (ids_.empty()) throw InvalidArgument("TokenSeq must be non-empty");
}

TokenSeq TokenSeq::slice(Span span) const {
  check_span(span, size());
  return TokenSeq(std::vector<TokenId>(
      ids_.begin() + static_cast<long>(span.start),
      ids_.begin() + static_cast<long>(span.end)));
}

void TokenSeq::check_ids(std::size_t vocab_size) const {
  for (TokenId id : ids_) {
    if (id >= vocab_size) {
      throw InvalidArgument("token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(vocab_size));
    }
  }
}

void check_span(Span span, std::size_t length) {
  if (span.start >= span.end || span.end > length) {
    throw InvalidArgument("span " + to_string(span) +
                          " invalid for sequence of length " +
                          std::to_string(length));
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > begin) out.push_back(lowercase(text.substr(begin, i - begin)));
  }
  if (out.empty()) throw ParseError("cannot tokenize empty text");
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

TokenSeq encode(std::span<const std::string> tokens, const Vocab& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.lookup(t));
  return TokenSeq(std::move(ids));
}

std::vector<std::string> decode(const TokenSeq& seq, const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (TokenId id : seq) out.push_back(vocab.token(id));
  return out;
}

std::vector<RawExample> parse_tsv(std::string_view text,
                                  std::string_view source) {
  std::vector<RawExample> out;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = lines[n];
    if (is_blank(line)) continue;
    const std::string where =
        std::string(source) + ":" + std::to_string(n + 1);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(where + ": missing TAB between label and sentence");
    }
    std::string_view label_text = line.substr(0, tab);
    while (!label_text.empty() && is_space(label_text.back())) {
      label_text.remove_suffix(1);
    }
    std::size_t label = 0;
    const auto [ptr, ec] = std::from_chars(
        label_text.data(), label_text.data() + label_text.size(), label);
    if (label_text.empty() || ec != std::errc() ||
        ptr != label_text.data() + label_text.size()) {
      throw ParseError(where + ": label '" + std::string(label_text) +
                       "' is not a non-negative integer");
    }
    const std::string_view sentence = line.substr(tab + 1);
    if (is_blank(sentence)) throw ParseError(where + ": empty sentence");
    out.push_back(RawExample{label, tokenize(sentence)});
  }
  if (out.empty()) {
    throw ParseError(std::string(source) + ": dataset contains no examples");
  }
  return out;
}

std::vector<RawExample> read_tsv(const std::filesystem::path& path) {
  return parse_tsv(read_file(path), path.string());
}

std::vector<LabeledExample> encode_examples(std::span<const RawExample> raw,
                                            const Vocab& vocab) {
  std::vector<LabeledExample> out;
  out.reserve(raw.size());
  for (const auto& r : raw) {
    out.push_back(LabeledExample{encode(r.tokens, vocab), r.label});
  }
  return out;
}

std::vector<LabeledExample> load_tsv(const std::filesystem::path& path,
                                     const Vocab& vocab) {
  const auto raw = read_tsv(path);
  return encode_examples(raw, vocab);
}

Vocab build_vocab(std::span<const RawExample> train) {
  Vocab v;
  for (const auto& r : train) {
    for (const auto& w : r.tokens) v.add(w);
  }
  return v;
}

TokenSeq mask_span(const TokenSeq& seq, Span span, TokenId fill) {
  check_span(span, seq.size());
  if (!is_reserved(fill)) {
    throw InvalidArgument("mask_span: fill id must be a reserved token");
  }
  std::vector<TokenId> ids = seq.ids();
  std::fill(ids.begin() + static_cast<long>(span.start),
            ids.begin() + static_cast<long>(span.end), fill);
  return TokenSeq(std::move(ids));
}

AnnotatedTree parse_tree(std::string_view text, bool require_scores) {
  return TreeParser(text, require_scores).parse();
}

std::vector<AnnotatedTree> parse_trees(std::string_view text,
                                       bool require_scores) {
  std::vector<AnnotatedTree> out;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (is_blank(lines[n])) continue;
    try {
      out.push_back(parse_tree(lines[n], require_scores));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(n + 1) + ": " + e.what());
    }
  }
  if (out.empty()) throw ParseError("tree file contains no trees");
  return out;
}

std::vector<AnnotatedTree> load_trees(const std::filesystem::path& path,
                                      bool require_scores) {
  try {
    return parse_trees(read_file(path), require_scores);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> tree_tokens(const AnnotatedTree& tree) {
  std::vector<std::string> out;
  collect_tokens(tree, out);
  return out;
}

std::size_t tree_node_count(const AnnotatedTree& tree) {
  std::size_t n = 1;
  for (const auto& c : tree.children) n += tree_node_count(c);
  return n;
}

std::vector<std::pair<Span, double>> tree_nodes(const AnnotatedTree& tree) {
  std::vector<std::pair<Span, double>> out;
  collect_nodes(tree, out);
  return out;
}

}  // namespace hiexpl
