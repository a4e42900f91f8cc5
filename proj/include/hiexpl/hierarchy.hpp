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

// Hierarchical explanations: scoring every node of a parse tree, or building
// a tree bottom-up by greedy agglomerative merging, plus HTML/JSON output.

#ifndef HIEXPL_HIERARCHY_HPP_
#define HIEXPL_HIERARCHY_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hiexpl/corpus.hpp"
#include "hiexpl/score.hpp"
#include "json.hpp"

namespace hiexpl {

using PhraseScorer = std::function<AttributionScore(const TokenSeq&, Span)>;

struct ExplainedNode {
  Span span;
  AttributionScore score;
  double display = 0.0;
  std::vector<ExplainedNode> children;

  bool is_leaf() const { return children.empty(); }
  friend bool operator==(const ExplainedNode&, const ExplainedNode&) = default;
};

std::size_t node_count(const ExplainedNode& node);
// Throws InvalidArgument if children do not tile their parent or a leaf
// covers more than one token (root-only explanations excepted).
void check_tiling(const ExplainedNode& node, bool allow_wide_leaves = false);

// Scores every node of `tree` once, in pre-order. The root span must cover
// seq. Scorer failures are rethrown as ScoringError naming the span.
ExplainedNode explain_tree(const PhraseScorer& scorer, const TokenSeq& seq,
                           const AnnotatedTree& tree);

// A single node for one phrase.
ExplainedNode explain_span(const PhraseScorer& scorer, const TokenSeq& seq,
                           Span span);

struct HierarchyLevel {
  std::size_t level = 0;
  std::vector<Span> spans;

  friend bool operator==(const HierarchyLevel&, const HierarchyLevel&) = default;
};

struct Agglomeration {
  // levels[0] is every single token; levels.back() is the full span.
  std::vector<HierarchyLevel> levels;
  // Every span the scorer was asked about.
  std::map<Span, AttributionScore> scores;
  // Binary tree of the merges.
  ExplainedNode tree;
};

// Greedy adjacent merging: at each step the adjacent pair whose union has
// the largest |display| is merged, leftmost pair on ties. Performs exactly
// T - 1 merges and scores each distinct span once.
Agglomeration agglomerate(const PhraseScorer& scorer, const TokenSeq& seq);

nlohmann::json to_json(const ExplainedNode& node);
// Inverse of to_json. Throws ParseError on a malformed document.
ExplainedNode node_from_json(const nlohmann::json& j);

// Self-contained HTML page of nested boxes. Red is positive, blue negative,
// intensity |display| / max |display| over the tree. A non-empty `meta` is
// embedded as an HTML comment.
std::string render_html(const ExplainedNode& root,
                        std::span<const std::string> tokens,
                        const nlohmann::json& meta = nlohmann::json::object());

// Writes the HTML page to `html_path` and a JSON sidecar next to it (same
// stem, ".json") holding {"config": meta, "tokens": [...], "tree": ...}.
// Throws Error when either file cannot be written.
void write_explanation(const ExplainedNode& root,
                       std::span<const std::string> tokens,
                       const std::filesystem::path& html_path,
                       const nlohmann::json& meta = nlohmann::json::object());

}  // namespace hiexpl

#endif  // HIEXPL_HIERARCHY_HPP_
