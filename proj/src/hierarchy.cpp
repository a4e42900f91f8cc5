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

#include "hiexpl/hierarchy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "hiexpl/error.hpp"

namespace hiexpl {
namespace {

ExplainedNode make_node(const PhraseScorer& scorer, const TokenSeq& seq,
                        Span span) {
  ExplainedNode node;
  node.span = span;
  try {
    node.score = scorer(seq, span);
  } catch (const Error& e) {
    throw ScoringError("scoring span " + to_string(span) + ": " + e.what());
  }
  node.display = display_value(node.score);
  return node;
}

ExplainedNode explain_subtree(const PhraseScorer& scorer, const TokenSeq& seq,
                              const AnnotatedTree& tree) {
  ExplainedNode node = make_node(scorer, seq, tree.span);
  node.children.reserve(tree.children.size());
  for (const AnnotatedTree& child : tree.children) {
    node.children.push_back(explain_subtree(scorer, seq, child));
  }
  return node;
}

double max_abs_display(const ExplainedNode& node) {
  double m = std::abs(node.display);
  for (const ExplainedNode& c : node.children) m = std::max(m, max_abs_display(c));
  return m;
}

std::string escape_html(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string colour(double display, double scale) {
  const double a = scale > 0.0 ? std::abs(display) / scale : 0.0;
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - a)));
  char buf[32];
  if (display > 0.0 && scale > 0.0) {
    std::snprintf(buf, sizeof(buf), "#ff%02x%02x", fade, fade);
  } else if (display < 0.0 && scale > 0.0) {
    std::snprintf(buf, sizeof(buf), "#%02x%02xff", fade, fade);
  } else {
    std::snprintf(buf, sizeof(buf), "#ffffff");
  }
  return buf;
}

void render_node(const ExplainedNode& node, std::span<const std::string> tokens,
                 double scale, std::string& out) {
  char value[32];
  std::snprintf(value, sizeof(value), "%.4f", node.display);
  out += "<div class=\"node\" style=\"background:" + colour(node.display, scale) +
         "\" title=\"" + to_string(node.span) + " " + value + "\">";
  if (node.is_leaf()) {
    std::string text;
    for (std::size_t i = node.span.start; i < node.span.end; ++i) {
      if (!text.empty()) text += ' ';
      text += i < tokens.size() ? tokens[i] : std::string("?");
    }
    out += "<span class=\"tok\">" + escape_html(text) + "</span>";
  } else {
    out += "<div class=\"row\">";
    for (const ExplainedNode& c : node.children) render_node(c, tokens, scale, out);
    out += "</div>";
  }
  out += "<span class=\"val\">" + std::string(value) + "</span></div>\n";
}

}  // namespace

std::size_t node_count(const ExplainedNode& node) {
  std::size_t n = 1;
  for (const ExplainedNode& c : node.children) n += node_count(c);
  return n;
}

void check_tiling(const ExplainedNode& node, bool allow_wide_leaves) {
  if (node.span.empty()) throw InvalidArgument("empty span in explanation");
  if (node.is_leaf()) {
    if (!allow_wide_leaves && node.span.length() != 1) {
      throw InvalidArgument("leaf " + to_string(node.span) + " covers " +
                            std::to_string(node.span.length()) + " tokens");
    }
    return;
  }
  std::size_t at = node.span.start;
  for (const ExplainedNode& c : node.children) {
    if (c.span.start != at) {
      throw InvalidArgument("children of " + to_string(node.span) +
                            " do not tile it");
    }
    check_tiling(c, allow_wide_leaves);
    at = c.span.end;
  }
  if (at != node.span.end) {
    throw InvalidArgument("children of " + to_string(node.span) +
                          " do not tile it");
  }
}

ExplainedNode explain_tree(const PhraseScorer& scorer, const TokenSeq& seq,
                           const AnnotatedTree& tree) {
  if (tree.span != Span{0, seq.size()}) {
    throw InvalidArgument("tree covers " + to_string(tree.span) +
                          " but the sentence has " + std::to_string(seq.size()) +
                          " tokens");
  }
  return explain_subtree(scorer, seq, tree);
}

ExplainedNode explain_span(const PhraseScorer& scorer, const TokenSeq& seq,
                           Span span) {
  check_span(span, seq.size());
  return make_node(scorer, seq, span);
}

Agglomeration agglomerate(const PhraseScorer& scorer, const TokenSeq& seq) {
  Agglomeration out;
  const auto score_of = [&](Span span) -> const AttributionScore& {
    auto it = out.scores.find(span);
    if (it == out.scores.end()) {
      it = out.scores.emplace(span, make_node(scorer, seq, span).score).first;
    }
    return it->second;
  };
  const auto node_for = [&](Span span) {
    ExplainedNode node;
    node.span = span;
    node.score = score_of(span);
    node.display = display_value(node.score);
    return node;
  };

  std::vector<ExplainedNode> current;
  HierarchyLevel level;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    level.spans.push_back(Span{i, i + 1});
    current.push_back(node_for(Span{i, i + 1}));
  }
  out.levels.push_back(level);

  while (current.size() > 1) {
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t i = 0; i + 1 < current.size(); ++i) {
      const Span merged{current[i].span.start, current[i + 1].span.end};
      const double mag = std::abs(display_value(score_of(merged)));
      if (mag > best_mag) {
        best_mag = mag;
        best = i;
      }
    }
    ExplainedNode merged =
        node_for(Span{current[best].span.start, current[best + 1].span.end});
    merged.children.push_back(std::move(current[best]));
    merged.children.push_back(std::move(current[best + 1]));
    current[best] = std::move(merged);
    current.erase(current.begin() + static_cast<long>(best) + 1);

    HierarchyLevel next;
    next.level = out.levels.size();
    for (const ExplainedNode& n : current) next.spans.push_back(n.span);
    out.levels.push_back(std::move(next));
  }
  out.tree = std::move(current.front());
  return out;
}

nlohmann::json to_json(const ExplainedNode& node) {
  nlohmann::json j;
  j["span"] = {node.span.start, node.span.end};
  j["score"] = node.score.per_class().values();
  j["target"] = node.score.target_class();
  j["display"] = node.display;
  j["children"] = nlohmann::json::array();
  for (const ExplainedNode& c : node.children) j["children"].push_back(to_json(c));
  return j;
}

ExplainedNode node_from_json(const nlohmann::json& j) {
  try {
    ExplainedNode node;
    const auto& span = j.at("span");
    if (!span.is_array() || span.size() != 2) {
      throw ParseError("explanation node: span must be [start, end]");
    }
    node.span = Span{span[0].get<std::size_t>(), span[1].get<std::size_t>()};
    std::vector<double> pc = j.at("score").get<std::vector<double>>();
    node.score = AttributionScore(Vec(std::move(pc)), j.value("target", std::size_t{0}));
    node.display = j.at("display").get<double>();
    for (const auto& c : j.at("children")) node.children.push_back(node_from_json(c));
    return node;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("explanation node: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("explanation node: ") + e.what());
  }
}

std::string render_html(const ExplainedNode& root,
                        std::span<const std::string> tokens,
                        const nlohmann::json& meta) {
  std::string out = "<!DOCTYPE html>\n";
  if (!meta.empty()) {
    // "--" may not appear inside an HTML comment.
    std::string dump = meta.dump();
    for (std::size_t at = dump.find("--"); at != std::string::npos;
         at = dump.find("--", at)) {
      dump.replace(at, 2, "- -");
    }
    out += "<!-- config " + dump + " -->\n";
  }
  out +=
      "<html><head><meta charset=\"utf-8\">"
      "<title>hierarchical explanation</title>\n<style>\n"
      "body{font-family:sans-serif;margin:1em}\n"
      ".node{display:inline-flex;flex-direction:column;align-items:center;"
      "border:1px solid #888;border-radius:3px;margin:2px;padding:2px}\n"
      ".row{display:flex;align-items:flex-end}\n"
      ".tok{padding:0 3px}\n"
      ".val{font-size:0.7em;color:#333}\n"
      "</style></head><body>\n";
  render_node(root, tokens, max_abs_display(root), out);
  out += "</body></html>\n";
  return out;
}

void write_explanation(const ExplainedNode& root,
                       std::span<const std::string> tokens,
                       const std::filesystem::path& html_path,
                       const nlohmann::json& meta) {
  const auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
    if (!f) throw Error("failed writing " + p.string());
  };
  write(html_path, render_html(root, tokens, meta));
  nlohmann::json side;
  side["config"] = meta;
  side["tokens"] = std::vector<std::string>(tokens.begin(), tokens.end());
  side["tree"] = to_json(root);
  std::filesystem::path json_path = html_path;
  json_path.replace_extension(".json");
  write(json_path, side.dump(2) + "\n");
}

}  // namespace hiexpl
