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

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hiexpl/attribution.hpp"
#include "hiexpl/corpus.hpp"
#include "hiexpl/error.hpp"
#include "hiexpl/eval.hpp"
#include "hiexpl/hierarchy.hpp"
#include "hiexpl/serialize.hpp"

namespace hiexpl::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Bad flags, missing inputs, inconsistent configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

void require_file(const std::string& path, const char* flag) {
  require(path, flag);
  if (!fs::is_regular_file(path)) {
    throw UsageError(std::string(flag) + ": no such file '" + path + "'");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t class_count(const RunConfig& cfg, std::span<const RawExample> raw) {
  if (cfg.classes != 0) return cfg.classes;
  std::size_t top = 1;
  for (const RawExample& ex : raw) top = std::max(top, ex.label);
  return top + 1;
}

std::vector<TokenSeq> sequences(std::span<const LabeledExample> data) {
  std::vector<TokenSeq> out;
  out.reserve(data.size());
  for (const LabeledExample& ex : data) out.push_back(ex.seq);
  return out;
}

AttributionQuery base_query(const RunConfig& cfg) {
  AttributionQuery q;
  try {
    q.method = parse_method(cfg.method);
    q.sampler = parse_sampler(cfg.sampler);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  q.context_size = cfg.context_size;
  q.samples = cfg.samples;
  q.seed = cfg.seed;
  try {
    q.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return q;
}

bool needs_lm(const AttributionQuery& q) {
  const bool sampled = q.method == AttributionMethod::kSOC ||
                       q.method == AttributionMethod::kSCD;
  const bool lm_sampler = q.sampler == SamplerKind::kLmMonteCarlo ||
                          q.sampler == SamplerKind::kLmExhaustive;
  return sampled && lm_sampler && q.context_size > 0;
}

bool needs_corpus(const AttributionQuery& q) {
  return q.method == AttributionMethod::kStatistic ||
         (q.method == AttributionMethod::kSOC && q.sampler == SamplerKind::kCorpus);
}

std::optional<LmBundle> maybe_load_lm(const RunConfig& cfg, const Vocab& vocab,
                                      const AttributionQuery& q) {
  if (cfg.lm.empty()) {
    if (needs_lm(q)) {
      throw UsageError("method " + cfg.method + " with sampler " + cfg.sampler +
                       " needs --lm");
    }
    return std::nullopt;
  }
  require_file(cfg.lm, "--lm");
  LmBundle lm = load_lm(cfg.lm);
  if (!(lm.vocab == vocab)) {
    throw UsageError("language model vocabulary does not match the classifier");
  }
  return lm;
}

// Models and data shared by explain, eval and sweep.
struct Loaded {
  Vocab vocab;
  std::optional<ClassifierBundle> classifier;
  std::optional<LstmClassifier> lstm;
  std::optional<LmBundle> lm;
  std::optional<LinearSurrogate> surrogate;
  SurrogateStats surrogate_stats;
  std::vector<TokenSeq> corpus;

  ExplainContext context(bool use_surrogate) const {
    ExplainContext ctx;
    if (use_surrogate) {
      ctx.classifier = &*surrogate;
    } else {
      ctx.classifier = &*lstm;
      ctx.lstm = &classifier->params;
    }
    if (lm) ctx.lm = &lm->lm;
    ctx.corpus = corpus;
    return ctx;
  }
};

void load_classifier_into(Loaded& l, const RunConfig& cfg) {
  require_file(cfg.model, "--model");
  l.classifier = load_classifier(cfg.model);
  l.vocab = l.classifier->vocab;
  l.lstm.emplace(l.classifier->params);
}

// Shared setup of eval and sweep: vocabulary, surrogate, optional models.
Loaded load_for_eval(const RunConfig& cfg, const AttributionQuery& q) {
  require_file(cfg.data, "--data");
  const std::string surrogate_path =
      cfg.surrogate_data.empty() ? cfg.data : cfg.surrogate_data;
  require_file(surrogate_path, "--surrogate-data");
  const std::vector<RawExample> raw = read_tsv(surrogate_path);
  Loaded l;
  if (!cfg.model.empty()) {
    load_classifier_into(l, cfg);
  } else if (cfg.oracle) {
    l.vocab = build_vocab(raw);
  } else {
    throw UsageError("--model is required unless --oracle is set");
  }
  if (cfg.oracle && (q.method == AttributionMethod::kCD ||
                     q.method == AttributionMethod::kACD ||
                     q.method == AttributionMethod::kSCD)) {
    throw UsageError("method " + cfg.method +
                     " decomposes an LSTM and cannot explain the surrogate");
  }
  const std::vector<LabeledExample> train = encode_examples(raw, l.vocab);
  const std::size_t classes =
      l.classifier ? l.classifier->params.num_outputs() : class_count(cfg, raw);
  l.surrogate = train_surrogate(train, l.vocab.size(), classes, {},
                                &l.surrogate_stats);
  l.corpus = sequences(train);
  l.lm = maybe_load_lm(cfg, l.vocab, q);
  return l;
}

json surrogate_json(const SurrogateStats& s) {
  return {{"iterations", s.iterations},
          {"gradient_norm", s.gradient_norm},
          {"loss", s.loss},
          {"converged", s.converged}};
}

// ---------------------------------------------------------------------------
// Commands

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "--data");
  require(cfg.out, "--out");
  const std::vector<RawExample> raw = read_tsv(cfg.data);
  const Vocab vocab = build_vocab(raw);
  const std::vector<LabeledExample> data = encode_examples(raw, vocab);
  TrainStats stats;
  const LstmParams params =
      train_classifier(data, vocab.size(), class_count(cfg, raw), cfg.train, &stats);
  save_classifier(cfg.out, vocab, params);
  const json metrics = {{"config", to_json(cfg)},
                        {"final_loss", stats.final_loss},
                        {"accuracy", stats.accuracy},
                        {"steps", stats.steps},
                        {"vocab_size", vocab.size()}};
  write_text(cfg.out + ".metrics.json", metrics.dump(2) + "\n");
  out << "accuracy " << stats.accuracy << " loss " << stats.final_loss << "\n";
  return kExitOk;
}

int cmd_train_lm(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "--data");
  require(cfg.out, "--out");
  const std::vector<RawExample> raw = read_tsv(cfg.data);
  Vocab vocab;
  if (!cfg.model.empty()) {
    require_file(cfg.model, "--model");
    vocab = load_classifier(cfg.model).vocab;
  } else {
    vocab = build_vocab(raw);
  }
  const std::vector<TokenSeq> corpus = sequences(encode_examples(raw, vocab));
  LmStats stats;
  const LmParams lm = train_lm(corpus, vocab.size(), cfg.train, &stats);
  save_lm(cfg.out, vocab, lm);
  const json metrics = {{"config", to_json(cfg)},
                        {"final_loss", stats.final_loss},
                        {"perplexity", stats.perplexity},
                        {"vocab_size", vocab.size()}};
  write_text(cfg.out + ".metrics.json", metrics.dump(2) + "\n");
  out << "perplexity " << stats.perplexity << "\n";
  return kExitOk;
}

int cmd_explain(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  const AttributionQuery q = base_query(cfg);
  Loaded l;
  load_classifier_into(l, cfg);
  l.lm = maybe_load_lm(cfg, l.vocab, q);
  if (!cfg.data.empty()) {
    require_file(cfg.data, "--data");
    l.corpus = sequences(load_tsv(cfg.data, l.vocab));
  }
  if (needs_corpus(q) && l.corpus.empty()) {
    throw UsageError("method " + cfg.method + " needs a corpus (--data)");
  }

  std::vector<std::string> tokens;
  std::optional<AnnotatedTree> tree;
  if (!cfg.sentence.empty()) {
    tokens = tokenize(cfg.sentence);
  } else if (!cfg.trees.empty()) {
    require_file(cfg.trees, "--trees");
    std::vector<AnnotatedTree> trees = load_trees(cfg.trees, false);
    if (cfg.index >= trees.size()) {
      throw UsageError("--index " + std::to_string(cfg.index) + " but " +
                       cfg.trees + " holds " + std::to_string(trees.size()) +
                       " trees");
    }
    tree = std::move(trees[cfg.index]);
    tokens = tree_tokens(*tree);
  } else {
    throw UsageError("explain needs --sentence or --trees");
  }
  const TokenSeq seq = encode(tokens, l.vocab);
  const PhraseScorer scorer = make_scorer(l.context(false), q);

  ExplainedNode root;
  if (!cfg.phrase.empty()) {
    Span span;
    try {
      span = parse_span(cfg.phrase);
      check_span(span, seq.size());
    } catch (const Error& e) {
      throw UsageError(std::string("--phrase: ") + e.what());
    }
    root = explain_span(scorer, seq, span);
  } else if (tree) {
    root = explain_tree(scorer, seq, *tree);
  } else {
    root = agglomerate(scorer, seq).tree;
  }
  write_explanation(root, tokens, cfg.out, to_json(cfg));
  out << "root " << to_string(root.span) << " display " << root.display
      << " target " << root.score.target_class() << " scores";
  for (double v : root.score.per_class()) out << " " << v;
  out << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  const AttributionQuery q = base_query(cfg);
  const Loaded l = load_for_eval(cfg, q);
  if (needs_corpus(q) && l.corpus.empty()) {
    throw UsageError("method " + cfg.method + " needs a corpus");
  }
  const std::vector<TokenSeq> eval_set = sequences(load_tsv(cfg.data, l.vocab));
  const PhraseScorer scorer = make_scorer(l.context(cfg.oracle), q);

  EvalReport report;
  report.method = cfg.method;
  report.config = to_json(cfg);
  report.word_rho = word_rho(scorer, *l.surrogate, eval_set, &report.records);
  if (!cfg.trees.empty()) {
    require_file(cfg.trees, "--trees");
    const std::vector<AnnotatedTree> trees = load_trees(cfg.trees, true);
    report.phrase_rho = phrase_rho(scorer, trees, l.vocab, &report.phrase_records);
  }
  json j = to_json(report);
  j["surrogate"] = surrogate_json(l.surrogate_stats);
  write_text(cfg.out, j.dump(2) + "\n");
  out << "word_rho " << report.word_rho;
  if (report.phrase_rho) out << " phrase_rho " << *report.phrase_rho;
  out << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  if (cfg.grid_n.empty() || cfg.grid_k.empty() || cfg.seeds.empty()) {
    throw UsageError("sweep grid is empty (grid_n, grid_k and seeds need values)");
  }
  const AttributionQuery q = base_query(cfg);
  Loaded l = load_for_eval(cfg, q);
  if (!l.lm && cfg.grid_n != std::vector<std::size_t>{0}) {
    throw UsageError("sweep samples contexts and needs --lm");
  }
  const std::vector<TokenSeq> eval_set = sequences(load_tsv(cfg.data, l.vocab));
  const ExplainContext ctx = l.context(cfg.oracle);
  const ScorerFactory factory = [&](std::size_t n, std::size_t k, SamplerKind sampler,
                                    std::uint64_t seed) {
    AttributionQuery qq = q;
    qq.method = AttributionMethod::kSOC;
    qq.context_size = n;
    qq.samples = k;
    qq.sampler = sampler;
    qq.seed = seed;
    return make_scorer(ctx, qq);
  };
  SweepGrid grid{cfg.grid_n, cfg.grid_k, cfg.seeds, cfg.grid_padding};
  SweepReport report = sweep(factory, *l.surrogate, eval_set, grid);
  json j = to_json(report);
  j["run"] = to_json(cfg);
  j["surrogate"] = surrogate_json(l.surrogate_stats);
  write_text(cfg.out, j.dump(2) + "\n");
  fs::path csv = cfg.out;
  csv.replace_extension(".csv");
  write_text(csv, to_csv(report));
  out << "rows " << report.rows.size() << "\n";
  return kExitOk;
}

int cmd_adversarial(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  AdversarialConfig c = AdversarialConfig::defaults();
  c.seed = cfg.seed;
  c.train_size = cfg.train_size;
  c.eval_size = cfg.eval_size;
  c.context_size = cfg.context_size;
  c.samples = cfg.samples;
  const AdversarialReport report = adversarial_experiment(c);
  json j = to_json(report);
  j["run"] = to_json(cfg);
  write_text(cfg.out, j.dump(2) + "\n");
  for (std::size_t m = 0; m < report.normal.size(); ++m) {
    out << report.normal[m].method << " normal " << report.normal[m].word_rho
        << " adversarial " << report.adversarial[m].word_rho << "\n";
  }
  return kExitOk;
}

int cmd_render(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.input, "--input");
  require(cfg.out, "--out");
  json doc;
  try {
    doc = json::parse(read_text(cfg.input));
  } catch (const json::exception& e) {
    throw UsageError(cfg.input + ": " + e.what());
  }
  if (!doc.contains("tree") || !doc.contains("tokens")) {
    throw UsageError(cfg.input + " is not an explanation file");
  }
  const ExplainedNode root = node_from_json(doc["tree"]);
  const auto tokens = doc["tokens"].get<std::vector<std::string>>();
  write_text(cfg.out, render_html(root, tokens, to_json(cfg)));
  out << "nodes " << node_count(root) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Flag plumbing

struct Binding {
  CLI::Option* option;
  std::function<void(RunConfig&, const RunConfig&)> copy;
};

template <typename T>
void add_bound(CLI::App* app, std::vector<Binding>& bindings, RunConfig& flags,
          const std::string& name, T RunConfig::*field, const std::string& help) {
  CLI::Option* opt = app->add_option(name, flags.*field, help);
  bindings.push_back({opt, [field](RunConfig& d, const RunConfig& s) {
                        d.*field = s.*field;
                      }});
}

template <typename T>
void add_bound_train(CLI::App* app, std::vector<Binding>& bindings, RunConfig& flags,
                const std::string& name, T TrainConfig::*field,
                const std::string& help) {
  CLI::Option* opt = app->add_option(name, flags.train.*field, help);
  bindings.push_back({opt, [field](RunConfig& d, const RunConfig& s) {
                        d.train.*field = s.train.*field;
                      }});
}

void add_common(CLI::App* app, std::vector<Binding>& b, RunConfig& f,
                std::string& config_path) {
  app->add_option("--config", config_path, "JSON config file; flags override it");
  add_bound(app, b, f, "--data", &RunConfig::data, "TSV dataset (label<TAB>sentence)");
  add_bound(app, b, f, "--trees", &RunConfig::trees, "tree file, one s-expression per line");
  add_bound(app, b, f, "--model", &RunConfig::model, "classifier model file");
  add_bound(app, b, f, "--lm", &RunConfig::lm, "language model file");
  add_bound(app, b, f, "--out", &RunConfig::out, "output path");
  add_bound(app, b, f, "--input", &RunConfig::input, "explanation JSON to render");
  add_bound(app, b, f, "--sentence", &RunConfig::sentence, "sentence to explain");
  add_bound(app, b, f, "--phrase", &RunConfig::phrase, "phrase span i:j");
  add_bound(app, b, f, "--index", &RunConfig::index, "tree index within --trees");
  add_bound(app, b, f, "--surrogate-data", &RunConfig::surrogate_data,
       "TSV used to fit the bag-of-words reference (default --data)");
  add_bound(app, b, f, "--classes", &RunConfig::classes, "class count (default from labels)");
  add_bound(app, b, f, "--method", &RunConfig::method,
       "cd|acd|scd|soc|occlusion|directfeed|statistic");
  add_bound(app, b, f, "--sampler", &RunConfig::sampler, "lm|exhaustive|pad|corpus");
  add_bound(app, b, f, "--context-size,-N", &RunConfig::context_size, "context size N");
  add_bound(app, b, f, "--samples,-K", &RunConfig::samples, "sample count K");
  add_bound(app, b, f, "--seed", &RunConfig::seed, "random seed");
  add_bound(app, b, f, "--grid-n", &RunConfig::grid_n, "sweep N values");
  add_bound(app, b, f, "--grid-k", &RunConfig::grid_k, "sweep K values");
  add_bound(app, b, f, "--seeds", &RunConfig::seeds, "sweep seeds");
  add_bound(app, b, f, "--train-size", &RunConfig::train_size, "adversarial training size");
  add_bound(app, b, f, "--eval-size", &RunConfig::eval_size, "adversarial eval size");
  CLI::Option* oracle = app->add_flag("--oracle", f.oracle,
                                      "explain the bag-of-words reference model");
  b.push_back({oracle, [](RunConfig& d, const RunConfig& s) { d.oracle = s.oracle; }});
  add_bound_train(app, b, f, "--epochs", &TrainConfig::epochs, "training epochs");
  add_bound_train(app, b, f, "--embed-dim", &TrainConfig::embed_dim, "embedding size");
  add_bound_train(app, b, f, "--hidden-dim", &TrainConfig::hidden_dim, "hidden size");
  add_bound_train(app, b, f, "--batch-size", &TrainConfig::batch_size, "mini-batch size");
  add_bound_train(app, b, f, "--train-seed", &TrainConfig::seed, "training seed");
  CLI::Option* lr = app->add_option("--lr", f.train.adam.learning_rate, "Adam step size");
  b.push_back({lr, [](RunConfig& d, const RunConfig& s) {
                 d.train.adam.learning_rate = s.train.adam.learning_rate;
               }});
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const RunConfig& c) {
  return {{"data", c.data},
          {"trees", c.trees},
          {"model", c.model},
          {"lm", c.lm},
          {"out", c.out},
          {"input", c.input},
          {"sentence", c.sentence},
          {"phrase", c.phrase},
          {"surrogate_data", c.surrogate_data},
          {"index", c.index},
          {"classes", c.classes},
          {"method", c.method},
          {"sampler", c.sampler},
          {"context_size", c.context_size},
          {"samples", c.samples},
          {"seed", c.seed},
          {"oracle", c.oracle},
          {"grid_n", c.grid_n},
          {"grid_k", c.grid_k},
          {"seeds", c.seeds},
          {"grid_padding", c.grid_padding},
          {"train_size", c.train_size},
          {"eval_size", c.eval_size},
          {"train", hiexpl::to_json(c.train)}};
}

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  using Setter = std::function<void(const json&)>;
  const std::map<std::string, Setter> top = {
      {"data", [&](const json& v) { c.data = get_as<std::string>(v, "data"); }},
      {"trees", [&](const json& v) { c.trees = get_as<std::string>(v, "trees"); }},
      {"model", [&](const json& v) { c.model = get_as<std::string>(v, "model"); }},
      {"lm", [&](const json& v) { c.lm = get_as<std::string>(v, "lm"); }},
      {"out", [&](const json& v) { c.out = get_as<std::string>(v, "out"); }},
      {"input", [&](const json& v) { c.input = get_as<std::string>(v, "input"); }},
      {"sentence", [&](const json& v) { c.sentence = get_as<std::string>(v, "sentence"); }},
      {"phrase", [&](const json& v) { c.phrase = get_as<std::string>(v, "phrase"); }},
      {"surrogate_data",
       [&](const json& v) { c.surrogate_data = get_as<std::string>(v, "surrogate_data"); }},
      {"index", [&](const json& v) { c.index = get_as<std::size_t>(v, "index"); }},
      {"classes", [&](const json& v) { c.classes = get_as<std::size_t>(v, "classes"); }},
      {"method", [&](const json& v) { c.method = get_as<std::string>(v, "method"); }},
      {"sampler", [&](const json& v) { c.sampler = get_as<std::string>(v, "sampler"); }},
      {"context_size",
       [&](const json& v) { c.context_size = get_as<std::size_t>(v, "context_size"); }},
      {"samples", [&](const json& v) { c.samples = get_as<std::size_t>(v, "samples"); }},
      {"seed", [&](const json& v) { c.seed = get_as<std::uint64_t>(v, "seed"); }},
      {"oracle", [&](const json& v) { c.oracle = get_as<bool>(v, "oracle"); }},
      {"grid_n",
       [&](const json& v) { c.grid_n = get_as<std::vector<std::size_t>>(v, "grid_n"); }},
      {"grid_k",
       [&](const json& v) { c.grid_k = get_as<std::vector<std::size_t>>(v, "grid_k"); }},
      {"seeds",
       [&](const json& v) { c.seeds = get_as<std::vector<std::uint64_t>>(v, "seeds"); }},
      {"grid_padding",
       [&](const json& v) { c.grid_padding = get_as<bool>(v, "grid_padding"); }},
      {"train_size",
       [&](const json& v) { c.train_size = get_as<std::size_t>(v, "train_size"); }},
      {"eval_size",
       [&](const json& v) { c.eval_size = get_as<std::size_t>(v, "eval_size"); }},
  };
  TrainConfig& t = c.train;
  const std::map<std::string, Setter> train = {
      {"embed_dim", [&](const json& v) { t.embed_dim = get_as<std::size_t>(v, "embed_dim"); }},
      {"hidden_dim",
       [&](const json& v) { t.hidden_dim = get_as<std::size_t>(v, "hidden_dim"); }},
      {"epochs", [&](const json& v) { t.epochs = get_as<std::size_t>(v, "epochs"); }},
      {"batch_size",
       [&](const json& v) { t.batch_size = get_as<std::size_t>(v, "batch_size"); }},
      {"learning_rate",
       [&](const json& v) { t.adam.learning_rate = get_as<double>(v, "learning_rate"); }},
      {"beta1", [&](const json& v) { t.adam.beta1 = get_as<double>(v, "beta1"); }},
      {"beta2", [&](const json& v) { t.adam.beta2 = get_as<double>(v, "beta2"); }},
      {"epsilon", [&](const json& v) { t.adam.epsilon = get_as<double>(v, "epsilon"); }},
      {"clip_norm", [&](const json& v) { t.clip_norm = get_as<double>(v, "clip_norm"); }},
      {"init_scale", [&](const json& v) { t.init_scale = get_as<double>(v, "init_scale"); }},
      {"forget_bias",
       [&](const json& v) { t.forget_bias = get_as<double>(v, "forget_bias"); }},
      {"mask_prob", [&](const json& v) { t.mask_prob = get_as<double>(v, "mask_prob"); }},
      {"seed", [&](const json& v) { t.seed = get_as<std::uint64_t>(v, "train.seed"); }},
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "train") {
      if (!value.is_object()) throw InvalidArgument("config 'train' must be an object");
      for (const auto& [tk, tv] : value.items()) {
        const auto it = train.find(tk);
        if (it == train.end()) throw InvalidArgument("unknown config key 'train." + tk + "'");
        it->second(tv);
      }
      continue;
    }
    const auto it = top.find(key);
    if (it == top.end()) throw InvalidArgument("unknown config key '" + key + "'");
    it->second(value);
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical phrase importance for LSTM text classifiers"};
  app.require_subcommand(1);
  RunConfig flags;
  std::string config_path;
  std::vector<Binding> bindings;

  using Command = std::function<int(const RunConfig&, std::ostream&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"train", "train an LSTM classifier", cmd_train},
      {"train-lm", "train forward and backward language models", cmd_train_lm},
      {"explain", "explain one sentence", cmd_explain},
      {"eval", "word and phrase correlation against references", cmd_eval},
      {"sweep", "word correlation over N x K x seed grids", cmd_sweep},
      {"adversarial", "adversarial-model experiment on synthetic data",
       cmd_adversarial},
      {"render", "render an explanation JSON file to HTML", cmd_render},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, bindings, flags, config_path);
    subs.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      if (!fs::is_regular_file(config_path)) {
        throw UsageError("--config: no such file '" + config_path + "'");
      }
      json j;
      try {
        j = json::parse(read_text(config_path));
      } catch (const json::exception& e) {
        throw UsageError(config_path + ": " + e.what());
      }
      try {
        apply_json(cfg, j);
      } catch (const InvalidArgument& e) {
        throw UsageError(config_path + ": " + e.what());
      }
    }
    for (const Binding& b : bindings) {
      if (b.option->count() > 0) b.copy(cfg, flags);
    }
    for (const auto& [sub, fn] : subs) {
      if (sub->parsed()) return fn(cfg, out);
    }
    throw UsageError("no command given");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace hiexpl::cli
