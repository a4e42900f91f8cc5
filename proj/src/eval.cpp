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

#include "hiexpl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <string>

#include "hiexpl/error.hpp"
#include "hiexpl/rng.hpp"
#include "hiexpl/synthetic.hpp"

namespace hiexpl {
namespace {

// Sparse token counts of one example, PAD excluded.
struct CountRow {
  std::vector<std::pair<TokenId, double>> counts;
  std::size_t label = 0;
};

std::vector<CountRow> count_rows(std::span<const LabeledExample> data,
                                 std::size_t vocab_size) {
  std::vector<CountRow> rows;
  rows.reserve(data.size());
  for (const LabeledExample& ex : data) {
    ex.seq.check_ids(vocab_size);
    std::vector<TokenId> ids = ex.seq.ids();
    std::sort(ids.begin(), ids.end());
    CountRow row;
    row.label = ex.label;
    for (TokenId id : ids) {
      if (id == kPad) continue;
      if (!row.counts.empty() && row.counts.back().first == id) {
        row.counts.back().second += 1.0;
      } else {
        row.counts.emplace_back(id, 1.0);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Objective over a flat parameter vector [W row-major (C x V), b (C)].
class SurrogateObjective {
 public:
  SurrogateObjective(const std::vector<CountRow>& rows, std::size_t v,
                     std::size_t c, double l2)
      : rows_(rows), v_(v), c_(c), l2_(l2) {}

  std::size_t dim() const { return c_ * v_ + c_; }

  double eval(const std::vector<double>& x, std::vector<double>* grad) const {
    if (grad) grad->assign(dim(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(rows_.size());
    double loss = 0.0;
    std::vector<double> logits(c_);
    for (const CountRow& row : rows_) {
      for (std::size_t k = 0; k < c_; ++k) {
        double z = x[c_ * v_ + k];
        for (const auto& [id, n] : row.counts) z += n * x[k * v_ + id];
        logits[k] = z;
      }
      const double mx = *std::max_element(logits.begin(), logits.end());
      double total = 0.0;
      for (double& z : logits) {
        z = std::exp(z - mx);
        total += z;
      }
      loss -= inv_n * (std::log(logits[row.label] / total));
      if (!grad) continue;
      for (std::size_t k = 0; k < c_; ++k) {
        const double r =
            inv_n * (logits[k] / total - (k == row.label ? 1.0 : 0.0));
        (*grad)[c_ * v_ + k] += r;
        for (const auto& [id, n] : row.counts) (*grad)[k * v_ + id] += r * n;
      }
    }
    for (std::size_t i = 0; i < c_ * v_; ++i) {
      if (i % v_ == kPad) continue;
      loss += 0.5 * l2_ * x[i] * x[i];
      if (grad) (*grad)[i] += l2_ * x[i];
    }
    return loss;
  }

 private:
  const std::vector<CountRow>& rows_;
  std::size_t v_;
  std::size_t c_;
  double l2_;
};

double dot_flat(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

nlohmann::json records_json(const std::vector<InstanceRecord>& records) {
  nlohmann::json out = nlohmann::json::array();
  for (const InstanceRecord& r : records) {
    out.push_back({{"instance", r.instance},
                   {"span", {r.span.start, r.span.end}},
                   {"score", r.score},
                   {"reference", r.reference}});
  }
  return out;
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("pearson: lengths " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()));
  }
  if (a.size() < 2) throw InvalidArgument("pearson needs at least two points");
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw DegenerateError("pearson: constant series has no variance");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

LinearSurrogate::LinearSurrogate(Mat coefficients, Vec bias)
    : coef_(std::move(coefficients)), bias_(std::move(bias)) {
  if (coef_.rows() != bias_.size()) {
    throw DimensionError("surrogate: " + std::to_string(coef_.rows()) +
                         " coefficient rows vs " + std::to_string(bias_.size()) +
                         " biases");
  }
  if (coef_.cols() <= kPad) throw DimensionError("surrogate: empty vocabulary");
  for (std::size_t k = 0; k < coef_.rows(); ++k) coef_(k, kPad) = 0.0;
}

Vec LinearSurrogate::scores(const TokenSeq& seq) const {
  seq.check_ids(vocab_size());
  Vec out = bias_;
  for (TokenId id : seq) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += coef_(k, id);
  }
  return out;
}

Vec LinearSurrogate::column(TokenId token) const {
  if (token >= vocab_size()) throw InvalidArgument("surrogate: token out of range");
  Vec out(coef_.rows());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = coef_(k, token);
  return out;
}

LinearSurrogate train_surrogate(std::span<const LabeledExample> data,
                                std::size_t vocab_size, std::size_t num_classes,
                                const SurrogateConfig& config,
                                SurrogateStats* stats) {
  if (data.empty()) throw InvalidArgument("train_surrogate: no data");
  if (num_classes < 2) throw InvalidArgument("train_surrogate: need 2+ classes");
  for (const LabeledExample& ex : data) {
    if (ex.label >= num_classes) {
      throw InvalidArgument("train_surrogate: label out of range");
    }
  }
  const std::vector<CountRow> rows = count_rows(data, vocab_size);
  const SurrogateObjective f(rows, vocab_size, num_classes, config.l2);

  // Limited-memory BFGS with backtracking (Armijo) line search.
  constexpr std::size_t kMemory = 10;
  std::vector<double> x(f.dim(), 0.0);
  std::vector<double> g;
  double fx = f.eval(x, &g);
  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  SurrogateStats st;
  std::vector<double> d(x.size());
  std::vector<double> x_new(x.size());
  std::vector<double> g_new;
  for (st.iterations = 0; st.iterations < config.max_iterations; ++st.iterations) {
    st.gradient_norm = std::sqrt(dot_flat(g, g));
    if (st.gradient_norm < config.tolerance) {
      st.converged = true;
      break;
    }
    // Two-loop recursion.
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = dot_flat(s_hist[i], d) / dot_flat(y_hist[i], s_hist[i]);
      for (std::size_t j = 0; j < d.size(); ++j) d[j] -= alpha[i] * y_hist[i][j];
    }
    if (!s_hist.empty()) {
      const double gamma = dot_flat(s_hist.back(), y_hist.back()) /
                           dot_flat(y_hist.back(), y_hist.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = dot_flat(y_hist[i], d) / dot_flat(y_hist[i], s_hist[i]);
      for (std::size_t j = 0; j < d.size(); ++j) d[j] += (alpha[i] - beta) * s_hist[i][j];
    }
    for (double& v : d) v = -v;
    double slope = dot_flat(g, d);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      for (std::size_t j = 0; j < d.size(); ++j) d[j] = -g[j];
      slope = -dot_flat(g, g);
    }
    double t = 1.0;
    double f_new = 0.0;
    bool stalled = false;
    for (int tries = 0;; ++tries) {
      for (std::size_t j = 0; j < x.size(); ++j) x_new[j] = x[j] + t * d[j];
      f_new = f.eval(x_new, &g_new);
      if (f_new <= fx + 1e-4 * t * slope) break;
      // No decrease representable at this precision.
      if (tries > 60) {
        stalled = true;
        break;
      }
      t *= 0.5;
    }
    if (stalled) break;
    {
      std::vector<double> s(x.size());
      std::vector<double> y(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) {
        s[j] = x_new[j] - x[j];
        y[j] = g_new[j] - g[j];
      }
      if (dot_flat(s, y) > 1e-12) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        if (s_hist.size() > kMemory) {
          s_hist.pop_front();
          y_hist.pop_front();
        }
      }
    }
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
  }
  st.gradient_norm = std::sqrt(dot_flat(g, g));
  st.converged = st.gradient_norm < config.tolerance;
  st.loss = fx;
  if (!std::isfinite(fx)) throw TrainingError("surrogate training diverged");
  if (stats) *stats = st;
  Mat coef(num_classes, vocab_size);
  Vec bias(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (std::size_t id = 0; id < vocab_size; ++id) coef(k, id) = x[k * vocab_size + id];
    bias[k] = x[num_classes * vocab_size + k];
  }
  return LinearSurrogate(std::move(coef), std::move(bias));
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["method"] = report.method;
  j["word_rho"] = report.word_rho;
  j["phrase_rho"] = report.phrase_rho ? nlohmann::json(*report.phrase_rho)
                                      : nlohmann::json(nullptr);
  j["records"] = records_json(report.records);
  j["phrase_records"] = records_json(report.phrase_records);
  j["config"] = report.config;
  return j;
}

PhraseScorer make_scorer(const ExplainContext& context, AttributionQuery base) {
  base.validate();
  return [context, base](const TokenSeq& seq, Span span) {
    AttributionQuery q = base;
    q.phrase = span;
    return attribute(context, seq, q);
  };
}

double word_rho(const PhraseScorer& scorer, const LinearSurrogate& surrogate,
                std::span<const TokenSeq> eval_set,
                std::vector<InstanceRecord>* records) {
  if (eval_set.empty()) throw InvalidArgument("word_rho: empty evaluation set");
  std::vector<double> scores;
  std::vector<double> refs;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const TokenSeq& seq = eval_set[i];
    for (std::size_t p = 0; p < seq.size(); ++p) {
      const Span span{p, p + 1};
      const AttributionScore s = scorer(seq, span);
      const double ref =
          display_value(AttributionScore(surrogate.column(seq[p]), s.target_class()));
      scores.push_back(display_value(s));
      refs.push_back(ref);
      if (records) records->push_back(InstanceRecord{i, span, scores.back(), ref});
    }
  }
  return pearson(scores, refs);
}

double phrase_rho(const PhraseScorer& scorer, std::span<const AnnotatedTree> trees,
                  const Vocab& vocab, std::vector<InstanceRecord>* records) {
  std::vector<double> scores;
  std::vector<double> refs;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const std::vector<std::string> tokens = tree_tokens(trees[i]);
    const TokenSeq seq = encode(tokens, vocab);
    std::vector<const AnnotatedTree*> stack{&trees[i]};
    while (!stack.empty()) {
      const AnnotatedTree* node = stack.back();
      stack.pop_back();
      if (node->is_leaf()) continue;
      for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) {
        stack.push_back(&*it);
      }
      if (!node->annotated) continue;
      const double s = display_value(scorer(seq, node->span));
      scores.push_back(s);
      refs.push_back(node->score);
      if (records) records->push_back(InstanceRecord{i, node->span, s, node->score});
    }
  }
  return pearson(scores, refs);
}

SweepReport sweep(const ScorerFactory& factory, const LinearSurrogate& surrogate,
                  std::span<const TokenSeq> eval_set, const SweepGrid& grid) {
  if (grid.context_sizes.empty() || grid.sample_counts.empty() ||
      grid.seeds.empty()) {
    throw InvalidArgument("sweep: every grid axis needs at least one value");
  }
  std::vector<std::pair<SamplerKind, std::string>> variants = {
      {SamplerKind::kLmMonteCarlo, "soc"}};
  if (grid.include_padding) variants.emplace_back(SamplerKind::kPadding, "soc-pad");

  SweepReport report;
  for (std::size_t n : grid.context_sizes) {
    for (std::size_t k : grid.sample_counts) {
      for (const auto& [sampler, name] : variants) {
        const std::size_t first = report.rows.size();
        std::vector<double> rhos;
        for (std::uint64_t seed : grid.seeds) {
          const double rho = word_rho(factory(n, k, sampler, seed), surrogate, eval_set);
          rhos.push_back(rho);
          report.rows.push_back(SweepRow{n, k, seed, name, rho, 0.0});
        }
        const double var = sample_variance(rhos);
        for (std::size_t r = first; r < report.rows.size(); ++r) {
          report.rows[r].variance = var;
        }
      }
    }
  }
  report.config = {{"context_sizes", grid.context_sizes},
                   {"sample_counts", grid.sample_counts},
                   {"seeds", grid.seeds},
                   {"include_padding", grid.include_padding}};
  return report;
}

nlohmann::json to_json(const SweepReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SweepRow& r : report.rows) {
    rows.push_back({{"N", r.n},
                    {"K", r.k},
                    {"seed", r.seed},
                    {"method", r.method},
                    {"word_rho", r.word_rho},
                    {"variance", r.variance}});
  }
  return {{"config", report.config}, {"rows", rows}};
}

std::string to_csv(const SweepReport& report) {
  std::string out = "N,K,seed,method,word_rho,variance\n";
  for (const SweepRow& r : report.rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.k) + "," +
           std::to_string(r.seed) + "," + r.method + "," +
           format_double(r.word_rho) + "," + format_double(r.variance) + "\n";
  }
  return out;
}

AdversarialConfig AdversarialConfig::defaults() {
  AdversarialConfig c;
  c.classifier.embed_dim = 16;
  c.classifier.hidden_dim = 16;
  c.classifier.epochs = 15;
  c.classifier.seed = 11;
  c.lm.embed_dim = 16;
  c.lm.hidden_dim = 24;
  c.lm.epochs = 10;
  c.lm.seed = 13;
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"clip_norm", c.clip_norm},
          {"init_scale", c.init_scale},
          {"forget_bias", c.forget_bias},
          {"mask_prob", c.mask_prob},
          {"seed", c.seed}};
}

AdversarialReport adversarial_experiment(const AdversarialConfig& config) {
  const SentimentLexicon lexicon = SentimentLexicon::standard();
  const std::vector<RawExample> train_raw =
      sentiment_grammar(config.train_size, Rng::derive(config.seed, 0), lexicon);
  const std::vector<RawExample> eval_raw =
      sentiment_grammar(config.eval_size, Rng::derive(config.seed, 1), lexicon);
  const std::vector<RawExample> inverted = inverted_single_words(lexicon);

  std::vector<RawExample> all = train_raw;
  all.insert(all.end(), inverted.begin(), inverted.end());
  const Vocab vocab = build_vocab(all);
  const std::size_t v = vocab.size();

  const std::vector<LabeledExample> train = encode_examples(train_raw, vocab);
  std::vector<LabeledExample> train_adv = train;
  // The single-word examples are few; repeat them so they carry weight.
  const std::vector<LabeledExample> inv = encode_examples(inverted, vocab);
  const std::size_t repeats = std::max<std::size_t>(1, train.size() / (4 * inv.size()));
  for (std::size_t r = 0; r < repeats; ++r) {
    train_adv.insert(train_adv.end(), inv.begin(), inv.end());
  }

  std::vector<TokenSeq> eval_seqs;
  for (const LabeledExample& ex : encode_examples(eval_raw, vocab)) {
    eval_seqs.push_back(ex.seq);
  }
  std::vector<TokenSeq> corpus;
  for (const LabeledExample& ex : train) corpus.push_back(ex.seq);

  const LstmParams normal = train_classifier(train, v, 2, config.classifier);
  const LstmParams adversarial = train_classifier(train_adv, v, 2, config.classifier);
  AdversarialReport report;
  report.normal_accuracy = accuracy(normal, train);
  report.adversarial_accuracy = accuracy(adversarial, train);
  if (std::abs(report.normal_accuracy - report.adversarial_accuracy) >
      config.accuracy_tolerance) {
    throw TrainingError("sentence accuracy differs: normal " +
                        format_double(report.normal_accuracy) + " vs adversarial " +
                        format_double(report.adversarial_accuracy));
  }
  const LinearSurrogate surrogate = train_surrogate(train, v, 2);
  const LmParams lm = train_lm(corpus, v, config.lm);

  report.config = {{"train_size", config.train_size},
                   {"eval_size", config.eval_size},
                   {"seed", config.seed},
                   {"classifier", to_json(config.classifier)},
                   {"lm", to_json(config.lm)},
                   {"N", config.context_size},
                   {"K", config.samples},
                   {"inverted_repeats", repeats}};

  const auto run = [&](const LstmParams& params) {
    const LstmClassifier clf(params);
    const ExplainContext ctx{&clf, &params, &lm, corpus};
    std::vector<EvalReport> out;
    for (AttributionMethod m : {AttributionMethod::kDirectFeed, AttributionMethod::kSOC,
                                AttributionMethod::kSCD}) {
      AttributionQuery q;
      q.method = m;
      q.context_size = config.context_size;
      q.samples = config.samples;
      q.seed = config.seed;
      EvalReport r;
      r.method = std::string(method_name(m));
      r.word_rho = word_rho(make_scorer(ctx, q), surrogate, eval_seqs, &r.records);
      r.config = {{"N", q.context_size}, {"K", q.samples}, {"seed", q.seed}};
      out.push_back(std::move(r));
    }
    return out;
  };
  report.normal = run(normal);
  report.adversarial = run(adversarial);
  return report;
}

nlohmann::json to_json(const AdversarialReport& report) {
  nlohmann::json normal = nlohmann::json::array();
  nlohmann::json adv = nlohmann::json::array();
  for (const EvalReport& r : report.normal) normal.push_back(to_json(r));
  for (const EvalReport& r : report.adversarial) adv.push_back(to_json(r));
  return {{"config", report.config},
          {"normal_accuracy", report.normal_accuracy},
          {"adversarial_accuracy", report.adversarial_accuracy},
          {"normal", normal},
          {"adversarial", adv}};
}

}  // namespace hiexpl
