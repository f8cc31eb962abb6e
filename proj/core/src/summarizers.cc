#include "screensum/summarizers.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "screensum/rng.h"

namespace screensum {

using nc::Tape;
using nc::Tensor;
using nc::Var;

namespace {

constexpr std::array<std::pair<UnsupervisedAlgo, std::string_view>, 8> kAlgoNames = {{
    {UnsupervisedAlgo::TextrankTfidf, "textrank-tfidf"},
    {UnsupervisedAlgo::TextrankNeural, "textrank-neural"},
    {UnsupervisedAlgo::SummerUnsup, "summer-unsup"},
    {UnsupervisedAlgo::SummerPrior, "summer-prior"},
    {UnsupervisedAlgo::SceneSum, "scenesum"},
    {UnsupervisedAlgo::Lead, "lead"},
    {UnsupervisedAlgo::Last, "last"},
    {UnsupervisedAlgo::Mixed, "mixed"},
}};

constexpr std::array<std::pair<ModelKind, std::string_view>, 3> kModelNames = {{
    {ModelKind::SummaRunner, "summarunner"},
    {ModelKind::Summer, "summer"},
    {ModelKind::SceneSum, "scenesum"},
}};

constexpr std::array<std::pair<FixedTps, std::string_view>, 3> kFixedNames = {{
    {FixedTps::None, "none"},
    {FixedTps::OneHot, "onehot"},
    {FixedTps::Prior, "prior"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
  for (const auto& [e, name] : table)
    if (e == value) return name;
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view name) {
  for (const auto& [e, n] : table)
    if (n == name) return e;
  return std::nullopt;
}

Tensor uniform_tensor(Rng& rng, nc::Shape shape, double bound) {
  Tensor t(std::move(shape));
  for (double& v : t.values) v = rng.uniform(-bound, bound);
  return t;
}

// Width of [x_i ; v_i] fed to the classifier.
std::size_t classifier_width(const ModelConfig& config) {
  const std::size_t x = config.kind == ModelKind::Summer ? config.net.topic_dim() : config.net.contextual_dim();
  return x + (x + 2);
}

std::vector<double> max_over_columns(const Matrix& m) {
  std::vector<double> out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    out[i] = *std::max_element(r.begin(), r.end());
  }
  return out;
}

// Logits for scenes x_i against reference vectors: w . [x_i ; v_i] + beta.
Var classify(const NetContext& ctx, const std::vector<Var>& x, const std::vector<Var>& v) {
  std::vector<Var> rows;
  rows.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Var pair[] = {x[i], v[i]};
    rows.push_back(nc::concat(pair));
  }
  Var z = nc::add_row_bias(nc::matmul(nc::stack_rows(rows), ctx.param("cls.w")), ctx.param("cls.b"));
  return nc::column(z, 0);
}

}  // namespace

std::string_view algo_name(UnsupervisedAlgo algo) { return name_of(kAlgoNames, algo); }
std::optional<UnsupervisedAlgo> parse_algo(std::string_view name) { return lookup(kAlgoNames, name); }
std::string_view model_name(ModelKind kind) { return name_of(kModelNames, kind); }
std::optional<ModelKind> parse_model(std::string_view name) { return lookup(kModelNames, name); }
std::string_view fixed_tps_name(FixedTps mode) { return name_of(kFixedNames, mode); }
std::optional<FixedTps> parse_fixed_tps(std::string_view name) { return lookup(kFixedNames, name); }

EpisodeSummary summarize_unsupervised(const Screenplay& screenplay, const UnsupervisedConfig& config,
                                      const UnsupervisedResources& res) {
  EpisodeSummary out;
  out.episode_id = screenplay.episode_id;
  const std::size_t n = screenplay.size();

  auto need_embeddings = [&] {
    if (!res.embeddings)
      throw std::invalid_argument(std::string(algo_name(config.algo)) + " needs sentence embeddings");
    return scene_means(*res.embeddings, screenplay);
  };

  switch (config.algo) {
    case UnsupervisedAlgo::Lead:
      out.selection = baseline(BaselineKind::Lead, n, config.ratio, config.seed);
      return out;
    case UnsupervisedAlgo::Last:
      out.selection = baseline(BaselineKind::Last, n, config.ratio, config.seed);
      return out;
    case UnsupervisedAlgo::Mixed:
      out.selection = baseline(BaselineKind::Mixed, n, config.ratio, config.seed);
      return out;
    case UnsupervisedAlgo::TextrankTfidf: {
      if (!res.tfidf) throw std::invalid_argument("textrank-tfidf needs a tf*idf model");
      const SceneGraph g = build_tfidf_graph(*res.tfidf, screenplay, config.threshold);
      out.scores = config.power_iteration ? centrality_power_iteration(g).scores : centrality_directed(g, 0.5).scores;
      break;
    }
    case UnsupervisedAlgo::TextrankNeural: {
      const SceneGraph g = build_graph(need_embeddings(), config.threshold);
      out.scores = centrality_directed(g, config.lambda1).scores;
      break;
    }
    case UnsupervisedAlgo::SummerUnsup: {
      if (!res.tp_params || !res.tp_config)
        throw std::invalid_argument("summer-unsup needs a pretrained TP network (--tp-checkpoint)");
      const SceneGraph g = build_graph(need_embeddings(), config.threshold);
      const TpPosterior post = infer_posterior(*res.tp_params, *res.tp_config, make_input(screenplay, *res.embeddings));
      out.scores = centrality_summer(g, config.lambda1, tp_scores(post)).scores;
      break;
    }
    case UnsupervisedAlgo::SummerPrior: {
      const SceneGraph g = build_graph(need_embeddings(), config.threshold);
      const PositionPrior prior = position_prior(n, config.centers, config.sigma_fraction);
      out.scores = centrality_summer(g, config.lambda1, max_over_columns(prior.th)).scores;
      break;
    }
    case UnsupervisedAlgo::SceneSum: {
      const SceneGraph g = build_graph(need_embeddings(), config.threshold);
      out.scores = centrality_summer(g, config.lambda1, character_scores(screenplay, config.charscore_union)).scores;
      break;
    }
  }
  out.selection = select_top(CentralityScores{out.scores}, config.ratio);
  return out;
}

Model init_model(const ModelConfig& config, std::uint64_t seed, const nc::ParameterSet* pretrained) {
  if (config.fixed_tps != FixedTps::None && config.kind != ModelKind::Summer)
    throw std::invalid_argument("fixed TPs only apply to the summer model");
  if (config.fixed_tps == FixedTps::OneHot && !pretrained)
    throw std::invalid_argument("fixed one-hot TPs need a pretrained TP checkpoint");

  Model model{config, {}, std::nullopt};
  Rng rng(seed);
  init_encoder_params(model.params, config.net, rng);
  const std::size_t h = config.net.hidden;
  if (config.kind == ModelKind::Summer) {
    init_tp_head_params(model.params, config.net, rng);
  } else if (config.kind == ModelKind::SummaRunner) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(2 * h));
    model.params.add("sr.att.w", uniform_tensor(rng, {h, 2 * h}, bound));
    model.params.add("sr.att.b", uniform_tensor(rng, {h}, bound));
    model.params.add("sr.att.v", uniform_tensor(rng, {h}, 1.0 / std::sqrt(static_cast<double>(h))));
  }
  const std::size_t width = classifier_width(config);
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  model.params.add("cls.w", uniform_tensor(rng, {width, 1}, bound));
  model.params.add("cls.b", uniform_tensor(rng, {1}, bound));

  if (pretrained) {
    if (model.params.load_matching(*pretrained) == 0)
      throw std::invalid_argument("pretrained checkpoint shares no parameters with the model");
    if (config.fixed_tps == FixedTps::OneHot) model.fixed_tp_net = *pretrained;
  }
  return model;
}

std::vector<double> SalienceFeatures::concat() const {
  std::vector<double> out = b;
  out.push_back(c);
  out.push_back(u);
  return out;
}

SalienceFeatures salience(std::span<const double> s, std::span<const double> d) {
  if (s.size() != d.size()) throw std::invalid_argument("salience: dimension mismatch");
  SalienceFeatures f;
  double dot = 0.0, ns = 0.0, nd = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    f.b.push_back(s[i] * d[i]);
    dot += s[i] * d[i];
    ns += s[i] * s[i];
    nd += d[i] * d[i];
  }
  if (ns == 0.0 || nd == 0.0) throw std::invalid_argument("salience: zero vector");
  const double norms = std::sqrt(ns) * std::sqrt(nd);
  f.c = dot / norms;
  f.u = dot / std::max(norms, 1e-8);
  return f;
}

Var salience(Var s, Var d) {
  Var parts[] = {nc::mul(s, d), nc::cosine_similarity(s, d), nc::normalized_dot(s, d)};
  return nc::concat(parts);
}

Var global_content(const NetContext& ctx, const std::vector<Var>& contextual, std::vector<double>* weights) {
  if (contextual.empty()) throw std::invalid_argument("global_content: no scenes");
  Var w = ctx.param("sr.att.w");
  Var b = ctx.param("sr.att.b");
  Var v = ctx.param("sr.att.v");
  std::vector<Var> scores;
  scores.reserve(contextual.size());
  for (const Var& s : contextual) scores.push_back(nc::dot(v, nc::tanh(nc::add(nc::matmul(w, s), b))));
  Var alpha = nc::softmax_with_temperature(nc::concat(scores), 1.0);
  if (weights) *weights = alpha.value().values;
  return nc::weighted_sum(alpha, contextual);
}

std::optional<TpColumns> fixed_columns(Model& model, const EpisodeInput& input) {
  TpColumns cols;
  switch (model.config.fixed_tps) {
    case FixedTps::None:
      return std::nullopt;
    case FixedTps::OneHot: {
      const TpPosterior post = infer_posterior(*model.fixed_tp_net, model.config.net, input);
      for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
        const auto col = post.column(j);
        cols[j].assign(col.size(), 0.0);
        cols[j][static_cast<std::size_t>(std::max_element(col.begin(), col.end()) - col.begin())] = 1.0;
      }
      return cols;
    }
    case FixedTps::Prior: {
      const PositionPrior prior = position_prior(input.size(), model.config.centers, model.config.sigma_fraction);
      for (std::size_t j = 0; j < kNumTurningPoints; ++j) cols[j] = prior.column(j);
      return cols;
    }
  }
  return std::nullopt;
}

ModelForward model_forward(const NetContext& ctx, const ModelConfig& config, const EpisodeInput& input,
                           const Screenplay& screenplay, const TpColumns* fixed) {
  if (screenplay.size() != input.size())
    throw InvariantError("model_forward: screenplay and embeddings disagree on the scene count");
  ModelForward out;
  const bool learned = config.kind == ModelKind::Summer && !fixed;
  const TpForward fw = tpnet_forward(ctx, input, learned);
  const std::size_t n = input.size();

  if (config.kind == ModelKind::Summer) {
    std::array<Var, kNumTurningPoints> cols;
    if (learned) {
      cols = fw.columns;
    } else {
      for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
        if ((*fixed)[j].size() != n) throw nc::ShapeError("fixed TP column has the wrong length");
        cols[j] = ctx.tape.constant(Tensor::vector((*fixed)[j]));
      }
    }
    std::array<Var, kNumTurningPoints> tp;
    for (std::size_t j = 0; j < kNumTurningPoints; ++j) tp[j] = nc::weighted_sum(cols[j], fw.topic_aware);
    std::vector<Var> pooled;
    pooled.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::array<Var, kNumTurningPoints> v;
      for (std::size_t j = 0; j < kNumTurningPoints; ++j) v[j] = salience(fw.topic_aware[i], tp[j]);
      pooled.push_back(nc::max_pool(v));
    }
    out.logits = classify(ctx, fw.topic_aware, pooled);
    out.columns = cols;
    out.columns_learned = learned;
  } else {
    Var d;
    if (config.kind == ModelKind::SummaRunner) {
      d = global_content(ctx, fw.contextual, &out.global_weights);
    } else {
      std::vector<double> c = character_scores(screenplay, config.charscore_union);
      double total = 0.0;
      for (double x : c) total += x;
      if (total > 0.0) {
        for (double& x : c) x /= total;
      } else {
        std::clog << "warning: episode '" << screenplay.episode_id
                  << "' has all-zero character scores; using uniform scene weights\n";
        std::fill(c.begin(), c.end(), 1.0 / static_cast<double>(n));
      }
      out.global_weights = c;
      d = nc::weighted_sum(ctx.tape.constant(Tensor::vector(std::move(c))), fw.contextual);
    }
    std::vector<Var> feats;
    feats.reserve(n);
    for (const Var& s : fw.contextual) feats.push_back(salience(s, d));
    out.logits = classify(ctx, fw.contextual, feats);
  }
  out.probs = nc::sigmoid(out.logits);
  return out;
}

Var orthogonality(Tape& tape, const std::array<Var, kNumTurningPoints>& columns, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("orthogonality: epsilon must be positive");
  Var eps = tape.constant(Tensor::scalar(epsilon));
  std::vector<Var> terms;
  for (std::size_t i = 0; i < kNumTurningPoints; ++i) {
    for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
      if (i == j) continue;
      terms.push_back(nc::scale(nc::log_scalar(nc::add(nc::kl_divergence(columns[i], columns[j]), eps)), -1.0));
    }
  }
  return nc::sum(nc::concat(terms));
}

Var focal(Tape& tape, const std::array<Var, kNumTurningPoints>& columns, const PositionPrior& prior) {
  if (prior.th.rows != columns[0].size()) throw nc::ShapeError("focal: prior and posterior lengths differ");
  std::vector<Var> terms;
  for (std::size_t j = 0; j < kNumTurningPoints; ++j)
    terms.push_back(nc::kl_divergence(columns[j], tape.constant(Tensor::vector(prior.column(j)))));
  return nc::sum(nc::concat(terms));
}

Var loss_total(Tape& tape, Var scores, std::span<const double> labels,
               const std::array<Var, kNumTurningPoints>* columns, const PositionPrior* prior, const LossConfig& cfg,
               LossBreakdown* breakdown, bool from_logits) {
  if (cfg.a < 0.0 || cfg.b < 0.0) throw std::invalid_argument("loss weights a and b must be non-negative");
  for (double y : labels)
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("labels must be 0 or 1");
  Var total = from_logits ? nc::weighted_bce_with_logits(scores, labels, cfg.class_weights)
                          : nc::weighted_bce(scores, labels, cfg.class_weights);
  LossBreakdown parts;
  parts.bce = total.item();
  if (cfg.regularizers && columns) {
    if (cfg.a > 0.0) {
      Var o = orthogonality(tape, *columns, cfg.epsilon);
      parts.orthogonality = o.item();
      total = nc::add(total, nc::scale(o, cfg.a));
    }
    if (cfg.b > 0.0 && prior) {
      Var f = focal(tape, *columns, *prior);
      parts.focal = f.item();
      total = nc::add(total, nc::scale(f, cfg.b));
    }
  }
  parts.total = total.item();
  if (breakdown) *breakdown = parts;
  return total;
}

Prediction predict(Model& model, const Screenplay& screenplay, const EmbeddingStore& store) {
  const EpisodeInput input = make_input(screenplay, store);
  const auto fixed = fixed_columns(model, input);
  Tape tape;
  NetContext ctx{tape, model.params, model.config.net, nullptr, ""};
  const ModelForward fw = model_forward(ctx, model.config, input, screenplay, fixed ? &*fixed : nullptr);
  Prediction out{fw.probs.value().values, std::nullopt};
  if (fw.columns) out.posterior = to_posterior(*fw.columns);
  return out;
}

std::vector<double> predict_probabilities(Model& model, const Screenplay& screenplay, const EmbeddingStore& store) {
  return predict(model, screenplay, store).probs;
}

}  // namespace screensum
