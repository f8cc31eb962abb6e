#include "screensum/tpnet.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "screensum/rng.h"

namespace screensum {

using nc::Tape;
using nc::Tensor;
using nc::Var;

namespace {

Tensor uniform_tensor(Rng& rng, nc::Shape shape, double bound) {
  Tensor t(std::move(shape));
  for (double& v : t.values) v = rng.uniform(-bound, bound);
  return t;
}

void add_lstm(nc::ParameterSet& params, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  params.add(name + ".w_ih", uniform_tensor(rng, {4 * hidden, input}, bound));
  params.add(name + ".w_hh", uniform_tensor(rng, {4 * hidden, hidden}, bound));
  params.add(name + ".b", uniform_tensor(rng, {4 * hidden}, bound));
}

}  // namespace

EpisodeInput make_input(const Screenplay& screenplay, const EmbeddingStore& store) {
  EpisodeInput input;
  input.episode_id = screenplay.episode_id;
  for (const auto& scene : screenplay.scenes) {
    const Matrix& rows = store.sentences(screenplay.episode_id, scene.index);
    if (rows.rows == 0)
      throw InvariantError("episode '" + screenplay.episode_id + "' scene " + std::to_string(scene.index) +
                           " has no sentence embeddings");
    input.scenes.push_back(&rows);
  }
  return input;
}

std::vector<double> TpPosterior::column(std::size_t j) const {
  std::vector<double> out(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) out[i] = p(i, j);
  return out;
}

std::vector<double> PositionPrior::column(std::size_t j) const {
  std::vector<double> out(th.rows);
  for (std::size_t i = 0; i < th.rows; ++i) out[i] = th(i, j);
  return out;
}

void init_encoder_params(nc::ParameterSet& params, const TpNetConfig& config, Rng& rng, const std::string& prefix) {
  const std::size_t h = config.hidden;
  const std::string p = prefix + "enc.";
  add_lstm(params, p + "sent_fwd", config.embed_dim, h, rng);
  add_lstm(params, p + "sent_bwd", config.embed_dim, h, rng);
  const double att_bound = 1.0 / std::sqrt(static_cast<double>(2 * h));
  params.add(p + "sent_att.w", uniform_tensor(rng, {h, 2 * h}, att_bound));
  params.add(p + "sent_att.b", uniform_tensor(rng, {h}, att_bound));
  params.add(p + "sent_att.v", uniform_tensor(rng, {h}, 1.0 / std::sqrt(static_cast<double>(h))));
  add_lstm(params, p + "ctx_fwd", 2 * h, h, rng);
  add_lstm(params, p + "ctx_bwd", 2 * h, h, rng);
}

void init_tp_head_params(nc::ParameterSet& params, const TpNetConfig& config, Rng& rng, const std::string& prefix) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.topic_dim()));
  params.add(prefix + "tp.w", uniform_tensor(rng, {config.topic_dim(), kNumTurningPoints}, bound));
  params.add(prefix + "tp.b", uniform_tensor(rng, {kNumTurningPoints}, bound));
}

nc::ParameterSet init_tpnet_params(const TpNetConfig& config, std::uint64_t seed) {
  nc::ParameterSet params;
  Rng rng(seed);
  init_encoder_params(params, config, rng);
  init_tp_head_params(params, config, rng);
  return params;
}

Var NetContext::param(const std::string& name) const { return tape.param(params.get(prefix + name)); }

Var NetContext::maybe_dropout(Var v) const { return nc::dropout(v, config.dropout, dropout_rng); }

std::vector<Var> run_lstm(const NetContext& ctx, const std::string& name, const std::vector<Var>& inputs, bool reverse) {
  const std::size_t h = ctx.config.hidden;
  Var w_ih = ctx.param(name + ".w_ih");
  Var w_hh = ctx.param(name + ".w_hh");
  Var b = ctx.param(name + ".b");
  Var state = ctx.tape.constant(Tensor({h}));
  Var cell = ctx.tape.constant(Tensor({h}));
  std::vector<Var> out(inputs.size());
  for (std::size_t step = 0; step < inputs.size(); ++step) {
    const std::size_t k = reverse ? inputs.size() - 1 - step : step;
    Var z = nc::add(nc::add(nc::matmul(w_ih, inputs[k]), nc::matmul(w_hh, state)), b);
    Var in_gate = nc::sigmoid(nc::slice(z, 0, h));
    Var forget_gate = nc::sigmoid(nc::slice(z, h, h));
    Var candidate = nc::tanh(nc::slice(z, 2 * h, h));
    Var out_gate = nc::sigmoid(nc::slice(z, 3 * h, h));
    cell = nc::add(nc::mul(forget_gate, cell), nc::mul(in_gate, candidate));
    state = nc::mul(out_gate, nc::tanh(cell));
    out[k] = state;
  }
  return out;
}

Var encode_scene(const NetContext& ctx, const Matrix& sentences, std::vector<double>* attention) {
  if (sentences.rows == 0) throw std::invalid_argument("encode_scene: scene has no sentences");
  if (sentences.cols != ctx.config.embed_dim)
    throw nc::ShapeError("encode_scene: sentence width " + std::to_string(sentences.cols) + " but the network expects " +
                         std::to_string(ctx.config.embed_dim));
  std::vector<Var> rows;
  rows.reserve(sentences.rows);
  for (std::size_t r = 0; r < sentences.rows; ++r) {
    auto span = sentences.row(r);
    rows.push_back(ctx.tape.constant(Tensor::vector({span.begin(), span.end()})));
  }
  const auto fwd = run_lstm(ctx, "enc.sent_fwd", rows, false);
  const auto bwd = run_lstm(ctx, "enc.sent_bwd", rows, true);

  Var att_w = ctx.param("enc.sent_att.w");
  Var att_b = ctx.param("enc.sent_att.b");
  Var att_v = ctx.param("enc.sent_att.v");
  std::vector<Var> states, scores;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Var pair[] = {fwd[r], bwd[r]};
    states.push_back(nc::concat(pair));
    scores.push_back(nc::dot(att_v, nc::tanh(nc::add(nc::matmul(att_w, states.back()), att_b))));
  }
  Var weights = nc::softmax_with_temperature(nc::concat(scores), 1.0);
  if (attention) *attention = weights.value().values;
  return nc::weighted_sum(weights, states);
}

std::vector<Var> contextualize(const NetContext& ctx, const std::vector<Var>& scene_vectors) {
  if (scene_vectors.empty()) throw std::invalid_argument("contextualize: no scenes");
  const auto fwd = run_lstm(ctx, "enc.ctx_fwd", scene_vectors, false);
  const auto bwd = run_lstm(ctx, "enc.ctx_bwd", scene_vectors, true);
  std::vector<Var> out;
  out.reserve(scene_vectors.size());
  for (std::size_t i = 0; i < scene_vectors.size(); ++i) {
    Var pair[] = {fwd[i], bwd[i]};
    out.push_back(nc::concat(pair));
  }
  return out;
}

std::vector<Var> cil(Tape& tape, const std::vector<Var>& contextual, double window_fraction) {
  if (!(window_fraction > 0.0 && window_fraction < 1.0))
    throw std::invalid_argument("cil: window fraction must lie in (0, 1)");
  const std::size_t n = contextual.size();
  const std::size_t window =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window_fraction * static_cast<double>(n))));
  Var zero = tape.constant(Tensor::scalar(0.0));
  std::vector<Var> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(n - 1, i + window);
    std::vector<Var> before(contextual.begin() + static_cast<std::ptrdiff_t>(lo),
                            contextual.begin() + static_cast<std::ptrdiff_t>(i));
    std::vector<Var> after(contextual.begin() + static_cast<std::ptrdiff_t>(i + 1),
                           contextual.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    Var prev_sim = zero, next_sim = zero, boundary_sim = zero;
    Var prev, next;
    if (!before.empty()) {
      prev = nc::mean(before);
      prev_sim = nc::normalized_dot(contextual[i], prev);
    }
    if (!after.empty()) {
      next = nc::mean(after);
      next_sim = nc::normalized_dot(contextual[i], next);
    }
    if (!before.empty() && !after.empty()) boundary_sim = nc::normalized_dot(prev, next);
    Var parts[] = {contextual[i], prev_sim, next_sim, boundary_sim};
    out.push_back(nc::concat(parts));
  }
  return out;
}

std::array<Var, kNumTurningPoints> tp_attention(const NetContext& ctx, const std::vector<Var>& topic_aware, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tp_attention: tau must be positive");
  Var stacked = nc::stack_rows(topic_aware);
  Var logits = nc::tanh(nc::add_row_bias(nc::matmul(stacked, ctx.param("tp.w")), ctx.param("tp.b")));
  std::array<Var, kNumTurningPoints> columns;
  for (std::size_t j = 0; j < kNumTurningPoints; ++j)
    columns[j] = nc::softmax_with_temperature(nc::column(logits, j), tau);
  return columns;
}

TpForward tpnet_forward(const NetContext& ctx, const EpisodeInput& input, bool with_attention) {
  if (input.size() == 0) throw std::invalid_argument("tpnet_forward: episode has no scenes");
  TpForward out;
  for (const Matrix* scene : input.scenes) out.scene_vectors.push_back(ctx.maybe_dropout(encode_scene(ctx, *scene)));
  out.contextual = contextualize(ctx, out.scene_vectors);
  for (Var& v : out.contextual) v = ctx.maybe_dropout(v);
  out.topic_aware = cil(ctx.tape, out.contextual, ctx.config.window_fraction);
  if (with_attention) out.columns = tp_attention(ctx, out.topic_aware, ctx.config.tau);
  return out;
}

TpPosterior to_posterior(const std::array<Var, kNumTurningPoints>& columns) {
  const std::size_t n = columns[0].size();
  TpPosterior post{Matrix(n, kNumTurningPoints)};
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    const auto& col = columns[j].value().values;
    for (std::size_t i = 0; i < n; ++i) post.p(i, j) = col[i];
  }
  return post;
}

TpPosterior infer_posterior(nc::ParameterSet& params, const TpNetConfig& config, const EpisodeInput& input,
                            const std::string& prefix) {
  Tape tape;
  NetContext ctx{tape, params, config, nullptr, prefix};
  return to_posterior(tpnet_forward(ctx, input).columns);
}

std::vector<double> tp_scores(const TpPosterior& posterior) {
  std::vector<double> f(posterior.scenes(), 0.0);
  for (std::size_t i = 0; i < posterior.scenes(); ++i) {
    auto row = posterior.p.row(i);
    f[i] = *std::max_element(row.begin(), row.end());
  }
  return f;
}

PositionPrior position_prior(std::size_t n, const std::array<double, kNumTurningPoints>& centers, double sigma_fraction) {
  if (n < kNumTurningPoints)
    throw std::invalid_argument("position_prior: need at least 5 scenes for distinct TP modes, got " + std::to_string(n));
  if (!(sigma_fraction > 0.0)) throw std::invalid_argument("position_prior: sigma fraction must be positive");
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    if (!(centers[j] > 0.0 && centers[j] < 1.0)) throw std::invalid_argument("position_prior: centers must lie in (0, 1)");
    if (j > 0 && !(centers[j] > centers[j - 1])) throw std::invalid_argument("position_prior: centers must be ascending");
  }
  PositionPrior prior{Matrix(n, kNumTurningPoints), centers, sigma_fraction};
  const double sigma = sigma_fraction * static_cast<double>(n);
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    const double mu = centers[j] * static_cast<double>(n - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (static_cast<double>(i) - mu) / sigma;
      prior.th(i, j) = std::exp(-0.5 * z * z);
      total += prior.th(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) prior.th(i, j) /= total;
  }
  return prior;
}

std::array<std::set<std::size_t>, kNumTurningPoints> predict_tp_scenes(const TpPosterior& posterior, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("predict_tp_scenes: threshold must lie in (0, 1)");
  std::array<std::set<std::size_t>, kNumTurningPoints> sets;
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    for (std::size_t i = 0; i < posterior.scenes(); ++i) {
      if (posterior.p(i, j) > threshold) sets[j].insert(i);
    }
  }
  return sets;
}

Var pretrain_loss(Tape& tape, const std::array<Var, kNumTurningPoints>& columns, const SilverTpLabels& silver) {
  const std::size_t n = columns[0].size();
  validate(silver, n);
  std::vector<Var> terms;
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    std::vector<double> target(n, 0.0);
    const double mass = 1.0 / static_cast<double>(silver.tp_scenes[j].size());
    for (std::size_t i : silver.tp_scenes[j]) target[i] = mass;
    terms.push_back(nc::kl_divergence(tape.constant(Tensor::vector(std::move(target))), columns[j]));
  }
  return nc::sum(nc::concat(terms));
}

double pretrain_step(nc::ParameterSet& params, nc::Adam& optimizer, const TpNetConfig& config,
                     const EpisodeInput& input, const SilverTpLabels& silver, Rng* dropout_rng) {
  params.zero_grad();
  Tape tape;
  NetContext ctx{tape, params, config, dropout_rng, ""};
  const TpForward fw = tpnet_forward(ctx, input);
  Var loss = pretrain_loss(tape, fw.columns, silver);
  tape.backward(loss);
  optimizer.step(params);
  return loss.item();
}

PretrainResult pretrain_tpnet(const Corpus& corpus, const EmbeddingStore& store,
                              const std::vector<SilverTpLabels>& silver, const TpNetConfig& config,
                              std::size_t epochs, std::uint64_t seed, const nc::AdamConfig& adam) {
  std::map<std::string, const SilverTpLabels*> by_episode;
  for (const auto& s : silver) by_episode[s.episode_id] = &s;
  std::vector<std::pair<EpisodeInput, const SilverTpLabels*>> episodes;
  for (const auto& sp : corpus) {
    auto it = by_episode.find(sp.episode_id);
    if (it == by_episode.end()) continue;
    validate(*it->second, sp.size());
    episodes.emplace_back(make_input(sp, store), it->second);
  }
  if (episodes.empty()) throw std::invalid_argument("pretrain_tpnet: no episode has silver TP labels");

  PretrainResult result{init_tpnet_params(config, seed), {}};
  nc::Adam optimizer(adam);
  Rng order_rng(seed + 1);
  Rng dropout_rng(seed + 2);
  std::vector<std::size_t> order(episodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      total += pretrain_step(result.params, optimizer, config, episodes[idx].first, *episodes[idx].second, &dropout_rng);
    }
    result.epoch_losses.push_back(total / static_cast<double>(episodes.size()));
  }
  return result;
}

}  // namespace screensum
