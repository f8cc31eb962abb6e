#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.h"
#include "screensum/numcore/grad_check.h"
#include "screensum/rng.h"
#include "screensum/tpnet.h"

namespace screensum {
namespace {

using Vec = std::vector<double>;

// Plain-double reference implementation of the TP network, written from the
// architecture description rather than from the tape code.
struct Reference {
  const nc::ParameterSet& ps;
  const TpNetConfig& cfg;

  const nc::Tensor& t(const std::string& n) const { return ps.get(n).value; }

  static double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  std::vector<Vec> lstm(const std::string& name, const std::vector<Vec>& xs, bool reverse) const {
    const std::size_t h = cfg.hidden;
    const auto& wih = t(name + ".w_ih");
    const auto& whh = t(name + ".w_hh");
    const auto& b = t(name + ".b");
    Vec hs(h, 0.0), cs(h, 0.0);
    std::vector<Vec> out(xs.size());
    for (std::size_t s = 0; s < xs.size(); ++s) {
      const std::size_t k = reverse ? xs.size() - 1 - s : s;
      Vec z(4 * h);
      for (std::size_t r = 0; r < 4 * h; ++r) {
        double acc = b.values[r];
        for (std::size_t c = 0; c < xs[k].size(); ++c) acc += wih.at(r, c) * xs[k][c];
        for (std::size_t c = 0; c < h; ++c) acc += whh.at(r, c) * hs[c];
        z[r] = acc;
      }
      for (std::size_t u = 0; u < h; ++u) {
        const double i = sig(z[u]), f = sig(z[h + u]), g = std::tanh(z[2 * h + u]), o = sig(z[3 * h + u]);
        cs[u] = f * cs[u] + i * g;
        hs[u] = o * std::tanh(cs[u]);
      }
      out[k] = hs;
    }
    return out;
  }

  static Vec cat(const Vec& a, const Vec& b) {
    Vec r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
  }

  Vec scene(const Matrix& m) const {
    std::vector<Vec> xs;
    for (std::size_t r = 0; r < m.rows; ++r) xs.emplace_back(m.row(r).begin(), m.row(r).end());
    const auto f = lstm("enc.sent_fwd", xs, false), b = lstm("enc.sent_bwd", xs, true);
    const auto& W = t("enc.sent_att.w");
    const auto& bb = t("enc.sent_att.b");
    const auto& v = t("enc.sent_att.v");
    std::vector<Vec> states;
    Vec scores;
    for (std::size_t r = 0; r < xs.size(); ++r) {
      states.push_back(cat(f[r], b[r]));
      double s = 0;
      for (std::size_t a = 0; a < cfg.hidden; ++a) {
        double acc = bb.values[a];
        for (std::size_t c = 0; c < states.back().size(); ++c) acc += W.at(a, c) * states.back()[c];
        s += v.values[a] * std::tanh(acc);
      }
      scores.push_back(s);
    }
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0;
    for (double& s : scores) z += (s = std::exp(s - mx));
    Vec out(2 * cfg.hidden, 0.0);
    for (std::size_t r = 0; r < states.size(); ++r)
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += scores[r] / z * states[r][c];
    return out;
  }

  static double ndot(const Vec& a, const Vec& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      d += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return d / std::max(std::sqrt(na) * std::sqrt(nb), 1e-8);
  }

  static std::vector<Vec> cil(const std::vector<Vec>& s, double frac) {
    const std::size_t n = s.size();
    const std::size_t l = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frac * n)));
    std::vector<Vec> out;
    for (std::size_t i = 0; i < n; ++i) {
      auto mean = [&](std::size_t a, std::size_t b) {
        Vec m(s[0].size(), 0.0);
        for (std::size_t k = a; k < b; ++k)
          for (std::size_t c = 0; c < m.size(); ++c) m[c] += s[k][c] / static_cast<double>(b - a);
        return m;
      };
      const std::size_t lo = i >= l ? i - l : 0, hi = std::min(n, i + l + 1);
      const bool has_prev = lo < i, has_next = i + 1 < hi;
      Vec prev = has_prev ? mean(lo, i) : Vec{}, next = has_next ? mean(i + 1, hi) : Vec{};
      Vec t = s[i];
      t.push_back(has_prev ? ndot(s[i], prev) : 0.0);
      t.push_back(has_next ? ndot(s[i], next) : 0.0);
      t.push_back(has_prev && has_next ? ndot(prev, next) : 0.0);
      out.push_back(t);
    }
    return out;
  }

  Matrix posterior(const EpisodeInput& in) const {
    std::vector<Vec> scenes;
    for (const Matrix* m : in.scenes) scenes.push_back(scene(*m));
    const auto f = lstm("enc.ctx_fwd", scenes, false), b = lstm("enc.ctx_bwd", scenes, true);
    std::vector<Vec> ctx;
    for (std::size_t i = 0; i < scenes.size(); ++i) ctx.push_back(cat(f[i], b[i]));
    const auto topic = cil(ctx, cfg.window_fraction);
    const auto& W = t("tp.w");
    const auto& bb = t("tp.b");
    const std::size_t n = topic.size();
    Matrix p(n, kNumTurningPoints);
    for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
      Vec logit(n);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = bb.values[j];
        for (std::size_t c = 0; c < topic[i].size(); ++c) acc += topic[i][c] * W.at(c, j);
        logit[i] = std::tanh(acc) / cfg.tau;
      }
      const double mx = *std::max_element(logit.begin(), logit.end());
      double z = 0;
      for (double& v : logit) z += (v = std::exp(v - mx));
      for (std::size_t i = 0; i < n; ++i) p(i, j) = logit[i] / z;
    }
    return p;
  }
};

TpNetConfig small_config() {
  TpNetConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden = 3;
  return cfg;
}

TEST(TpNet, ParameterShapes) {
  const TpNetConfig cfg;  // defaults: 512-dim input, 64 per direction
  const auto ps = init_tpnet_params(cfg, 1);
  EXPECT_EQ(ps.get("enc.sent_fwd.w_ih").value.shape, (nc::Shape{256, 512}));
  EXPECT_EQ(ps.get("enc.ctx_bwd.w_hh").value.shape, (nc::Shape{256, 64}));
  EXPECT_EQ(ps.get("tp.w").value.shape, (nc::Shape{131, 5}));
  EXPECT_EQ(cfg.topic_dim(), 131u);
  const double bound = 1.0 / std::sqrt(64.0);
  for (double v : ps.get("enc.sent_fwd.w_ih").value.values) EXPECT_LE(std::abs(v), bound);
}

TEST(TpNet, ForwardMatchesReferenceImplementation) {
  const TpNetConfig cfg = [] {
    auto c = small_config();
    c.tau = 0.5;  // keeps the comparison away from saturated columns
    return c;
  }();
  Corpus corpus{testing::make_screenplay("ep", 9)};
  corpus[0].scenes[3].sentences = {"a.", "b.", "c."};
  const EmbeddingStore store = testing::random_store(corpus, cfg.embed_dim, 21);
  auto ps = init_tpnet_params(cfg, 8);
  const EpisodeInput in = make_input(corpus[0], store);
  const TpPosterior post = infer_posterior(ps, cfg, in);
  const Matrix ref = Reference{ps, cfg}.posterior(in);
  for (std::size_t i = 0; i < ref.data.size(); ++i) EXPECT_NEAR(post.p.data[i], ref.data[i], 1e-12);
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    const auto col = post.column(j);
    double total = 0;
    for (double v : col) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(TpNet, CilFeatureLayout) {
  nc::Tape tape;
  std::vector<nc::Var> s;
  const std::vector<Vec> raw{{1, 0}, {0, 1}, {1, 1}, {-1, 2}, {3, 0}, {0, 0}};
  for (const auto& v : raw) s.push_back(tape.constant(nc::Tensor::vector(v)));
  const auto out = cil(tape, s, 0.2);  // l = round(1.2) = 1
  const auto ref = Reference::cil(raw, 0.2);
  ASSERT_EQ(out.size(), raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ASSERT_EQ(out[i].size(), 5u);
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(out[i].value().values[c], ref[i][c], 1e-15) << i << "," << c;
  }
  // first scene has no predecessor, last none after it
  EXPECT_EQ(out[0].value().values[2], 0.0);
  EXPECT_EQ(out[0].value().values[4], 0.0);
  EXPECT_EQ(out[5].value().values[3], 0.0);
  // zero vector: guarded similarity is 0, not NaN
  EXPECT_EQ(out[5].value().values[2], 0.0);
}

TEST(TpNet, GradientsMatchFiniteDifferences) {
  TpNetConfig cfg = small_config();
  cfg.hidden = 2;
  cfg.tau = 0.5;
  Corpus corpus{testing::make_screenplay("ep", 6)};
  corpus[0].scenes[1].sentences = {"a.", "b."};
  const EmbeddingStore store = testing::random_store(corpus, cfg.embed_dim, 5);
  auto ps = init_tpnet_params(cfg, 3);
  const EpisodeInput in = make_input(corpus[0], store);
  SilverTpLabels silver{"ep", {{{0}, {1, 2}, {3}, {4}, {5}}}};
  const auto loss = [&](nc::Tape& tape) {
    NetContext ctx{tape, ps, cfg, nullptr, ""};
    return pretrain_loss(tape, tpnet_forward(ctx, in).columns, silver);
  };
  nc::GradCheckOptions opts;
  opts.max_coords_per_param = 6;
  opts.seed = 2;
  const auto r = nc::grad_check(loss, ps, 1e-4, opts);
  EXPECT_TRUE(r.passed) << r.worst_parameter << " " << r.max_rel_error;
}

TEST(TpNet, EncodeSceneRejectsWrongWidth) {
  TpNetConfig cfg = small_config();
  auto ps = init_tpnet_params(cfg, 1);
  nc::Tape tape;
  NetContext ctx{tape, ps, cfg, nullptr, ""};
  EXPECT_THROW(encode_scene(ctx, Matrix(2, 5)), nc::ShapeError);
}

TEST(TpNet, AttentionSparsityAtLowTemperature) {
  // margin >= 0.1 in tanh space becomes >= 10 after dividing by tau = 0.01
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(60);
    Vec x(n);
    for (double& v : x) v = rng.uniform(-0.95, 0.8);
    const std::size_t top = rng.below(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::min(x[i], 0.85);
    x[top] = 0.95;
    nc::Tape tape;
    const auto p = nc::softmax_with_temperature(tape.constant(nc::Tensor::vector(x)), 0.01).value().values;
    EXPECT_GE(p[top], 0.99);
  }
}

TEST(Prior, ShapeModeAndValidation) {
  const PositionPrior prior = position_prior(100);
  const auto c0 = prior.column(0);
  const auto mode = std::max_element(c0.begin(), c0.end()) - c0.begin();
  EXPECT_EQ(mode, 10);
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    double total = 0;
    for (double v : prior.column(j)) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  // independent density at one point
  double z = 0;
  for (int i = 0; i < 100; ++i) z += std::exp(-0.5 * std::pow((i - 49.5) / 5.0, 2));
  EXPECT_NEAR(prior.th(40, 2), std::exp(-0.5 * std::pow((40 - 49.5) / 5.0, 2)) / z, 1e-15);
  EXPECT_THROW(position_prior(4), std::invalid_argument);
  EXPECT_THROW(position_prior(10, {0.1, 0.3, 0.2, 0.7, 0.9}), std::invalid_argument);
  EXPECT_THROW(position_prior(10, kDefaultTpCenters, 0.0), std::invalid_argument);
}

TEST(Prediction, ThresholdOnUniformPosteriors) {
  for (std::size_t n : {10u, 40u}) {
    TpPosterior post{Matrix(n, kNumTurningPoints)};
    for (double& v : post.p.data) v = 1.0 / static_cast<double>(n);
    const auto sets = predict_tp_scenes(post, 0.05);
    for (const auto& s : sets) EXPECT_EQ(s.size(), n == 10 ? 10u : 0u);
  }
  TpPosterior post{Matrix(3, kNumTurningPoints)};
  post.p(1, 2) = 0.7;
  post.p(2, 2) = 0.3;
  EXPECT_EQ(tp_scores(post), (Vec{0.0, 0.7, 0.3}));
  EXPECT_THROW(predict_tp_scenes(post, 0.0), std::invalid_argument);
}

TEST(Pretrain, LossIsSumOfKlToSilverTargets) {
  nc::Tape tape;
  std::array<nc::Var, kNumTurningPoints> cols;
  const Vec p{0.1, 0.2, 0.3, 0.25, 0.15};
  for (auto& c : cols) c = tape.constant(nc::Tensor::vector(p));
  SilverTpLabels silver{"ep", {{{0}, {1, 2}, {2}, {3}, {4}}}};
  double expected = -std::log(0.1) + 0.5 * std::log(0.5 / 0.2) + 0.5 * std::log(0.5 / 0.3) - std::log(0.3) -
                    std::log(0.25) - std::log(0.15);
  EXPECT_NEAR(pretrain_loss(tape, cols, silver).item(), expected, 1e-12);
  SilverTpLabels bad{"ep", {{{0}, {1}, {2}, {3}, {7}}}};
  EXPECT_THROW(pretrain_loss(tape, cols, bad), InvariantError);
}

TEST(Pretrain, LossDecreasesAndIsDeterministic) {
  EmbeddingStore store;
  const SynthCorpus synth = synth_corpus(2, 20, 8, 4, store);
  TpNetConfig cfg = small_config();
  cfg.embed_dim = 8;
  cfg.hidden = 8;
  const auto a = pretrain_tpnet(synth.corpus, store, synth.silver, cfg, 15, 9);
  const auto b = pretrain_tpnet(synth.corpus, store, synth.silver, cfg, 15, 9);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  EXPECT_LT(a.epoch_losses.back(), a.epoch_losses.front());
}

}  // namespace
}  // namespace screensum
