#include <gtest/gtest.h>

#include "fixtures.h"
#include "screensum/model_io.h"
#include "screensum/train.h"

namespace screensum {
namespace {

ModelConfig small_model(ModelKind kind, std::size_t dim) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.net.embed_dim = dim;
  cfg.net.hidden = 8;
  return cfg;
}

TEST(Training, RejectsUnusableFolds) {
  const Corpus unlabeled{testing::make_screenplay("e", 4)};
  const EmbeddingStore store = testing::random_store(unlabeled, 4, 1);
  EXPECT_THROW(train({}, {}, store, small_model(ModelKind::Summer, 4), {}), std::invalid_argument);
  EXPECT_THROW(train(unlabeled, {}, store, small_model(ModelKind::Summer, 4), {}), std::invalid_argument);
}

TEST(Training, DeterministicAndLogged) {
  EmbeddingStore store;
  const SynthCorpus synth = synth_corpus(2, 16, 8, 3, store);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.seed = 5;
  std::size_t calls = 0;
  const auto a = train(synth.corpus, {}, store, small_model(ModelKind::Summer, 8), cfg, nullptr,
                       [&](const EpochRecord&) { ++calls; });
  const auto b = train(synth.corpus, {}, store, small_model(ModelKind::Summer, 8), cfg);
  EXPECT_EQ(calls, a.log.size());
  EXPECT_TRUE(a.model.params == b.model.params);
  ASSERT_FALSE(a.log.empty());
  EXPECT_NE(a.log[0].orthogonality, 0.0);
  EXPECT_GT(a.log[0].focal, 0.0);
  EXPECT_FALSE(a.log[0].dev_f1.has_value());
  EXPECT_NEAR(a.best_f1, selection_f1(const_cast<Model&>(a.model), synth.corpus, store, cfg.ratio), 1e-9);
}

TEST(Training, FrozenEncoderStaysFixed) {
  EmbeddingStore store;
  const SynthCorpus synth = synth_corpus(2, 12, 8, 3, store);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.freeze_encoder = true;
  const ModelConfig mc = small_model(ModelKind::SummaRunner, 8);
  const Model init = init_model(mc, cfg.seed);
  const auto r = train(synth.corpus, {}, store, mc, cfg);
  EXPECT_EQ(r.model.params.get("enc.sent_fwd.w_ih").value.values, init.params.get("enc.sent_fwd.w_ih").value.values);
  EXPECT_NE(r.model.params.get("cls.w").value.values, init.params.get("cls.w").value.values);
}

TEST(Training, OverfitsTinyCorpus) {
  EmbeddingStore store;
  const SynthCorpus synth = synth_corpus(2, 20, 8, 7, store);
  TrainConfig cfg;
  cfg.target_f1 = 95.0;
  cfg.patience = cfg.max_epochs;
  const auto r = train(synth.corpus, {}, store, small_model(ModelKind::SummaRunner, 8), cfg);
  EXPECT_GE(r.best_f1, 95.0);
}

TEST(ModelIo, CheckpointsRoundTrip) {
  const auto dir = testing::temp_dir("model-io");
  ModelConfig mc = small_model(ModelKind::Summer, 6);
  mc.fixed_tps = FixedTps::OneHot;
  mc.sigma_fraction = 0.07;
  const auto tp = init_tpnet_params(mc.net, 3);
  const Model m = init_model(mc, 2, &tp);
  save_model(dir / "m.ckpt", m);
  const Model back = load_model(dir / "m.ckpt");
  EXPECT_TRUE(back.params == m.params);
  EXPECT_EQ(back.config.fixed_tps, FixedTps::OneHot);
  EXPECT_EQ(back.config.sigma_fraction, 0.07);
  EXPECT_EQ(back.config.net.embed_dim, 6u);
  ASSERT_TRUE(back.fixed_tp_net.has_value());
  EXPECT_TRUE(*back.fixed_tp_net == tp);

  save_tpnet(dir / "t.ckpt", mc.net, tp);
  const TpNetCheckpoint t = load_tpnet(dir / "t.ckpt");
  EXPECT_EQ(t.config.hidden, 8u);
  EXPECT_TRUE(t.params == tp);
  EXPECT_THROW(load_tpnet(dir / "m.ckpt"), FormatError);
  EXPECT_THROW(load_model(dir / "t.ckpt"), FormatError);
}

}  // namespace
}  // namespace screensum
