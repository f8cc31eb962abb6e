#include <benchmark/benchmark.h>

#include "screensum/embedding.h"
#include "screensum/eval.h"
#include "screensum/graphsum.h"
#include "screensum/rng.h"
#include "screensum/summarizers.h"

namespace screensum {
namespace {

std::vector<std::vector<double>> random_reps(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> reps(n, std::vector<double>(dim));
  for (auto& r : reps)
    for (double& v : r) v = rng.normal();
  return reps;
}

void BM_BuildGraph(benchmark::State& state) {
  const auto reps = random_reps(static_cast<std::size_t>(state.range(0)), 512, 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(reps, 0.2));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraph)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_CentralitySummer(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const SceneGraph g = build_graph(random_reps(n, 64, 2), 0.0);
  std::vector<double> f(n, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(centrality_summer(g, 0.7, f));
}
BENCHMARK(BM_CentralitySummer)->Range(16, 1024);

void BM_PowerIteration(benchmark::State& state) {
  const SceneGraph g = build_graph(random_reps(static_cast<std::size_t>(state.range(0)), 64, 3), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(centrality_power_iteration(g));
}
BENCHMARK(BM_PowerIteration)->Range(16, 256);

void BM_Tfidf(benchmark::State& state) {
  EmbeddingStore store;
  const SynthCorpus synth = synth_corpus(static_cast<std::size_t>(state.range(0)), 40, 4, 5, store);
  for (auto _ : state) benchmark::DoNotOptimize(build_tfidf(synth.corpus));
}
BENCHMARK(BM_Tfidf)->Arg(10)->Arg(40);

void BM_ModelForwardBackward(benchmark::State& state) {
  EmbeddingStore store;
  const SynthCorpus synth = synth_corpus(1, static_cast<std::size_t>(state.range(0)), 64, 6, store);
  ModelConfig cfg;
  cfg.net.embed_dim = 64;
  Model model = init_model(cfg, 1);
  const EpisodeInput in = make_input(synth.corpus[0], store);
  std::vector<double> y;
  for (const auto& s : synth.corpus[0].scenes) y.push_back(s.summary_label.value_or(0));
  const PositionPrior prior = position_prior(in.size());
  for (auto _ : state) {
    model.params.zero_grad();
    nc::Tape tape;
    NetContext ctx{tape, model.params, cfg.net, nullptr, ""};
    const ModelForward fw = model_forward(ctx, cfg, in, synth.corpus[0]);
    nc::Var loss = loss_total(tape, fw.logits, y, &*fw.columns, &prior, LossConfig{}, nullptr, true);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_ModelForwardBackward)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_Coverage(benchmark::State& state) {
  TpSets tps{{{3, 4}, {10}, {20, 21}, {30}, {40, 41}}};
  AspectSets aspects{{AspectKind::Victim, {2, 9}}, {AspectKind::Motive, {39}}, {AspectKind::Evidence, {15, 16}}};
  for (auto _ : state) benchmark::DoNotOptimize(coverage(tps, aspects));
}
BENCHMARK(BM_Coverage);

}  // namespace
}  // namespace screensum

BENCHMARK_MAIN();
