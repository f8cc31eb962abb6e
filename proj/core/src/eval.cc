#include "screensum/eval.h"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "screensum/rng.h"

namespace screensum {

double F1Counts::f1() const {
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 100.0 * 2.0 * p * r / (p + r);
}

F1Counts f1_counts(const std::set<std::size_t>& selected, const std::set<std::size_t>& gold, std::size_t n) {
  F1Counts c;
  for (std::size_t i : selected) {
    if (i >= n) throw std::out_of_range("f1: selected index " + std::to_string(i) + " >= " + std::to_string(n));
    if (gold.count(i)) ++c.tp;
    else ++c.fp;
  }
  for (std::size_t i : gold) {
    if (i >= n) throw std::out_of_range("f1: gold index " + std::to_string(i) + " >= " + std::to_string(n));
    if (!selected.count(i)) ++c.fn;
  }
  return c;
}

double f1_score(const std::set<std::size_t>& selected, const std::set<std::size_t>& gold, std::size_t n) {
  return f1_counts(selected, gold, n).f1();
}

std::optional<std::size_t> set_distance(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  if (a.empty() || b.empty()) return std::nullopt;
  std::size_t best = SIZE_MAX;
  for (std::size_t x : a) {
    // Nearest neighbours of x in b.
    auto it = b.lower_bound(x);
    if (it != b.end()) best = std::min(best, *it - x);
    if (it != b.begin()) best = std::min(best, x - *std::prev(it));
  }
  return best;
}

namespace {

bool within_one(const std::set<std::size_t>& tp, const std::set<std::size_t>& aspect) {
  const auto d = set_distance(tp, aspect);
  return d && *d <= 1;
}

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

}  // namespace

CoverageResult coverage(const TpSets& tp_sets, const AspectSets& aspects) {
  if (aspects.empty()) throw std::invalid_argument("coverage: episode has no aspect labels");
  std::size_t covered = 0, pairs = 0;
  for (const auto& [kind, scenes] : aspects) {
    std::size_t hits = 0;
    for (const auto& tp : tp_sets) hits += within_one(tp, scenes) ? 1 : 0;
    pairs += hits;
    covered += hits > 0 ? 1 : 0;
  }
  const double a = static_cast<double>(aspects.size());
  return {100.0 * static_cast<double>(covered) / a, 100.0 * static_cast<double>(pairs) / a};
}

AspectTable tp_aspect_table(const std::vector<TpSets>& tp_sets, const std::vector<AspectSets>& aspects) {
  if (tp_sets.size() != aspects.size()) throw std::invalid_argument("tp_aspect_table: episode counts differ");
  AspectTable table;
  std::array<std::array<std::size_t, kNumAspects>, kNumTurningPoints> hits{};
  for (std::size_t e = 0; e < tp_sets.size(); ++e) {
    for (const auto& [kind, scenes] : aspects[e]) {
      const auto a = static_cast<std::size_t>(kind);
      ++table.instances[a];
      for (std::size_t j = 0; j < kNumTurningPoints; ++j) hits[j][a] += within_one(tp_sets[e][j], scenes) ? 1 : 0;
    }
  }
  for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
    for (std::size_t a = 0; a < kNumAspects; ++a) {
      if (table.instances[a] > 0)
        table.cells[j][a] = 100.0 * static_cast<double>(hits[j][a]) / static_cast<double>(table.instances[a]);
    }
  }
  return table;
}

double scenes_per_tp(const std::vector<TpSets>& tp_sets) {
  if (tp_sets.empty()) throw std::invalid_argument("scenes_per_tp: no predictions");
  double total = 0.0;
  for (const auto& sets : tp_sets) {
    std::size_t size = 0;
    for (const auto& s : sets) size += s.size();
    total += static_cast<double>(size) / static_cast<double>(kNumTurningPoints);
  }
  return total / static_cast<double>(tp_sets.size());
}

bool EvalReport::failed() const {
  return std::any_of(folds.begin(), folds.end(), [](const FoldResult& f) { return f.error.has_value(); });
}

void finalize_report(EvalReport& report, const Corpus& corpus) {
  std::map<std::string, const Screenplay*> by_id;
  for (const auto& sp : corpus) by_id[sp.episode_id] = &sp;

  F1Counts pooled;
  std::vector<double> episode_f1, cov, cov_literal;
  std::vector<TpSets> tps;
  std::vector<AspectSets> aspects;
  std::map<std::size_t, std::vector<double>> per_fold;
  report.coverage_skipped = 0;

  for (auto& ep : report.episodes) {
    auto it = by_id.find(ep.episode_id);
    if (it == by_id.end()) throw std::invalid_argument("report: unknown episode '" + ep.episode_id + "'");
    const Screenplay& sp = *it->second;
    if (sp.has_labels()) {
      ep.counts = f1_counts({ep.selected.begin(), ep.selected.end()}, sp.gold_indices(), sp.size());
      ep.f1 = ep.counts.f1();
      pooled.tp += ep.counts.tp;
      pooled.fp += ep.counts.fp;
      pooled.fn += ep.counts.fn;
      episode_f1.push_back(*ep.f1);
      per_fold[ep.fold].push_back(*ep.f1);
    }
    if (ep.tp_sets) {
      const AspectSets a = sp.aspect_scenes();
      tps.push_back(*ep.tp_sets);
      aspects.push_back(a);
      if (a.empty()) {
        ++report.coverage_skipped;
      } else {
        ep.coverage = coverage(*ep.tp_sets, a);
        cov.push_back(ep.coverage->clamped);
        cov_literal.push_back(ep.coverage->literal);
      }
    }
  }

  std::vector<double> fold_means;
  for (auto& fold : report.folds) {
    auto it = per_fold.find(fold.fold);
    fold.f1 = it == per_fold.end() ? std::nullopt : mean_of(it->second);
    if (fold.f1) fold_means.push_back(*fold.f1);
  }
  report.episode_mean_f1 = mean_of(episode_f1);
  report.macro_f1 = report.folds.empty() ? report.episode_mean_f1 : mean_of(fold_means);
  if (!episode_f1.empty()) report.micro_f1 = pooled.f1();
  report.coverage = mean_of(cov);
  report.coverage_literal = mean_of(cov_literal);
  if (!tps.empty()) {
    report.scenes_per_tp = scenes_per_tp(tps);
    report.aspect_table = tp_aspect_table(tps, aspects);
  }
}

namespace {

struct FoldOutput {
  FoldResult result;
  std::vector<EpisodeResult> episodes;
};

FoldOutput run_fold(std::size_t f, const std::vector<const Screenplay*>& test, const std::vector<const Screenplay*>& pool,
                    const EmbeddingStore* store, const CvSpec& spec, const UnsupervisedResources& resources) {
  FoldOutput out;
  out.result.fold = f;
  for (const auto* sp : test) out.result.test.push_back(sp->episode_id);

  // Dev carve: a seeded sample of the training pool.
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(spec.seed + 1000 + f);
  rng.shuffle(order);
  const std::size_t n_dev = pool.size() > spec.dev_episodes ? spec.dev_episodes : 0;
  std::vector<bool> is_dev(pool.size(), false);
  for (std::size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;
  Corpus train_fold, dev_fold;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (is_dev[i] ? dev_fold : train_fold).push_back(*pool[i]);
    (is_dev[i] ? out.result.dev : out.result.train).push_back(pool[i]->episode_id);
  }

  auto episode = [&](const Screenplay& sp) {
    EpisodeResult ep;
    ep.episode_id = sp.episode_id;
    ep.fold = f;
    return ep;
  };

  try {
    switch (spec.kind) {
      case CvModelKind::GoldOracle:
        for (const auto* sp : test) {
          EpisodeResult ep = episode(*sp);
          const auto gold = sp->gold_indices();
          ep.selected.assign(gold.begin(), gold.end());
          out.episodes.push_back(std::move(ep));
        }
        break;
      case CvModelKind::Unsupervised:
        for (const auto* sp : test) {
          EpisodeResult ep = episode(*sp);
          EpisodeSummary s = summarize_unsupervised(*sp, spec.unsupervised, resources);
          ep.selected = s.selection.selected;
          ep.scores = s.scores;
          if (spec.unsupervised.algo == UnsupervisedAlgo::SummerUnsup) {
            const TpPosterior post = infer_posterior(*resources.tp_params, *resources.tp_config, make_input(*sp, *store));
            ep.tp_sets = predict_tp_scenes(post, spec.tp_threshold);
          }
          out.episodes.push_back(std::move(ep));
        }
        break;
      case CvModelKind::Supervised: {
        if (!store) throw std::invalid_argument("supervised cross-validation needs sentence embeddings");
        TrainResult trained = train(train_fold, dev_fold, *store, spec.model, spec.train, spec.pretrained);
        out.result.log = trained.log;
        for (const auto* sp : test) {
          EpisodeResult ep = episode(*sp);
          Prediction pred = predict(trained.model, *sp, *store);
          ep.selected = select_top(CentralityScores{pred.probs}, spec.train.ratio).selected;
          ep.scores = pred.probs;
          if (pred.posterior) ep.tp_sets = predict_tp_scenes(*pred.posterior, spec.tp_threshold);
          out.episodes.push_back(std::move(ep));
        }
        if (spec.keep_params) out.result.params = std::move(trained.model.params);
        break;
      }
    }
  } catch (const std::exception& e) {
    out.result.error = "fold " + std::to_string(f) + ": " + e.what();
    out.episodes.clear();
  }
  return out;
}

}  // namespace

EvalReport cross_validate(const Corpus& corpus, const EmbeddingStore* store, const CvSpec& spec) {
  std::set<std::string> excluded(spec.exclude.begin(), spec.exclude.end());
  for (const auto& id : excluded) {
    if (std::none_of(corpus.begin(), corpus.end(), [&](const Screenplay& sp) { return sp.episode_id == id; }))
      throw std::invalid_argument("cross_validate: excluded episode '" + id + "' is not in the corpus");
  }
  Corpus pool;
  for (const auto& sp : corpus)
    if (!excluded.count(sp.episode_id)) pool.push_back(sp);
  if (pool.size() < spec.k)
    throw std::invalid_argument("cross_validate: " + std::to_string(pool.size()) + " episodes for k = " +
                                std::to_string(spec.k));

  UnsupervisedResources resources = spec.resources;
  if (!resources.embeddings) resources.embeddings = store;
  std::optional<TfidfModel> tfidf;
  if (spec.kind == CvModelKind::Unsupervised && spec.unsupervised.algo == UnsupervisedAlgo::TextrankTfidf &&
      !resources.tfidf) {
    tfidf = build_tfidf(pool);  // no labels involved, so corpus-wide statistics are safe
    resources.tfidf = &*tfidf;
  }
  if (spec.kind == CvModelKind::Unsupervised && spec.unsupervised.algo == UnsupervisedAlgo::SummerUnsup &&
      (!resources.tp_params || !resources.tp_config || !store))
    throw std::invalid_argument("cross_validate: summer-unsup needs embeddings and a pretrained TP network");

  const FoldSplit split = split_folds(pool, spec.k, spec.seed);
  std::map<std::string, const Screenplay*> by_id;
  for (const auto& sp : pool) by_id[sp.episode_id] = &sp;

  std::vector<FoldOutput> outputs(spec.k);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < spec.k; f = next++) {
      std::vector<const Screenplay*> test, train_pool;
      for (const auto& sp : pool) (split.assignments.at(sp.episode_id) == f ? test : train_pool).push_back(&sp);
      outputs[f] = run_fold(f, test, train_pool, store, spec, resources);
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(spec.jobs, 1, spec.k);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  EvalReport report;
  for (auto& out : outputs) {
    report.folds.push_back(std::move(out.result));
    for (auto& ep : out.episodes) report.episodes.push_back(std::move(ep));
  }
  finalize_report(report, pool);
  return report;
}

}  // namespace screensum
