#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "screensum/corpus.h"
#include "screensum/embedding.h"
#include "screensum/summarizers.h"
#include "screensum/train.h"

namespace screensum {

using TpSets = std::array<std::set<std::size_t>, kNumTurningPoints>;
using AspectSets = std::map<AspectKind, std::set<std::size_t>>;

// F1 (x100) of `selected` against `gold`; 0 when precision and recall are both 0.
// Throws std::out_of_range for an index >= n.
double f1_score(const std::set<std::size_t>& selected, const std::set<std::size_t>& gold, std::size_t n);

struct F1Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double f1() const;  // x100
};
F1Counts f1_counts(const std::set<std::size_t>& selected, const std::set<std::size_t>& gold, std::size_t n);

// min |a - b| over a in `a`, b in `b`; nullopt when either set is empty.
std::optional<std::size_t> set_distance(const std::set<std::size_t>& a, const std::set<std::size_t>& b);

struct CoverageResult {
  double clamped = 0.0;  // 100 * covered aspects / |A|
  double literal = 0.0;  // 100 * (TP, aspect) pairs within distance 1 / |A|
};

// Throws std::invalid_argument when `aspects` is empty.
CoverageResult coverage(const TpSets& tp_sets, const AspectSets& aspects);

// cells[j][a]: percentage of episodes containing aspect a in which TP j lies
// within distance 1 of it; nullopt when the aspect never occurs.
struct AspectTable {
  std::array<std::array<std::optional<double>, kNumAspects>, kNumTurningPoints> cells{};
  std::array<std::size_t, kNumAspects> instances{};
};
AspectTable tp_aspect_table(const std::vector<TpSets>& tp_sets, const std::vector<AspectSets>& aspects);

// Mean set size over the five TPs, averaged over episodes.
double scenes_per_tp(const std::vector<TpSets>& tp_sets);

struct EpisodeResult {
  std::string episode_id;
  std::size_t fold = 0;
  std::vector<std::size_t> selected;
  std::vector<double> scores;
  std::optional<double> f1;  // absent for unlabeled episodes
  F1Counts counts;
  std::optional<TpSets> tp_sets;
  std::optional<CoverageResult> coverage;  // absent without TPs or aspects
};

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> train, dev, test;
  std::optional<double> f1;  // mean over labeled test episodes
  std::optional<std::string> error;
  std::vector<EpochRecord> log;
  std::optional<nc::ParameterSet> params;  // kept on request
};

struct EvalReport {
  std::vector<EpisodeResult> episodes;
  std::vector<FoldResult> folds;
  std::optional<double> macro_f1;        // mean over folds of the per-fold episode mean
  std::optional<double> episode_mean_f1;  // mean over all labeled episodes
  std::optional<double> micro_f1;        // pooled counts
  std::optional<double> coverage;        // mean clamped coverage
  std::optional<double> coverage_literal;
  std::optional<double> scenes_per_tp;
  std::optional<AspectTable> aspect_table;
  std::size_t coverage_skipped = 0;  // episodes with TPs but no aspect labels

  bool failed() const;
};

// Scores `results` (episode_id, selection, optional TP sets filled in) against
// the corpus and fills every aggregate.
void finalize_report(EvalReport& report, const Corpus& corpus);

enum class CvModelKind { Unsupervised, Supervised, GoldOracle };

struct CvSpec {
  CvModelKind kind = CvModelKind::Unsupervised;
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::size_t dev_episodes = 4;       // carved from each training pool
  std::vector<std::string> exclude;   // episodes removed before splitting
  std::size_t jobs = 1;
  double tp_threshold = kDefaultTpThreshold;
  bool keep_params = false;

  UnsupervisedConfig unsupervised;
  UnsupervisedResources resources;  // tfidf is built corpus-wide when null

  ModelConfig model;
  TrainConfig train;
  const nc::ParameterSet* pretrained = nullptr;
};

// k-fold evaluation. Training failures are recorded per fold (see
// FoldResult::error) instead of propagating.
EvalReport cross_validate(const Corpus& corpus, const EmbeddingStore* store, const CvSpec& spec);

}  // namespace screensum
