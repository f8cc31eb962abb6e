#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

#include "screensum/corpus.h"
#include "screensum/embedding.h"

namespace screensum {

// Dense scene-similarity graph. After pruning every entry is 0 or in (h, 1].
struct SceneGraph {
  std::size_t n = 0;
  double threshold = 0.0;
  std::vector<double> weights;  // n*n, row-major, symmetric, zero diagonal

  double operator()(std::size_t i, std::size_t j) const { return weights[i * n + j]; }
  std::vector<double> degrees() const;
};

struct CentralityScores {
  std::vector<double> scores;
};

struct SummarySelection {
  std::vector<std::size_t> selected;  // ascending scene indices
  double ratio = 0.0;
};

inline constexpr double kDefaultPruneThreshold = 0.2;
inline constexpr double kDefaultLambda1 = 0.7;
inline constexpr double kDefaultRatio = 0.3;

// Cosine graph over scene representations; negative cosines clamp to 0 and
// anything <= h is dropped. Throws std::invalid_argument on a zero-norm rep.
SceneGraph build_graph(const std::vector<std::vector<double>>& scene_reps, double h);

// Same pruning over a precomputed symmetric similarity matrix (n*n).
SceneGraph graph_from_similarities(std::size_t n, std::vector<double> similarities, double h);

// Pruned tf*idf cosine graph for one screenplay.
SceneGraph build_tfidf_graph(const TfidfModel& model, const Screenplay& screenplay, double h);

// centrality(s_i) = l1 * sum_{j<i} e_ij + (1 - l1) * sum_{j>i} e_ij
CentralityScores centrality_directed(const SceneGraph& g, double lambda1);

// centrality(s_i) = l1 * sum_{j<i} (e_ij + f_j) + (1 - l1) * sum_{j>i} (e_ij + f_i)
CentralityScores centrality_summer(const SceneGraph& g, double lambda1, const std::vector<double>& f);

// Weighted eigenvector centrality by power iteration (no damping), for comparison
// with the degree-based undirected TextRank.
CentralityScores centrality_power_iteration(const SceneGraph& g, std::size_t max_iterations = 200,
                                            double tolerance = 1e-12);

// c_i = |S_i ∩ main| / |S_i| (0 for an empty cast), with main restricted to
// characters who appear somewhere in the screenplay. `literal_union` counts
// |C ∩ (S_i ∪ main)| in the numerator instead, which is >= 1 for any
// non-empty cast; kept for auditing.
std::vector<double> character_scores(const Screenplay& screenplay, bool literal_union = false);

// M = max(1, round(ratio * n)).
std::size_t summary_length(std::size_t n, double ratio);

// Top-M scenes, ties to the lower index, returned in screenplay order.
SummarySelection select_top(const CentralityScores& scores, double ratio);

enum class BaselineKind { Lead, Last, Mixed };

// Lead: first M; Last: last M; Mixed: M/2 uniformly from the first 30% of
// scenes and the rest from the last 30%.
SummarySelection baseline(BaselineKind kind, std::size_t n, double ratio, std::uint64_t seed);

}  // namespace screensum
