#include "screensum/graphsum.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "screensum/rng.h"

namespace screensum {

std::vector<double> SceneGraph::degrees() const {
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) deg[i] += (*this)(i, j);
  }
  return deg;
}

SceneGraph graph_from_similarities(std::size_t n, std::vector<double> similarities, double h) {
  if (n < 2) throw std::invalid_argument("scene graph needs at least 2 scenes");
  if (!(h >= 0.0 && h < 1.0)) throw std::invalid_argument("prune threshold must lie in [0, 1)");
  if (similarities.size() != n * n) throw std::invalid_argument("similarity matrix must be n*n");
  SceneGraph g{n, h, std::move(similarities)};
  for (std::size_t i = 0; i < n; ++i) {
    g.weights[i * n + i] = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double w = std::max(0.0, g.weights[i * n + j]);
      if (w <= h) w = 0.0;
      g.weights[i * n + j] = w;
      g.weights[j * n + i] = w;
    }
  }
  return g;
}

SceneGraph build_graph(const std::vector<std::vector<double>>& scene_reps, double h) {
  const std::size_t n = scene_reps.size();
  if (n < 2) throw std::invalid_argument("build_graph: need at least 2 scenes");
  std::vector<double> sims(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = cosine(scene_reps[i], scene_reps[j]);
      sims[i * n + j] = c;
      sims[j * n + i] = c;
    }
  }
  return graph_from_similarities(n, std::move(sims), h);
}

SceneGraph build_tfidf_graph(const TfidfModel& model, const Screenplay& screenplay, double h) {
  const std::size_t n = screenplay.size();
  std::vector<const SparseVector*> vecs;
  for (const auto& scene : screenplay.scenes) vecs.push_back(&model.vector_for(screenplay.episode_id, scene.index));
  std::vector<double> sims(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = sparse_cosine(*vecs[i], *vecs[j]);
      sims[i * n + j] = c;
      sims[j * n + i] = c;
    }
  }
  return graph_from_similarities(n, std::move(sims), h);
}

CentralityScores centrality_directed(const SceneGraph& g, double lambda1) {
  if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) throw std::invalid_argument("lambda1 must lie in [0, 1]");
  const double lambda2 = 1.0 - lambda1;
  CentralityScores out{std::vector<double>(g.n, 0.0)};
  for (std::size_t i = 0; i < g.n; ++i) {
    double before = 0.0, after = 0.0;
    for (std::size_t j = 0; j < i; ++j) before += g(i, j);
    for (std::size_t j = i + 1; j < g.n; ++j) after += g(i, j);
    out.scores[i] = lambda1 * before + lambda2 * after;
  }
  return out;
}

CentralityScores centrality_summer(const SceneGraph& g, double lambda1, const std::vector<double>& f) {
  if (f.size() != g.n)
    throw std::invalid_argument("centrality_summer: f has " + std::to_string(f.size()) +
                                " entries for a graph of " + std::to_string(g.n) + " scenes");
  if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) throw std::invalid_argument("lambda1 must lie in [0, 1]");
  const double lambda2 = 1.0 - lambda1;
  CentralityScores out{std::vector<double>(g.n, 0.0)};
  for (std::size_t i = 0; i < g.n; ++i) {
    double before = 0.0, after = 0.0;
    for (std::size_t j = 0; j < i; ++j) before += g(i, j) + f[j];
    for (std::size_t j = i + 1; j < g.n; ++j) after += g(i, j) + f[i];
    out.scores[i] = lambda1 * before + lambda2 * after;
  }
  return out;
}

CentralityScores centrality_power_iteration(const SceneGraph& g, std::size_t max_iterations,
                                            double tolerance) {
  std::vector<double> x(g.n, 1.0 / static_cast<double>(g.n));
  std::vector<double> next(g.n);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < g.n; ++j) acc += g(i, j) * x[j];
      next[i] = acc;
      total += acc;
    }
    // Edgeless graph: every scene is equally (un)central.
    if (total == 0.0) return {std::vector<double>(g.n, 0.0)};
    double delta = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) {
      next[i] /= total;
      delta += std::abs(next[i] - x[i]);
    }
    x.swap(next);
    if (delta < tolerance) break;
  }
  return {x};
}

std::vector<double> character_scores(const Screenplay& screenplay, bool literal_union) {
  std::set<std::string> everyone;
  for (const auto& scene : screenplay.scenes) everyone.insert(scene.characters.begin(), scene.characters.end());

  std::vector<double> scores(screenplay.size(), 0.0);
  for (std::size_t i = 0; i < screenplay.size(); ++i) {
    const auto& cast = screenplay.scenes[i].characters;
    if (cast.empty()) continue;
    std::size_t hits = 0;
    for (const auto& c : everyone) {
      const bool in_scene = cast.count(c) != 0;
      const bool is_main = screenplay.main_characters.count(c) != 0;
      if (literal_union ? (in_scene || is_main) : (in_scene && is_main)) ++hits;
    }
    scores[i] = static_cast<double>(hits) / static_cast<double>(cast.size());
  }
  return scores;
}

std::size_t summary_length(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("compression ratio must lie in (0, 1]");
  const auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(m, 1, n);
}

SummarySelection select_top(const CentralityScores& scores, double ratio) {
  const std::size_t n = scores.scores.size();
  if (n == 0) throw std::invalid_argument("select_top: no scores");
  const std::size_t m = summary_length(n, ratio);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
  order.resize(m);
  std::sort(order.begin(), order.end());
  return {order, ratio};
}

SummarySelection baseline(BaselineKind kind, std::size_t n, double ratio, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("baseline: empty screenplay");
  const std::size_t m = summary_length(n, ratio);
  SummarySelection out{{}, ratio};
  switch (kind) {
    case BaselineKind::Lead:
      for (std::size_t i = 0; i < m; ++i) out.selected.push_back(i);
      break;
    case BaselineKind::Last:
      for (std::size_t i = n - m; i < n; ++i) out.selected.push_back(i);
      break;
    case BaselineKind::Mixed: {
      const double window_scenes = 0.3 * static_cast<double>(n);
      if (window_scenes < 1.0) throw std::invalid_argument("Mixed baseline needs 0.3 * n >= 1");
      const auto window = static_cast<std::size_t>(std::llround(window_scenes));
      const std::size_t from_start = m / 2;
      const std::size_t from_end = m - from_start;
      if (from_start > window || from_end > window)
        throw std::invalid_argument("Mixed baseline: ratio too large for the 30% windows");
      Rng rng(seed);
      for (std::size_t i : rng.sample_without_replacement(window, from_start)) out.selected.push_back(i);
      for (std::size_t i : rng.sample_without_replacement(window, from_end))
        out.selected.push_back(n - window + i);
      std::sort(out.selected.begin(), out.selected.end());
      break;
    }
  }
  return out;
}

}  // namespace screensum
