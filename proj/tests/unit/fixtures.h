#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "screensum/corpus.h"
#include "screensum/embedding.h"
#include "screensum/rng.h"

namespace screensum::testing {

// Screenplay with `n` single-sentence scenes; `labels` and `casts` are optional per scene.
inline Screenplay make_screenplay(const std::string& id, std::size_t n, const std::vector<int>& labels = {},
                                  const std::vector<std::set<std::string>>& casts = {},
                                  const std::set<std::string>& main = {}) {
  Screenplay sp;
  sp.episode_id = id;
  sp.main_characters = main;
  for (std::size_t i = 0; i < n; ++i) {
    Scene s;
    s.index = i;
    s.scene_id = id + "-" + std::to_string(i);
    s.sentences = {"scene " + std::to_string(i) + " text."};
    if (!labels.empty()) s.summary_label = labels[i];
    if (!casts.empty()) s.characters = casts[i];
    sp.scenes.push_back(s);
  }
  return sp;
}

// Gaussian sentence rows for every scene of the corpus, one per sentence.
inline EmbeddingStore random_store(const Corpus& corpus, std::size_t dim, std::uint64_t seed) {
  EmbeddingStore store(dim);
  Rng rng(seed);
  for (const auto& sp : corpus) {
    for (const auto& scene : sp.scenes) {
      Matrix m(scene.sentences.size(), dim);
      for (double& v : m.data) v = rng.normal();
      store.insert(sp.episode_id, scene.index, std::move(m));
    }
  }
  return store;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  // Per-process so tests of one suite can run concurrently.
  auto dir = std::filesystem::temp_directory_path() /
             ("screensum-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace screensum::testing
