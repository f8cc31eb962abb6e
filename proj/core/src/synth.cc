#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "screensum/corpus.h"
#include "screensum/embedding.h"
#include "screensum/rng.h"

namespace screensum {

namespace {

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Weighted sum of directions, normalized and rounded to float precision so the
// in-memory store equals what the binary file round-trips to.
std::vector<double> blend(const std::vector<std::pair<double, const std::vector<double>*>>& parts) {
  std::vector<double> out(parts.front().second->size(), 0.0);
  for (const auto& [w, dir] : parts) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (*dir)[i];
  }
  double norm = 0.0;
  for (double x : out) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) out[0] = norm = 1.0;
  for (double& x : out) x = static_cast<double>(static_cast<float>(x / norm));
  return out;
}

std::size_t tp_position(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n - 1)));
}

AspectKind aspect_for_position(double fraction, Rng& rng) {
  // Early scenes reveal the crime, the middle the evidence trail, the end the resolution.
  static constexpr std::array<std::array<AspectKind, 2>, 3> kByAct = {{
      {AspectKind::CrimeScene, AspectKind::Victim},
      {AspectKind::DeathCause, AspectKind::Evidence},
      {AspectKind::Perpetrator, AspectKind::Motive},
  }};
  const std::size_t act = fraction < 0.3 ? 0 : (fraction < 0.7 ? 1 : 2);
  return kByAct[act][rng.below(2)];
}

const std::array<std::string_view, 12> kFillerWords = {
    "hallway", "coffee", "phone", "car",   "window", "street",
    "office",  "papers", "night", "rain",  "door",   "table"};
const std::array<std::string_view, 8> kKeyWords = {"body",   "blood",  "suspect", "motive",
                                                   "weapon", "autopsy", "print",  "alibi"};
const std::array<std::string_view, 4> kMainCast = {"BRASS", "HOLT", "MORENO", "QUINN"};
const std::array<std::string_view, 6> kExtras = {"CLERK", "DRIVER", "NEIGHBOR",
                                                 "OFFICER", "VALET", "WAITER"};

std::string make_sentence(Rng& rng, bool key_scene, std::size_t episode, std::size_t scene) {
  std::string s;
  const std::size_t words = 4 + rng.below(5);
  for (std::size_t w = 0; w < words; ++w) {
    if (!s.empty()) s += ' ';
    if (key_scene && rng.uniform() < 0.5) {
      s += kKeyWords[rng.below(kKeyWords.size())];
    } else {
      s += kFillerWords[rng.below(kFillerWords.size())];
    }
  }
  s += " e" + std::to_string(episode) + "s" + std::to_string(scene) + '.';
  return s;
}

}  // namespace

SynthCorpus synth_corpus(std::size_t n_episodes, std::size_t scenes_per_episode, std::size_t embed_dim,
                         std::uint64_t seed, EmbeddingStore& store) {
  if (n_episodes == 0 || scenes_per_episode == 0 || embed_dim == 0)
    throw std::invalid_argument("synth_corpus: all counts must be positive");
  if (scenes_per_episode < 2)
    throw std::invalid_argument("synth_corpus: a screenplay needs at least 2 scenes");

  Rng rng(seed);
  store = EmbeddingStore(embed_dim);
  SynthCorpus out;

  // Corpus-wide direction shared by all summary-worthy scenes.
  const std::vector<double> salient = random_unit(rng, embed_dim);
  const std::size_t n = scenes_per_episode;
  const std::size_t num_labeled = std::max<std::size_t>(1, std::lround(0.3 * static_cast<double>(n)));

  for (std::size_t e = 0; e < n_episodes; ++e) {
    Screenplay sp;
    sp.episode_id = "synth-" + std::to_string(e);
    for (auto name : kMainCast) sp.main_characters.emplace(name);

    SilverTpLabels silver;
    silver.episode_id = sp.episode_id;
    std::set<std::size_t> tp_scenes;
    for (std::size_t j = 0; j < kNumTurningPoints; ++j) {
      const std::size_t pos = tp_position(kSynthTpFractions[j], n);
      silver.tp_scenes[j].insert(pos);
      tp_scenes.insert(pos);
    }

    // Labeled scenes: the TP scenes first, then their neighbors, then random fill.
    std::set<std::size_t> labeled;
    for (std::size_t pos : tp_scenes) {
      if (labeled.size() < num_labeled) labeled.insert(pos);
    }
    std::vector<std::size_t> neighbors;
    for (std::size_t pos : tp_scenes) {
      if (pos > 0) neighbors.push_back(pos - 1);
      if (pos + 1 < n) neighbors.push_back(pos + 1);
    }
    rng.shuffle(neighbors);
    for (std::size_t pos : neighbors) {
      if (labeled.size() < num_labeled) labeled.insert(pos);
    }
    while (labeled.size() < num_labeled) labeled.insert(static_cast<std::size_t>(rng.below(n)));

    const std::vector<double> theme = random_unit(rng, embed_dim);
    std::vector<std::vector<double>> tp_dirs;
    for (std::size_t j = 0; j < kNumTurningPoints; ++j) tp_dirs.push_back(random_unit(rng, embed_dim));

    for (std::size_t i = 0; i < n; ++i) {
      Scene scene;
      scene.index = i;
      scene.scene_id = sp.episode_id + "-scene-" + std::to_string(i);
      const bool key = labeled.count(i) != 0;
      scene.summary_label = key ? 1 : 0;

      // Nearest planted TP gives labeled scenes their cluster.
      std::size_t nearest = 0;
      for (std::size_t j = 1; j < kNumTurningPoints; ++j) {
        const auto d = [&](std::size_t t) {
          const auto pos = static_cast<double>(tp_position(kSynthTpFractions[t], n));
          return std::abs(pos - static_cast<double>(i));
        };
        if (d(j) < d(nearest)) nearest = j;
      }

      const std::vector<double> noise = random_unit(rng, embed_dim);
      std::vector<double> base =
          key ? blend({{1.0, &salient}, {0.8, &tp_dirs[nearest]}, {0.35, &theme}, {0.6, &noise}})
              : blend({{0.45, &theme}, {1.0, &noise}});

      const std::size_t num_sentences = 1 + rng.below(4);
      Matrix rows(num_sentences, embed_dim);
      for (std::size_t s = 0; s < num_sentences; ++s) {
        scene.sentences.push_back(make_sentence(rng, key, e, i));
        const std::vector<double> jitter = random_unit(rng, embed_dim);
        auto row = blend({{1.0, &base}, {0.25, &jitter}});
        std::copy(row.begin(), row.end(), rows.row(s).begin());
      }
      store.insert(sp.episode_id, i, std::move(rows));

      const std::size_t cast_size = 1 + rng.below(3);
      for (std::size_t c = 0; c < cast_size; ++c) {
        const bool main = rng.uniform() < (key ? 0.8 : 0.3);
        if (main) {
          scene.characters.emplace(kMainCast[rng.below(kMainCast.size())]);
        } else {
          scene.characters.emplace(kExtras[rng.below(kExtras.size())]);
        }
      }

      if (key) {
        const double fraction = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        scene.aspects.insert(aspect_for_position(fraction, rng));
        if (rng.uniform() < 0.25) scene.aspects.insert(aspect_for_position(fraction, rng));
      }
      sp.scenes.push_back(std::move(scene));
    }
    validate(sp);
    validate(silver, n);
    out.corpus.push_back(std::move(sp));
    out.silver.push_back(std::move(silver));
  }
  return out;
}

}  // namespace screensum
