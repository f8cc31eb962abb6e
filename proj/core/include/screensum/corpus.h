#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace screensum {

class EmbeddingStore;

// Raised for malformed corpus, silver-label and embedding files. `line()` is
// 1-based when the failure is tied to a record, 0 otherwise.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Raised when parsed data is well-formed but breaks a data-model invariant.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Crime-story information categories annotators cite for summary scenes.
enum class AspectKind { CrimeScene = 0, Victim, DeathCause, Perpetrator, Evidence, Motive };

inline constexpr std::size_t kNumAspects = 6;
inline constexpr std::array<AspectKind, kNumAspects> kAllAspects = {
    AspectKind::CrimeScene, AspectKind::Victim,   AspectKind::DeathCause,
    AspectKind::Perpetrator, AspectKind::Evidence, AspectKind::Motive};

std::string_view aspect_name(AspectKind kind);
std::optional<AspectKind> parse_aspect(std::string_view name);

// The five narrative turning points, in story order.
inline constexpr std::size_t kNumTurningPoints = 5;
inline constexpr std::array<std::string_view, kNumTurningPoints> kTurningPointNames = {
    "Opportunity", "Change of Plans", "Point of No Return", "Major Setback", "Climax"};

struct Scene {
  std::string scene_id;
  std::size_t index = 0;
  std::vector<std::string> sentences;
  std::set<std::string> characters;
  std::optional<int> summary_label;
  std::set<AspectKind> aspects;
};

struct Screenplay {
  std::string episode_id;
  std::vector<Scene> scenes;
  std::set<std::string> main_characters;

  std::size_t size() const { return scenes.size(); }
  bool has_labels() const;
  // Indices of scenes labeled 1, ascending.
  std::set<std::size_t> gold_indices() const;
  // Scene indices per aspect, only for aspects present in the episode.
  std::map<AspectKind, std::set<std::size_t>> aspect_scenes() const;
};

using Corpus = std::vector<Screenplay>;

struct SilverTpLabels {
  std::string episode_id;
  std::array<std::set<std::size_t>, kNumTurningPoints> tp_scenes;
};

struct FoldSplit {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignments;

  std::vector<std::string> fold(std::size_t f) const;
};

// Throws InvariantError if the screenplay breaks a Scene/Screenplay invariant.
void validate(const Screenplay& screenplay);
void validate(const SilverTpLabels& labels, std::size_t num_scenes);

// One JSON episode record per line.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view text);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
std::string format_corpus(const Corpus& corpus);

std::vector<SilverTpLabels> load_silver_labels(const std::filesystem::path& path);
std::vector<SilverTpLabels> parse_silver_labels(std::string_view text);
void write_silver_labels(const std::filesystem::path& path,
                         const std::vector<SilverTpLabels>& labels);
std::string format_silver_labels(const std::vector<SilverTpLabels>& labels);

// Balanced, seed-deterministic assignment of episodes to k folds.
FoldSplit split_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed);

struct SynthCorpus {
  Corpus corpus;
  std::vector<SilverTpLabels> silver;
};

// Deterministic fixture generator. The embeddings for the generated corpus are
// written into `store` (which is reset to `embed_dim`).
SynthCorpus synth_corpus(std::size_t n_episodes, std::size_t scenes_per_episode,
                         std::size_t embed_dim, std::uint64_t seed, EmbeddingStore& store);

// Scene positions (fractions of episode length) where the generator plants turning points.
inline constexpr std::array<double, kNumTurningPoints> kSynthTpFractions = {0.10, 0.25, 0.50,
                                                                           0.75, 0.90};

}  // namespace screensum
