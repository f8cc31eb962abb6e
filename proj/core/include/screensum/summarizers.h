#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "screensum/corpus.h"
#include "screensum/embedding.h"
#include "screensum/graphsum.h"
#include "screensum/tpnet.h"

namespace screensum {

// ---------------------------------------------------------------------------
// Unsupervised summarizers

enum class UnsupervisedAlgo { TextrankTfidf, TextrankNeural, SummerUnsup, SummerPrior, SceneSum, Lead, Last, Mixed };

std::string_view algo_name(UnsupervisedAlgo algo);
std::optional<UnsupervisedAlgo> parse_algo(std::string_view name);

struct UnsupervisedConfig {
  UnsupervisedAlgo algo = UnsupervisedAlgo::SummerUnsup;
  double lambda1 = kDefaultLambda1;
  double ratio = kDefaultRatio;
  double threshold = kDefaultPruneThreshold;
  std::uint64_t seed = 0;               // Mixed only
  bool power_iteration = false;         // textrank-tfidf only
  bool charscore_union = false;         // scenesum only
  std::array<double, kNumTurningPoints> centers = kDefaultTpCenters;  // summer-prior
  double sigma_fraction = kDefaultSigmaFraction;                       // summer-prior
};

// Everything an unsupervised run may consult. Only the fields the selected
// algorithm needs must be set.
struct UnsupervisedResources {
  const EmbeddingStore* embeddings = nullptr;  // textrank-neural, summer-*, scenesum
  const TfidfModel* tfidf = nullptr;           // textrank-tfidf
  nc::ParameterSet* tp_params = nullptr;       // summer-unsup
  const TpNetConfig* tp_config = nullptr;      // summer-unsup
};

struct EpisodeSummary {
  std::string episode_id;
  SummarySelection selection;
  std::vector<double> scores;  // per scene; empty for the position baselines
};

// Throws std::invalid_argument naming the missing resource.
EpisodeSummary summarize_unsupervised(const Screenplay& screenplay, const UnsupervisedConfig& config,
                                      const UnsupervisedResources& resources);

// ---------------------------------------------------------------------------
// Supervised heads

enum class ModelKind { SummaRunner, Summer, SceneSum };
enum class FixedTps { None, OneHot, Prior };

std::string_view model_name(ModelKind kind);
std::optional<ModelKind> parse_model(std::string_view name);
std::string_view fixed_tps_name(FixedTps mode);
std::optional<FixedTps> parse_fixed_tps(std::string_view name);

struct LossConfig {
  double a = 0.15;        // orthogonality weight
  double b = 0.1;         // focal weight
  double epsilon = 1e-4;  // KL floor inside O
  std::array<double, 2> class_weights = {1.0, 1.0};  // {negative, positive}
  bool regularizers = true;
};

struct ModelConfig {
  ModelKind kind = ModelKind::Summer;
  TpNetConfig net;
  FixedTps fixed_tps = FixedTps::None;
  bool charscore_union = false;
  std::array<double, kNumTurningPoints> centers = kDefaultTpCenters;
  double sigma_fraction = kDefaultSigmaFraction;
};

struct Model {
  ModelConfig config;
  nc::ParameterSet params;
  // Frozen copy of the pretrained TP network, for one-hot fixed TPs.
  std::optional<nc::ParameterSet> fixed_tp_net;
};

// Random initialization; `pretrained` (a TP network) overwrites the encoder
// and, for SUMMER, the TP heads. Fixed one-hot TPs require `pretrained`.
Model init_model(const ModelConfig& config, std::uint64_t seed, const nc::ParameterSet* pretrained = nullptr);

// Plain-number salience oracle: b = s*d, c = cos(s, d), u = s.d / max(|s||d|, 1e-8).
struct SalienceFeatures {
  std::vector<double> b;
  double c = 0.0;
  double u = 0.0;

  std::vector<double> concat() const;
};
SalienceFeatures salience(std::span<const double> s, std::span<const double> d);

// Differentiable counterpart, returning [b; c; u].
nc::Var salience(nc::Var s, nc::Var d);

// Additive attention pooling over s' under "sr.att.*"; writes the weights when asked.
nc::Var global_content(const NetContext& ctx, const std::vector<nc::Var>& contextual,
                       std::vector<double>* weights = nullptr);

using TpColumns = std::array<std::vector<double>, kNumTurningPoints>;

// Constant TP columns for the fixed-TP ablations (none -> nullopt).
std::optional<TpColumns> fixed_columns(Model& model, const EpisodeInput& input);

struct ModelForward {
  nc::Var logits;  // [N]
  nc::Var probs;   // [N]
  std::optional<std::array<nc::Var, kNumTurningPoints>> columns;  // SUMMER only
  bool columns_learned = false;                                     // false for fixed TPs
  std::vector<double> global_weights;  // attention over scenes for d (SummaRuNNer*, SceneSum)
};

// `screenplay` supplies the cast for SceneSum; `fixed` the constant TP columns.
ModelForward model_forward(const NetContext& ctx, const ModelConfig& config, const EpisodeInput& input,
                           const Screenplay& screenplay, const TpColumns* fixed = nullptr);

// sum over ordered pairs i != j of -log(KL(p_i || p_j) + eps).
nc::Var orthogonality(nc::Tape& tape, const std::array<nc::Var, kNumTurningPoints>& columns, double epsilon);
// sum_j KL(p_j || th_j).
nc::Var focal(nc::Tape& tape, const std::array<nc::Var, kNumTurningPoints>& columns, const PositionPrior& prior);

struct LossBreakdown {
  double total = 0.0;
  double bce = 0.0;
  double orthogonality = 0.0;
  double focal = 0.0;
};

// Weighted BCE + a*O + b*F. `columns` and `prior` may be null, which drops
// the corresponding terms; so does cfg.regularizers == false. When
// `from_logits` is set, `scores` holds logits and the stable BCE is used.
nc::Var loss_total(nc::Tape& tape, nc::Var scores, std::span<const double> labels,
                   const std::array<nc::Var, kNumTurningPoints>* columns, const PositionPrior* prior,
                   const LossConfig& cfg, LossBreakdown* breakdown = nullptr, bool from_logits = false);

struct Prediction {
  std::vector<double> probs;
  std::optional<TpPosterior> posterior;  // SUMMER: the TP columns the head used
};

// Evaluation-mode forward pass.
Prediction predict(Model& model, const Screenplay& screenplay, const EmbeddingStore& store);
std::vector<double> predict_probabilities(Model& model, const Screenplay& screenplay, const EmbeddingStore& store);

}  // namespace screensum
