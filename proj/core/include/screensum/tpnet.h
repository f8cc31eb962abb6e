#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "screensum/corpus.h"
#include "screensum/embedding.h"
#include "screensum/numcore/adam.h"
#include "screensum/numcore/ops.h"
#include "screensum/numcore/tape.h"

namespace screensum {

class Rng;

struct TpNetConfig {
  std::size_t embed_dim = 512;
  std::size_t hidden = 64;         // per direction, both BiLSTMs
  double tau = 0.01;               // TP attention temperature
  double window_fraction = 0.2;    // CIL context window, fraction of N
  double dropout = 0.2;

  std::size_t contextual_dim() const { return 2 * hidden; }
  std::size_t topic_dim() const { return 2 * hidden + 3; }
};

// Sentence embeddings of one screenplay, scene by scene (non-owning).
struct EpisodeInput {
  std::string episode_id;
  std::vector<const Matrix*> scenes;

  std::size_t size() const { return scenes.size(); }
};

EpisodeInput make_input(const Screenplay& screenplay, const EmbeddingStore& store);

// p(i, j): probability that scene i realizes turning point j; columns sum to 1.
struct TpPosterior {
  Matrix p;  // N x 5

  std::size_t scenes() const { return p.rows; }
  std::vector<double> column(std::size_t j) const;
};

// Expected-position distributions th(i, j) over scenes, one column per TP.
struct PositionPrior {
  Matrix th;  // N x 5
  std::array<double, kNumTurningPoints> centers{};
  double sigma_fraction = 0.0;

  std::vector<double> column(std::size_t j) const;
};

inline constexpr std::array<double, kNumTurningPoints> kDefaultTpCenters = {0.10, 0.25, 0.50, 0.75, 0.90};
inline constexpr double kDefaultSigmaFraction = 0.05;
inline constexpr double kDefaultTpThreshold = 0.05;

// Parameter names live under "<prefix>enc." (scene encoder and contextualizer)
// and "<prefix>tp." (the five attention heads).
void init_encoder_params(nc::ParameterSet& params, const TpNetConfig& config, Rng& rng,
                         const std::string& prefix = "");
void init_tp_head_params(nc::ParameterSet& params, const TpNetConfig& config, Rng& rng,
                         const std::string& prefix = "");
nc::ParameterSet init_tpnet_params(const TpNetConfig& config, std::uint64_t seed);

// Everything a forward pass needs. A null dropout_rng means evaluation mode.
struct NetContext {
  nc::Tape& tape;
  nc::ParameterSet& params;
  const TpNetConfig& config;
  Rng* dropout_rng = nullptr;
  std::string prefix;

  nc::Var param(const std::string& name) const;
  nc::Var maybe_dropout(nc::Var v) const;
};

// One LSTM direction over `inputs`; returns hidden states in input order.
// `reverse` runs from the last input to the first.
std::vector<nc::Var> run_lstm(const NetContext& ctx, const std::string& name, const std::vector<nc::Var>& inputs,
                              bool reverse);

// BiLSTM over sentence vectors, additive attention, weighted sum (2 * hidden).
// Writes the attention weights to `attention` when given.
nc::Var encode_scene(const NetContext& ctx, const Matrix& sentences, std::vector<double>* attention = nullptr);

// s'_i = [forward h_i ; backward h_i] over the scene sequence.
std::vector<nc::Var> contextualize(const NetContext& ctx, const std::vector<nc::Var>& scene_vectors);

// t_i = [s'_i ; cos(s'_i, prev_i) ; cos(s'_i, next_i) ; cos(prev_i, next_i)] where
// prev/next are the means over the l = max(1, round(window * N)) scenes before
// and after i. A missing side zeroes the features that involve it.
std::vector<nc::Var> cil(nc::Tape& tape, const std::vector<nc::Var>& contextual, double window_fraction);

// Column j: softmax over scenes of tanh(W_j t_i + b_j) / tau.
std::array<nc::Var, kNumTurningPoints> tp_attention(const NetContext& ctx, const std::vector<nc::Var>& topic_aware,
                                                    double tau);

struct TpForward {
  std::vector<nc::Var> scene_vectors;
  std::vector<nc::Var> contextual;   // s'
  std::vector<nc::Var> topic_aware;  // t
  std::array<nc::Var, kNumTurningPoints> columns;
};

// Encoder plus CIL; fills columns only when `with_attention` is set.
TpForward tpnet_forward(const NetContext& ctx, const EpisodeInput& input, bool with_attention = true);

TpPosterior to_posterior(const std::array<nc::Var, kNumTurningPoints>& columns);

// Evaluation-mode posterior for one episode.
TpPosterior infer_posterior(nc::ParameterSet& params, const TpNetConfig& config, const EpisodeInput& input,
                            const std::string& prefix = "");

// f_i = max_j p(i, j).
std::vector<double> tp_scores(const TpPosterior& posterior);

// Column j is a Gaussian over indices centered at centers[j] * (N - 1) with std
// sigma_fraction * N, normalized. Throws std::invalid_argument for N < 5,
// unsorted centers or a non-positive width.
PositionPrior position_prior(std::size_t n,
                             const std::array<double, kNumTurningPoints>& centers = kDefaultTpCenters,
                             double sigma_fraction = kDefaultSigmaFraction);

// set_j = { i : p(i, j) > threshold }.
std::array<std::set<std::size_t>, kNumTurningPoints> predict_tp_scenes(const TpPosterior& posterior,
                                                                        double threshold = kDefaultTpThreshold);

// sum_j KL(q_j || p_j) with q_j uniform over the silver scenes of TP j.
nc::Var pretrain_loss(nc::Tape& tape, const std::array<nc::Var, kNumTurningPoints>& columns,
                      const SilverTpLabels& silver);

// One forward/backward/Adam update on a single episode; returns the loss
// before the update.
double pretrain_step(nc::ParameterSet& params, nc::Adam& optimizer, const TpNetConfig& config,
                     const EpisodeInput& input, const SilverTpLabels& silver, Rng* dropout_rng);

struct PretrainResult {
  nc::ParameterSet params;
  std::vector<double> epoch_losses;  // mean over episodes
};

// Sequential pretraining over every episode that has silver labels.
PretrainResult pretrain_tpnet(const Corpus& corpus, const EmbeddingStore& store,
                              const std::vector<SilverTpLabels>& silver, const TpNetConfig& config,
                              std::size_t epochs, std::uint64_t seed, const nc::AdamConfig& adam = {});

}  // namespace screensum
