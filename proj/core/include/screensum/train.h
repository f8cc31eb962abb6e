#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "screensum/corpus.h"
#include "screensum/embedding.h"
#include "screensum/numcore/adam.h"
#include "screensum/summarizers.h"

namespace screensum {

struct TrainConfig {
  std::size_t max_epochs = 300;
  std::size_t patience = 20;          // epochs without improvement of the monitored F1
  std::optional<double> target_f1;    // stop as soon as the monitored F1 reaches this
  double ratio = kDefaultRatio;       // selection ratio used to score F1
  nc::AdamConfig adam;
  LossConfig loss;                    // class_weights are recomputed from the training fold
  bool freeze_encoder = false;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // means over training episodes
  double bce = 0.0;
  double orthogonality = 0.0;
  double focal = 0.0;
  double train_f1 = 0.0;
  std::optional<double> dev_f1;
};

struct TrainResult {
  Model model;  // parameters of the best monitored epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// {negative, positive} weights n / (2 n_c) over every labeled scene of the
// fold; balanced labels give {1, 1}. Throws if either class is absent.
std::array<double, 2> inverse_frequency_weights(const Corpus& train);

// Epoch loop with Adam, one episode per step, episode order reshuffled from
// the seed each epoch. Early stopping monitors dev F1, or training F1 when
// `dev` is empty. Throws std::invalid_argument for an empty or unlabeled
// training fold and nc::NumericError (annotated with the epoch) on divergence.
TrainResult train(const Corpus& train_fold, const Corpus& dev, const EmbeddingStore& store,
                  const ModelConfig& model_config, const TrainConfig& config,
                  const nc::ParameterSet* pretrained = nullptr, const EpochCallback& on_epoch = {});

// Macro F1 (x100) of top-`ratio` selections over labeled episodes.
double selection_f1(Model& model, const Corpus& episodes, const EmbeddingStore& store, double ratio);

}  // namespace screensum
