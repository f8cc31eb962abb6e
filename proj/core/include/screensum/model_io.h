#pragma once

#include <filesystem>

#include "screensum/summarizers.h"
#include "screensum/tpnet.h"

namespace screensum {

struct TpNetCheckpoint {
  TpNetConfig config;
  nc::ParameterSet params;
};

// Checkpoints carry their architecture in the metadata so they load without
// extra flags. Loading a file of the wrong kind throws FormatError.
void save_tpnet(const std::filesystem::path& path, const TpNetConfig& config, const nc::ParameterSet& params);
TpNetCheckpoint load_tpnet(const std::filesystem::path& path);

// The one-hot fixed-TP network travels under the "fixed." prefix.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace screensum
