#pragma once

#include <string>

#include "json.hpp"
#include "screensum/eval.h"

namespace screensum::cli {

nlohmann::ordered_json report_to_json(const EvalReport& report);
// Plain-text summary table: headline F1, coverage, scenes per TP, TP x aspect matrix, folds.
std::string report_to_text(const EvalReport& report, const std::string& title);

nlohmann::ordered_json epoch_to_json(const EpochRecord& rec);

}  // namespace screensum::cli
