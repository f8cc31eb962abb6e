#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "screensum/numcore/tape.h"

namespace screensum::nc {

// Builds a scalar loss on the given tape, binding parameters with Tape::param.
// Must be deterministic (no dropout randomness that varies between calls).
using LossFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise at most this many per parameter,
  // sampled with `seed`.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
  double abs_floor = 1e-6;
  // Run the isolated primitive checks on failure to name the faulty op.
  bool localize_failures = true;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;
  bool passed = false;
  std::vector<std::string> ops_on_tape;
  // Ops whose isolated check fails (only filled in when the check fails).
  std::vector<std::string> offending_ops;
};

// Compares reverse-mode gradients with central finite differences.
// Throws NumericError if the loss is not finite.
GradCheckReport grad_check(const LossFn& loss, ParameterSet& params, double tol, GradCheckOptions options = {});

struct PrimitiveCheck {
  std::string op;
  std::function<GradCheckReport(double tol, std::uint64_t seed)> run;
};

// One randomized isolation check per differentiable primitive.
const std::vector<PrimitiveCheck>& primitive_checks();

}  // namespace screensum::nc
