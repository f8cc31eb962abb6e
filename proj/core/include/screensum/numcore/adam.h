#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "screensum/numcore/tensor.h"

namespace screensum::nc {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Frozen parameters are skipped; moments are keyed
// by parameter name and must keep their shape across steps.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update from the gradients currently held in `params`.
  void step(ParameterSet& params);

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  struct Moments {
    Tensor first;
    Tensor second;
  };
  const std::map<std::string, Moments>& moments() const { return moments_; }

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace screensum::nc
