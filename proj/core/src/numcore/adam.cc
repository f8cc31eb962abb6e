#include "screensum/numcore/adam.h"

#include <cmath>

namespace screensum::nc {

void Adam::step(ParameterSet& params) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& [name, p] : params) {
    if (p.frozen) continue;
    if (p.grad.shape != p.value.shape)
      throw ShapeError("adam: gradient shape " + shape_string(p.grad.shape) + " does not match parameter '" +
                       name + "' " + shape_string(p.value.shape));
    auto [it, inserted] = moments_.try_emplace(name, Moments{Tensor(p.value.shape), Tensor(p.value.shape)});
    Moments& m = it->second;
    if (m.first.shape != p.value.shape)
      throw ShapeError("adam: parameter '" + name + "' changed shape between steps");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.values[i];
      m.first.values[i] = config_.beta1 * m.first.values[i] + (1.0 - config_.beta1) * g;
      m.second.values[i] = config_.beta2 * m.second.values[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m.first.values[i] / correction1;
      const double v_hat = m.second.values[i] / correction2;
      p.value.values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace screensum::nc
