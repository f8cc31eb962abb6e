#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "screensum/numcore/tensor.h"

namespace screensum::nc {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Receives d(loss)/d(output) and adds into the inputs' gradients through the tape.
using BackwardFn = std::function<void(Tape&, const std::vector<double>& grad_out)>;

// Records executed ops in order; backward() sweeps them in reverse, visiting
// each node once, and adds parameter gradients into Parameter::grad.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Binding the same Parameter twice returns the same Var.
  Var param(Parameter& p);

  // Records an op output. Throws NumericError naming `op` if any value is not finite.
  Var record(std::string op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  void backward(Var loss);

  // Gradient of the loss w.r.t. `v` after backward(); throws for values that
  // do not require gradients.
  const std::vector<double>& grad(Var v) const;
  std::vector<double>& grad_buffer(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  const std::string& op_name(int id) const { return nodes_[static_cast<std::size_t>(id)].op; }
  std::size_t size() const { return nodes_.size(); }

  // Distinct op names recorded so far (excluding leaves).
  std::vector<std::string> op_names() const;

 private:
  struct Node {
    std::string op;
    Tensor value;
    std::vector<double> grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> bound_;
  bool backward_done_ = false;
};

// Test hook: scales the backward contribution of every node recorded with
// this op name (empty name disables). Thread-local.
void set_backward_fault(const std::string& op, double scale);

}  // namespace screensum::nc
