#include "screensum/numcore/tape.h"

#include <cmath>
#include <set>
#include <sstream>

namespace screensum::nc {

namespace {

thread_local std::string g_fault_op;
thread_local double g_fault_scale = 1.0;

}  // namespace

void set_backward_fault(const std::string& op, double scale) {
  g_fault_op = op;
  g_fault_scale = scale;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? " x " : "") << shape[i];
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor Tensor::vector(std::vector<double> v) {
  Tensor t;
  t.shape = {v.size()};
  t.values = std::move(v);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  if (v.size() != rows * cols)
    throw ShapeError("Tensor::matrix: " + std::to_string(v.size()) + " values for " +
                     shape_string({rows, cols}));
  Tensor t;
  t.shape = {rows, cols};
  t.values = std::move(v);
  return t;
}

double Tensor::item() const {
  if (values.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape));
  return values[0];
}

Parameter& ParameterSet::add(const std::string& name, Tensor init) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = name;
  p.grad = Tensor(init.shape);
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return it->second;
}

void ParameterSet::zero_grad() {
  for (auto& [_, p] : params_) std::fill(p.grad.values.begin(), p.grad.values.end(), 0.0);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void ParameterSet::set_frozen(const std::string& prefix, bool frozen) {
  for (auto& [name, p] : params_) {
    if (name.rfind(prefix, 0) == 0) p.frozen = frozen;
  }
}

std::size_t ParameterSet::load_matching(const ParameterSet& other) {
  std::size_t copied = 0;
  for (auto& [name, p] : params_) {
    auto it = other.params_.find(name);
    if (it == other.params_.end()) continue;
    if (it->second.value.shape != p.value.shape)
      throw ShapeError("parameter '" + name + "' has shape " + shape_string(p.value.shape) +
                       " but the source has " + shape_string(it->second.value.shape));
    p.value = it->second.value;
    ++copied;
  }
  return copied;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (const auto& [name, p] : params_) {
    auto it = other.params_.find(name);
    if (it == other.params_.end()) return false;
    if (p.value.shape != it->second.value.shape || p.value.values != it->second.value.values) return false;
  }
  return true;
}

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Node node;
  node.op = "parameter";
  node.value = p.value;
  node.param = &p;
  node.requires_grad = !p.frozen;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size() - 1);
  bound_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(std::string op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  for (double v : value.values) {
    if (!std::isfinite(v)) throw NumericError("non-finite value produced by op '" + op + "'");
  }
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw std::logic_error("op '" + node.op + "' mixes values from different tapes");
    node.requires_grad = node.requires_grad || requires_grad(in.id());
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::logic_error("backward: loss is not on this tape");
  if (loss.size() != 1) throw ShapeError("backward: loss must be scalar, got " + shape_string(loss.shape()));
  if (backward_done_) throw std::logic_error("backward: tape has already been differentiated");
  backward_done_ = true;

  for (auto& node : nodes_) {
    if (node.requires_grad) node.grad.assign(node.value.size(), 0.0);
  }
  if (!nodes_[static_cast<std::size_t>(loss.id())].requires_grad) return;
  nodes_[static_cast<std::size_t>(loss.id())].grad[0] = 1.0;

  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.requires_grad || !node.backward) continue;
    for (double g : node.grad) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient reaching op '" + node.op + "'");
    }
    if (!g_fault_op.empty() && node.op == g_fault_op) {
      std::vector<double> scaled = node.grad;
      for (double& g : scaled) g *= g_fault_scale;
      node.backward(*this, scaled);
    } else {
      node.backward(*this, node.grad);
    }
  }

  for (auto& node : nodes_) {
    if (!node.param || !node.requires_grad) continue;
    auto& dst = node.param->grad.values;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (!std::isfinite(node.grad[i]))
        throw NumericError("non-finite gradient for parameter '" + node.param->name + "'");
      dst[i] += node.grad[i];
    }
  }
}

const std::vector<double>& Tape::grad(Var v) const {
  const Node& node = nodes_.at(static_cast<std::size_t>(v.id()));
  if (!node.requires_grad) throw std::logic_error("gradient requested for a detached value (op '" + node.op + "')");
  if (!backward_done_) throw std::logic_error("gradient requested before backward()");
  return node.grad;
}

std::vector<std::string> Tape::op_names() const {
  std::set<std::string> names;
  for (const auto& node : nodes_) {
    if (node.op != "constant" && node.op != "parameter") names.insert(node.op);
  }
  return {names.begin(), names.end()};
}

}  // namespace screensum::nc
