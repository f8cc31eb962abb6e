#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace screensum::nc {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// A NaN/Inf appeared in a forward value or a gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major array of doubles. Rank 0 (scalar), 1 (vector) or 2 (matrix).
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), values(shape_size(shape), fill) {}

  static Tensor scalar(double v) { return Tensor({}, v); }
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }
  double item() const;

  double& at(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;
};

// Named learnable tensors. Iteration is by name so optimizer order and
// checkpoint layout are deterministic; element addresses are stable.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grad();
  std::size_t scalar_count() const;
  std::size_t size() const { return params_.size(); }

  // Marks every parameter whose name starts with `prefix`.
  void set_frozen(const std::string& prefix, bool frozen);

  // Copies values for names present in both sets; shapes must match.
  // Returns the number of tensors copied.
  std::size_t load_matching(const ParameterSet& other);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  bool operator==(const ParameterSet& other) const;

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace screensum::nc
