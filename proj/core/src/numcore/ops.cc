#include "screensum/numcore/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "screensum/rng.h"

namespace screensum::nc {

namespace {

// Gradient buffer of an input, or null when it does not need one.
std::vector<double>* grad_of(Tape& tape, int id) {
  return tape.requires_grad(id) ? &tape.grad_buffer(id) : nullptr;
}

Tape& tape_of(Var v) {
  if (!v.valid()) throw std::logic_error("op applied to an unbound Var");
  return *v.tape();
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

void require_vector(const char* op, Var v) {
  if (v.value().rank() != 1)
    throw ShapeError(std::string(op) + ": expected a vector, got " + shape_string(v.shape()));
}

std::vector<int> ids_of(std::span<const Var> items) {
  std::vector<int> ids;
  ids.reserve(items.size());
  for (const Var& v : items) ids.push_back(v.id());
  return ids;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kProbClamp = 1e-12;
constexpr double kDistributionTolerance = 1e-6;
constexpr double kTiny = 1e-300;

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || (B.rank() != 1 && B.rank() != 2))
    throw ShapeError("matmul: unsupported shapes " + shape_string(A.shape) + " * " + shape_string(B.shape));
  const std::size_t r = A.rows(), k = A.cols();
  if (B.shape[0] != k)
    throw ShapeError("matmul: inner dimension mismatch " + shape_string(A.shape) + " * " + shape_string(B.shape));
  const std::size_t c = B.rank() == 2 ? B.cols() : 1;

  Tensor out(B.rank() == 2 ? Shape{r, c} : Shape{r});
  for (std::size_t i = 0; i < r; ++i) {
    const double* arow = A.values.data() + i * k;
    double* orow = out.values.data() + i * c;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = arow[t];
      if (av == 0.0) continue;
      const double* brow = B.values.data() + t * c;
      for (std::size_t j = 0; j < c; ++j) orow[j] += av * brow[j];
    }
  }
  const int ia = a.id(), ib = b.id();
  return tape.record("matmul", std::move(out), {a, b}, [ia, ib, r, k, c](Tape& t, const std::vector<double>& g) {
    const auto& Av = t.value(ia).values;
    const auto& Bv = t.value(ib).values;
    if (auto* ga = grad_of(t, ia)) {
      // dA = G * B^T
      for (std::size_t i = 0; i < r; ++i) {
        const double* grow = g.data() + i * c;
        double* garow = ga->data() + i * k;
        for (std::size_t q = 0; q < k; ++q) {
          const double* brow = Bv.data() + q * c;
          double acc = 0.0;
          for (std::size_t j = 0; j < c; ++j) acc += grow[j] * brow[j];
          garow[q] += acc;
        }
      }
    }
    if (auto* gb = grad_of(t, ib)) {
      // dB = A^T * G
      for (std::size_t i = 0; i < r; ++i) {
        const double* arow = Av.data() + i * k;
        const double* grow = g.data() + i * c;
        for (std::size_t q = 0; q < k; ++q) {
          const double av = arow[q];
          double* gbrow = gb->data() + q * c;
          for (std::size_t j = 0; j < c; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += bv[i];
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record("add", std::move(out), {a, b}, [ia, ib](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = grad_of(t, ib))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record("sub", std::move(out), {a, b}, [ia, ib](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = grad_of(t, ib))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record("mul", std::move(out), {a, b}, [ia, ib](Tape& t, const std::vector<double>& g) {
    const auto& av = t.value(ia).values;
    const auto& bv = t.value(ib).values;
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    if (auto* gb = grad_of(t, ib))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values) v *= factor;
  const int ia = a.id();
  return tape_of(a).record("scale", std::move(out), {a}, [ia, factor](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * factor;
  });
}

Var add_row_bias(Var a, Var b) {
  const Tensor& A = a.value();
  if (A.rank() != 2 || b.value().rank() != 1 || b.size() != A.cols())
    throw ShapeError("add_row_bias: cannot add " + shape_string(b.shape()) + " to rows of " + shape_string(A.shape));
  Tensor out = A;
  const std::size_t r = A.rows(), c = A.cols();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.values[i * c + j] += bv[j];
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record("add_row_bias", std::move(out), {a, b}, [ia, ib, r, c](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = grad_of(t, ib))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*gb)[j] += g[i * c + j];
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::vector<double> values;
  std::vector<std::size_t> sizes;
  for (const Var& p : parts) {
    if (p.value().rank() > 1) throw ShapeError("concat: expected vectors or scalars, got " + shape_string(p.shape()));
    const auto& pv = p.value().values;
    values.insert(values.end(), pv.begin(), pv.end());
    sizes.push_back(pv.size());
  }
  std::vector<int> ids = ids_of(parts);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape_of(parts[0]).record("concat", Tensor::vector(std::move(values)), inputs,
                                  [ids, sizes](Tape& t, const std::vector<double>& g) {
                                    std::size_t offset = 0;
                                    for (std::size_t p = 0; p < ids.size(); ++p) {
                                      if (auto* gp = grad_of(t, ids[p]))
                                        for (std::size_t i = 0; i < sizes[p]; ++i) (*gp)[i] += g[offset + i];
                                      offset += sizes[p];
                                    }
                                  });
}

Var slice(Var v, std::size_t offset, std::size_t length) {
  require_vector("slice", v);
  if (offset + length > v.size())
    throw ShapeError("slice: [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") out of range for " + shape_string(v.shape()));
  const auto& vv = v.value().values;
  std::vector<double> values(vv.begin() + static_cast<std::ptrdiff_t>(offset),
                             vv.begin() + static_cast<std::ptrdiff_t>(offset + length));
  const int iv = v.id();
  return tape_of(v).record("slice", Tensor::vector(std::move(values)), {v},
                           [iv, offset](Tape& t, const std::vector<double>& g) {
                             if (auto* gv = grad_of(t, iv))
                               for (std::size_t i = 0; i < g.size(); ++i) (*gv)[offset + i] += g[i];
                           });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t c = rows[0].size();
  std::vector<double> values;
  values.reserve(rows.size() * c);
  for (const Var& r : rows) {
    require_vector("stack_rows", r);
    if (r.size() != c) throw ShapeError("stack_rows: rows of unequal length");
    values.insert(values.end(), r.value().values.begin(), r.value().values.end());
  }
  std::vector<int> ids = ids_of(rows);
  std::vector<Var> inputs(rows.begin(), rows.end());
  return tape_of(rows[0]).record("stack_rows", Tensor::matrix(rows.size(), c, std::move(values)), inputs,
                                 [ids, c](Tape& t, const std::vector<double>& g) {
                                   for (std::size_t r = 0; r < ids.size(); ++r) {
                                     if (auto* gr = grad_of(t, ids[r]))
                                       for (std::size_t j = 0; j < c; ++j) (*gr)[j] += g[r * c + j];
                                   }
                                 });
}

Var row(Var m, std::size_t r) {
  const Tensor& M = m.value();
  if (M.rank() != 2 || r >= M.rows()) throw ShapeError("row: index out of range for " + shape_string(M.shape));
  const std::size_t c = M.cols();
  std::vector<double> values(M.values.begin() + static_cast<std::ptrdiff_t>(r * c),
                             M.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * c));
  const int im = m.id();
  return tape_of(m).record("row", Tensor::vector(std::move(values)), {m}, [im, r, c](Tape& t, const std::vector<double>& g) {
    if (auto* gm = grad_of(t, im))
      for (std::size_t j = 0; j < c; ++j) (*gm)[r * c + j] += g[j];
  });
}

Var column(Var m, std::size_t c) {
  const Tensor& M = m.value();
  if (M.rank() != 2 || c >= M.cols()) throw ShapeError("column: index out of range for " + shape_string(M.shape));
  const std::size_t rows = M.rows(), cols = M.cols();
  std::vector<double> values(rows);
  for (std::size_t i = 0; i < rows; ++i) values[i] = M.values[i * cols + c];
  const int im = m.id();
  return tape_of(m).record("column", Tensor::vector(std::move(values)), {m},
                           [im, c, rows, cols](Tape& t, const std::vector<double>& g) {
                             if (auto* gm = grad_of(t, im))
                               for (std::size_t i = 0; i < rows; ++i) (*gm)[i * cols + c] += g[i];
                           });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.values) v = std::tanh(v);
  std::vector<double> y = out.values;
  const int ia = a.id();
  return tape_of(a).record("tanh", std::move(out), {a}, [ia, y = std::move(y)](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.values) v = stable_sigmoid(v);
  std::vector<double> y = out.values;
  const int ia = a.id();
  return tape_of(a).record("sigmoid", std::move(out), {a}, [ia, y = std::move(y)](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax_with_temperature(Var x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_with_temperature: tau must be positive");
  require_vector("softmax_with_temperature", x);
  const auto& xv = x.value().values;
  if (xv.empty()) throw ShapeError("softmax_with_temperature: empty input");
  const double mx = *std::max_element(xv.begin(), xv.end());
  std::vector<double> y(xv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    y[i] = std::exp((xv[i] - mx) / tau);
    total += y[i];
  }
  for (double& v : y) v /= total;
  std::vector<double> cached = y;
  const int ix = x.id();
  return tape_of(x).record("softmax_with_temperature", Tensor::vector(std::move(y)), {x},
                           [ix, tau, y = std::move(cached)](Tape& t, const std::vector<double>& g) {
                             auto* gx = grad_of(t, ix);
                             if (!gx) return;
                             double inner = 0.0;
                             for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * y[i];
                             for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += y[i] * (g[i] - inner) / tau;
                           });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values) s += v;
  const int ia = a.id();
  return tape_of(a).record("sum", Tensor::scalar(s), {a}, [ia](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (double& v : *ga) v += g[0];
  });
}

Var dot(Var a, Var b) {
  require_same_shape("dot", a, b);
  const auto& av = a.value().values;
  const auto& bv = b.value().values;
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record("dot", Tensor::scalar(s), {a, b}, [ia, ib](Tape& t, const std::vector<double>& g) {
    const auto& av = t.value(ia).values;
    const auto& bv = t.value(ib).values;
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < av.size(); ++i) (*ga)[i] += g[0] * bv[i];
    if (auto* gb = grad_of(t, ib))
      for (std::size_t i = 0; i < bv.size(); ++i) (*gb)[i] += g[0] * av[i];
  });
}

Var mean(std::span<const Var> items) {
  if (items.empty()) throw ShapeError("mean: no inputs");
  Tensor out(items[0].shape());
  for (const Var& v : items) {
    if (v.shape() != out.shape) throw ShapeError("mean: inputs of unequal shape");
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += v.value().values[i];
  }
  const double inv = 1.0 / static_cast<double>(items.size());
  for (double& v : out.values) v *= inv;
  std::vector<int> ids = ids_of(items);
  std::vector<Var> inputs(items.begin(), items.end());
  return tape_of(items[0]).record("mean", std::move(out), inputs, [ids, inv](Tape& t, const std::vector<double>& g) {
    for (int id : ids) {
      if (auto* gi = grad_of(t, id))
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i] * inv;
    }
  });
}

Var weighted_sum(Var weights, std::span<const Var> items) {
  require_vector("weighted_sum", weights);
  if (items.empty() || weights.size() != items.size())
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(items.size()) + " items");
  const auto& w = weights.value().values;
  Tensor out(items[0].shape());
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].shape() != out.shape) throw ShapeError("weighted_sum: items of unequal shape");
    const auto& iv = items[k].value().values;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += w[k] * iv[i];
  }
  std::vector<int> ids = ids_of(items);
  const int iw = weights.id();
  std::vector<Var> inputs(items.begin(), items.end());
  inputs.push_back(weights);
  return tape_of(weights).record("weighted_sum", std::move(out), inputs, [ids, iw](Tape& t, const std::vector<double>& g) {
    const auto& w = t.value(iw).values;
    auto* gw = grad_of(t, iw);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (auto* gi = grad_of(t, ids[k]))
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i] * w[k];
      if (gw) {
        const auto& iv = t.value(ids[k]).values;
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * iv[i];
        (*gw)[k] += acc;
      }
    }
  });
}

Var max_pool(std::span<const Var> items) {
  if (items.empty()) throw ShapeError("max_pool: no inputs");
  Tensor out = items[0].value();
  std::vector<std::size_t> argmax(out.size(), 0);
  for (std::size_t k = 1; k < items.size(); ++k) {
    if (items[k].shape() != out.shape) throw ShapeError("max_pool: items of unequal shape");
    const auto& iv = items[k].value().values;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (iv[i] > out.values[i]) {
        out.values[i] = iv[i];
        argmax[i] = k;
      }
    }
  }
  std::vector<int> ids = ids_of(items);
  std::vector<Var> inputs(items.begin(), items.end());
  return tape_of(items[0]).record("max_pool", std::move(out), inputs,
                                  [ids, argmax = std::move(argmax)](Tape& t, const std::vector<double>& g) {
                                    for (std::size_t i = 0; i < g.size(); ++i) {
                                      if (auto* gi = grad_of(t, ids[argmax[i]])) (*gi)[i] += g[i];
                                    }
                                  });
}

Var dropout(Var a, double p, Rng* rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (p == 0.0 || rng == nullptr) return a;
  std::vector<double> mask(a.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng->uniform() < p ? 0.0 : keep_scale;
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= mask[i];
  const int ia = a.id();
  return tape_of(a).record("dropout", std::move(out), {a}, [ia, mask = std::move(mask)](Tape& t, const std::vector<double>& g) {
    if (auto* ga = grad_of(t, ia))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * mask[i];
  });
}

namespace {

// Shared forward/backward for a.b / denom(|a||b|).
Var normalized_product(const char* op, Var a, Var b, double eps, bool guarded) {
  require_same_shape(op, a, b);
  const auto& av = a.value().values;
  const auto& bv = b.value().values;
  double d = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) d += av[i] * bv[i];
  const double na = norm2(av), nb = norm2(bv);
  const double raw = na * nb;
  if (!guarded && raw == 0.0) throw NumericError(std::string(op) + ": zero-norm input");
  const bool clamped = guarded && raw < eps;
  const double denom = clamped ? eps : raw;
  const double value = d / denom;
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(op, Tensor::scalar(value), {a, b},
                           [ia, ib, d, na, nb, denom, clamped](Tape& t, const std::vector<double>& g) {
                             const auto& av = t.value(ia).values;
                             const auto& bv = t.value(ib).values;
                             // d/da [d / (|a||b|)] = b/den - d * a / (|a|^2 den)
                             auto* ga = grad_of(t, ia);
                             auto* gb = grad_of(t, ib);
                             for (std::size_t i = 0; i < av.size(); ++i) {
                               double da = bv[i] / denom;
                               double db = av[i] / denom;
                               if (!clamped) {
                                 if (na > 0.0) da -= d * av[i] / (na * na * denom);
                                 if (nb > 0.0) db -= d * bv[i] / (nb * nb * denom);
                               }
                               if (ga) (*ga)[i] += g[0] * da;
                               if (gb) (*gb)[i] += g[0] * db;
                             }
                           });
}

}  // namespace

Var cosine_similarity(Var a, Var b) { return normalized_product("cosine_similarity", a, b, 0.0, false); }

Var normalized_dot(Var a, Var b, double eps) { return normalized_product("normalized_dot", a, b, eps, true); }

namespace {

std::vector<double> check_weights(std::span<const double> labels, std::span<const double> class_weights,
                                  std::size_t n) {
  if (labels.size() != n) throw ShapeError("bce: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " predictions");
  if (class_weights.size() != 2) throw ShapeError("bce: class_weights must hold {negative, positive}");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) throw std::invalid_argument("bce: labels must be 0 or 1");
    w[i] = labels[i] == 1.0 ? class_weights[1] : class_weights[0];
  }
  return w;
}

}  // namespace

Var weighted_bce(Var probs, std::span<const double> labels, std::span<const double> class_weights) {
  require_vector("weighted_bce", probs);
  const std::size_t n = probs.size();
  std::vector<double> w = check_weights(labels, class_weights, n);
  std::vector<double> y(labels.begin(), labels.end());
  const auto& pv = probs.value().values;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pv[i], kProbClamp, 1.0 - kProbClamp);
    loss -= w[i] * (y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
  }
  loss /= static_cast<double>(n);
  const int ip = probs.id();
  return tape_of(probs).record("weighted_bce", Tensor::scalar(loss), {probs},
                               [ip, w = std::move(w), y = std::move(y)](Tape& t, const std::vector<double>& g) {
                                 auto* gp = grad_of(t, ip);
                                 if (!gp) return;
                                 const auto& pv = t.value(ip).values;
                                 const double inv_n = 1.0 / static_cast<double>(pv.size());
                                 for (std::size_t i = 0; i < pv.size(); ++i) {
                                   if (pv[i] < kProbClamp || pv[i] > 1.0 - kProbClamp) continue;
                                   const double p = pv[i];
                                   (*gp)[i] += g[0] * inv_n * w[i] * (-(y[i] / p) + (1.0 - y[i]) / (1.0 - p));
                                 }
                               });
}

Var weighted_bce_with_logits(Var logits, std::span<const double> labels, std::span<const double> class_weights) {
  require_vector("weighted_bce_with_logits", logits);
  const std::size_t n = logits.size();
  std::vector<double> w = check_weights(labels, class_weights, n);
  std::vector<double> y(labels.begin(), labels.end());
  const auto& zv = logits.value().values;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // -[y log s(z) + (1-y) log(1-s(z))] = max(z,0) - z y + log(1 + e^{-|z|})
    const double z = zv[i];
    loss += w[i] * (std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z))));
  }
  loss /= static_cast<double>(n);
  const int iz = logits.id();
  return tape_of(logits).record("weighted_bce_with_logits", Tensor::scalar(loss), {logits},
                                [iz, w = std::move(w), y = std::move(y)](Tape& t, const std::vector<double>& g) {
                                  auto* gz = grad_of(t, iz);
                                  if (!gz) return;
                                  const auto& zv = t.value(iz).values;
                                  const double inv_n = 1.0 / static_cast<double>(zv.size());
                                  for (std::size_t i = 0; i < zv.size(); ++i)
                                    (*gz)[i] += g[0] * inv_n * w[i] * (stable_sigmoid(zv[i]) - y[i]);
                                });
}

Var kl_divergence(Var p, Var q) {
  require_vector("kl_divergence", p);
  require_same_shape("kl_divergence", p, q);
  const auto& pv = p.value().values;
  const auto& qv = q.value().values;
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (pv[i] < 0.0 || qv[i] < 0.0) throw std::invalid_argument("kl_divergence: negative probability");
    sp += pv[i];
    sq += qv[i];
  }
  if (std::abs(sp - 1.0) > kDistributionTolerance || std::abs(sq - 1.0) > kDistributionTolerance)
    throw std::invalid_argument("kl_divergence: inputs must be distributions (sums " + std::to_string(sp) +
                                ", " + std::to_string(sq) + ")");
  std::vector<double> P(pv.size()), Q(pv.size());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    P[i] = pv[i] / sp;
    Q[i] = std::max(qv[i] / sq, kTiny);
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P[i] > 0.0) kl += P[i] * std::log(P[i] / Q[i]);
  }
  const int ip = p.id(), iq = q.id();
  return tape_of(p).record("kl_divergence", Tensor::scalar(kl), {p, q},
                           [ip, iq, P = std::move(P), Q = std::move(Q), sp, sq, kl](Tape& t, const std::vector<double>& g) {
                             // Gradients include the renormalization p / sum(p), q / sum(q).
                             if (auto* gp = grad_of(t, ip)) {
                               for (std::size_t i = 0; i < P.size(); ++i) {
                                 const double log_ratio = std::log(std::max(P[i], kTiny) / Q[i]);
                                 (*gp)[i] += g[0] * (log_ratio - kl) / sp;
                               }
                             }
                             if (auto* gq = grad_of(t, iq)) {
                               for (std::size_t i = 0; i < P.size(); ++i) (*gq)[i] += g[0] * (1.0 - P[i] / Q[i]) / sq;
                             }
                           });
}

Var log_scalar(Var x) {
  const double v = x.item();
  if (!(v > 0.0)) throw NumericError("log_scalar: non-positive input");
  const int ix = x.id();
  return tape_of(x).record("log_scalar", Tensor::scalar(std::log(v)), {x}, [ix, v](Tape& t, const std::vector<double>& g) {
    if (auto* gx = grad_of(t, ix)) (*gx)[0] += g[0] / v;
  });
}

}  // namespace screensum::nc
