#include "screensum/numcore/grad_check.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "screensum/numcore/ops.h"
#include "screensum/rng.h"

namespace screensum::nc {

namespace {

double eval_loss(const LossFn& loss) {
  Tape tape;
  Var out = loss(tape);
  const double v = out.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossFn& loss, ParameterSet& params, double tol, GradCheckOptions options) {
  GradCheckReport report;
  params.zero_grad();
  {
    Tape tape;
    Var out = loss(tape);
    if (!std::isfinite(out.item())) throw NumericError("grad_check: non-finite loss");
    tape.backward(out);
    report.ops_on_tape = tape.op_names();
  }

  Rng rng(options.seed);
  for (auto& [name, p] : params) {
    if (p.frozen) continue;
    std::vector<std::size_t> coords;
    if (options.max_coords_per_param == 0 || options.max_coords_per_param >= p.value.size()) {
      coords.resize(p.value.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      coords = rng.sample_without_replacement(p.value.size(), options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double original = p.value.values[i];
      p.value.values[i] = original + options.step;
      const double plus = eval_loss(loss);
      p.value.values[i] = original - options.step;
      const double minus = eval_loss(loss);
      p.value.values[i] = original;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p.grad.values[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coordinates_checked;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_parameter = name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= tol;

  if (!report.passed && options.localize_failures) {
    std::set<std::string> on_tape(report.ops_on_tape.begin(), report.ops_on_tape.end());
    for (const auto& check : primitive_checks()) {
      if (!on_tape.count(check.op)) continue;
      if (!check.run(1e-4, options.seed).passed) report.offending_ops.push_back(check.op);
    }
  }
  return report;
}

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

// Projects any output onto a fixed random direction so every component matters.
Var project(Tape& tape, Var out, const Tensor& direction) { return sum(mul(out, tape.constant(direction))); }

GradCheckOptions isolated_options(std::uint64_t seed) {
  GradCheckOptions o;
  o.seed = seed;
  o.localize_failures = false;
  return o;
}

// Harness for a primitive with `arity` random inputs of the given shapes.
template <typename Build>
GradCheckReport check_op(std::vector<Shape> shapes, Shape out_shape, Build build, double tol, std::uint64_t seed,
                         double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  ParameterSet ps;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    names.push_back("in" + std::to_string(i));
    ps.add(names.back(), random_tensor(rng, shapes[i], lo, hi));
  }
  const Tensor direction = random_tensor(rng, std::move(out_shape));
  LossFn fn = [&](Tape& tape) {
    std::vector<Var> in;
    for (const auto& n : names) in.push_back(tape.param(ps.get(n)));
    return project(tape, build(tape, in), direction);
  };
  return grad_check(fn, ps, tol, isolated_options(seed));
}

std::vector<PrimitiveCheck> make_checks() {
  std::vector<PrimitiveCheck> checks;
  auto add_check = [&](std::string op, std::function<GradCheckReport(double, std::uint64_t)> fn) {
    checks.push_back({std::move(op), std::move(fn)});
  };

  add_check("matmul", [](double tol, std::uint64_t seed) {
    auto mm = check_op({{3, 4}, {4, 2}}, {3, 2}, [](Tape&, std::vector<Var>& in) { return matmul(in[0], in[1]); }, tol, seed);
    auto mv = check_op({{3, 4}, {4}}, {3}, [](Tape&, std::vector<Var>& in) { return matmul(in[0], in[1]); }, tol, seed + 1);
    return mm.max_rel_error >= mv.max_rel_error ? mm : mv;
  });
  add_check("add", [](double tol, std::uint64_t seed) {
    return check_op({{5}, {5}}, {5}, [](Tape&, std::vector<Var>& in) { return add(in[0], in[1]); }, tol, seed);
  });
  add_check("sub", [](double tol, std::uint64_t seed) {
    return check_op({{5}, {5}}, {5}, [](Tape&, std::vector<Var>& in) { return sub(in[0], in[1]); }, tol, seed);
  });
  add_check("mul", [](double tol, std::uint64_t seed) {
    return check_op({{2, 3}, {2, 3}}, {2, 3}, [](Tape&, std::vector<Var>& in) { return mul(in[0], in[1]); }, tol, seed);
  });
  add_check("scale", [](double tol, std::uint64_t seed) {
    return check_op({{4}}, {4}, [](Tape&, std::vector<Var>& in) { return scale(in[0], -1.7); }, tol, seed);
  });
  add_check("add_row_bias", [](double tol, std::uint64_t seed) {
    return check_op({{3, 4}, {4}}, {3, 4}, [](Tape&, std::vector<Var>& in) { return add_row_bias(in[0], in[1]); }, tol, seed);
  });
  add_check("concat", [](double tol, std::uint64_t seed) {
    return check_op({{2}, {3}, {1}}, {6}, [](Tape&, std::vector<Var>& in) { return concat(in); }, tol, seed);
  });
  add_check("slice", [](double tol, std::uint64_t seed) {
    return check_op({{7}}, {3}, [](Tape&, std::vector<Var>& in) { return slice(in[0], 2, 3); }, tol, seed);
  });
  add_check("stack_rows", [](double tol, std::uint64_t seed) {
    return check_op({{3}, {3}}, {2, 3}, [](Tape&, std::vector<Var>& in) { return stack_rows(in); }, tol, seed);
  });
  add_check("row", [](double tol, std::uint64_t seed) {
    return check_op({{3, 4}}, {4}, [](Tape&, std::vector<Var>& in) { return row(in[0], 1); }, tol, seed);
  });
  add_check("column", [](double tol, std::uint64_t seed) {
    return check_op({{3, 4}}, {3}, [](Tape&, std::vector<Var>& in) { return column(in[0], 2); }, tol, seed);
  });
  add_check("tanh", [](double tol, std::uint64_t seed) {
    return check_op({{6}}, {6}, [](Tape&, std::vector<Var>& in) { return tanh(in[0]); }, tol, seed, -2.0, 2.0);
  });
  add_check("sigmoid", [](double tol, std::uint64_t seed) {
    return check_op({{6}}, {6}, [](Tape&, std::vector<Var>& in) { return sigmoid(in[0]); }, tol, seed, -3.0, 3.0);
  });
  add_check("softmax_with_temperature", [](double tol, std::uint64_t seed) {
    return check_op({{6}}, {6}, [](Tape&, std::vector<Var>& in) { return softmax_with_temperature(in[0], 0.3); }, tol, seed);
  });
  add_check("sum", [](double tol, std::uint64_t seed) {
    return check_op({{2, 3}}, {}, [](Tape&, std::vector<Var>& in) { return sum(in[0]); }, tol, seed);
  });
  add_check("dot", [](double tol, std::uint64_t seed) {
    return check_op({{5}, {5}}, {}, [](Tape&, std::vector<Var>& in) { return dot(in[0], in[1]); }, tol, seed);
  });
  add_check("mean", [](double tol, std::uint64_t seed) {
    return check_op({{4}, {4}, {4}}, {4}, [](Tape&, std::vector<Var>& in) { return mean(in); }, tol, seed);
  });
  add_check("weighted_sum", [](double tol, std::uint64_t seed) {
    return check_op({{3}, {4}, {4}, {4}}, {4},
                    [](Tape&, std::vector<Var>& in) {
                      std::vector<Var> items(in.begin() + 1, in.end());
                      return weighted_sum(in[0], items);
                    },
                    tol, seed);
  });
  add_check("max_pool", [](double tol, std::uint64_t seed) {
    return check_op({{5}, {5}, {5}}, {5}, [](Tape&, std::vector<Var>& in) { return max_pool(in); }, tol, seed);
  });
  add_check("dropout", [](double tol, std::uint64_t seed) {
    return check_op({{8}}, {8},
                    [seed](Tape&, std::vector<Var>& in) {
                      Rng mask_rng(seed + 99);
                      return dropout(in[0], 0.3, &mask_rng);
                    },
                    tol, seed);
  });
  add_check("cosine_similarity", [](double tol, std::uint64_t seed) {
    return check_op({{5}, {5}}, {}, [](Tape&, std::vector<Var>& in) { return cosine_similarity(in[0], in[1]); }, tol, seed);
  });
  add_check("normalized_dot", [](double tol, std::uint64_t seed) {
    return check_op({{5}, {5}}, {}, [](Tape&, std::vector<Var>& in) { return normalized_dot(in[0], in[1]); }, tol, seed);
  });
  add_check("weighted_bce", [](double tol, std::uint64_t seed) {
    return check_op({{4}}, {},
                    [](Tape&, std::vector<Var>& in) {
                      static const std::vector<double> labels = {1, 0, 0, 1};
                      static const std::vector<double> weights = {0.7, 1.9};
                      return weighted_bce(in[0], labels, weights);
                    },
                    tol, seed, 0.1, 0.9);
  });
  add_check("weighted_bce_with_logits", [](double tol, std::uint64_t seed) {
    return check_op({{4}}, {},
                    [](Tape&, std::vector<Var>& in) {
                      static const std::vector<double> labels = {1, 0, 1, 0};
                      static const std::vector<double> weights = {0.7, 1.9};
                      return weighted_bce_with_logits(in[0], labels, weights);
                    },
                    tol, seed, -3.0, 3.0);
  });
  add_check("kl_divergence", [](double tol, std::uint64_t seed) {
    return check_op({{5}, {5}}, {},
                    [](Tape&, std::vector<Var>& in) {
                      return kl_divergence(softmax_with_temperature(in[0], 1.0), softmax_with_temperature(in[1], 1.0));
                    },
                    tol, seed);
  });
  add_check("log_scalar", [](double tol, std::uint64_t seed) {
    return check_op({{}}, {}, [](Tape&, std::vector<Var>& in) { return log_scalar(in[0]); }, tol, seed, 0.5, 2.0);
  });
  return checks;
}

}  // namespace

const std::vector<PrimitiveCheck>& primitive_checks() {
  static const std::vector<PrimitiveCheck> checks = make_checks();
  return checks;
}

}  // namespace screensum::nc
