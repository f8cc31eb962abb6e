#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "screensum/numcore/tape.h"

namespace screensum {
class Rng;
}

namespace screensum::nc {

// Matrix product: [r x k] * [k x c] -> [r x c], or [r x k] * [k] -> [r].
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // element-wise
Var scale(Var a, double factor);
// Adds vector b [c] to every row of a [r x c].
Var add_row_bias(Var a, Var b);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

// Rank-1 pieces. concat treats scalars as length-1 vectors.
Var concat(std::span<const Var> parts);
Var slice(Var v, std::size_t offset, std::size_t length);
Var stack_rows(std::span<const Var> rows);
Var row(Var m, std::size_t r);
Var column(Var m, std::size_t c);

Var tanh(Var a);
Var sigmoid(Var a);

// exp(x_i / tau) / sum_t exp(x_t / tau) over a vector, max-subtracted.
// Throws std::invalid_argument for tau <= 0.
Var softmax_with_temperature(Var x, double tau);

Var sum(Var a);                        // -> scalar
Var dot(Var a, Var b);                 // -> scalar
Var mean(std::span<const Var> items);  // element-wise mean of equal-shape items
// sum_i w_i * items_i with w a vector of length |items|.
Var weighted_sum(Var weights, std::span<const Var> items);
// Element-wise max across equal-shape items; ties route the gradient to the first.
Var max_pool(std::span<const Var> items);

// Inverted dropout. Identity when p == 0 or rng is null (evaluation).
Var dropout(Var a, double p, Rng* rng);

// a . b / (|a| |b|); throws NumericError when either norm is zero.
Var cosine_similarity(Var a, Var b);
// a . b / max(|a| |b|, eps): the guarded normalized dot product.
Var normalized_dot(Var a, Var b, double eps = 1e-8);

// Mean over i of -w_{y_i} [y_i log p_i + (1 - y_i) log(1 - p_i)], with
// class weights w = {negative, positive}. Probabilities are clamped to
// [1e-12, 1 - 1e-12].
Var weighted_bce(Var probs, std::span<const double> labels, std::span<const double> class_weights);
// Same objective from logits, computed stably.
Var weighted_bce_with_logits(Var logits, std::span<const double> labels,
                             std::span<const double> class_weights);

// sum_i p_i log(p_i / q_i) for discrete distributions. Inputs must be
// non-negative and sum to 1 within 1e-6 (they are renormalized); otherwise
// throws std::invalid_argument.
Var kl_divergence(Var p, Var q);

// log(x) for a scalar, used by the orthogonality regularizer.
Var log_scalar(Var x);

}  // namespace screensum::nc
