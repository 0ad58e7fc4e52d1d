#pragma once

#include <span>
#include <vector>

#include "srckt/expr/evaluate.hpp"

namespace srckt {

struct EquivalenceOptions {
    std::size_t n_points = 200;
    double lo = -10.0;
    double hi = 10.0;
    int n_vars = kMaxVariables;
    double tol = 1e-6;
};

// Relative error used throughout: |a - b| / max(|a|, |b|, 1).
double relative_error(double a, double b);

// True iff on n_points jointly valid random points the max relative error is
// within tol. Throws UnsatisfiableDomain when too few jointly valid points exist.
bool pointwise_equivalent(const Expression& a, const Expression& b, const EquivalenceOptions& opts, Rng& rng,
                          std::span<const double> theta_a = {}, std::span<const double> theta_b = {});

// Rewrite rules: x+0, 0+x -> x; x*1, 1*x -> x; x*0, 0*x -> 0; x^1 -> x; x^0 -> 1.
Expression simplify(const Expression& expr);

// All 2^k assignments of 0/1 to the k placeholders (bit i of the variant
// index feeds placeholder i in pre-order), each simplified. Throws NoConstants.
std::vector<Expression> substitute_constants_01(const Expression& expr);

// Substitute explicit values for the placeholders (pre-order), no simplification.
Expression substitute_constants(const Expression& expr, std::span<const double> theta);

} // namespace srckt
