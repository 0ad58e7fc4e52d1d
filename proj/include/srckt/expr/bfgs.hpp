#pragma once

#include <vector>

#include "srckt/expr/evaluate.hpp"

namespace srckt {

struct BfgsOptions {
    int restarts = 10;
    int max_iterations = 200;
    double grad_tol = 1e-8;
    double armijo_c = 1e-4;
    double init_lo = -3.0;
    double init_hi = 3.0;
};

struct ConstantFit {
    std::vector<double> theta;
    double loss = 0.0;
    int restarts_used = 0;
    // Loss after every accepted step of the winning restart (starts with the
    // initial loss).
    std::vector<double> history;
};

// Mean squared error of `skeleton` with constants `theta` against the support.
// +inf when any point is invalid.
double mse_loss(const Expression& skeleton, const SupportSet& support, std::span<const double> theta);

// Quasi-Newton fit of the `c` placeholders. Throws NoConstants.
ConstantFit fit_constants_bfgs(const Expression& skeleton, const SupportSet& support, Rng& rng,
                               const BfgsOptions& opts = {});

} // namespace srckt
