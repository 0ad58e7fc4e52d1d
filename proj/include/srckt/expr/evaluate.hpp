#pragma once

#include <optional>
#include <span>
#include <vector>

#include "srckt/expr/expression.hpp"
#include "srckt/tensor.hpp"
#include "srckt/util/rng.hpp"

namespace srckt {

struct SupportSet {
    Mat x;                 // n_points x n_vars
    std::vector<double> y; // n_points

    std::size_t n_points() const { return y.size(); }
    std::size_t n_vars() const { return x.cols; }
};

struct EvalResult {
    std::vector<double> y;
    std::vector<char> valid; // 0 where the point hit a domain violation or overflow

    bool all_valid() const;
    std::size_t valid_count() const;
};

// Elementwise evaluation of every row of `x`. `theta` supplies the `c`
// placeholders in pre-order. Throws MissingConstants when too few are given.
EvalResult evaluate(const Expression& expr, const Mat& x, std::span<const double> theta = {});

struct SupportOptions {
    std::size_t n_points = 200;
    double lo = -10.0;
    double hi = 10.0;
    int n_vars = kMaxVariables;
};

// Samples points uniformly in [lo, hi]^n_vars until n_points valid
// evaluations are collected. Throws UnsatisfiableDomain after 100 x n_points
// attempts.
SupportSet make_support(const Expression& expr, const SupportOptions& opts, Rng& rng,
                        std::span<const double> theta = {});

// Recompute y for `expr` on the rows of `base`; rows invalid for `expr` are
// resampled. Throws UnsatisfiableDomain if any row cannot be repaired.
SupportSet reevaluate_support(const Expression& expr, const SupportSet& base, const SupportOptions& opts,
                              Rng& rng);

} // namespace srckt
