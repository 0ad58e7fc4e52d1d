#include "srckt/expr/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "srckt/util/error.hpp"

namespace srckt {
namespace {

// Evaluates the subtree over all rows; NaN marks an invalid point.
std::vector<double> eval_rows(const Expression& e, const Mat& x, std::span<const double> theta,
                              std::size_t& next_const) {
    const std::size_t n = x.rows;
    std::vector<double> out(n);
    if (e.is_literal()) {
        std::fill(out.begin(), out.end(), e.value);
        return out;
    }
    const auto& vocab = Vocabulary::standard();
    if (e.token == tok::C) {
        if (next_const >= theta.size()) fail(ErrorCode::MissingConstants, "not enough constants supplied");
        std::fill(out.begin(), out.end(), theta[next_const++]);
        return out;
    }
    if (vocab.is_variable(e.token)) {
        const auto col = static_cast<std::size_t>(vocab.variable_index(e.token));
        if (col >= x.cols) fail(ErrorCode::ShapeMismatch, "support lacks column for variable");
        for (std::size_t i = 0; i < n; ++i) out[i] = x(i, col);
        return out;
    }
    if (vocab.arity(e.token) == 0) fail(ErrorCode::MalformedPrefix, "control token inside expression");

    const std::vector<double> a = eval_rows(e.children[0], x, theta, next_const);
    if (e.children.size() == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = a[i];
            switch (e.token) {
            case tok::Sin: out[i] = std::sin(v); break;
            case tok::Cos: out[i] = std::cos(v); break;
            case tok::Tan: out[i] = std::tan(v); break;
            case tok::Log: out[i] = v > 0.0 ? std::log(v) : NAN; break;
            case tok::Exp: out[i] = std::exp(v); break;
            case tok::Sqrt: out[i] = v >= 0.0 ? std::sqrt(v) : NAN; break;
            case tok::Abs: out[i] = std::fabs(v); break;
            default: out[i] = NAN;
            }
        }
    } else {
        const std::vector<double> b = eval_rows(e.children[1], x, theta, next_const);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = a[i];
            const double v = b[i];
            switch (e.token) {
            case tok::Add: out[i] = u + v; break;
            case tok::Mul: out[i] = u * v; break;
            case tok::Div: out[i] = v != 0.0 ? u / v : NAN; break;
            case tok::Pow: out[i] = std::pow(u, v); break;
            default: out[i] = NAN;
            }
        }
    }
    for (double& v : out) {
        if (!std::isfinite(v)) v = NAN;
    }
    return out;
}

} // namespace

bool EvalResult::all_valid() const {
    return std::all_of(valid.begin(), valid.end(), [](char v) { return v != 0; });
}

std::size_t EvalResult::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), char{1}));
}

EvalResult evaluate(const Expression& expr, const Mat& x, std::span<const double> theta) {
    const std::size_t k = count_constants(expr);
    if (theta.size() < k) fail(ErrorCode::MissingConstants, "expression has " + std::to_string(k) + " constants");
    std::size_t next = 0;
    EvalResult r;
    r.y = eval_rows(expr, x, theta, next);
    r.valid.resize(r.y.size());
    for (std::size_t i = 0; i < r.y.size(); ++i) r.valid[i] = std::isfinite(r.y[i]) ? 1 : 0;
    return r;
}

SupportSet make_support(const Expression& expr, const SupportOptions& opts, Rng& rng,
                        std::span<const double> theta) {
    if (!(opts.lo < opts.hi) || opts.n_points == 0) fail(ErrorCode::ConfigError, "bad support options");
    const auto cols = static_cast<std::size_t>(opts.n_vars);
    if (max_variable_index(expr) >= opts.n_vars) fail(ErrorCode::ShapeMismatch, "expression uses more variables");
    SupportSet s;
    s.x = Mat(opts.n_points, cols);
    s.y.reserve(opts.n_points);
    const std::size_t cap = 100 * opts.n_points;
    std::size_t attempts = 0;
    // Candidate points are drawn in batches and evaluated together.
    const std::size_t batch = std::max<std::size_t>(opts.n_points, 16);
    while (s.y.size() < opts.n_points) {
        if (attempts >= cap) fail(ErrorCode::UnsatisfiableDomain, to_text(expr));
        const std::size_t take = std::min(batch, cap - attempts);
        Mat cand(take, cols);
        for (double& v : cand.v) v = uniform(rng, opts.lo, opts.hi);
        attempts += take;
        const EvalResult r = evaluate(expr, cand, theta);
        for (std::size_t i = 0; i < take && s.y.size() < opts.n_points; ++i) {
            if (!r.valid[i]) continue;
            std::copy(cand.row(i), cand.row(i) + cols, s.x.row(s.y.size()));
            s.y.push_back(r.y[i]);
        }
    }
    return s;
}

SupportSet reevaluate_support(const Expression& expr, const SupportSet& base, const SupportOptions& opts,
                              Rng& rng) {
    SupportSet s = base;
    const EvalResult r = evaluate(expr, s.x);
    const std::size_t cols = s.x.cols;
    const std::size_t cap = 100 * std::max<std::size_t>(1, s.n_points());
    std::size_t attempts = 0;
    Mat one(1, cols);
    for (std::size_t i = 0; i < s.n_points(); ++i) {
        if (r.valid[i]) {
            s.y[i] = r.y[i];
            continue;
        }
        for (;;) {
            if (attempts++ >= cap) fail(ErrorCode::UnsatisfiableDomain, to_text(expr));
            for (double& v : one.v) v = uniform(rng, opts.lo, opts.hi);
            const EvalResult ri = evaluate(expr, one);
            if (ri.valid[0]) {
                std::copy(one.row(0), one.row(0) + cols, s.x.row(i));
                s.y[i] = ri.y[0];
                break;
            }
        }
    }
    return s;
}

} // namespace srckt
