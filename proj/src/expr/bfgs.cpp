#include "srckt/expr/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srckt/util/error.hpp"

namespace srckt {
namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Central differences with h = 1e-6 * max(1, |theta_j|).
Vec gradient(const Expression& skel, const SupportSet& s, const Vec& theta) {
    Vec g(theta.size());
    Vec probe = theta;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::fabs(theta[j]));
        probe[j] = theta[j] + h;
        const double up = mse_loss(skel, s, probe);
        probe[j] = theta[j] - h;
        const double down = mse_loss(skel, s, probe);
        probe[j] = theta[j];
        g[j] = (up - down) / (2.0 * h);
        if (!std::isfinite(g[j])) g[j] = 0.0;
    }
    return g;
}

struct Run {
    Vec theta;
    double loss;
    std::vector<double> history;
};

Run minimize(const Expression& skel, const SupportSet& s, Vec theta, const BfgsOptions& opts) {
    const std::size_t k = theta.size();
    std::vector<double> hinv(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) hinv[i * k + i] = 1.0;

    double f = mse_loss(skel, s, theta);
    Run run{theta, f, {f}};
    if (!std::isfinite(f)) return run;
    Vec g = gradient(skel, s, theta);

    for (int it = 0; it < opts.max_iterations; ++it) {
        double gmax = 0.0;
        for (double gi : g) gmax = std::max(gmax, std::fabs(gi));
        if (gmax < opts.grad_tol) break;

        Vec p(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) p[i] -= hinv[i * k + j] * g[j];
        }
        double slope = dot(g, p);
        if (slope >= 0.0) {
            // Lost positive definiteness: restart from steepest descent.
            std::fill(hinv.begin(), hinv.end(), 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                hinv[i * k + i] = 1.0;
                p[i] = -g[i];
            }
            slope = -dot(g, g);
        }

        // Backtracking line search with the Armijo condition.
        double step = 1.0;
        Vec next(k);
        double fnext = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < k; ++i) next[i] = theta[i] + step * p[i];
            fnext = mse_loss(skel, s, next);
            if (std::isfinite(fnext) && fnext <= f + opts.armijo_c * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const Vec gnext = gradient(skel, s, next);
        Vec sv(k), yv(k);
        for (std::size_t i = 0; i < k; ++i) {
            sv[i] = next[i] - theta[i];
            yv[i] = gnext[i] - g[i];
        }
        const double sy = dot(sv, yv);
        if (sy > 1e-12 * std::sqrt(dot(sv, sv) * dot(yv, yv))) {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            Vec hy(k, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j) hy[i] += hinv[i * k + j] * yv[j];
            }
            const double yhy = dot(yv, hy);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    hinv[i * k + j] += -rho * (hy[i] * sv[j] + sv[i] * hy[j]) +
                                       (rho * rho * yhy + rho) * sv[i] * sv[j];
                }
            }
        }
        theta = next;
        f = fnext;
        g = gnext;
        run.history.push_back(f);
    }
    run.theta = theta;
    run.loss = f;
    return run;
}

} // namespace

double mse_loss(const Expression& skeleton, const SupportSet& support, std::span<const double> theta) {
    const EvalResult r = evaluate(skeleton, support.x, theta);
    double s = 0.0;
    for (std::size_t i = 0; i < r.y.size(); ++i) {
        if (!r.valid[i]) return std::numeric_limits<double>::infinity();
        const double d = r.y[i] - support.y[i];
        s += d * d;
    }
    return s / static_cast<double>(std::max<std::size_t>(1, r.y.size()));
}

ConstantFit fit_constants_bfgs(const Expression& skeleton, const SupportSet& support, Rng& rng,
                               const BfgsOptions& opts) {
    const std::size_t k = count_constants(skeleton);
    if (k == 0) fail(ErrorCode::NoConstants, to_text(skeleton));
    if (support.n_points() == 0) fail(ErrorCode::EmptyDataset, "empty support set");

    ConstantFit best;
    best.loss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        std::vector<double> start(k);
        for (double& t : start) t = uniform(rng, opts.init_lo, opts.init_hi);
        Run run = minimize(skeleton, support, std::move(start), opts);
        ++best.restarts_used;
        if (run.loss < best.loss || best.theta.empty()) {
            best.theta = std::move(run.theta);
            best.loss = run.loss;
            best.history = std::move(run.history);
        }
    }
    return best;
}

} // namespace srckt
