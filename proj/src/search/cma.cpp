#include "srckt/search/cma.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "srckt/util/error.hpp"

namespace srckt {

void CmaParams::validate() const {
    if (population < 4) fail(ErrorCode::ConfigError, "population must be >= 4");
    if (generations < 1) fail(ErrorCode::ConfigError, "generations must be >= 1");
    if (!(sigma0 > 0.0)) fail(ErrorCode::ConfigError, "sigma0 must be > 0");
    if (!(prior_std > 0.0)) fail(ErrorCode::ConfigError, "prior_std must be > 0");
    if (freeze_generations < 0) fail(ErrorCode::ConfigError, "freeze_generations must be >= 0");
}

CmaConstants CmaConstants::make(std::size_t dim, std::size_t population) {
    CmaConstants k;
    const double n = static_cast<double>(dim);
    const double lambda = static_cast<double>(population);
    k.mu = population / 2;
    k.weights.resize(k.mu);
    const double base = std::log((lambda + 1.0) / 2.0);
    for (std::size_t i = 0; i < k.mu; ++i) k.weights[i] = base - std::log(static_cast<double>(i + 1));
    const double sum = std::accumulate(k.weights.begin(), k.weights.end(), 0.0);
    double sq = 0.0;
    for (double& w : k.weights) {
        w /= sum;
        sq += w * w;
    }
    k.mu_eff = 1.0 / sq;
    k.c_c = (4.0 + k.mu_eff / n) / (n + 4.0 + 2.0 * k.mu_eff / n);
    k.c_sigma = (k.mu_eff + 2.0) / (n + k.mu_eff + 5.0);
    k.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((k.mu_eff - 1.0) / (n + 1.0)) - 1.0) + k.c_sigma;
    k.c1 = 2.0 / ((n + 1.3) * (n + 1.3) + k.mu_eff);
    k.c_mu = std::min(1.0 - k.c1, 2.0 * (k.mu_eff - 2.0 + 1.0 / k.mu_eff) / ((n + 2.0) * (n + 2.0) + k.mu_eff));
    k.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    return k;
}

CmaEs::CmaEs(std::size_t dim, const CmaParams& params) : CmaEs(std::vector<double>(dim, params.init_mean), params) {}

CmaEs::CmaEs(std::vector<double> mean, const CmaParams& params) : params_(params) {
    params_.validate();
    const std::size_t n = mean.size();
    if (n == 0) fail(ErrorCode::ConfigError, "CMA-ES needs at least one dimension");
    k_ = CmaConstants::make(n, static_cast<std::size_t>(params_.population));
    s_.m = std::move(mean);
    s_.C.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) s_.C[i * n + i] = params_.prior_std * params_.prior_std;
    s_.sigma = params_.sigma0;
    s_.p_c.assign(n, 0.0);
    s_.p_sigma.assign(n, 0.0);
    decompose();
}

void CmaEs::decompose() {
    const std::size_t n = s_.dim();
    Eigen::MatrixXd c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s_.C[i * n + j];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    Eigen::VectorXd ev = es.eigenvalues();
    const Eigen::MatrixXd& b = es.eigenvectors();
    bool repaired = false;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (!(ev(i) >= 1e-12)) {
            ev(i) = 1e-12;
            repaired = true;
        }
    }
    if (repaired) {
        ++s_.repairs;
        const Eigen::MatrixXd fixed = b * ev.asDiagonal() * b.transpose();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                s_.C[i * n + j] = 0.5 * (fixed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                                         fixed(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
            }
        }
    }
    B_.assign(n * n, 0.0);
    D_.assign(n, 0.0);
    inv_sqrt_C_.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        D_[j] = std::sqrt(ev(static_cast<Eigen::Index>(j)));
        for (std::size_t i = 0; i < n; ++i) B_[i * n + j] = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += B_[i * n + k] * B_[j * n + k] / D_[k];
            inv_sqrt_C_[i * n + j] = s;
        }
    }
}

std::vector<std::vector<double>> CmaEs::ask(Rng& rng) {
    const std::size_t n = s_.dim();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(params_.population), std::vector<double>(n));
    std::vector<double> z(n), y(n);
    for (auto& x : out) {
        for (double& v : z) v = normal(rng);
        if (frozen()) {
            for (std::size_t i = 0; i < n; ++i) y[i] = params_.prior_std * z[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += B_[i * n + k] * D_[k] * z[k];
                y[i] = s;
            }
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = s_.m[i] + s_.sigma * y[i];
    }
    return out;
}

void CmaEs::tell(const std::vector<std::vector<double>>& candidates, const std::vector<double>& fitness) {
    const std::size_t n = s_.dim();
    if (candidates.size() != fitness.size() || candidates.size() < k_.mu) {
        fail(ErrorCode::ConfigError, "tell needs one fitness per candidate");
    }
    for (double f : fitness) {
        if (!std::isfinite(f)) fail(ErrorCode::ConfigError, "non-finite fitness");
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });

    const std::vector<double> old_m = s_.m;
    std::vector<double> m(n, 0.0);
    for (std::size_t r = 0; r < k_.mu; ++r) {
        const auto& x = candidates[order[r]];
        for (std::size_t i = 0; i < n; ++i) m[i] += k_.weights[r] * x[i];
    }
    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = (m[i] - old_m[i]) / s_.sigma;

    // While frozen the search runs with the prior diagonal, so whitening uses it too.
    std::vector<double> white(n, 0.0);
    if (frozen()) {
        for (std::size_t i = 0; i < n; ++i) white[i] = step[i] / params_.prior_std;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += inv_sqrt_C_[i * n + j] * step[j];
            white[i] = s;
        }
    }
    const double cs = k_.c_sigma;
    const double ps_scale = std::sqrt(cs * (2.0 - cs) * k_.mu_eff);
    double ps_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s_.p_sigma[i] = (1.0 - cs) * s_.p_sigma[i] + ps_scale * white[i];
        ps_norm += s_.p_sigma[i] * s_.p_sigma[i];
    }
    ps_norm = std::sqrt(ps_norm);
    const double bias = std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (s_.t + 1)));
    const double h_sigma =
        ps_norm / bias < (1.4 + 2.0 / (static_cast<double>(n) + 1.0)) * k_.chi_n ? 1.0 : 0.0;

    const double cc = k_.c_c;
    const double pc_scale = h_sigma * std::sqrt(cc * (2.0 - cc) * k_.mu_eff);
    for (std::size_t i = 0; i < n; ++i) s_.p_c[i] = (1.0 - cc) * s_.p_c[i] + pc_scale * step[i];

    if (!frozen()) {
        const double c1 = k_.c1, cmu = k_.c_mu;
        const double delta_h = (1.0 - h_sigma) * cc * (2.0 - cc);
        const double keep = 1.0 - c1 - cmu + c1 * delta_h;
        std::vector<double> ys(k_.mu * n);
        for (std::size_t r = 0; r < k_.mu; ++r) {
            const auto& x = candidates[order[r]];
            for (std::size_t i = 0; i < n; ++i) ys[r * n + i] = (x[i] - old_m[i]) / s_.sigma;
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                double rank_mu = 0.0;
                for (std::size_t r = 0; r < k_.mu; ++r) rank_mu += k_.weights[r] * ys[r * n + i] * ys[r * n + j];
                const double v = keep * s_.C[i * n + j] + c1 * s_.p_c[i] * s_.p_c[j] + cmu * rank_mu;
                s_.C[i * n + j] = v;
                s_.C[j * n + i] = v;
            }
        }
    }
    s_.sigma *= std::exp((cs / k_.d_sigma) * (ps_norm / (bias * k_.chi_n) - 1.0));
    s_.m = std::move(m);
    ++s_.t;
    decompose();
}

} // namespace srckt
