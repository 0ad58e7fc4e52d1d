#include "srckt/expr/equivalence.hpp"

#include <algorithm>
#include <cmath>

#include "srckt/util/error.hpp"

namespace srckt {

double relative_error(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1.0});
}

bool pointwise_equivalent(const Expression& a, const Expression& b, const EquivalenceOptions& opts, Rng& rng,
                          std::span<const double> theta_a, std::span<const double> theta_b) {
    const auto cols = static_cast<std::size_t>(opts.n_vars);
    const std::size_t cap = 100 * opts.n_points;
    std::size_t attempts = 0;
    std::size_t checked = 0;
    const std::size_t batch = std::max<std::size_t>(opts.n_points, 16);
    double worst = 0.0;
    while (checked < opts.n_points) {
        if (attempts >= cap) fail(ErrorCode::UnsatisfiableDomain, "no joint domain: " + to_text(a) + " / " + to_text(b));
        const std::size_t take = std::min(batch, cap - attempts);
        attempts += take;
        Mat x(take, cols);
        for (double& v : x.v) v = uniform(rng, opts.lo, opts.hi);
        const EvalResult ra = evaluate(a, x, theta_a);
        const EvalResult rb = evaluate(b, x, theta_b);
        for (std::size_t i = 0; i < take && checked < opts.n_points; ++i) {
            if (!ra.valid[i] || !rb.valid[i]) continue;
            worst = std::max(worst, relative_error(ra.y[i], rb.y[i]));
            ++checked;
        }
    }
    return worst <= opts.tol;
}

} // namespace srckt
