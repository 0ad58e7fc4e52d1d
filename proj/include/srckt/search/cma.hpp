#pragma once

#include <vector>

#include "json.hpp"
#include "srckt/util/rng.hpp"

namespace srckt {

struct CmaParams {
    int population = 40;
    int generations = 250;
    double init_mean = 0.5;
    double sigma0 = 0.5;
    double prior_std = 0.1;        // per-coordinate std of the initial (and frozen) covariance
    int freeze_generations = 10;   // generations that sample from the diagonal prior

    // Throws ConfigError.
    void validate() const;
};

// Strategy constants derived from the dimension and population (Hansen defaults).
struct CmaConstants {
    std::size_t mu = 0;
    std::vector<double> weights; // positive, non-increasing, sum to 1
    double mu_eff = 0.0;
    double c_c = 0.0, c_sigma = 0.0, d_sigma = 0.0, c1 = 0.0, c_mu = 0.0, chi_n = 0.0;

    static CmaConstants make(std::size_t dim, std::size_t population);
};

struct CmaState {
    std::vector<double> m;
    std::vector<double> C; // row-major dim x dim, symmetric
    double sigma = 0.0;
    std::vector<double> p_c, p_sigma;
    int t = 0;           // completed generations
    int repairs = 0;     // eigenvalue repairs applied so far

    std::size_t dim() const { return m.size(); }
};

class CmaEs {
public:
    CmaEs(std::size_t dim, const CmaParams& params);
    // Custom starting point (test functions).
    CmaEs(std::vector<double> mean, const CmaParams& params);

    // x_i = m + sigma * B * D * z_i. While frozen, B * D is the prior diagonal.
    std::vector<std::vector<double>> ask(Rng& rng);
    // Candidates with their fitness (minimised). Ranking ties go to the lower
    // candidate index. Throws ConfigError on non-finite fitness.
    void tell(const std::vector<std::vector<double>>& candidates, const std::vector<double>& fitness);

    const CmaState& state() const { return s_; }
    const CmaConstants& constants() const { return k_; }
    bool frozen() const { return s_.t < params_.freeze_generations; }

private:
    void decompose();

    CmaParams params_;
    CmaConstants k_;
    CmaState s_;
    std::vector<double> B_;      // eigenvectors, columns
    std::vector<double> D_;      // sqrt eigenvalues
    std::vector<double> inv_sqrt_C_;
};

} // namespace srckt
