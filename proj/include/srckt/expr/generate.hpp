#pragma once

#include <array>

#include "srckt/expr/expression.hpp"
#include "srckt/util/rng.hpp"

namespace srckt {

struct GrammarConfig {
    int max_depth = 2;
    int n_vars = 2;
    // Probability that a non-root node above max depth is an operator.
    double p_internal = 0.5;
    // Probability that a leaf is the constant placeholder instead of a variable.
    double const_prob = 0.0;
    // Indexed by TokenId; only operator entries are read.
    std::array<double, tok::Count> op_weights{};

    static GrammarConfig defaults();
    // Throws ConfigError.
    void validate() const;
};

Expression sample_skeleton(const GrammarConfig& grammar, Rng& rng);

} // namespace srckt
