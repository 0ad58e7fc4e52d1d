#include "srckt/expr/generate.hpp"

#include "srckt/util/error.hpp"

namespace srckt {
namespace {

TokenId pick_weighted(const GrammarConfig& g, Rng& rng) {
    double total = 0.0;
    for (TokenId t = 0; t < static_cast<TokenId>(tok::Count); ++t) {
        if (Vocabulary::standard().is_operator(t)) total += g.op_weights[t];
    }
    double r = uniform(rng, 0.0, total);
    TokenId last = tok::Add;
    for (TokenId t = 0; t < static_cast<TokenId>(tok::Count); ++t) {
        if (!Vocabulary::standard().is_operator(t) || g.op_weights[t] <= 0.0) continue;
        last = t;
        if (r < g.op_weights[t]) return t;
        r -= g.op_weights[t];
    }
    return last;
}

Expression leaf(const GrammarConfig& g, Rng& rng) {
    if (g.const_prob > 0.0 && uniform(rng, 0.0, 1.0) < g.const_prob) return Expression::leaf(tok::C);
    const auto v = static_cast<int>(std::uniform_int_distribution<int>(0, g.n_vars - 1)(rng));
    return Expression::leaf(Vocabulary::standard().variable(v));
}

Expression grow(const GrammarConfig& g, Rng& rng, int remaining, bool root) {
    if (remaining <= 0) return leaf(g, rng);
    if (!root && uniform(rng, 0.0, 1.0) >= g.p_internal) return leaf(g, rng);
    const TokenId op = pick_weighted(g, rng);
    Expression e = Expression::leaf(op);
    const int arity = Vocabulary::standard().arity(op);
    for (int i = 0; i < arity; ++i) e.children.push_back(grow(g, rng, remaining - 1, false));
    return e;
}

} // namespace

GrammarConfig GrammarConfig::defaults() {
    GrammarConfig g;
    g.op_weights[tok::Add] = 3.0;
    g.op_weights[tok::Mul] = 3.0;
    g.op_weights[tok::Div] = 1.0;
    g.op_weights[tok::Pow] = 0.5;
    g.op_weights[tok::Sin] = 2.0;
    g.op_weights[tok::Cos] = 1.0;
    g.op_weights[tok::Tan] = 0.5;
    g.op_weights[tok::Log] = 1.0;
    g.op_weights[tok::Exp] = 1.0;
    g.op_weights[tok::Sqrt] = 0.5;
    g.op_weights[tok::Abs] = 0.5;
    return g;
}

void GrammarConfig::validate() const {
    if (max_depth < 0) fail(ErrorCode::ConfigError, "max_depth must be >= 0");
    if (n_vars < 1 || n_vars > kMaxVariables) fail(ErrorCode::ConfigError, "n_vars must be in 1..3");
    if (p_internal < 0.0 || p_internal > 1.0) fail(ErrorCode::ConfigError, "p_internal must be in [0,1]");
    if (const_prob < 0.0 || const_prob > 1.0) fail(ErrorCode::ConfigError, "const_prob must be in [0,1]");
    double total = 0.0;
    for (TokenId t = 0; t < static_cast<TokenId>(tok::Count); ++t) {
        if (op_weights[t] < 0.0) fail(ErrorCode::ConfigError, "negative operator weight");
        if (Vocabulary::standard().is_operator(t)) total += op_weights[t];
    }
    if (max_depth > 0 && total <= 0.0) fail(ErrorCode::ConfigError, "no operator has positive weight");
}

Expression sample_skeleton(const GrammarConfig& grammar, Rng& rng) {
    grammar.validate();
    return grow(grammar, rng, grammar.max_depth, true);
}

} // namespace srckt
