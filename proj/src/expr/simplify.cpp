#include <cstdint>

#include "srckt/expr/equivalence.hpp"
#include "srckt/util/error.hpp"

namespace srckt {
namespace {

bool is_lit(const Expression& e, double v) { return e.is_literal() && e.value == v; }

Expression substitute_rec(const Expression& e, std::span<const double> theta, std::size_t& next) {
    if (e.token == tok::C) return Expression::literal(theta[next++]);
    Expression out = e;
    for (auto& c : out.children) c = substitute_rec(c, theta, next);
    return out;
}

} // namespace

Expression simplify(const Expression& expr) {
    Expression e = expr;
    for (auto& c : e.children) c = simplify(c);
    if (e.children.size() != 2) return e;
    const Expression& a = e.children[0];
    const Expression& b = e.children[1];
    switch (e.token) {
    case tok::Add:
        if (is_lit(b, 0.0)) return a;
        if (is_lit(a, 0.0)) return b;
        break;
    case tok::Mul:
        if (is_lit(a, 0.0) || is_lit(b, 0.0)) return Expression::literal(0.0);
        if (is_lit(b, 1.0)) return a;
        if (is_lit(a, 1.0)) return b;
        break;
    case tok::Pow:
        if (is_lit(b, 1.0)) return a;
        if (is_lit(b, 0.0)) return Expression::literal(1.0);
        break;
    default: break;
    }
    return e;
}

Expression substitute_constants(const Expression& expr, std::span<const double> theta) {
    if (theta.size() < count_constants(expr)) fail(ErrorCode::MissingConstants, "not enough constants");
    std::size_t next = 0;
    return substitute_rec(expr, theta, next);
}

std::vector<Expression> substitute_constants_01(const Expression& expr) {
    const std::size_t k = count_constants(expr);
    if (k == 0) fail(ErrorCode::NoConstants, to_text(expr));
    if (k > 20) fail(ErrorCode::ConfigError, "too many constants for exhaustive substitution");
    std::vector<Expression> out;
    out.reserve(std::size_t{1} << k);
    std::vector<double> theta(k);
    for (std::uint32_t bits = 0; bits < (1u << k); ++bits) {
        for (std::size_t i = 0; i < k; ++i) theta[i] = (bits >> i) & 1u ? 1.0 : 0.0;
        out.push_back(simplify(substitute_constants(expr, theta)));
    }
    return out;
}

} // namespace srckt
