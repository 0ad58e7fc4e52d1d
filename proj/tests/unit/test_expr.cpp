#include <cmath>

#include "doctest.h"
#include "srckt/expr/bfgs.hpp"
#include "srckt/expr/equivalence.hpp"
#include "srckt/expr/evaluate.hpp"
#include "srckt/expr/function_class.hpp"
#include "srckt/expr/generate.hpp"
#include "srckt/expr/relations.hpp"
#include "srckt/util/error.hpp"

using namespace srckt;

namespace {

Expression T(const char* text) { return parse_text(text); }

Mat point(std::initializer_list<double> xs) {
    Mat m(1, xs.size());
    std::size_t i = 0;
    for (double x : xs) m(0, i++) = x;
    return m;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

// Independent recursive evaluator used as an oracle for the engine.
double oracle_eval(const Expression& e, const std::vector<double>& x) {
    const auto a = [&](int i) { return oracle_eval(e.children[static_cast<std::size_t>(i)], x); };
    switch (e.token) {
    case tok::X1: return x[0];
    case tok::X2: return x[1];
    case tok::X3: return x[2];
    case tok::Sin: return std::sin(a(0));
    case tok::Cos: return std::cos(a(0));
    case tok::Tan: return std::tan(a(0));
    case tok::Log: return std::log(a(0));
    case tok::Exp: return std::exp(a(0));
    case tok::Sqrt: return std::sqrt(a(0));
    case tok::Abs: return std::fabs(a(0));
    case tok::Add: return a(0) + a(1);
    case tok::Mul: return a(0) * a(1);
    case tok::Div: return a(0) / a(1);
    case tok::Pow: return std::pow(a(0), a(1));
    default: return e.value;
    }
}

} // namespace

TEST_CASE("vocabulary ids are dense with fixed arities") {
    const Vocabulary& v = Vocabulary::standard();
    CHECK(v.size() == 17);
    for (TokenId t = 0; t < static_cast<TokenId>(v.size()); ++t) {
        CHECK(v.id(v.symbol(t)) == t);
        const int ar = v.arity(t);
        if (t <= tok::C) CHECK(ar == 0);
        else CHECK((ar == 1 || ar == 2));
    }
    CHECK(code_of([&] { v.id("sub"); }) == ErrorCode::UnknownToken);
}

TEST_CASE("parse_prefix examples") {
    const std::vector<TokenId> s{tok::Sin, tok::X1};
    CHECK(parse_prefix(s) == Expression::unary(tok::Sin, Expression::leaf(tok::X1)));
    const std::vector<TokenId> leaf{tok::X1};
    CHECK(parse_prefix(leaf) == Expression::leaf(tok::X1));
    const std::vector<TokenId> seq{tok::Add, tok::Sin, tok::X1, tok::X2};
    const Expression e = parse_prefix(seq);
    CHECK(e == Expression::binary(tok::Add, Expression::unary(tok::Sin, Expression::leaf(tok::X1)),
                                  Expression::leaf(tok::X2)));
    CHECK(to_prefix(e) == seq);
    CHECK(to_text(T("mul x1 add x2 x3")) == "mul x1 add x2 x3");

    const std::vector<TokenId> truncated{tok::Add, tok::X1};
    const std::vector<TokenId> trailing{tok::X1, tok::X2};
    const std::vector<TokenId> unknown{tok::Sin, 99};
    CHECK(code_of([&] { parse_prefix(truncated); }) == ErrorCode::MalformedPrefix);
    CHECK(code_of([&] { parse_prefix(trailing); }) == ErrorCode::MalformedPrefix);
    CHECK(code_of([&] { parse_prefix(std::vector<TokenId>{}); }) == ErrorCode::MalformedPrefix);
    CHECK(code_of([&] { parse_prefix(unknown); }) == ErrorCode::UnknownToken);
}

TEST_CASE("prefix round trip over random skeletons") {
    GrammarConfig g = GrammarConfig::defaults();
    g.max_depth = 4;
    g.n_vars = 3;
    g.const_prob = 0.2;
    for (int i = 0; i < 10000; ++i) {
        Rng rng = make_rng(11, static_cast<std::uint64_t>(i));
        const Expression e = sample_skeleton(g, rng);
        const auto p = to_prefix(e);
        REQUIRE(is_valid_prefix(p));
        REQUIRE(parse_prefix(p) == e);
    }
}

TEST_CASE("evaluate examples") {
    CHECK(evaluate(T("add x1 x2"), point({1, 2})).y[0] == 3.0);
    const auto bad = evaluate(T("log x1"), point({-1}));
    CHECK(bad.valid[0] == 0);
    CHECK_FALSE(bad.all_valid());
    const std::vector<double> theta{2.0};
    const auto r = evaluate(T("sin mul c x1"), point({0.5}), theta);
    CHECK(r.y[0] == doctest::Approx(0.8414709848078965).epsilon(1e-15));
    CHECK(code_of([&] { evaluate(T("mul c x1"), point({1})); }) == ErrorCode::MissingConstants);
    CHECK(evaluate(T("div x1 x2"), point({1, 0})).valid[0] == 0);
    CHECK(evaluate(T("pow x1 x2"), point({-2, 0.5})).valid[0] == 0);
    CHECK(evaluate(T("pow x1 x2"), point({-2, 3})).y[0] == -8.0);
}

TEST_CASE("evaluate agrees with an independent recursive evaluator") {
    GrammarConfig g = GrammarConfig::defaults();
    g.max_depth = 3;
    g.n_vars = 3;
    std::size_t compared = 0;
    for (int i = 0; i < 500; ++i) {
        Rng rng = make_rng(3, static_cast<std::uint64_t>(i));
        const Expression e = sample_skeleton(g, rng);
        Mat x(20, 3);
        for (double& v : x.v) v = uniform(rng, -5, 5);
        const auto r = evaluate(e, x);
        for (std::size_t p = 0; p < x.rows; ++p) {
            const double want = oracle_eval(e, {x(p, 0), x(p, 1), x(p, 2)});
            if (!r.valid[p]) continue;
            REQUIRE(std::isfinite(want));
            CHECK(relative_error(r.y[p], want) < 1e-12);
            ++compared;
        }
    }
    CHECK(compared > 5000);
}

TEST_CASE("sample_skeleton respects depth, weights and seed") {
    GrammarConfig g = GrammarConfig::defaults();
    g.max_depth = 0;
    Rng r0(1);
    CHECK(Vocabulary::standard().is_variable(sample_skeleton(g, r0).token));

    g = GrammarConfig::defaults();
    Rng a = make_rng(7, 0), b = make_rng(7, 0);
    CHECK(sample_skeleton(g, a) == sample_skeleton(g, b));

    g.op_weights.fill(0.0);
    g.op_weights[tok::Add] = 1;
    g.op_weights[tok::Sin] = 1;
    g.max_depth = 3;
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const Expression e = sample_skeleton(g, rng);
        REQUIRE(e.depth() <= 3);
        REQUIRE(e.depth() >= 1);
        for (TokenId t : to_prefix(e)) {
            REQUIRE((t == tok::Add || t == tok::Sin || Vocabulary::standard().is_variable(t)));
        }
    }
}

TEST_CASE("make_support keeps only valid points") {
    Rng rng(2);
    const SupportSet s = make_support(T("x1"), {5, 0.0, 1.0, 1}, rng);
    for (std::size_t i = 0; i < 5; ++i) CHECK(s.y[i] == s.x(i, 0));

    const SupportSet l = make_support(T("log x1"), {200, -1.0, 1.0, 1}, rng);
    CHECK(l.n_points() == 200);
    for (std::size_t i = 0; i < 200; ++i) CHECK(l.x(i, 0) > 0.0);

    const SupportSet d = make_support(T("div x1 x1"), {100, -10.0, 10.0, 1}, rng);
    for (double y : d.y) CHECK(std::fabs(y - 1.0) < 1e-12);

    CHECK(code_of([&] { make_support(T("log mul -1 abs x1"), {10, -1.0, 1.0, 1}, rng); }) ==
          ErrorCode::UnsatisfiableDomain);

    GrammarConfig g = GrammarConfig::defaults();
    for (int i = 0; i < 200; ++i) {
        Rng r = make_rng(9, static_cast<std::uint64_t>(i));
        const Expression e = sample_skeleton(g, r);
        try {
            const SupportSet s2 = make_support(e, {50, -10, 10, 2}, r);
            const auto ev = evaluate(e, s2.x);
            REQUIRE(ev.all_valid());
            for (double y : s2.y) REQUIRE(std::isfinite(y));
        } catch (const Error& err) {
            REQUIRE(err.code() == ErrorCode::UnsatisfiableDomain);
        }
    }
}

TEST_CASE("relations") {
    const RelationMap m = RelationMap::defaults();
    CHECK(m.symmetric());
    CHECK(related_tokens(tok::Sin) == TokenSet{tok::Cos, tok::Tan});
    CHECK(related_tokens(tok::Log) == TokenSet{tok::Exp});
    CHECK(related_tokens(tok::Add).empty());
    for (TokenId t = 0; t < static_cast<TokenId>(tok::Count); ++t) CHECK_FALSE(related_tokens(t).count(t));

    CHECK(contains_with_exclusions(T("sin x1"), tok::Sin, {tok::Cos}));
    CHECK_FALSE(contains_with_exclusions(T("add sin x1 cos x2"), tok::Sin, {tok::Cos}));
    CHECK_FALSE(contains_with_exclusions(T("x1"), tok::Sin, {}));
    CHECK(closest_related(tok::Sin) == tok::Cos);
    CHECK_FALSE(closest_related(tok::Add).has_value());
}

TEST_CASE("pointwise equivalence") {
    Rng rng(4);
    EquivalenceOptions o;
    CHECK(pointwise_equivalent(T("mul x1 add x2 1"), T("add mul x1 x2 x1"), o, rng));
    CHECK_FALSE(pointwise_equivalent(T("sin x1"), T("cos x1"), o, rng));
    const Expression e = T("add mul 2 x1 mul -1 div x2 x3");
    CHECK(pointwise_equivalent(e, e, o, rng));

    // Reflexive and symmetric on random pairs.
    GrammarConfig g = GrammarConfig::defaults();
    g.n_vars = 3;
    for (int i = 0; i < 100; ++i) {
        Rng r = make_rng(21, static_cast<std::uint64_t>(i));
        const Expression a = sample_skeleton(g, r), b = sample_skeleton(g, r);
        try {
            Rng r1(i), r2(i);
            CHECK(pointwise_equivalent(a, a, o, r1));
            CHECK(pointwise_equivalent(a, b, o, r1) == pointwise_equivalent(b, a, o, r2));
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::UnsatisfiableDomain);
        }
    }
}

TEST_CASE("substitute_constants_01") {
    const auto v0 = substitute_constants_01(T("div x1 mul pow x2 4 add c 1"));
    REQUIRE(v0.size() == 2);
    CHECK(to_text(v0[0]) == "div x1 pow x2 4");

    const auto v1 = substitute_constants_01(T("add mul -1 sin mul c x2 tan pow x1 2"));
    REQUIRE(v1.size() == 2);
    CHECK(to_text(v1[1]) == "add mul -1 sin x2 tan pow x1 2");

    CHECK(substitute_constants_01(T("mul c add c x1")).size() == 4);
    CHECK(code_of([] { substitute_constants_01(T("sin x1")); }) == ErrorCode::NoConstants);

    // Simplification preserves the value of the unsimplified substitution.
    GrammarConfig g = GrammarConfig::defaults();
    g.const_prob = 0.4;
    g.max_depth = 3;
    int checked = 0;
    for (int i = 0; i < 300 && checked < 100; ++i) {
        Rng r = make_rng(5, static_cast<std::uint64_t>(i));
        const Expression e = sample_skeleton(g, r);
        const std::size_t k = count_constants(e);
        if (k == 0 || k > 4) continue;
        const auto variants = substitute_constants_01(e);
        for (std::size_t bits = 0; bits < variants.size(); ++bits) {
            std::vector<double> theta(k);
            for (std::size_t j = 0; j < k; ++j) theta[j] = static_cast<double>((bits >> j) & 1U);
            const Expression raw = substitute_constants(e, theta);
            Mat x(200, 2);
            for (double& v : x.v) v = uniform(r, -10, 10);
            const auto a = evaluate(raw, x), b = evaluate(variants[bits], x);
            for (std::size_t p = 0; p < 200; ++p) {
                if (a.valid[p] && b.valid[p]) REQUIRE(relative_error(a.y[p], b.y[p]) <= 1e-9);
            }
        }
        ++checked;
    }
    CHECK(checked > 20);
}

TEST_CASE("bfgs constant fitting") {
    Rng rng(1);
    const Expression target = T("mul 3.7 pow x1 2");
    const SupportSet s = make_support(target, {200, -10, 10, 1}, rng);
    const ConstantFit f = fit_constants_bfgs(T("mul c pow x1 2"), s, rng);
    CHECK(std::fabs(f.theta[0] - 3.7) < 1e-6);
    CHECK(f.restarts_used == 10);
    for (std::size_t i = 1; i < f.history.size(); ++i) CHECK(f.history[i] <= f.history[i - 1]);

    const SupportSet sx = make_support(T("x1"), {100, -10, 10, 1}, rng);
    const ConstantFit g = fit_constants_bfgs(T("add c x1"), sx, rng);
    CHECK(std::fabs(g.theta[0]) < 1e-6);
    CHECK(g.loss < 1e-12);

    SupportSet zero = sx;
    std::fill(zero.y.begin(), zero.y.end(), 0.0);
    const ConstantFit h = fit_constants_bfgs(T("mul c x1"), zero, rng);
    CHECK(h.loss < 1e-20);
    CHECK(std::fabs(h.theta[0]) < 1e-9);
    CHECK(code_of([&] { fit_constants_bfgs(T("x1"), sx, rng); }) == ErrorCode::NoConstants);
}

TEST_CASE("function classes") {
    CHECK(is_monomial(T("mul c mul pow x1 2 x2")));
    CHECK_FALSE(is_monomial(T("add pow x1 2 mul c x2")));
    CHECK(is_posynomial(T("add pow x1 2 mul c x2")));
    CHECK_FALSE(is_monomial(T("sin x1")));
    CHECK_FALSE(is_posynomial(T("sin x1")));
    CHECK_FALSE(is_monomial(T("mul -2 x1")));

    GrammarConfig g = GrammarConfig::defaults();
    g.const_prob = 0.3;
    for (int i = 0; i < 5000; ++i) {
        Rng r = make_rng(8, static_cast<std::uint64_t>(i));
        const Expression e = sample_skeleton(g, r);
        if (is_monomial(e)) REQUIRE(is_posynomial(e));
    }
}
