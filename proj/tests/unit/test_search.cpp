#include <cmath>

#include "fixtures.hpp"
#include "srckt/search/baselines.hpp"

using namespace srckt;
using srckt::testing::code_of;

namespace {

double sphere(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return s;
}

double rosenbrock(const std::vector<double>& x) {
    double s = 0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
    return s;
}

double minimise(const std::function<double(const std::vector<double>&)>& f, std::uint64_t seed, int budget) {
    CmaParams p;
    p.generations = budget / p.population;
    CmaEs es(std::vector<double>(5, p.init_mean), p);
    Rng rng(seed);
    double best = 1e300;
    for (int g = 0; g < p.generations; ++g) {
        const auto c = es.ask(rng);
        std::vector<double> fit;
        for (const auto& x : c) {
            fit.push_back(f(x));
            best = std::min(best, fit.back());
        }
        es.tell(c, fit);
        const auto& C = es.state().C;
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) REQUIRE(C[i * 5 + j] == C[j * 5 + i]);
    }
    return best;
}

struct Problem {
    Weights w;
    Dataset data = srckt::testing::target_records(tok::Sin, 16, 5);
    PatchBank bank;
    std::unique_ptr<Evaluator> ev;

    explicit Problem(Weights weights) : w(std::move(weights)) {
        bank = srckt::testing::mean_bank(w, 16, 6);
        ev = std::make_unique<Evaluator>(w, TargetSpec::single(tok::Sin), data, bank);
    }
};

} // namespace

TEST_CASE("constants follow the standard defaults") {
    const CmaConstants k = CmaConstants::make(13, 40);
    CHECK(k.mu == 20);
    double s = 0;
    for (std::size_t i = 0; i < k.weights.size(); ++i) {
        s += k.weights[i];
        if (i) CHECK(k.weights[i] <= k.weights[i - 1]);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    double sq = 0;
    for (double wi : k.weights) sq += wi * wi;
    CHECK(k.mu_eff == doctest::Approx(1.0 / sq));
    const double n = 13;
    CHECK(k.chi_n == doctest::Approx(std::sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))));
    CHECK(k.c_sigma == doctest::Approx((k.mu_eff + 2) / (n + k.mu_eff + 5)));
    CHECK(k.c1 == doctest::Approx(2 / ((n + 1.3) * (n + 1.3) + k.mu_eff)));

    CmaParams bad;
    bad.population = 3;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigError);
}

TEST_CASE("ask: determinism, zero step size, sample mean") {
    CmaParams p;
    p.freeze_generations = 0;
    CmaEs a(4, p), b(4, p);
    Rng r1(9), r2(9);
    CHECK(a.ask(r1) == b.ask(r2));

    CmaParams tiny = p;
    tiny.sigma0 = 1e-300;
    CmaEs t(3, tiny);
    Rng r3(1);
    for (const auto& x : t.ask(r3))
        for (double v : x) CHECK(v == 0.5);

    // 10^5 draws: sample mean within 3 sigma / sqrt(n) of m (C = prior while frozen).
    CmaParams q;
    q.population = 100000;
    CmaEs big(3, q);
    Rng r4(2);
    const auto xs = big.ask(r4);
    const double sd = q.sigma0 * q.prior_std;
    for (std::size_t j = 0; j < 3; ++j) {
        double m = 0;
        for (const auto& x : xs) m += x[j];
        m /= static_cast<double>(xs.size());
        CHECK(std::fabs(m - 0.5) < 3 * sd / std::sqrt(1e5));
    }
}

TEST_CASE("tell with identical candidates keeps the mean and decays the paths") {
    CmaParams p;
    p.freeze_generations = 0;
    CmaEs es(3, p);
    Rng rng(3);
    es.tell(es.ask(rng), std::vector<double>(40, 1.0)); // give the paths some length
    const CmaState before = es.state();
    const std::vector<std::vector<double>> same(40, before.m);
    es.tell(same, std::vector<double>(40, 0.0));
    const CmaState& after = es.state();
    const CmaConstants& k = es.constants();
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::fabs(after.m[i] - before.m[i]) < 1e-14);
        CHECK(after.p_sigma[i] == doctest::Approx((1 - k.c_sigma) * before.p_sigma[i]).epsilon(1e-9));
        CHECK(std::fabs(after.p_c[i]) <= std::fabs((1 - k.c_c) * before.p_c[i]) + 1e-12);
    }
    CHECK(code_of([&] { es.tell(same, std::vector<double>(40, NAN)); }) == ErrorCode::ConfigError);
}

TEST_CASE("sphere and Rosenbrock oracles") {
    int sphere_ok = 0, rosen_ok = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        sphere_ok += minimise(sphere, s, 2000) < 1e-8;
        rosen_ok += minimise(rosenbrock, s, 30000) < 1e-4;
    }
    CHECK(sphere_ok >= 4);
    CHECK(rosen_ok >= 4);
}

TEST_CASE("mask decoding and fitness arithmetic") {
    CHECK(decode_mask(std::vector<double>(5, 0.0)).empty());
    CHECK(decode_mask(std::vector<double>{0.7, 0.2}).contains(0));
    CHECK_FALSE(decode_mask(std::vector<double>{0.5}).contains(0));
    CHECK(decode_mask(std::vector<double>{3.0, -2.0}).to_hex() == "1");
    const std::vector<double> t{0.9, 0.9, 0.9}, zero{0, 0, 0};
    CHECK(fitness_value(0, t, zero) == doctest::Approx(270.0));
    CHECK(fitness_value(13, t, std::vector<double>{1, 1, 1}) == 13.0);
}

TEST_CASE("PATCHES on a random model") {
    Problem pr(srckt::testing::random_model(51));
    const std::size_t n = pr.ev->components();
    CmaParams p;
    p.generations = 12;
    p.population = 8;

    // Zero thresholds: nothing is needed.
    const CircuitProblem free(*pr.ev, MetricFamily::Functional, {0, 0, 0});
    CHECK(free.fitness(ComponentSet(n, true)) == static_cast<double>(n));
    CHECK(run_patches(free, p, 1).circuit.empty());

    // Tight model-family threshold.
    const CircuitProblem tight(*pr.ev, MetricFamily::Model, {pr.ev->full().logit_score - 1e-4});
    std::vector<double> best;
    const SearchResult a = run_patches(tight, p, 7, [&](const GenerationLog& g) { best.push_back(g.best_f); });
    const SearchResult b = run_patches(tight, p, 7);
    CHECK(a.circuit == b.circuit);
    CHECK(a.log.size() == 12);
    for (std::size_t i = 1; i < best.size(); ++i) CHECK(best[i] <= best[i - 1]);
    CHECK(a.circuit.subset_of(a.search_circuit));
    if (a.feasible) {
        CHECK(tight.feasible(a.circuit));
        // Refinement leaves a 1-minimal set.
        for (std::size_t i : a.circuit.indices()) CHECK_FALSE(tight.feasible(a.circuit.without(i)));
        CHECK(refine_minimal(tight, a.circuit) == a.circuit);
    }
    CHECK(search_log_jsonl(a.log).find("\"best_mask_bits\"") != std::string::npos);
}

TEST_CASE("inert components are pruned and rank last") {
    Weights w = srckt::testing::random_model(52);
    srckt::testing::make_head_inert(w, 1, Block::Mab1, 2);
    srckt::testing::make_mlp_inert(w, 2, Block::Mab2);
    Problem pr(std::move(w));
    const std::size_t n = pr.ev->components();
    const std::size_t h = component_index(pr.w.config, ComponentId::attention_head(1, Block::Mab1, 2));
    const std::size_t m = component_index(pr.w.config, ComponentId::mlp(2, Block::Mab2));

    const auto rank = dla_rank(*pr.ev, MetricFamily::Model);
    REQUIRE(rank.size() == n);
    CHECK(rank[n - 2].component == h);
    CHECK(rank[n - 1].component == m);
    CHECK(rank[n - 1].delta == 0.0);
    for (const DlaEntry& e : rank) {
        ComponentSet one(n);
        one.insert(e.component);
        CHECK(std::fabs(e.delta - (pr.ev->full().logit_score - pr.ev->score(one).logit_score)) < 1e-9);
    }

    const CircuitProblem prob(*pr.ev, MetricFamily::Model, {pr.ev->full().logit_score - 1e-6});
    const ComponentSet iter = run_iterative_patching(prob);
    CHECK_FALSE(iter.contains(h));
    CHECK_FALSE(iter.contains(m));
    CHECK(prob.feasible(iter));
    ComponentSet padded = iter;
    padded.insert(h);
    CHECK(refine_minimal(prob, padded) == refine_minimal(prob, iter));
    CHECK(refine_minimal(prob, padded).subset_of(padded));

    const CircuitProblem zero(*pr.ev, MetricFamily::Model, {0.0});
    CHECK(run_iterative_patching(zero).empty());
}

TEST_CASE("only OUT matters when everything else is inert") {
    // Pick the first seed where patching OUT lowers the score.
    std::unique_ptr<Problem> holder;
    for (std::uint64_t seed = 53;; ++seed) {
        REQUIRE(seed < 80);
        Weights w = srckt::testing::random_model(seed);
        srckt::testing::make_all_but_out_inert(w);
        holder = std::make_unique<Problem>(std::move(w));
        ComponentSet o(holder->ev->components());
        o.insert(o.universe() - 1);
        if (holder->ev->score(o).logit_score < holder->ev->full().logit_score - 1e-3) break;
    }
    Problem& pr = *holder;
    const std::size_t n = pr.ev->components();
    ComponentSet out_only(n);
    out_only.insert(n - 1);
    const double full = pr.ev->full().logit_score;
    const double without_out = pr.ev->score(out_only).logit_score;
    // The gap is small, so scale the penalty until missing it costs more than one component.
    const double mid = 0.5 * (full + without_out);
    const CircuitProblem prob(*pr.ev, MetricFamily::Model, {mid}, 10.0 / (mid - without_out));
    CHECK(prob.fitness(ComponentSet(n)) > prob.fitness(out_only));
    CHECK(run_iterative_patching(prob) == out_only);
    CmaParams p;
    p.generations = 15;
    p.population = 10;
    const SearchResult sr = run_patches(prob, p, 3);
    INFO(sr.circuit.to_hex(), " feasible=", sr.feasible, " search=", sr.search_circuit.to_hex());
    CHECK(sr.circuit == out_only);

    const auto rank = dla_rank(*pr.ev, MetricFamily::Model);
    CHECK(rank[0].component == n - 1);
    const DlaResult d = dla_circuit(prob, rank);
    CHECK(d.circuit == out_only);
    CHECK(d.met);
    REQUIRE(d.curve.size() == n);
    CHECK(d.curve.back().rank == n);
    CHECK(std::fabs(d.curve.back().logit_score - full) < 1e-9);
    for (int k = 0; k < 3; ++k) CHECK(std::fabs(d.curve.back().topk[k] - pr.ev->full().topk[k]) < 1e-9);
    CHECK(curve_csv(d.curve).rfind("component_rank,T1,T2,T3,Lgt\n", 0) == 0);

    // Thresholds already met by the fully patched model.
    const CircuitProblem easy(*pr.ev, MetricFamily::Model, {without_out - 1.0});
    const DlaResult e = dla_circuit(easy, rank);
    CHECK(e.met_at_start);
    CHECK(e.circuit.empty());
}
