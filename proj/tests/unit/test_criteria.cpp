#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"

using namespace srckt;
using srckt::testing::code_of;

namespace {

ScoreReport report(double t1, double t2, double t3, double lgt) {
    ScoreReport r;
    r.topk = {t1, t2, t3};
    r.logit_score = lgt;
    r.n_samples = 100;
    return r;
}

// Independent rank: count logits strictly greater, plus equal ones at lower index.
int oracle_rank(const std::vector<double>& l, std::size_t target) {
    std::vector<std::size_t> idx(l.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return l[a] > l[b]; });
    return static_cast<int>(std::find(idx.begin(), idx.end(), target) - idx.begin());
}

struct Setup {
    Weights w = srckt::testing::random_model(41);
    Dataset data = srckt::testing::target_records(tok::Sin, 24, 5);
    PatchBank bank = srckt::testing::mean_bank(w, 16, 6);
    Evaluator ev{w, TargetSpec::single(tok::Sin), data, bank};
};

} // namespace

TEST_CASE("rank and accuracy helpers") {
    CHECK(target_rank(std::vector<double>{1, 3, 3, 0}, 2) == 1); // tie with index 1 goes to index 1
    CHECK(target_rank(std::vector<double>{1, 3, 3, 0}, 1) == 0);
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> l(17);
        for (double& v : l) v = std::round(uniform(rng, -3, 3)); // many ties
        const auto t = static_cast<std::size_t>(rng() % 17);
        CHECK(target_rank(l, t) == oracle_rank(l, t));
    }
    std::vector<SampleOutcome> o{{0, 0.5}, {1, 0.2}, {2, 0.1}, {5, 0.0}};
    CHECK(topk_accuracy(o, 1) == 0.25);
    CHECK(topk_accuracy(o, 3) == 0.75);
    CHECK(topk_accuracy(o, 17) == 1.0);
    CHECK(logit_score(o) == doctest::Approx(0.2));
    CHECK(code_of([] { topk_accuracy({}, 1); }) == ErrorCode::EmptyDataset);
    CHECK(code_of([] { logit_score({}); }) == ErrorCode::EmptyDataset);
    const auto u = softmax(std::vector<double>(17, 0.3));
    CHECK(u[4] == doctest::Approx(1.0 / 17));
    std::vector<double> big(17, 0.0);
    big[6] = 800;
    CHECK(softmax(big)[6] == doctest::Approx(1.0));
}

TEST_CASE("evaluator matches a direct recomputation") {
    Setup s;
    const std::size_t n = component_count(s.w.config);
    Rng rng(2);
    for (int trial = 0; trial < 4; ++trial) {
        ComponentSet ex(n);
        for (std::size_t i = 0; i < n; ++i) ex.set(i, rng() & 1);
        const ScoreReport r = s.ev.score(ex);
        CHECK(r.topk[0] <= r.topk[1]);
        CHECK(r.topk[1] <= r.topk[2]);
        int hits[3] = {0, 0, 0};
        double lgt = 0;
        for (const Record& rec : s.data) {
            const auto out = patched_forward(s.w, rec, *rec.t, ex, s.bank.sets[0]);
            const int rank = oracle_rank(out.logits, tok::Sin);
            for (int k = 0; k < 3; ++k) hits[k] += rank <= k;
            double z = 0;
            const double mx = *std::max_element(out.logits.begin(), out.logits.end());
            for (double v : out.logits) z += std::exp(v - mx);
            lgt += std::exp(out.logits[tok::Sin] - mx) / z;
        }
        for (int k = 0; k < 3; ++k) CHECK(r.topk[k] == doctest::Approx(hits[k] / 24.0));
        CHECK(std::fabs(r.logit_score - lgt / 24.0) < 1e-9);
    }
    const std::size_t before = s.ev.evaluations();
    s.ev.score(ComponentSet(n));
    CHECK(s.ev.evaluations() == before);
    CHECK(s.ev.score(ComponentSet(n)).logit_score == s.ev.full().logit_score);
    CHECK(s.ev.score(ComponentSet(n, true)).logit_score == s.ev.fully_patched().logit_score);
}

TEST_CASE("fully mean-patched scores do not depend on the samples' supports") {
    Setup s;
    Dataset other = s.data;
    Rng rng(3);
    for (Record& r : other) {
        for (double& v : r.support.x.v) v = uniform(rng, -10, 10);
        r.support.y = evaluate(r.expr, r.support.x).y;
        for (double& y : r.support.y)
            if (!std::isfinite(y)) y = 0;
    }
    const Evaluator ev2(s.w, TargetSpec::single(tok::Sin), other, s.bank);
    CHECK(ev2.fully_patched().logit_score == s.ev.fully_patched().logit_score);
    CHECK(ev2.fully_patched().topk == s.ev.fully_patched().topk);
}

TEST_CASE("criteria checks on constructed reports") {
    const ScoreReport full = report(0.9, 0.95, 1.0, 0.8);
    // Circuit equal to the full model.
    CHECK(faithful_functional(full, full, 0.0));
    CHECK(faithful_model(full, full, 0.0));
    CHECK(faithful_functional(full, report(0, 0, 0, 0), 1.0));
    CHECK(faithful_model(full, report(0, 0, 0, 0), 1.0));
    CHECK(faithful_functional(full, report(0.81, 0.9, 0.95, 0.0), 0.1));
    CHECK_FALSE(faithful_functional(full, report(0.79, 0.9, 0.95, 0.0), 0.1));
    // Absolute difference: doing better by more than delta also fails.
    CHECK_FALSE(faithful_functional(report(0.5, 0.5, 0.5, 0), report(0.7, 0.7, 0.7, 0), 0.1));
    CHECK(faithful_model(full, report(0, 0, 0, 0.71), 0.1));
    CHECK_FALSE(faithful_model(full, report(0, 0, 0, 0.69), 0.1));

    CHECK(complete_functional(report(0.1, 0.2, 0.25, 0.9), 0.25));
    CHECK_FALSE(complete_functional(report(0.1, 0.2, 0.26, 0.0), 0.25));
    CHECK(complete_model(report(1, 1, 1, 0.2), 0.25));

    // Minimality: every removal must drop every k by at least delta.
    const std::vector<ScoreReport> drops{report(0.5, 0.6, 0.7, 0.1), report(0.7, 0.8, 0.85, 0.6)};
    CHECK(minimal_functional(full, drops, 0.1));
    CHECK_FALSE(minimal_functional(full, drops, 0.2));
    CHECK(minimal_model(full, drops, 0.2));
    CHECK_FALSE(minimal_model(full, drops, 0.21));
    // A duplicate component: removing it changes nothing.
    const std::vector<ScoreReport> duplicate{report(0.5, 0.6, 0.7, 0.1), full};
    CHECK_FALSE(minimal_functional(full, duplicate, 0.1));
    CHECK_FALSE(minimal_model(full, duplicate, 0.1));
    CHECK(minimal_functional(full, {}, 0.1));

    CHECK(baseline_gate(report(0.0, 0.1, 0.25, 0.9), {MetricFamily::Functional, 0.1, 0.25}));
    CHECK_FALSE(baseline_gate(report(0.0, 0.1, 0.3, 0.0), {MetricFamily::Functional, 0.1, 0.25}));
    CHECK(baseline_gate(report(1, 1, 1, 0.2), {MetricFamily::Model, 0.1, 0.25}));
    CHECK(thresholds(full, {MetricFamily::Functional, 0.1, 0.25}) ==
          std::vector<double>{0.9 - 0.1, 0.95 - 0.1, 1.0 - 0.1});
    CHECK(thresholds(full, {MetricFamily::Model, 0.1, 0.25}).size() == 1);

    CriteriaConfig bad;
    bad.delta_f = 1.5;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigError);
}

TEST_CASE("circuit verdicts on a real evaluator") {
    Setup s;
    const std::size_t n = component_count(s.w.config);
    CriteriaConfig cfg;

    // Full set: faithful at delta 0; complete iff the fully patched baseline is.
    cfg.delta_f = 0.0;
    const CriteriaResult all = evaluate_circuit(s.ev, ComponentSet(n, true), cfg);
    CHECK(all.verdict.faithful_functional);
    CHECK(all.verdict.faithful_model);
    CHECK(all.verdict.complete_functional == complete_functional(s.ev.fully_patched(), cfg.delta_c));
    // Empty circuit: complete iff the unpatched model is below delta_c.
    const CriteriaResult none = evaluate_circuit(s.ev, ComponentSet(n), cfg);
    CHECK(none.verdict.complete_functional == complete_functional(s.ev.full(), cfg.delta_c));
    CHECK(none.verdict.minimal_functional);

    // Drops match one-at-a-time reruns, and verdicts replay from JSON.
    ComponentSet c(n);
    for (std::size_t i : {0, 4, 7, 12}) c.insert(i);
    cfg.delta_f = 0.1;
    const CriteriaResult r = evaluate_circuit(s.ev, c, cfg);
    REQUIRE(r.verdict.drops.size() == 4);
    for (const ComponentDrop& d : r.verdict.drops) {
        const ScoreReport rerun = s.ev.score(c.without(d.component).complement());
        for (int k = 0; k < 3; ++k) CHECK(d.topk_drop[k] == s.ev.full().topk[k] - rerun.topk[k]);
        CHECK(d.logit_drop == s.ev.full().logit_score - rerun.logit_score);
    }
    const nlohmann::json j = verdict_json(s.w.config, c, r, cfg, "abcd");
    CHECK(j["circuit"] == nlohmann::json::array({"L1.1.H1", "L1.2.H2", "L2.1.H2", "OUT"}));
    CHECK(j["config_digest"] == "abcd");
    const CriteriaVerdict back = verdict_from_json(s.w.config, nlohmann::json::parse(j.dump()), cfg);
    for (MetricFamily f : {MetricFamily::Functional, MetricFamily::Model}) {
        CHECK(back.faithful(f) == r.verdict.faithful(f));
        CHECK(back.complete(f) == r.verdict.complete(f));
        CHECK(back.minimal(f) == r.verdict.minimal(f));
    }
    const std::string csv = scores_csv(s.ev.full(), s.ev.fully_patched(), r.reports);
    CHECK(csv.rfind("row,T1,T2,T3,Lgt\nbaseline_full,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

    const ScoreReport rr = ScoreReport::from_json(nlohmann::json::parse(s.ev.full().to_json().dump()));
    CHECK(rr.topk == s.ev.full().topk);
    CHECK(rr.logit_score == s.ev.full().logit_score);
}

TEST_CASE("class targets") {
    Setup s;
    DataConfig d;
    d.support.n_points = 32;
    Dataset mono;
    const TargetSpec spec = TargetSpec::of_class(FunctionClass::Monomial);
    for (Record& r : generate_training_set(d, 300, 8))
        if (spec.matches(r.expr) && mono.size() < 6) mono.push_back(std::move(r));
    REQUIRE(mono.size() == 6);
    const Evaluator ev(s.w, spec, mono, s.bank);
    const std::size_t n = component_count(s.w.config);
    const double acc = class_accuracy(ev, ComponentSet(n), 3);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    // Hand count over the beams of the unpatched model.
    int hits = 0;
    for (const Record& r : mono) {
        const Mat latent = encode(s.w, r.support).latent;
        const auto hyps = beam_search(s.w, latent, 5, static_cast<int>(r.gold().size()) + 4, 3);
        for (const auto& h : hyps) {
            if (h.tokens == r.gold()) {
                ++hits;
                break;
            }
        }
    }
    CHECK(acc >= hits / 6.0);
    for (const auto& o : ev.full().samples) CHECK(o.target_prob > 0.0);
}
