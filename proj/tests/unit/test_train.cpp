#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "srckt/expr/function_class.hpp"
#include "srckt/train/selection.hpp"
#include "srckt/train/trainer.hpp"
#include "srckt/util/error.hpp"

using namespace srckt;

namespace {

DataConfig small_data() {
    DataConfig d;
    d.support.n_points = 16;
    return d;
}

// A model that has memorised 50 equations; shared by the selection tests.
struct Memorised {
    Dataset data;
    TrainResult result;

    Memorised() {
        data = generate_training_set(small_data(), 50, 77);
        ModelConfig mc;
        Rng rng(1);
        TrainConfig tc;
        tc.batch_size = 5;
        tc.learning_rate = 2e-3;
        tc.epochs = 150;
        tc.seed = 2;
        result = train(init_model(mc, rng), data, tc);
    }

    static const Memorised& get() {
        static const Memorised m;
        return m;
    }
};

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

} // namespace

TEST_CASE("training set generation") {
    const DataConfig cfg = small_data();
    const Dataset a = generate_training_set(cfg, 200, 5);
    const Dataset b = generate_training_set(cfg, 200, 5);
    CHECK(to_jsonl(a) == to_jsonl(b));
    // Records draw from per-index streams, so a shorter run is a prefix.
    const Dataset prefix = generate_training_set(cfg, 50, 5);
    CHECK(to_jsonl(prefix) == to_jsonl(Dataset(a.begin(), a.begin() + 50)));

    for (const Record& r : a) {
        CHECK(count_constants(r.expr) == 0);
        CHECK(r.support.n_points() == 16);
        const auto gold = r.gold();
        CHECK(gold.front() == tok::Start);
        CHECK(gold.back() == tok::End);
        CHECK(static_cast<int>(gold.size()) - 2 <= cfg.max_tokens);
        const EvalResult ev = evaluate(r.expr, r.support.x);
        REQUIRE(ev.all_valid());
        for (std::size_t i = 0; i < ev.y.size(); ++i) CHECK(ev.y[i] == r.support.y[i]);
    }

    DataConfig only_add = cfg;
    only_add.grammar.op_weights.fill(0.0);
    only_add.grammar.op_weights[tok::Add] = 1.0;
    for (const Record& r : generate_training_set(only_add, 100, 9))
        for (TokenId t : r.gold()) CHECK((t == tok::Add || t == tok::X1 || t == tok::X2 || t == tok::Start || t == tok::End));
}

TEST_CASE("JSON Lines round trip") {
    Dataset a = generate_training_set(small_data(), 20, 3);
    a[4].t = 2;
    const auto path = (std::filesystem::temp_directory_path() / "srckt_test_data.jsonl").string();
    write_jsonl(path, a);
    const Dataset b = read_jsonl(path);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b[i].id == a[i].id);
        CHECK(b[i].expr == a[i].expr);
        CHECK(b[i].support.x == a[i].support.x);
        CHECK(b[i].support.y == a[i].support.y);
        CHECK(b[i].t == a[i].t);
    }
    CHECK(to_jsonl(b) == to_jsonl(a));
    std::filesystem::remove(path);
}

TEST_CASE("training starts near ln|V| and is deterministic") {
    const Dataset data = generate_training_set(small_data(), 24, 4);
    TrainConfig tc;
    tc.batch_size = 8;
    tc.epochs = 2;
    tc.seed = 6;
    Rng r1(7), r2(7);
    const TrainResult a = train(init_model(ModelConfig{}, r1), data, tc);
    const TrainResult b = train(init_model(ModelConfig{}, r2), data, tc);
    REQUIRE(a.metrics.size() == 3);
    CHECK(a.metrics[0].epoch == 0);
    CHECK(std::fabs(a.metrics[0].loss - std::log(17.0)) < 0.1 * std::log(17.0));
    CHECK(a.metrics.back().loss == b.metrics.back().loss);
    CHECK(a.weights == b.weights);
    for (const auto& m : a.metrics) CHECK(std::isfinite(m.loss));

    TrainConfig bad = tc;
    bad.learning_rate = 0;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { train(a.weights, Dataset{}, tc); }) == ErrorCode::EmptyDataset);
    TrainConfig huge = tc;
    huge.learning_rate = 1e30;
    CHECK(code_of([&] { train(a.weights, data, huge); }) == ErrorCode::DivergenceDetected);
}

TEST_CASE("a 50-equation set is memorised") {
    const auto& m = Memorised::get();
    const auto final = evaluate_dataset(m.result.weights, to_examples(m.data));
    CHECK(final.accuracy >= 0.99);
}

TEST_CASE("target dataset selection") {
    const auto& m = Memorised::get();
    const Weights& w = m.result.weights;
    SelectionOptions opts;
    opts.n_discovery = 2;
    opts.n_generalisation = 2;

    // Any operator with enough memorised carriers works; use the most common.
    std::size_t best = 0;
    TokenId target = tok::Add;
    for (TokenId t : {tok::Sin, tok::Add, tok::Mul}) {
        const TargetSpec s = TargetSpec::single(t);
        std::size_t n = 0;
        for (const Record& r : m.data) n += s.matches(r.expr);
        if (n > best) best = n, target = t;
    }
    const TargetSpec spec = TargetSpec::single(target);
    const TargetDataset td = select_target_dataset(w, m.data, spec, opts);
    CHECK(td.discovery.size() == 2);
    CHECK(td.generalisation.size() == 2);
    for (const Dataset* part : {&td.discovery, &td.generalisation}) {
        for (const Record& r : *part) {
            CHECK(spec.matches(r.expr));
            for (TokenId ex : spec.exclusions) CHECK_FALSE(contains_token(r.expr, ex));
            REQUIRE(r.t.has_value());
            CHECK(*r.t == first_timestep(r, target));
            CHECK(*r.t >= 1);
            CHECK(reconstructs(w, r, opts));
        }
    }
    for (const Record& a : td.discovery)
        for (const Record& b : td.generalisation) CHECK(a.id != b.id);
    CHECK(verify_target_dataset(w, td, opts));

    // Same inputs, same selection.
    const TargetDataset again = select_target_dataset(w, m.data, spec, opts);
    CHECK(to_jsonl(again.discovery) == to_jsonl(td.discovery));

    // A tampered record fails re-verification.
    TargetDataset bad = td;
    bad.discovery[0].t = 0;
    CHECK_FALSE(verify_target_dataset(w, bad, opts));

    SelectionOptions many = opts;
    many.n_generalisation = 1000;
    CHECK(code_of([&] { select_target_dataset(w, m.data, spec, many); }) == ErrorCode::InsufficientPool);
}

TEST_CASE("target specs") {
    const TargetSpec sin = TargetSpec::parse("sin");
    CHECK(sin.exclusions == TokenSet{tok::Cos, tok::Tan});
    CHECK(sin.matches(parse_text("sin x1")));
    CHECK_FALSE(sin.matches(parse_text("add sin x1 cos x2")));
    const TargetSpec mono = TargetSpec::parse("monomial");
    CHECK(mono.kind == TargetSpec::Kind::Class);
    CHECK(mono.matches(parse_text("mul x1 x2")));
    CHECK_FALSE(mono.matches(parse_text("add x1 x2")));
    CHECK(TargetSpec::parse("posynomial").matches(parse_text("add x1 x2")));
    CHECK(code_of([] { TargetSpec::parse("nope"); }) == ErrorCode::ConfigError);
}
