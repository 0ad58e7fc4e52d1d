#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "srckt/report/config_file.hpp"
#include "srckt/report/report.hpp"

using namespace srckt;
using srckt::testing::code_of;

namespace {

ComponentSet set_of(std::initializer_list<std::size_t> idx, std::size_t n = 13) {
    ComponentSet s(n);
    for (std::size_t i : idx) s.insert(i);
    return s;
}

} // namespace

TEST_CASE("overlap matrix") {
    const std::vector<NamedCircuit> cs{
        {"a", set_of({0, 1, 2, 12})},
        {"b", set_of({0, 1, 2, 3, 4, 5, 6, 7})},
        {"c", set_of({0, 1, 2, 12})},
        {"d", set_of({9, 10})},
        {"e", ComponentSet(13)},
    };
    const auto m = overlap_matrix(cs);
    CHECK(m[0][1] == doctest::Approx(75.0));
    CHECK(m[0][2] == 100.0);
    CHECK(m[0][3] == 0.0);
    CHECK(m[0][4] == 0.0);
    CHECK(m[0][0] == 4.0);
    CHECK(m[1][1] == 8.0);
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (std::size_t j = 0; j < cs.size(); ++j) CHECK(m[i][j] == m[j][i]);

    const std::string csv = overlap_csv(cs, m);
    CHECK(csv.rfind("circuit,a,b,c,d,e\na,4.0,75.0,100.0,0.0,0.0\n", 0) == 0);

    const std::vector<NamedCircuit> mixed{{"x", set_of({0})}, {"y", set_of({0}, 9)}};
    CHECK(code_of([&] { overlap_matrix(mixed); }) == ErrorCode::ConfigMismatch);
}

TEST_CASE("overlap properties on random sets") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<NamedCircuit> cs;
        for (int k = 0; k < 4; ++k) {
            ComponentSet s(13);
            for (std::size_t i = 0; i < 13; ++i)
                if (rng() % 3 == 0) s.insert(i);
            cs.push_back({std::to_string(k), s});
        }
        const auto m = overlap_matrix(cs);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(m[i][i] == static_cast<double>(cs[i].components.count()));
            for (std::size_t j = 0; j < 4; ++j) {
                if (i == j) continue;
                CHECK(m[i][j] == m[j][i]);
                CHECK(m[i][j] >= 0.0);
                CHECK(m[i][j] <= 100.0);
                if (!cs[i].components.empty() && cs[i].components.subset_of(cs[j].components)) CHECK(m[i][j] == 100.0);
            }
        }
    }
}

TEST_CASE("component usage") {
    ModelConfig cfg;
    const ComponentSet a = set_of({0, 4, 12});
    UsageReport one = component_usage({{"a", a}}, cfg);
    for (std::size_t i = 0; i < 13; ++i) CHECK(one.counts[i] == (a.contains(i) ? 1u : 0u));
    CHECK(one.out_in_all);
    UsageReport two = component_usage({{"a", a}, {"b", a}}, cfg);
    for (std::size_t i = 0; i < 13; ++i) CHECK(two.counts[i] == 2 * one.counts[i]);
    UsageReport partial = component_usage({{"a", a}, {"b", set_of({1})}}, cfg);
    CHECK_FALSE(partial.out_in_all);
    CHECK(partial.counts[12] == 1);
    const std::string csv = usage_csv(two, cfg);
    CHECK(csv.rfind("component,count\nL1.1.H1,2\n", 0) == 0);
    CHECK(csv.find("OUT,2\n") != std::string::npos);
}

TEST_CASE("failures and recovery") {
    const Weights w = srckt::testing::random_model(71);
    const TargetSpec spec = TargetSpec::single(tok::Sin);
    const Dataset pool = srckt::testing::target_records(tok::Sin, 60, 8);
    const Dataset fails = select_failures(w, pool, spec, 10);
    REQUIRE(fails.size() == 10);

    const PatchBank bank = srckt::testing::mean_bank(w, 16, 9);
    const Evaluator ev(w, spec, fails, bank);
    // Every selected record is a top-3 miss of the full model.
    for (const SampleOutcome& o : ev.full().samples) CHECK(o.rank >= 3);
    const ComponentSet all(13, true);
    CHECK(recovery_score(ev, all) == 0.0);

    for (const ComponentSet& c : {set_of({12}), set_of({0, 3, 6}), ComponentSet(13)}) {
        const double r = recovery_score(ev, c);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        // Recount over the stored per-sample outcomes.
        const ScoreReport rep = ev.score(c.complement());
        REQUIRE(rep.samples.size() == 10);
        int hits = 0;
        for (const SampleOutcome& o : rep.samples) hits += o.rank < 3;
        CHECK(r == doctest::Approx(hits / 10.0));
    }

    CHECK(code_of([&] { select_failures(w, pool, spec, 1000); }) == ErrorCode::InsufficientFailures);
}

TEST_CASE("run config JSON") {
    RunConfig c;
    c.search.population = 12;
    c.criteria.delta_f = 0.07;
    c.probe.seeds = 3;
    const nlohmann::json j = c.to_json();
    for (const char* k : {"model", "train", "grammar", "patching", "search", "criteria", "probe"}) CHECK(j.contains(k));
    const RunConfig back = RunConfig::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(back.digest() == c.digest());
    CHECK(RunConfig{}.digest() != c.digest());

    // Partial files keep defaults.
    const RunConfig partial = RunConfig::from_json(nlohmann::json::parse(R"({"search": {"population": 8}})"));
    CHECK(partial.search.population == 8);
    CHECK(partial.search.generations == RunConfig{}.search.generations);

    CHECK(code_of([] { RunConfig::from_json(nlohmann::json::parse(R"({"serch": {}})")); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { RunConfig::from_json(nlohmann::json::parse(R"({"search": {"popsize": 3}})")); }) ==
          ErrorCode::ConfigError);
    CHECK(code_of([] { RunConfig::from_json(nlohmann::json::parse(R"({"search": {"population": "x"}})")); }) ==
          ErrorCode::ConfigError);
    CHECK(code_of([] { RunConfig::from_json(nlohmann::json::parse(R"({"search": {"population": 1}})")); }) ==
          ErrorCode::ConfigError);

    const std::string path = "test_report_config.json";
    std::ofstream(path) << j.dump(2);
    CHECK(RunConfig::load(path).digest() == c.digest());
    std::remove(path.c_str());
    CHECK(code_of([] { RunConfig::load("/nonexistent/config.json"); }) == ErrorCode::IoError);
}
