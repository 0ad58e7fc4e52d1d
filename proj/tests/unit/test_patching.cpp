#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "srckt/model/tensor_io.hpp"
#include "srckt/patching/patching.hpp"
#include "srckt/train/selection.hpp"
#include "srckt/util/error.hpp"

using namespace srckt;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

const Weights& model() {
    static const Weights w = [] {
        Rng rng(31);
        return init_model(ModelConfig{}, rng);
    }();
    return w;
}

Record record(const char* text, int id, TokenId target) {
    Record r;
    r.id = id;
    r.expr = parse_text(text);
    Rng rng = make_rng(100, static_cast<std::uint64_t>(id));
    r.support = make_support(r.expr, {32, -10, 10, 2}, rng);
    r.t = first_timestep(r, target);
    return r;
}

std::vector<SupportSet> supports(std::size_t n, std::uint64_t seed) {
    DataConfig d;
    d.support.n_points = 32;
    std::vector<SupportSet> out;
    for (const Record& r : generate_training_set(d, n, seed)) out.push_back(r.support);
    return out;
}

CounterfactualOptions cf_opts() {
    CounterfactualOptions o;
    o.support = {32, -10, 10, 2};
    o.seed = 9;
    return o;
}

} // namespace

TEST_CASE("mean patch") {
    const Weights& w = model();
    const auto s = supports(12, 4);
    const auto one = build_mean_patch(w, {s[0]});
    CHECK(one.values == clean_activations(w, s[0]));
    CHECK(one.provenance["n_samples"] == 1);

    const auto dup = build_mean_patch(w, {s[1], s[1], s[1]});
    const auto single = clean_activations(w, s[1]);
    for (std::size_t c = 0; c < single.size(); ++c)
        for (std::size_t i = 0; i < single[c].size(); ++i)
            CHECK(dup.values[c].v[i] == doctest::Approx(single[c].v[i]).epsilon(1e-14));

    // Independent two-pass oracle, and order invariance.
    const auto mean = build_mean_patch(w, s);
    std::vector<std::vector<Mat>> acts;
    for (const auto& x : s) acts.push_back(clean_activations(w, x));
    auto rev = s;
    std::reverse(rev.begin(), rev.end());
    const auto mean_rev = build_mean_patch(w, rev);
    for (std::size_t c = 0; c < mean.values.size(); ++c) {
        for (std::size_t i = 0; i < mean.values[c].size(); ++i) {
            double sum = 0;
            for (std::size_t k = acts.size(); k-- > 0;) sum += acts[k][c].v[i];
            CHECK(std::fabs(mean.values[c].v[i] - sum / 12.0) < 1e-7);
            CHECK(std::fabs(mean.values[c].v[i] - mean_rev.values[c].v[i]) < 1e-7);
        }
    }
    CHECK(code_of([&] { build_mean_patch(w, {}); }) == ErrorCode::EmptyDataset);
    auto odd = s;
    odd[3] = supports(1, 99)[0];
    odd[3].y.pop_back();
    odd[3].x.rows -= 1;
    odd[3].x.v.resize(odd[3].x.rows * odd[3].x.cols);
    CHECK(code_of([&] { build_mean_patch(w, odd); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("resample alternatives respect arity and relations") {
    const RelationMap rel = RelationMap::defaults();
    CHECK(resample_alternatives(tok::Sin, rel) ==
          std::vector<TokenId>{tok::Log, tok::Exp, tok::Sqrt, tok::Abs});
    CHECK(resample_alternatives(tok::Add, rel) == std::vector<TokenId>{tok::Mul, tok::Div, tok::Pow});
    CHECK(resample_alternatives(tok::Log, rel).size() == 5);
}

TEST_CASE("resample and STR patches") {
    const Weights& w = model();
    const Record r = record("add sin x1 x2", 5, tok::Sin);
    REQUIRE(r.t == 2);

    std::vector<TokenId> used;
    const PatchSet full = build_counterfactual_patch(w, r, *r.t, {tok::Log, tok::Exp, tok::Sqrt, tok::Abs}, cf_opts(), &used);
    const PatchSet res = build_resample_patch(w, r, tok::Sin, RelationMap::defaults(), cf_opts());
    CHECK(res.strategy == PatchStrategy::Resample);
    CHECK(res.values == full.values);
    CHECK(res.provenance["y_recomputed"] == true);

    // Brute-force mean over the variants that were actually used.
    std::vector<std::vector<Mat>> each;
    for (TokenId t : used) each.push_back(build_counterfactual_patch(w, r, *r.t, {t}, cf_opts()).values);
    for (std::size_t c = 0; c < full.values.size(); ++c)
        for (std::size_t i = 0; i < full.values[c].size(); ++i) {
            double s = 0;
            for (const auto& e : each) s += e[c].v[i];
            CHECK(std::fabs(full.values[c].v[i] - s / static_cast<double>(each.size())) < 1e-12);
        }

    // One counterfactual: resample and STR coincide bit for bit.
    const PatchSet str = build_str_patch(w, r, tok::Sin, cf_opts());
    CHECK(str.strategy == PatchStrategy::Str);
    CHECK(str.provenance["counterfactuals"] == nlohmann::json::array({"cos"}));
    CHECK(build_counterfactual_patch(w, r, *r.t, {tok::Cos}, cf_opts()).values == str.values);

    const Record lg = record("log mul x1 x1", 6, tok::Log);
    CHECK(build_str_patch(w, lg, tok::Log, cf_opts()).provenance["counterfactuals"] ==
          nlohmann::json::array({"exp"}));
    const Record ad = record("add x1 x2", 7, tok::Add);
    CHECK(code_of([&] { build_str_patch(w, ad, tok::Add, cf_opts()); }) == ErrorCode::NoRelatedToken);
    CHECK(build_resample_patch(w, ad, tok::Add, RelationMap::defaults(), cf_opts()).provenance["counterfactuals"].size() ==
          3);

    // sin(-exp(x1)) is valid everywhere; log and sqrt of it nowhere.
    Record neg;
    neg.id = 8;
    neg.expr = parse_text("sin mul -1 exp x1");
    Rng nrng(8);
    neg.support = make_support(neg.expr, {32, -10, 10, 2}, nrng);
    CHECK(code_of([&] { build_counterfactual_patch(w, neg, 1, {tok::Log, tok::Sqrt}, cf_opts()); }) ==
          ErrorCode::NoValidCounterfactual);
    std::vector<TokenId> kept;
    build_counterfactual_patch(w, neg, 1, {tok::Log, tok::Abs}, cf_opts(), &kept);
    CHECK(kept == std::vector<TokenId>{tok::Abs});
}

TEST_CASE("patched forward") {
    const Weights& w = model();
    const std::size_t n = component_count(w.config);
    const PatchSet mean = build_mean_patch(w, supports(8, 2));
    const Record a = record("add sin x1 x2", 11, tok::Sin);
    const Record b = record("add sin x2 x1", 12, tok::Sin);

    const ComponentSet none(n), all(n, true);
    const PatchedOutput clean = patched_forward(w, a, *a.t, none, mean);
    CHECK(clean.patched_taps == 0);
    const Mat latent = encode(w, a.support).latent;
    const auto gold = a.gold();
    CHECK(clean.logits == decode_step(w, latent, std::span(gold).first(static_cast<std::size_t>(*a.t))));

    // Fully patched: the encoder output no longer depends on the input.
    const PatchedOutput pa = patched_forward(w, a, *a.t, all, mean);
    const PatchedOutput pb = patched_forward(w, b, *b.t, all, mean);
    CHECK(pa.logits == pb.logits);

    ComponentSet out(n);
    out.insert(n - 1);
    const PatchedOutput po = patched_forward(w, a, *a.t, out, mean);
    CHECK(po.logits != clean.logits);

    Rng rng(3);
    for (int k = 0; k < 30; ++k) {
        ComponentSet m(n);
        for (std::size_t i = 0; i < n; ++i) m.set(i, rng() & 1);
        CHECK(patched_forward(w, a, *a.t, m, mean).patched_taps == m.count());
    }

    PatchSet holes = mean;
    holes.values[2] = Mat();
    CHECK(code_of([&] { patched_forward(w, a, *a.t, all, holes); }) == ErrorCode::MissingPatch);
    CHECK_FALSE(holes.covers(all));
    CHECK(holes.covers(none));
}

TEST_CASE("patch bank files") {
    const Weights& w = model();
    PatchBank bank;
    bank.strategy = PatchStrategy::Str;
    bank.sets.push_back(build_str_patch(w, record("sin x1", 1, tok::Sin), tok::Sin, cf_opts()));
    bank.sets.push_back(build_str_patch(w, record("cos x2", 2, tok::Cos), tok::Cos, cf_opts()));
    const std::string sum = weights_checksum(w);
    const auto path = (std::filesystem::temp_directory_path() / "srckt_test_patch.bin").string();
    save_patch_bank(bank, w.config, sum, path);
    const PatchBank back = load_patch_bank(path, w.config, sum);
    CHECK(back.strategy == PatchStrategy::Str);
    REQUIRE(back.sets.size() == 2);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(back.sets[s].provenance == bank.sets[s].provenance);
        for (std::size_t c = 0; c < bank.sets[s].values.size(); ++c)
            for (std::size_t i = 0; i < bank.sets[s].values[c].size(); ++i)
                CHECK(back.sets[s].values[c].v[i] == static_cast<double>(static_cast<float>(bank.sets[s].values[c].v[i])));
    }
    CHECK(code_of([&] { load_patch_bank(path, w.config, "00000000"); }) == ErrorCode::ConfigMismatch);
    const auto bytes = read_file_bytes(path);
    CHECK(std::string(bytes.begin(), bytes.begin() + 6) == "SRPCH1");
    std::filesystem::remove(path);

    CHECK(parse_strategy("resample") == PatchStrategy::Resample);
    CHECK(code_of([] { parse_strategy("zero"); }) == ErrorCode::ConfigError);
}
