// srckt: data generation, training, circuit discovery and verification reports.
//
// Exit codes: 0 success, 2 baseline gate failed, 1 any other error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <Eigen/Core>
#include <zlib.h>

#include "CLI11.hpp"
#include "srckt/model/tensor_io.hpp"
#include "srckt/report/pipeline.hpp"
#include "srckt/report/report.hpp"
#include "srckt/search/baselines.hpp"
#include "srckt/simd/kernels.hpp"
#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace srckt;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kGateFailed = 2;

struct Globals {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out = "out";
    int workers = 0;
    std::string weights;
};

struct DiscoverArgs {
    std::string target;
    std::string patch = "mean";
    std::string metric = "functional";
    std::string method = "patches";
    std::string circuit; // evaluate / probe
    std::vector<std::string> circuits; // report
    bool recovery = false;
};

class GateFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
    f << text;
}

json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot open " + path.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

class Run {
public:
    Run(const Globals& g, std::string command) : g_(g), command_(std::move(command)) {
        cfg_ = g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path);
        if (g.workers > 0) set_workers(g.workers);
        fs::create_directories(g.out);
    }

    const RunConfig& cfg() const { return cfg_; }
    std::uint64_t seed() const { return g_.seed; }
    fs::path out(const std::string& name) const { return fs::path(g_.out) / name; }

    fs::path weights_path() const { return g_.weights.empty() ? out("weights.bin") : fs::path(g_.weights); }

    const Weights& weights() {
        if (!w_) {
            w_ = load_weights(weights_path().string());
            if (!(w_->config == cfg_.model)) fail(ErrorCode::ConfigMismatch, "weights do not match the model config");
            checksum_ = weights_checksum(*w_);
        }
        return *w_;
    }
    void set_weights(Weights w) {
        w_ = std::move(w);
        checksum_ = weights_checksum(*w_);
    }

    void emit(const std::string& name, const std::string& text) {
        write_text(out(name), text);
        outputs_.push_back(name);
    }
    void emit(const std::string& name, const json& j) { emit(name, j.dump(2) + "\n"); }

    json& extra() { return extra_; }

    void write_manifest() {
        json m;
        m["command"] = command_;
        m["version"] = kVersion;
        m["seeds"] = seed_plan(g_.seed);
        m["config_digest"] = cfg_.digest();
        m["config"] = cfg_.to_json();
        m["model_checksum"] = checksum_;
        m["simd"] = std::string(simd::to_string(simd::active_level()));
        m["libraries"] = {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                          {"cli11", CLI11_VERSION},
                          {"zlib", ZLIB_VERSION},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)}};
        m["outputs"] = outputs_;
        if (!extra_.is_null()) m["details"] = extra_;
        write_text(out("manifest.json"), m.dump(2) + "\n");
    }

private:
    Globals g_;
    std::string command_;
    RunConfig cfg_;
    std::optional<Weights> w_;
    std::string checksum_;
    std::vector<std::string> outputs_;
    json extra_;
};

// Everything discover, baseline and evaluate share: the target datasets, the
// patch banks and one evaluator per split.
struct Setup {
    TargetSpec spec;
    PatchStrategy strategy;
    CriteriaConfig criteria;
    TargetDataset data;
    PatchBank discovery_bank, generalisation_bank;
    std::unique_ptr<Evaluator> discovery, generalisation;
};

std::unique_ptr<Setup> prepare(Run& run, const DiscoverArgs& a, bool with_generalisation) {
    if (a.target.empty()) fail(ErrorCode::ConfigError, "--target is required");
    auto s = std::make_unique<Setup>();
    s->spec = TargetSpec::parse(a.target);
    s->strategy = parse_strategy(a.patch);
    s->criteria = run.cfg().criteria;
    s->criteria.family = parse_family(a.metric);
    const Weights& w = run.weights();
    s->data = make_target_dataset(w, run.cfg(), s->spec, run.seed());
    s->discovery_bank = make_patch_bank(w, run.cfg(), s->strategy, s->spec, s->data.discovery, run.seed());
    const EvaluatorOptions eo = evaluator_options(run.cfg(), run.seed());
    s->discovery = std::make_unique<Evaluator>(w, s->spec, s->data.discovery, s->discovery_bank, eo);
    if (with_generalisation) {
        s->generalisation_bank =
            s->strategy == PatchStrategy::Mean
                ? s->discovery_bank
                : make_patch_bank(w, run.cfg(), s->strategy, s->spec, s->data.generalisation, run.seed());
        s->generalisation =
            std::make_unique<Evaluator>(w, s->spec, s->data.generalisation, s->generalisation_bank, eo);
    }
    return s;
}

json baseline_json(const Setup& s) {
    const ScoreReport& full = s.discovery->full();
    const ScoreReport& patched = s.discovery->fully_patched();
    return {{"target", s.spec.to_json()},
            {"patch", to_string(s.strategy)},
            {"family", to_string(s.criteria.family)},
            {"delta_c", s.criteria.delta_c},
            {"full", full.to_json()},
            {"fully_patched", patched.to_json()},
            {"gate_passed", baseline_gate(patched, s.criteria)},
            {"pool_scanned", s.data.scanned}};
}

void check_gate(Run& run, const Setup& s) {
    if (baseline_gate(s.discovery->fully_patched(), s.criteria)) return;
    run.emit("baseline.json", baseline_json(s));
    run.write_manifest();
    char buf[160];
    const auto& p = s.discovery->fully_patched();
    std::snprintf(buf, sizeof buf, "baseline gate failed: fully patched T1/T2/T3/Lgt = %.3f/%.3f/%.3f/%.3f > %.2f",
                  p.topk[0], p.topk[1], p.topk[2], p.logit_score, s.criteria.delta_c);
    throw GateFailed(buf);
}

json verdict_bundle(Run& run, const Setup& s, const ComponentSet& circuit, const std::string& method) {
    const ModelConfig& mc = run.cfg().model;
    const auto define = [&](json j) {
        if (s.spec.kind == TargetSpec::Kind::Class)
            j["logit_score_definition"] = "geometric mean probability of the gold tokens";
        return j;
    };
    const CriteriaResult disc = evaluate_circuit(*s.discovery, circuit, s.criteria);
    json v;
    v["target"] = s.spec.to_json();
    v["patch"] = to_string(s.strategy);
    v["method"] = method;
    v["discovery"] = define(verdict_json(mc, circuit, disc, s.criteria, run.cfg().digest()));
    if (s.generalisation) {
        const CriteriaResult gen = evaluate_circuit(*s.generalisation, circuit, s.criteria);
        v["generalisation"] = define(verdict_json(mc, circuit, gen, s.criteria, run.cfg().digest()));
    }
    run.emit("scores.csv", scores_csv(s.discovery->full(), s.discovery->fully_patched(), disc.reports));
    return v;
}

json circuit_json(Run& run, const Setup& s, const ComponentSet& circuit, const std::string& method) {
    const ModelConfig& mc = run.cfg().model;
    return {{"target", s.spec.to_json()},
            {"patch", to_string(s.strategy)},
            {"metric", to_string(s.criteria.family)},
            {"method", method},
            {"components", circuit.names(mc)},
            {"size", circuit.count()},
            {"mask", circuit.to_hex()},
            {"seed", run.seed()},
            {"config_digest", run.cfg().digest()},
            {"model_checksum", weights_checksum(run.weights())}};
}

ComponentSet load_circuit(const ModelConfig& mc, const std::string& path) {
    const json j = read_json(path);
    return ComponentSet::from_names(mc, j.at("components").get<std::vector<std::string>>());
}

// Row label for a circuit file. Built from its contents, not its path, so the
// same circuit gives the same csv wherever it was written.
std::string circuit_label(const std::string& path) {
    const json j = read_json(path);
    std::string label;
    for (const char* key : {"patch", "metric", "method"}) {
        if (!j.contains(key) || !j[key].is_string()) continue;
        if (!label.empty()) label += '/';
        label += j[key].get<std::string>();
    }
    return label.empty() ? "given" : label;
}

// Commands -------------------------------------------------------------------

void cmd_gen_data(Run& run) {
    const Dataset data = make_training_data(run.cfg(), run.seed());
    run.emit("train.jsonl", to_jsonl(data));
    run.extra() = {{"records", data.size()}};
}

void cmd_train(Run& run) {
    std::string metrics = "epoch,loss,accuracy\n";
    TrainResult r = train_model(run.cfg(), run.seed(), [&](const EpochMetrics& m) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", m.epoch, m.loss, m.accuracy);
        metrics += buf;
        std::fprintf(stderr, "epoch %d loss %.4f acc %.4f\n", m.epoch, m.loss, m.accuracy);
    });
    save_weights(r.weights, run.weights_path().string());
    run.set_weights(std::move(r.weights));
    run.emit("train_metrics.csv", metrics);
    run.extra() = {{"weights", run.weights_path().string()}};
}

void cmd_baseline(Run& run, const DiscoverArgs& a) {
    auto s = prepare(run, a, false);
    run.emit("baseline.json", baseline_json(*s));
    if (!baseline_gate(s->discovery->fully_patched(), s->criteria)) {
        run.write_manifest();
        throw GateFailed("baseline gate failed");
    }
}

void cmd_discover(Run& run, const DiscoverArgs& a) {
    auto s = prepare(run, a, true);
    check_gate(run, *s);
    const CircuitProblem problem = CircuitProblem::from_config(*s->discovery, s->criteria, run.cfg().penalty);

    ComponentSet circuit;
    json details;
    if (a.method == "patches") {
        const SearchResult r = run_patches(problem, run.cfg().search, stream_seed(run.seed(), Stream::Search));
        circuit = r.circuit;
        run.emit("search_log.jsonl", search_log_jsonl(r.log));
        details = {{"search_circuit", r.search_circuit.names(run.cfg().model)},
                   {"fitness", r.fitness},
                   {"feasible", r.feasible}};
    } else if (a.method == "iterative") {
        circuit = run_iterative_patching(problem);
    } else if (a.method == "dla") {
        const DlaResult r = dla_circuit(problem, dla_rank(*s->discovery, s->criteria.family));
        circuit = r.circuit;
        run.emit("curve.csv", curve_csv(r.curve));
        details = {{"met", r.met}, {"met_at_start", r.met_at_start}};
    } else {
        fail(ErrorCode::ConfigError, "unknown method " + a.method);
    }

    json cj = circuit_json(run, *s, circuit, a.method);
    if (!details.is_null()) cj["details"] = details;
    run.emit("circuit.json", cj);
    run.emit("verdict.json", verdict_bundle(run, *s, circuit, a.method));
    run.extra() = {{"evaluations", s->discovery->evaluations()}, {"pool_scanned", s->data.scanned}};
}

void cmd_evaluate(Run& run, const DiscoverArgs& a) {
    if (a.circuit.empty()) fail(ErrorCode::ConfigError, "--circuit is required");
    auto s = prepare(run, a, true);
    check_gate(run, *s);
    const ComponentSet circuit = load_circuit(run.cfg().model, a.circuit);
    run.emit("verdict.json", verdict_bundle(run, *s, circuit, "given"));
}

void cmd_probe(Run& run, const DiscoverArgs& a) {
    if (a.circuit.empty()) fail(ErrorCode::ConfigError, "--circuit is required");
    if (a.target.empty()) fail(ErrorCode::ConfigError, "--target is required");
    const TargetSpec spec = TargetSpec::parse(a.target);
    if (spec.kind != TargetSpec::Kind::SingleToken) fail(ErrorCode::ConfigError, "probing needs a single-token target");
    const ComponentSet circuit = load_circuit(run.cfg().model, a.circuit);
    const Dataset samples = balanced_probe_set(make_pool(run.cfg(), run.seed()), spec.token, run.cfg().probe.n_samples);
    const ProbeComparison c = compare_circuit_complement(run.weights(), samples, spec.token, circuit, run.cfg().probe,
                                                         stream_seed(run.seed(), Stream::Probe));
    run.emit("probe.csv", probe_csv(spec.name(), circuit_label(a.circuit), c));
    run.emit("probe.json", json{{"circuit_mean", c.circuit_mean},
                                {"circuit_std", c.circuit_std},
                                {"complement_mean", c.complement_mean},
                                {"complement_std", c.complement_std},
                                {"t", c.test.t},
                                {"p", c.test.p},
                                {"dof", c.test.dof},
                                {"resampled", c.resampled}});
}

void cmd_report(Run& run, const DiscoverArgs& a) {
    if (a.circuits.size() < 2) fail(ErrorCode::ConfigError, "--circuits needs at least two circuit files");
    const ModelConfig& mc = run.cfg().model;
    std::vector<NamedCircuit> named;
    std::vector<json> meta;
    for (const auto& path : a.circuits) {
        json j = read_json(path);
        const std::string label = j.at("target").at("target").get<std::string>() + "/" +
                                  j.at("patch").get<std::string>() + "/" + j.at("metric").get<std::string>() + "/" +
                                  j.at("method").get<std::string>();
        named.push_back({label, ComponentSet::from_names(mc, j.at("components").get<std::vector<std::string>>())});
        meta.push_back(std::move(j));
    }
    run.emit("overlap.csv", overlap_csv(named, overlap_matrix(named)));
    const UsageReport usage = component_usage(named, mc);
    run.emit("usage.csv", usage_csv(usage, mc));

    // One row per circuit with the verdict stored next to it, if any.
    std::string summary = "circuit,size,faithful,complete,minimal,gen_faithful,gen_complete\n";
    for (std::size_t i = 0; i < named.size(); ++i) {
        summary += named[i].label + "," + std::to_string(named[i].components.count());
        const fs::path vpath = fs::path(a.circuits[i]).parent_path() / "verdict.json";
        if (fs::exists(vpath)) {
            const json v = read_json(vpath);
            const CriteriaConfig cc = [&] {
                CriteriaConfig c = run.cfg().criteria;
                c.family = parse_family(meta[i].at("metric").get<std::string>());
                c.delta_f = v.at("discovery").at("delta_f").get<double>();
                c.delta_c = v.at("discovery").at("delta_c").get<double>();
                return c;
            }();
            const CriteriaVerdict d = verdict_from_json(mc, v.at("discovery"), cc);
            summary += std::string(",") + (d.faithful(cc.family) ? "yes" : "no") + "," +
                       (d.complete(cc.family) ? "yes" : "no") + "," + (d.minimal(cc.family) ? "yes" : "no");
            if (v.contains("generalisation")) {
                const CriteriaVerdict gv = verdict_from_json(mc, v.at("generalisation"), cc);
                summary += std::string(",") + (gv.faithful(cc.family) ? "yes" : "no") + "," +
                           (gv.complete(cc.family) ? "yes" : "no");
            } else {
                summary += ",,";
            }
        } else {
            summary += ",,,,,";
        }
        summary += "\n";
    }
    run.emit("summary.csv", summary);

    if (a.recovery) {
        const Weights& w = run.weights();
        const Dataset pool = generate_training_set(run.cfg().data, run.cfg().pool_size,
                                                   stream_seed(run.seed(), Stream::Failures));
        std::string rec = "circuit,n_failures,recovery_top3\n";
        for (std::size_t i = 0; i < named.size(); ++i) {
            const TargetSpec spec = TargetSpec::parse(meta[i].at("target").at("target").get<std::string>());
            if (spec.kind != TargetSpec::Kind::SingleToken) continue;
            const Dataset failures = select_failures(w, pool, spec, run.cfg().recovery_samples);
            const PatchStrategy strategy = parse_strategy(meta[i].at("patch").get<std::string>());
            const PatchBank bank = make_patch_bank(w, run.cfg(), strategy, spec, failures, run.seed());
            const Evaluator ev(w, spec, failures, bank, evaluator_options(run.cfg(), run.seed()));
            char buf[64];
            std::snprintf(buf, sizeof buf, ",%zu,%.4f\n", failures.size(), recovery_score(ev, named[i].components));
            rec += named[i].label + buf;
        }
        run.emit("recovery.csv", rec);
    }
    run.extra() = {{"out_in_all", usage.out_in_all}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Circuit discovery for a toy set-transformer symbolic regressor"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "Run seed")->capture_default_str();
    app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--workers", g.workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--weights", g.weights, "Weights file (default <out>/weights.bin)");

    DiscoverArgs a;
    const auto target_opts = [&](CLI::App* sub) {
        sub->add_option("--target", a.target, "Operator token, monomial or posynomial");
        sub->add_option("--patch", a.patch, "Patching strategy")
            ->check(CLI::IsMember({"mean", "resample", "str"}))
            ->capture_default_str();
        sub->add_option("--metric", a.metric, "Metric family")
            ->check(CLI::IsMember({"functional", "model"}))
            ->capture_default_str();
    };

    auto* gen = app.add_subcommand("gen-data", "Write the training set as JSON Lines");
    auto* trn = app.add_subcommand("train", "Train the toy model");
    auto* base = app.add_subcommand("baseline", "Score the full and fully patched model on a target");
    target_opts(base);
    auto* disc = app.add_subcommand("discover", "Find a circuit for a target");
    target_opts(disc);
    disc->add_option("--method", a.method, "Search method")
        ->check(CLI::IsMember({"patches", "iterative", "dla"}))
        ->capture_default_str();
    auto* eval = app.add_subcommand("evaluate", "Re-verify a stored circuit");
    target_opts(eval);
    eval->add_option("--circuit", a.circuit, "circuit.json to verify")->check(CLI::ExistingFile);
    auto* prb = app.add_subcommand("probe", "Probe circuit vs complement activations");
    prb->add_option("--target", a.target, "Operator token");
    prb->add_option("--circuit", a.circuit, "circuit.json")->check(CLI::ExistingFile);
    auto* rep = app.add_subcommand("report", "Overlap, usage and recovery reports over circuits");
    rep->add_option("--circuits", a.circuits, "circuit.json files")->check(CLI::ExistingFile);
    rep->add_flag("--recovery", a.recovery, "Also score circuits on samples the full model gets wrong");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        Run run(g, sub->get_name());
        if (sub == gen) cmd_gen_data(run);
        else if (sub == trn) cmd_train(run);
        else if (sub == base) cmd_baseline(run, a);
        else if (sub == disc) cmd_discover(run, a);
        else if (sub == eval) cmd_evaluate(run, a);
        else if (sub == prb) cmd_probe(run, a);
        else if (sub == rep) cmd_report(run, a);
        run.write_manifest();
    } catch (const GateFailed& e) {
        std::cerr << e.what() << "\n";
        return kGateFailed;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        if (e.code() == ErrorCode::ConfigError) std::cerr << "run with --help for usage\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
