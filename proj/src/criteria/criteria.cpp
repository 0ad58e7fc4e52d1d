#include "srckt/criteria/criteria.hpp"

#include <cmath>
#include <cstdio>

#include "srckt/util/error.hpp"

namespace srckt {

void CriteriaConfig::validate() const {
    if (!(delta_f >= 0.0 && delta_f <= 1.0)) fail(ErrorCode::ConfigError, "delta_f must be in [0, 1]");
    if (!(delta_c >= 0.0 && delta_c <= 1.0)) fail(ErrorCode::ConfigError, "delta_c must be in [0, 1]");
}

bool faithful_functional(const ScoreReport& full, const ScoreReport& circuit, double delta_f) {
    for (std::size_t k = 0; k < 3; ++k) {
        if (std::abs(circuit.topk[k] - full.topk[k]) > delta_f) return false;
    }
    return true;
}

bool faithful_model(const ScoreReport& full, const ScoreReport& circuit, double delta_f) {
    return full.logit_score - circuit.logit_score <= delta_f;
}

bool complete_functional(const ScoreReport& complement, double delta_c) {
    for (double t : complement.topk) {
        if (t > delta_c) return false;
    }
    return true;
}

bool complete_model(const ScoreReport& complement, double delta_c) { return complement.logit_score <= delta_c; }

bool minimal_functional(const ScoreReport& full, const std::vector<ScoreReport>& removed, double delta_f) {
    for (const auto& r : removed) {
        for (std::size_t k = 0; k < 3; ++k) {
            if (std::abs(full.topk[k] - r.topk[k]) < delta_f) return false;
        }
    }
    return true;
}

bool minimal_model(const ScoreReport& full, const std::vector<ScoreReport>& removed, double delta_f) {
    for (const auto& r : removed) {
        if (full.logit_score - r.logit_score < delta_f) return false;
    }
    return true;
}

CriteriaVerdict verdict_from_reports(const CriteriaReports& rep, const CriteriaConfig& config) {
    CriteriaVerdict v;
    v.faithful_functional = faithful_functional(rep.full, rep.circuit, config.delta_f);
    v.faithful_model = faithful_model(rep.full, rep.circuit, config.delta_f);
    v.complete_functional = complete_functional(rep.complement, config.delta_c);
    v.complete_model = complete_model(rep.complement, config.delta_c);
    v.minimal_functional = minimal_functional(rep.full, rep.removed, config.delta_f);
    v.minimal_model = minimal_model(rep.full, rep.removed, config.delta_f);
    for (std::size_t i = 0; i < rep.removed.size(); ++i) {
        ComponentDrop d;
        d.component = rep.removed_components[i];
        for (std::size_t k = 0; k < 3; ++k) d.topk_drop[k] = rep.full.topk[k] - rep.removed[i].topk[k];
        d.logit_drop = rep.full.logit_score - rep.removed[i].logit_score;
        v.drops.push_back(d);
    }
    return v;
}

CriteriaReports collect_reports(const Evaluator& ev, const ComponentSet& circuit) {
    CriteriaReports rep;
    rep.full = ev.full();
    const ComponentSet complement = circuit.complement();
    rep.circuit = ev.score(complement);
    rep.complement = ev.score(circuit);
    for (std::size_t i : circuit.indices()) {
        rep.removed_components.push_back(i);
        rep.removed.push_back(ev.score(complement.with(i)));
    }
    return rep;
}

CriteriaResult evaluate_circuit(const Evaluator& ev, const ComponentSet& circuit, const CriteriaConfig& config) {
    config.validate();
    CriteriaResult r;
    r.reports = collect_reports(ev, circuit);
    r.verdict = verdict_from_reports(r.reports, config);
    return r;
}

bool baseline_gate(const ScoreReport& fully_patched, const CriteriaConfig& config) {
    return config.family == MetricFamily::Functional ? complete_functional(fully_patched, config.delta_c)
                                                     : complete_model(fully_patched, config.delta_c);
}

std::vector<double> thresholds(const ScoreReport& full, const CriteriaConfig& config) {
    auto t = full.metrics(config.family);
    for (double& x : t) x -= config.delta_f;
    return t;
}

namespace {

nlohmann::json reports_json(const CriteriaReports& rep, const ModelConfig& model) {
    const auto ids = component_ids(model);
    nlohmann::json removed = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.removed.size(); ++i) {
        auto r = rep.removed[i].to_json();
        r["component"] = ids[rep.removed_components[i]].name();
        removed.push_back(std::move(r));
    }
    return {{"full", rep.full.to_json()},
            {"circuit", rep.circuit.to_json()},
            {"complement", rep.complement.to_json()},
            {"removed", std::move(removed)}};
}

} // namespace

nlohmann::json verdict_json(const ModelConfig& model, const ComponentSet& circuit, const CriteriaResult& result,
                            const CriteriaConfig& config, const std::string& config_digest) {
    const auto ids = component_ids(model);
    const CriteriaVerdict& v = result.verdict;
    nlohmann::json drops = nlohmann::json::object();
    for (const auto& d : v.drops) {
        drops[ids[d.component].name()] = {
            {"T1", d.topk_drop[0]}, {"T2", d.topk_drop[1]}, {"T3", d.topk_drop[2]}, {"Lgt", d.logit_drop}};
    }
    nlohmann::json j;
    j["circuit"] = circuit.names(model);
    j["config_digest"] = config_digest;
    j["family"] = to_string(config.family);
    j["delta_f"] = config.delta_f;
    j["delta_c"] = config.delta_c;
    j["logit_score_definition"] = "softmax probability of the target token at t";
    j["reports"] = reports_json(result.reports, model);
    j["verdicts"] = {{"faithful_functional", v.faithful_functional}, {"faithful_model", v.faithful_model},
                     {"complete_functional", v.complete_functional}, {"complete_model", v.complete_model},
                     {"minimal_functional", v.minimal_functional},   {"minimal_model", v.minimal_model}};
    j["per_component_drops"] = std::move(drops);
    return j;
}

CriteriaVerdict verdict_from_json(const ModelConfig& model, const nlohmann::json& j, const CriteriaConfig& config) {
    CriteriaReports rep;
    const auto& r = j.at("reports");
    rep.full = ScoreReport::from_json(r.at("full"));
    rep.circuit = ScoreReport::from_json(r.at("circuit"));
    rep.complement = ScoreReport::from_json(r.at("complement"));
    for (const auto& rj : r.at("removed")) {
        rep.removed_components.push_back(
            component_index(model, ComponentId::parse(rj.at("component").get<std::string>())));
        rep.removed.push_back(ScoreReport::from_json(rj));
    }
    return verdict_from_reports(rep, config);
}

std::string scores_csv(const ScoreReport& full, const ScoreReport& fully_patched, const CriteriaReports& reports) {
    std::string out = "row,T1,T2,T3,Lgt\n";
    const auto line = [&](const char* name, const ScoreReport& r) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f,%.4f\n", name, r.topk[0], r.topk[1], r.topk[2],
                      r.logit_score);
        out += buf;
    };
    line("baseline_full", full);
    line("baseline_patched", fully_patched);
    line("faithful", reports.circuit);
    line("complete", reports.complement);
    return out;
}

double class_accuracy(const Evaluator& ev, const ComponentSet& excluded, int k) {
    return topk_accuracy(ev.score(excluded).samples, k);
}

} // namespace srckt
