#pragma once

#include <string>
#include <vector>

#include "srckt/criteria/evaluator.hpp"

namespace srckt {

struct CriteriaConfig {
    MetricFamily family = MetricFamily::Functional;
    double delta_f = 0.10;
    double delta_c = 0.25;

    // Throws ConfigError.
    void validate() const;
};

// Every score a verdict depends on. `circuit` is the circuit alone (complement
// patched), `complement` the model with the circuit patched out, and
// `removed[i]` the circuit with its i-th component also patched.
struct CriteriaReports {
    ScoreReport full;
    ScoreReport circuit;
    ScoreReport complement;
    std::vector<std::size_t> removed_components;
    std::vector<ScoreReport> removed;
};

struct ComponentDrop {
    std::size_t component = 0;
    std::array<double, 3> topk_drop{}; // T_k(full) - T_k(circuit without c)
    double logit_drop = 0.0;
};

struct CriteriaVerdict {
    bool faithful_functional = false, faithful_model = false;
    bool complete_functional = false, complete_model = false;
    bool minimal_functional = false, minimal_model = false;
    std::vector<ComponentDrop> drops;

    bool faithful(MetricFamily f) const { return f == MetricFamily::Functional ? faithful_functional : faithful_model; }
    bool complete(MetricFamily f) const { return f == MetricFamily::Functional ? complete_functional : complete_model; }
    bool minimal(MetricFamily f) const { return f == MetricFamily::Functional ? minimal_functional : minimal_model; }
    bool all(MetricFamily f) const { return faithful(f) && complete(f) && minimal(f); }
};

// Pure checks on stored reports.
bool faithful_functional(const ScoreReport& full, const ScoreReport& circuit, double delta_f);
bool faithful_model(const ScoreReport& full, const ScoreReport& circuit, double delta_f);
bool complete_functional(const ScoreReport& complement, double delta_c);
bool complete_model(const ScoreReport& complement, double delta_c);
// Vacuously true for an empty circuit.
bool minimal_functional(const ScoreReport& full, const std::vector<ScoreReport>& removed, double delta_f);
bool minimal_model(const ScoreReport& full, const std::vector<ScoreReport>& removed, double delta_f);

CriteriaVerdict verdict_from_reports(const CriteriaReports& reports, const CriteriaConfig& config);

// Scores everything needed for a circuit (the included components).
CriteriaReports collect_reports(const Evaluator& ev, const ComponentSet& circuit);

struct CriteriaResult {
    CriteriaReports reports;
    CriteriaVerdict verdict;
};

CriteriaResult evaluate_circuit(const Evaluator& ev, const ComponentSet& circuit, const CriteriaConfig& config);

// Baseline gate: fully patched T_k must be at most delta_c for every k
// (Functional) or the logit score at most delta_c (Model).
bool baseline_gate(const ScoreReport& fully_patched, const CriteriaConfig& config);

// Per-metric thresholds: full score minus delta_f.
std::vector<double> thresholds(const ScoreReport& full, const CriteriaConfig& config);

nlohmann::json verdict_json(const ModelConfig& model, const ComponentSet& circuit, const CriteriaResult& result,
                            const CriteriaConfig& config, const std::string& config_digest);
// Recomputes the verdict from the reports stored in a verdict JSON.
CriteriaVerdict verdict_from_json(const ModelConfig& model, const nlohmann::json& j, const CriteriaConfig& config);

// Rows: baseline_full, baseline_patched, faithful, complete; columns T1,T2,T3,Lgt.
std::string scores_csv(const ScoreReport& full, const ScoreReport& fully_patched, const CriteriaReports& reports);

// Accuracy over a dataset of class targets; see Evaluator for the hit rule.
double class_accuracy(const Evaluator& ev, const ComponentSet& excluded, int k);

} // namespace srckt
