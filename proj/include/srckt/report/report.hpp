#pragma once

#include <map>
#include <string>
#include <vector>

#include "srckt/criteria/evaluator.hpp"

namespace srckt {

struct NamedCircuit {
    std::string label;
    ComponentSet components;
};

// cell(i, j) = 100 |Ci ∩ Cj| / min(|Ci|, |Cj|) off the diagonal (0 when one is
// empty); the diagonal holds |Ci|. Throws ConfigMismatch when sizes differ.
std::vector<std::vector<double>> overlap_matrix(const std::vector<NamedCircuit>& circuits);
std::string overlap_csv(const std::vector<NamedCircuit>& circuits, const std::vector<std::vector<double>>& m);

struct UsageReport {
    std::vector<std::size_t> counts; // per component index
    bool out_in_all = false;
};

UsageReport component_usage(const std::vector<NamedCircuit>& circuits, const ModelConfig& config);
std::string usage_csv(const UsageReport& usage, const ModelConfig& config);

// Records matching the spec on which the unpatched model misses the target
// at top-3 under teacher forcing, first n in pool order. Throws
// InsufficientFailures.
Dataset select_failures(const Weights& w, const Dataset& pool, const TargetSpec& spec, std::size_t n);

// Top-3 accuracy of the circuit alone (complement patched) on a failure set.
double recovery_score(const Evaluator& failures, const ComponentSet& circuit);

} // namespace srckt
