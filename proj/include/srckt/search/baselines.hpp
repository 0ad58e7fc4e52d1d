#pragma once

#include <string>
#include <vector>

#include "srckt/search/patches.hpp"

namespace srckt {

// Start from the full model; sweep components from the last layer to the first
// (component order inside a layer), then back, patching each one in turn and
// dropping it if every threshold still holds. Stops after a backward + forward
// cycle that removes nothing.
ComponentSet run_iterative_patching(const CircuitProblem& problem);

struct DlaEntry {
    std::size_t component = 0;
    double delta = 0.0; // mean(clean score - score with only this component patched)
};

// Logit score for Model, top-1 accuracy for Functional. Sorted by |delta|
// descending, ties in component order.
std::vector<DlaEntry> dla_rank(const Evaluator& ev, MetricFamily family);

struct CurvePoint {
    std::size_t rank = 0; // components reintroduced
    std::array<double, 3> topk{};
    double logit_score = 0.0;
};

struct DlaResult {
    ComponentSet circuit;
    std::vector<CurvePoint> curve; // one point per reintroduced component, ending at the full model
    bool met = false;              // thresholds reached
    bool met_at_start = false;     // fully patched model already meets the thresholds
};

// Reintroduce components in rank order into the fully patched model. The
// circuit is the shortest prefix of the ranking that meets every threshold
// (all components if none does); the curve covers the whole ranking. Returns
// an empty circuit and no curve if the fully patched model already meets the
// thresholds.
DlaResult dla_circuit(const CircuitProblem& problem, const std::vector<DlaEntry>& ranking);

std::string curve_csv(const std::vector<CurvePoint>& curve);

} // namespace srckt
