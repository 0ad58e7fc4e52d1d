#pragma once

#include <functional>
#include <string>
#include <vector>

#include "srckt/criteria/criteria.hpp"
#include "srckt/search/cma.hpp"

namespace srckt {

// excluded = { i : clamp(x_i, 0, 1) > 0.5 }
ComponentSet decode_mask(std::span<const double> x);

// F = |C| + penalty * sum_i max(0, T_i - S_i)
double fitness_value(std::size_t circuit_size, std::span<const double> thresholds, std::span<const double> scores,
                     double penalty = 100.0);

// Scores masks against fixed thresholds on a fixed evaluator.
class CircuitProblem {
public:
    CircuitProblem(const Evaluator& ev, MetricFamily family, std::vector<double> thresholds, double penalty = 100.0);
    // Thresholds from the evaluator's full-model scores minus delta_f.
    static CircuitProblem from_config(const Evaluator& ev, const CriteriaConfig& config, double penalty = 100.0);

    std::size_t dim() const { return ev_.components(); }
    const Evaluator& evaluator() const { return ev_; }
    MetricFamily family() const { return family_; }
    const std::vector<double>& thresholds() const { return thresholds_; }
    double penalty() const { return penalty_; }

    // Metrics of the circuit alone (its complement patched).
    std::vector<double> scores(const ComponentSet& circuit) const;
    bool feasible(const ComponentSet& circuit) const;
    double fitness(const ComponentSet& circuit) const;

private:
    const Evaluator& ev_;
    MetricFamily family_;
    std::vector<double> thresholds_;
    double penalty_;
};

struct GenerationLog {
    int gen = 0;
    double best_f = 0.0;      // best ever so far
    double mean_f = 0.0;      // population mean this generation
    double sigma = 0.0;
    std::string best_mask;    // hex, excluded components of the best-ever candidate
};

struct SearchResult {
    ComponentSet circuit;          // after refinement
    ComponentSet search_circuit;   // before refinement
    double fitness = 0.0;          // of `circuit`
    bool feasible = false;
    std::vector<GenerationLog> log;
    std::size_t evaluations = 0;   // fitness calls, cached or not
};

// Removal sweeps in component order until a full sweep removes nothing; a
// component goes if the circuit without it still meets every threshold.
ComponentSet refine_minimal(const CircuitProblem& problem, const ComponentSet& circuit);

// CMA-ES over exclusion probabilities, then refine_minimal on the best-ever
// feasible mask (the best-ever mask if none was feasible).
// Fitness within a generation runs in parallel; ranking is by (F, index).
SearchResult run_patches(const CircuitProblem& problem, const CmaParams& params, std::uint64_t seed,
                         const std::function<void(const GenerationLog&)>& on_generation = {});

std::string search_log_jsonl(const std::vector<GenerationLog>& log);

} // namespace srckt
