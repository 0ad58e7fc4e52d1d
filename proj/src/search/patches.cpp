#include "srckt/search/patches.hpp"

#include <algorithm>
#include <cstdio>

#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

ComponentSet decode_mask(std::span<const double> x) {
    ComponentSet s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s.set(i, std::clamp(x[i], 0.0, 1.0) > 0.5);
    return s;
}

double fitness_value(std::size_t circuit_size, std::span<const double> thresholds, std::span<const double> scores,
                     double penalty) {
    if (thresholds.size() != scores.size()) fail(ErrorCode::ShapeMismatch, "threshold/score count differs");
    double shortfall = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) shortfall += std::max(0.0, thresholds[i] - scores[i]);
    return static_cast<double>(circuit_size) + penalty * shortfall;
}

CircuitProblem::CircuitProblem(const Evaluator& ev, MetricFamily family, std::vector<double> thresholds,
                               double penalty)
    : ev_(ev), family_(family), thresholds_(std::move(thresholds)), penalty_(penalty) {
    if (!(penalty_ > 0.0)) fail(ErrorCode::ConfigError, "penalty must be > 0");
    const std::size_t want = family_ == MetricFamily::Functional ? 3 : 1;
    if (thresholds_.size() != want) fail(ErrorCode::ConfigError, "wrong number of thresholds for metric family");
}

CircuitProblem CircuitProblem::from_config(const Evaluator& ev, const CriteriaConfig& config, double penalty) {
    return CircuitProblem(ev, config.family, srckt::thresholds(ev.full(), config), penalty);
}

std::vector<double> CircuitProblem::scores(const ComponentSet& circuit) const {
    return ev_.score(circuit.complement()).metrics(family_);
}

bool CircuitProblem::feasible(const ComponentSet& circuit) const {
    const auto s = scores(circuit);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < thresholds_[i]) return false;
    }
    return true;
}

double CircuitProblem::fitness(const ComponentSet& circuit) const {
    return fitness_value(circuit.count(), thresholds_, scores(circuit), penalty_);
}

ComponentSet refine_minimal(const CircuitProblem& problem, const ComponentSet& circuit) {
    ComponentSet c = circuit;
    for (bool removed = true; removed;) {
        removed = false;
        for (std::size_t i : c.indices()) {
            const ComponentSet smaller = c.without(i);
            if (problem.feasible(smaller)) {
                c = smaller;
                removed = true;
            }
        }
    }
    return c;
}

SearchResult run_patches(const CircuitProblem& problem, const CmaParams& params, std::uint64_t seed,
                         const std::function<void(const GenerationLog&)>& on_generation) {
    params.validate();
    CmaEs cma(problem.dim(), params);
    Rng rng = make_rng(seed, 0);
    SearchResult result;
    double best_f = 0.0;
    ComponentSet best_excluded;
    bool have_best = false;
    // An infeasible mask can undercut every feasible one when the shortfall is
    // small, so the best feasible mask is tracked on its own and preferred.
    double best_feasible_f = 0.0;
    ComponentSet best_feasible_excluded;
    bool have_feasible = false;

    for (int gen = 0; gen < params.generations; ++gen) {
        const auto pop = cma.ask(rng);
        std::vector<ComponentSet> masks(pop.size());
        std::vector<double> f(pop.size());
        std::vector<char> ok(pop.size(), 0);
        parallel_for(pop.size(), [&](std::size_t i) {
            masks[i] = decode_mask(pop[i]);
            f[i] = problem.fitness(masks[i].complement());
            ok[i] = problem.feasible(masks[i].complement());
        });
        result.evaluations += pop.size();
        double mean = 0.0;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            mean += f[i];
            if (!have_best || f[i] < best_f) {
                best_f = f[i];
                best_excluded = masks[i];
                have_best = true;
            }
            if (ok[i] && (!have_feasible || f[i] < best_feasible_f)) {
                best_feasible_f = f[i];
                best_feasible_excluded = masks[i];
                have_feasible = true;
            }
        }
        cma.tell(pop, f);
        GenerationLog g{gen, best_f, mean / static_cast<double>(pop.size()), cma.state().sigma, best_excluded.to_hex()};
        result.log.push_back(g);
        if (on_generation) on_generation(g);
    }
    result.search_circuit = (have_feasible ? best_feasible_excluded : best_excluded).complement();
    result.circuit = refine_minimal(problem, result.search_circuit);
    result.fitness = problem.fitness(result.circuit);
    result.feasible = problem.feasible(result.circuit);
    return result;
}

std::string search_log_jsonl(const std::vector<GenerationLog>& log) {
    std::string out;
    for (const auto& g : log) {
        nlohmann::json j{{"gen", g.gen}, {"best_F", g.best_f}, {"mean_F", g.mean_f}, {"sigma", g.sigma},
                         {"best_mask_bits", g.best_mask}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

} // namespace srckt
