#include "srckt/search/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "srckt/util/parallel.hpp"

namespace srckt {

namespace {

// Components grouped by encoder layer; OUT sits after the last layer.
std::vector<std::vector<std::size_t>> layer_groups(const ModelConfig& config) {
    const auto ids = component_ids(config);
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(config.enc_layers) + 1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t g = ids[i].kind == ComponentId::Kind::Out ? groups.size() - 1
                                                                   : static_cast<std::size_t>(ids[i].layer - 1);
        groups[g].push_back(i);
    }
    return groups;
}

} // namespace

ComponentSet run_iterative_patching(const CircuitProblem& problem) {
    const auto groups = layer_groups(problem.evaluator().config());
    std::vector<std::size_t> backward, forward;
    for (auto it = groups.rbegin(); it != groups.rend(); ++it) backward.insert(backward.end(), it->begin(), it->end());
    for (const auto& g : groups) forward.insert(forward.end(), g.begin(), g.end());

    ComponentSet c(problem.dim(), true);
    const auto sweep = [&](const std::vector<std::size_t>& order) {
        bool removed = false;
        for (std::size_t i : order) {
            if (!c.contains(i)) continue;
            const ComponentSet smaller = c.without(i);
            if (problem.feasible(smaller)) {
                c = smaller;
                removed = true;
            }
        }
        return removed;
    };
    for (;;) {
        const bool b = sweep(backward);
        const bool f = sweep(forward);
        if (!b && !f) break;
    }
    return c;
}

std::vector<DlaEntry> dla_rank(const Evaluator& ev, MetricFamily family) {
    const std::size_t n = ev.components();
    const ScoreReport& clean = ev.full();
    std::vector<DlaEntry> out(n);
    parallel_for(n, [&](std::size_t i) {
        ComponentSet one(n);
        one.insert(i);
        const ScoreReport r = ev.score(one);
        out[i].component = i;
        out[i].delta = family == MetricFamily::Model ? clean.logit_score - r.logit_score : clean.topk[0] - r.topk[0];
    });
    std::stable_sort(out.begin(), out.end(),
                     [](const DlaEntry& a, const DlaEntry& b) { return std::abs(a.delta) > std::abs(b.delta); });
    return out;
}

DlaResult dla_circuit(const CircuitProblem& problem, const std::vector<DlaEntry>& ranking) {
    const Evaluator& ev = problem.evaluator();
    DlaResult res;
    res.circuit = ComponentSet(problem.dim());
    if (problem.feasible(res.circuit)) {
        res.met = true;
        res.met_at_start = true;
        return res;
    }
    // The curve runs to the full model; the circuit is the first prefix that meets the thresholds.
    ComponentSet added(problem.dim());
    for (std::size_t k = 0; k < ranking.size(); ++k) {
        added.insert(ranking[k].component);
        const ScoreReport r = ev.score(added.complement());
        res.curve.push_back({k + 1, r.topk, r.logit_score});
        if (!res.met && problem.feasible(added)) {
            res.met = true;
            res.circuit = added;
        }
    }
    if (!res.met) res.circuit = added;
    return res;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "component_rank,T1,T2,T3,Lgt\n";
    for (const auto& p : curve) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f,%.10f,%.10f\n", p.rank, p.topk[0], p.topk[1], p.topk[2],
                      p.logit_score);
        out += buf;
    }
    return out;
}

} // namespace srckt
