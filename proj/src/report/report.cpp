#include "srckt/report/report.hpp"

#include <algorithm>
#include <cstdio>

#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

std::vector<std::vector<double>> overlap_matrix(const std::vector<NamedCircuit>& circuits) {
    const std::size_t n = circuits.size();
    for (const auto& c : circuits) {
        if (c.components.universe() != circuits.front().components.universe()) {
            fail(ErrorCode::ConfigMismatch, "circuits come from different model configs");
        }
    }
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t a = circuits[i].components.count();
            const std::size_t b = circuits[j].components.count();
            if (i == j) {
                m[i][j] = static_cast<double>(a);
            } else if (a > 0 && b > 0) {
                const std::size_t both = circuits[i].components.intersect(circuits[j].components).count();
                m[i][j] = 100.0 * static_cast<double>(both) / static_cast<double>(std::min(a, b));
            }
        }
    }
    return m;
}

std::string overlap_csv(const std::vector<NamedCircuit>& circuits, const std::vector<std::vector<double>>& m) {
    std::string out = "circuit";
    for (const auto& c : circuits) out += "," + c.label;
    out += '\n';
    for (std::size_t i = 0; i < circuits.size(); ++i) {
        out += circuits[i].label;
        for (double v : m[i]) {
            char buf[32];
            std::snprintf(buf, sizeof buf, ",%.1f", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

UsageReport component_usage(const std::vector<NamedCircuit>& circuits, const ModelConfig& config) {
    UsageReport u;
    const std::size_t n = component_count(config);
    u.counts.assign(n, 0);
    for (const auto& c : circuits) {
        if (c.components.universe() != n) fail(ErrorCode::ConfigMismatch, "circuit size differs from model");
        for (std::size_t i : c.components.indices()) ++u.counts[i];
    }
    u.out_in_all = !circuits.empty() && u.counts[n - 1] == circuits.size();
    return u;
}

std::string usage_csv(const UsageReport& usage, const ModelConfig& config) {
    const auto ids = component_ids(config);
    std::string out = "component,count\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i].name() + "," + std::to_string(usage.counts[i]) + "\n";
    return out;
}

Dataset select_failures(const Weights& w, const Dataset& pool, const TargetSpec& spec, std::size_t n) {
    if (spec.kind != TargetSpec::Kind::SingleToken) {
        fail(ErrorCode::ConfigError, "recovery scores are defined for single-token targets");
    }
    Dataset out;
    constexpr std::size_t chunk = 64;
    for (std::size_t base = 0; base < pool.size() && out.size() < n; base += chunk) {
        const std::size_t m = std::min(chunk, pool.size() - base);
        std::vector<char> miss(m, 0);
        parallel_for(m, [&](std::size_t i) {
            const Record& r = pool[base + i];
            if (!spec.matches(r.expr)) return;
            const auto gold = r.gold();
            if (gold.size() - 1 > static_cast<std::size_t>(w.config.max_seq_len)) return;
            const int t = static_cast<int>(std::find(gold.begin(), gold.end(), spec.token) - gold.begin());
            const auto logits = decode_step(w, encode(w, r.support).latent,
                                            std::span<const TokenId>(gold.data(), static_cast<std::size_t>(t)));
            miss[i] = target_rank(logits, static_cast<std::size_t>(spec.token)) >= 3 ? 1 : 0;
        });
        for (std::size_t i = 0; i < m && out.size() < n; ++i) {
            if (!miss[i]) continue;
            Record r = pool[base + i];
            const auto gold = r.gold();
            r.t = static_cast<int>(std::find(gold.begin(), gold.end(), spec.token) - gold.begin());
            out.push_back(std::move(r));
        }
    }
    if (out.size() < n) {
        fail(ErrorCode::InsufficientFailures, "found " + std::to_string(out.size()) + " failure cases for " +
                                                  spec.name() + ", need " + std::to_string(n));
    }
    return out;
}

double recovery_score(const Evaluator& failures, const ComponentSet& circuit) {
    return failures.score(circuit.complement()).topk[2];
}

} // namespace srckt
