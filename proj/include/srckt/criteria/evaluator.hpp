#pragma once

#include <array>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "srckt/patching/patching.hpp"
#include "srckt/train/selection.hpp"

namespace srckt {

enum class MetricFamily { Functional, Model };

std::string to_string(MetricFamily f);
// "functional", "model". Throws ConfigError.
MetricFamily parse_family(const std::string& name);

struct SampleOutcome {
    int rank = 0;             // 0-based rank of the target (single token) or first class hit (class)
    double target_prob = 0.0; // softmax probability of the target at t, or geometric mean over gold tokens
};

struct ScoreReport {
    std::array<double, 3> topk{}; // T1, T2, T3
    double logit_score = 0.0;     // mean target probability
    std::size_t n_samples = 0;
    std::vector<SampleOutcome> samples;

    // (T1, T2, T3) for Functional, (Lgt) for Model.
    std::vector<double> metrics(MetricFamily family) const;
    nlohmann::json to_json() const;
    static ScoreReport from_json(const nlohmann::json& j);
};

struct EvaluatorOptions {
    // Class targets: beam width used to produce the ranked hypotheses.
    int class_beam = 5;
    std::uint64_t equivalence_seed = 0;
};

// Scores a fixed dataset under any exclusion mask. Results are cached by mask,
// so repeated queries are free and every caller sees identical numbers. The
// unpatched and fully patched reports are computed on construction.
class Evaluator {
public:
    Evaluator(const Weights& w, TargetSpec spec, const Dataset& samples, const PatchBank& patches,
              EvaluatorOptions opts = {});

    const ModelConfig& config() const { return w_.config; }
    std::size_t components() const { return n_components_; }
    const Dataset& samples() const { return samples_; }

    // Throws EmptyDataset / MissingPatch.
    ScoreReport score(const ComponentSet& excluded) const;
    const ScoreReport& full() const;         // nothing patched
    const ScoreReport& fully_patched() const; // everything patched
    std::size_t evaluations() const;        // uncached evaluations so far

private:
    SampleOutcome score_sample(std::size_t i, const ComponentSet& excluded) const;

    const Weights& w_;
    TargetSpec spec_;
    const Dataset& samples_;
    const PatchBank& patches_;
    EvaluatorOptions opts_;
    std::size_t n_components_;
    mutable std::mutex mu_;
    mutable std::map<std::string, ScoreReport> cache_;
    mutable std::size_t evaluations_ = 0;
    std::optional<ScoreReport> full_, fully_patched_;
};

// Target rank with ties broken toward the lower vocabulary index.
int target_rank(std::span<const double> logits, std::size_t target);

// Fraction of outcomes with rank < k. Throws EmptyDataset.
double topk_accuracy(const std::vector<SampleOutcome>& outcomes, int k);
// Mean target probability. Throws EmptyDataset.
double logit_score(const std::vector<SampleOutcome>& outcomes);

ScoreReport make_report(std::vector<SampleOutcome> outcomes);

} // namespace srckt
