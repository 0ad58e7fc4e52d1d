#include "srckt/criteria/evaluator.hpp"

#include <cmath>
#include <limits>

#include "srckt/expr/equivalence.hpp"
#include "srckt/model/beam_search.hpp"
#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

std::string to_string(MetricFamily f) { return f == MetricFamily::Functional ? "functional" : "model"; }

MetricFamily parse_family(const std::string& name) {
    if (name == "functional") return MetricFamily::Functional;
    if (name == "model") return MetricFamily::Model;
    fail(ErrorCode::ConfigError, "unknown metric family: " + name);
}

std::vector<double> ScoreReport::metrics(MetricFamily family) const {
    if (family == MetricFamily::Functional) return {topk[0], topk[1], topk[2]};
    return {logit_score};
}

nlohmann::json ScoreReport::to_json() const {
    nlohmann::json j;
    j["T1"] = topk[0];
    j["T2"] = topk[1];
    j["T3"] = topk[2];
    j["Lgt"] = logit_score;
    j["n_samples"] = n_samples;
    return j;
}

ScoreReport ScoreReport::from_json(const nlohmann::json& j) {
    ScoreReport r;
    r.topk = {j.at("T1").get<double>(), j.at("T2").get<double>(), j.at("T3").get<double>()};
    r.logit_score = j.at("Lgt").get<double>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    return r;
}

int target_rank(std::span<const double> logits, std::size_t target) {
    int rank = 0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (logits[j] > logits[target] || (logits[j] == logits[target] && j < target)) ++rank;
    }
    return rank;
}

double topk_accuracy(const std::vector<SampleOutcome>& outcomes, int k) {
    if (outcomes.empty()) fail(ErrorCode::EmptyDataset, "no samples to score");
    std::size_t hits = 0;
    for (const auto& o : outcomes) hits += o.rank < k ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double logit_score(const std::vector<SampleOutcome>& outcomes) {
    if (outcomes.empty()) fail(ErrorCode::EmptyDataset, "no samples to score");
    double s = 0.0;
    for (const auto& o : outcomes) s += o.target_prob;
    return s / static_cast<double>(outcomes.size());
}

ScoreReport make_report(std::vector<SampleOutcome> outcomes) {
    ScoreReport r;
    for (int k = 1; k <= 3; ++k) r.topk[static_cast<std::size_t>(k - 1)] = topk_accuracy(outcomes, k);
    r.logit_score = logit_score(outcomes);
    r.n_samples = outcomes.size();
    r.samples = std::move(outcomes);
    return r;
}

Evaluator::Evaluator(const Weights& w, TargetSpec spec, const Dataset& samples, const PatchBank& patches,
                     EvaluatorOptions opts)
    : w_(w), spec_(std::move(spec)), samples_(samples), patches_(patches), opts_(opts),
      n_components_(component_count(w.config)) {
    if (samples_.empty()) fail(ErrorCode::EmptyDataset, "evaluator needs samples");
    if (patches_.per_sample() && patches_.sets.size() != samples_.size()) {
        fail(ErrorCode::MissingPatch, "per-sample patch bank does not match the dataset size");
    }
    if (patches_.sets.empty()) fail(ErrorCode::MissingPatch, "empty patch bank");
    full_ = score(ComponentSet(n_components_));
    fully_patched_ = score(ComponentSet(n_components_, true));
}

SampleOutcome Evaluator::score_sample(std::size_t i, const ComponentSet& excluded) const {
    const Record& r = samples_[i];
    const PatchSet& p = patches_.for_sample(i);
    if (spec_.kind == TargetSpec::Kind::SingleToken) {
        const int t = r.t.value_or(-1);
        const auto out = patched_forward(w_, r, t, excluded, p);
        const auto target = static_cast<std::size_t>(spec_.token);
        return {target_rank(out.logits, target), softmax(out.logits)[target]};
    }
    // Class targets: rank of the first beam hypothesis in the class that matches gold.
    const Mat latent = patched_latent(w_, r.support, excluded, p);
    const auto gold = r.gold();
    const Mat logits = decode_all(w_, latent, std::span<const TokenId>(gold.data(), gold.size() - 1));
    double nll = 0.0;
    for (std::size_t s = 0; s < logits.rows; ++s) {
        nll -= log_softmax(logits.row_span(s))[static_cast<std::size_t>(gold[s + 1])];
    }
    SampleOutcome o{std::numeric_limits<int>::max(), std::exp(-nll / static_cast<double>(logits.rows))};
    const auto hyps = beam_search(w_, latent, opts_.class_beam, static_cast<int>(gold.size()) + 4, 3);
    EquivalenceOptions eq;
    eq.n_vars = std::max<int>(1, static_cast<int>(r.support.n_vars()));
    for (std::size_t h = 0; h < hyps.size(); ++h) {
        const Expression e = parse_prefix(hyps[h].body());
        if (!spec_.matches(e)) continue;
        bool same = hyps[h].tokens == gold;
        if (!same) {
            Rng rng = make_rng(opts_.equivalence_seed, static_cast<std::uint64_t>(r.id));
            try {
                same = pointwise_equivalent(e, r.expr, eq, rng);
            } catch (const Error& err) {
                if (err.code() != ErrorCode::UnsatisfiableDomain) throw;
            }
        }
        if (same) {
            o.rank = static_cast<int>(h);
            break;
        }
    }
    return o;
}

ScoreReport Evaluator::score(const ComponentSet& excluded) const {
    if (excluded.universe() != n_components_) fail(ErrorCode::ShapeMismatch, "mask size differs from component count");
    {
        std::lock_guard lock(mu_);
        const auto it = cache_.find(excluded.key());
        if (it != cache_.end()) return it->second;
    }
    std::vector<SampleOutcome> outcomes(samples_.size());
    parallel_for(samples_.size(), [&](std::size_t i) { outcomes[i] = score_sample(i, excluded); });
    ScoreReport report = make_report(std::move(outcomes));
    std::lock_guard lock(mu_);
    ++evaluations_;
    return cache_.emplace(excluded.key(), std::move(report)).first->second;
}

const ScoreReport& Evaluator::full() const { return *full_; }

const ScoreReport& Evaluator::fully_patched() const { return *fully_patched_; }

std::size_t Evaluator::evaluations() const {
    std::lock_guard lock(mu_);
    return evaluations_;
}

} // namespace srckt
