#include "srckt/report/pipeline.hpp"

#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

std::uint64_t stream_seed(std::uint64_t seed, Stream s) { return derive_seed(seed, static_cast<std::uint64_t>(s)); }

nlohmann::json seed_plan(std::uint64_t seed) {
    const std::pair<const char*, Stream> streams[] = {
        {"train_data", Stream::TrainData},   {"init", Stream::Init},
        {"shuffle", Stream::Shuffle},        {"pool", Stream::Pool},
        {"equivalence", Stream::Equivalence}, {"counterfactual", Stream::Counterfactual},
        {"search", Stream::Search},          {"probe", Stream::Probe},
        {"failures", Stream::Failures},
    };
    nlohmann::json j = {{"seed", seed}};
    for (const auto& [name, s] : streams) j[name] = stream_seed(seed, s);
    return j;
}

Dataset make_training_data(const RunConfig& cfg, std::uint64_t seed) {
    return generate_training_set(cfg.data, cfg.n_train, stream_seed(seed, Stream::TrainData));
}

TrainResult train_model(const RunConfig& cfg, std::uint64_t seed,
                        const std::function<void(const EpochMetrics&)>& on_epoch) {
    const Dataset data = make_training_data(cfg, seed);
    Rng rng(stream_seed(seed, Stream::Init));
    const Weights init = init_model(cfg.model, rng);
    TrainConfig tc = cfg.train;
    tc.seed = stream_seed(seed, Stream::Shuffle);
    return train(init, data, tc, on_epoch);
}

Dataset make_pool(const RunConfig& cfg, std::uint64_t seed) {
    return generate_training_set(cfg.data, cfg.pool_size, stream_seed(seed, Stream::Pool));
}

SelectionOptions selection_options(const RunConfig& cfg, std::uint64_t seed) {
    SelectionOptions o = cfg.selection;
    o.equivalence_seed = stream_seed(seed, Stream::Equivalence);
    return o;
}

EvaluatorOptions evaluator_options(const RunConfig& cfg, std::uint64_t seed) {
    EvaluatorOptions o = cfg.evaluator;
    o.equivalence_seed = stream_seed(seed, Stream::Equivalence);
    return o;
}

TargetDataset make_target_dataset(const Weights& w, const RunConfig& cfg, const TargetSpec& spec,
                                  std::uint64_t seed) {
    return select_target_dataset(w, make_pool(cfg, seed), spec, selection_options(cfg, seed));
}

PatchBank make_patch_bank(const Weights& w, const RunConfig& cfg, PatchStrategy strategy, const TargetSpec& spec,
                          const Dataset& samples, std::uint64_t seed) {
    PatchBank bank;
    bank.strategy = strategy;
    if (strategy == PatchStrategy::Mean) {
        // Record streams are per index, so this is a prefix of the training set.
        const Dataset ref =
            generate_training_set(cfg.data, cfg.mean_patch_samples, stream_seed(seed, Stream::TrainData));
        std::vector<SupportSet> supports;
        supports.reserve(ref.size());
        for (const Record& r : ref) supports.push_back(r.support);
        bank.sets.push_back(build_mean_patch(w, supports));
        return bank;
    }
    if (spec.kind != TargetSpec::Kind::SingleToken)
        fail(ErrorCode::ConfigError, to_string(strategy) + " patching needs a single-token target");

    CounterfactualOptions opts = cfg.counterfactual;
    opts.seed = stream_seed(seed, Stream::Counterfactual);
    const RelationMap& rel = RelationMap::defaults();
    bank.sets.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        bank.sets[i] = strategy == PatchStrategy::Resample ? build_resample_patch(w, samples[i], spec.token, rel, opts)
                                                           : build_str_patch(w, samples[i], spec.token, opts);
    });
    return bank;
}

} // namespace srckt
