#pragma once

#include <functional>
#include <string>

#include "srckt/report/config_file.hpp"

namespace srckt {

// Independent random streams derived from the run seed. Each stage draws from
// its own stream so changing one stage never perturbs another.
enum class Stream : std::uint64_t {
    TrainData = 1,
    Init = 2,
    Shuffle = 3,
    Pool = 4,
    Equivalence = 5,
    Counterfactual = 6,
    Search = 7,
    Probe = 8,
    Failures = 9,
};

std::uint64_t stream_seed(std::uint64_t seed, Stream s);
nlohmann::json seed_plan(std::uint64_t seed);

Dataset make_training_data(const RunConfig& cfg, std::uint64_t seed);

TrainResult train_model(const RunConfig& cfg, std::uint64_t seed,
                        const std::function<void(const EpochMetrics&)>& on_epoch = {});

// Fresh records (disjoint stream from the training data) scanned for targets.
Dataset make_pool(const RunConfig& cfg, std::uint64_t seed);

SelectionOptions selection_options(const RunConfig& cfg, std::uint64_t seed);
EvaluatorOptions evaluator_options(const RunConfig& cfg, std::uint64_t seed);

TargetDataset make_target_dataset(const Weights& w, const RunConfig& cfg, const TargetSpec& spec, std::uint64_t seed);

// Mean patches average the first mean_patch_samples training inputs; resample
// and STR patches are built per record of `samples`. Class targets only
// support mean patching (ConfigError otherwise).
PatchBank make_patch_bank(const Weights& w, const RunConfig& cfg, PatchStrategy strategy, const TargetSpec& spec,
                          const Dataset& samples, std::uint64_t seed);

} // namespace srckt
