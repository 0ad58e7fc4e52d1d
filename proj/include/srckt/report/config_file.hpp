#pragma once

#include <string>

#include "json.hpp"
#include "srckt/criteria/criteria.hpp"
#include "srckt/patching/patching.hpp"
#include "srckt/probing/probe.hpp"
#include "srckt/search/cma.hpp"
#include "srckt/train/selection.hpp"
#include "srckt/train/trainer.hpp"

namespace srckt {

// Everything a run depends on besides the seed. JSON sections: model, train,
// grammar, patching, search, criteria, probe.
struct RunConfig {
    ModelConfig model;
    DataConfig data;
    std::size_t n_train = 20000;
    TrainConfig train;

    std::size_t pool_size = 20000; // fresh records scanned for target datasets
    SelectionOptions selection;
    std::size_t mean_patch_samples = 1000;
    CounterfactualOptions counterfactual;

    CmaParams search;
    double penalty = 100.0;
    CriteriaConfig criteria;
    EvaluatorOptions evaluator;
    std::size_t recovery_samples = 100;

    ProbeConfig probe;

    nlohmann::json to_json() const;
    // Missing keys keep their defaults; unknown keys are rejected. Throws ConfigError.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    // CRC32 of the canonical JSON form.
    std::string digest() const;
};

} // namespace srckt
