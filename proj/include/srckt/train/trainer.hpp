#pragma once

#include <functional>
#include <vector>

#include "srckt/train/dataset.hpp"

namespace srckt {

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 3e-4;
    int epochs = 30;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    // Throws ConfigError.
    void validate() const;
};

struct EpochMetrics {
    // Epoch 0 evaluates the initial weights; later epochs average over the
    // epoch's batches as they are trained.
    int epoch = 0;
    double loss = 0.0;   // mean teacher-forced NLL
    double accuracy = 0.0; // teacher-forced top-1 token accuracy
};

struct TrainResult {
    Weights weights;
    std::vector<EpochMetrics> metrics;
};

// Teacher-forced loss and accuracy over a whole dataset, batch-size independent.
EpochMetrics evaluate_dataset(const Weights& w, const std::vector<TrainingExample>& data);

// Adam on grad_nll with a per-epoch shuffle drawn from `seed`. Weights are
// rounded to float after every step. Throws DivergenceDetected on a
// non-finite loss and EmptyDataset.
TrainResult train(const Weights& init, const Dataset& data, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

} // namespace srckt
