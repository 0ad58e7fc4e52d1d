#pragma once

#include <string>
#include <vector>

#include "srckt/probing/stats.hpp"
#include "srckt/train/dataset.hpp"

namespace srckt {

struct ProbeConfig {
    int hidden_units = 10;
    double learning_rate = 1e-4;
    int batch_size = 32;
    int epochs = 200;
    double train_fraction = 0.7;
    double val_fraction = 0.1; // the rest is test
    std::size_t n_samples = 1000;
    int seeds = 10;
    std::size_t components_per_side = 10;

    // Throws ConfigError.
    void validate() const;
};

// Mean over the rows (inducing-point or set axis) of a component activation.
std::vector<double> pool_activations(const Mat& activation);
// Throws MissingComponent.
std::vector<double> pool_activations(const ActivationCache& cache, std::size_t component);

struct ProbeSplit {
    std::vector<std::size_t> train, val, test; // row indices
};

// Stratified by label, shuffled with the seed.
ProbeSplit stratified_split(const std::vector<int>& labels, const ProbeConfig& cfg, std::uint64_t seed);

struct ProbeModel {
    Mat w1, b1, w2, b2;               // in x h, 1 x h, h x 1, 1 x 1
    std::vector<double> mu, inv_std;  // feature standardisation from the training rows

    double predict(std::span<const double> x) const; // probability of label 1
};

struct ProbeFit {
    ProbeModel model; // best validation checkpoint
    double best_val_accuracy = 0.0;
    int best_epoch = 0;
    std::vector<double> train_loss; // per epoch
};

// Trains input -> hidden (ReLU) -> 1 (sigmoid) with Adam on binary cross
// entropy. Only the train and validation rows are visible here.
ProbeFit fit_probe(const Mat& features, const std::vector<int>& labels, const std::vector<std::size_t>& train,
                   const std::vector<std::size_t>& val, const ProbeConfig& cfg, std::uint64_t seed);

double probe_accuracy(const ProbeModel& model, const Mat& features, const std::vector<int>& labels,
                      const std::vector<std::size_t>& rows);

struct ProbeRun {
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
};

// Split, fit, and score the test rows.
ProbeRun train_probe(const Mat& features, const std::vector<int>& labels, std::uint64_t seed, const ProbeConfig& cfg);

struct ComponentProbe {
    std::size_t component = 0;
    std::vector<double> accuracies; // one per seed
    double mean = 0.0, std = 0.0;
};

struct ProbeComparison {
    std::vector<ComponentProbe> circuit, complement; // paired by position
    double circuit_mean = 0.0, circuit_std = 0.0;
    double complement_mean = 0.0, complement_std = 0.0;
    TTestResult test;
    bool resampled = false; // a side had fewer components than requested
};

// Probes the given per-component feature matrices (samples x features) and
// runs the paired t-test of circuit against complement means.
ProbeComparison compare_feature_groups(const std::vector<std::pair<std::size_t, Mat>>& circuit,
                                       const std::vector<std::pair<std::size_t, Mat>>& complement,
                                       const std::vector<int>& labels, const ProbeConfig& cfg, std::uint64_t seed,
                                       bool resampled = false);

// Samples components_per_side components from each side (with replacement if
// a side is smaller, flagged), pools their activations over `samples`, and
// compares. Labels: target token present in the expression.
ProbeComparison compare_circuit_complement(const Weights& w, const Dataset& samples, TokenId target,
                                           const ComponentSet& circuit, const ProbeConfig& cfg, std::uint64_t seed);

// Balanced probe set: n/2 records containing `target` and n/2 without, drawn
// from `pool` in order. Throws InsufficientPool.
Dataset balanced_probe_set(const Dataset& pool, TokenId target, std::size_t n);

std::string probe_csv(const std::string& operation, const std::string& setup, const ProbeComparison& c);

} // namespace srckt
