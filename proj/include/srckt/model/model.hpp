#pragma once

#include <optional>
#include <span>
#include <vector>

#include "srckt/expr/evaluate.hpp"
#include "srckt/model/components.hpp"
#include "srckt/model/weights.hpp"

namespace srckt {

// Clean or post-replacement outputs of tapped components, by component index.
struct ActivationCache {
    std::vector<std::optional<Mat>> values;

    bool has(std::size_t index) const { return index < values.size() && values[index].has_value(); }
    // Throws MissingComponent.
    const Mat& at(std::size_t index) const;
};

// Components in `excluded` get their tap-point output overwritten with
// `values[index]` before anything downstream reads it.
struct PatchView {
    const ComponentSet* excluded = nullptr;
    std::span<const Mat> values;
};

struct EncodeResult {
    Mat latent; // inducing_points x d_model
    ActivationCache cache;
    std::size_t patched_taps = 0; // tap points actually overwritten
};

// Encoder input features: one row per support point, asinh-compressed
// x columns (zero padded to n_inputs) followed by asinh(y).
Mat encoder_features(const SupportSet& support, const ModelConfig& config);

// Throws ShapeMismatch / MissingPatch.
EncodeResult encode(const Weights& w, const SupportSet& support, const ComponentSet* taps = nullptr,
                    const PatchView* patch = nullptr);

// Logits for every position of `tokens` (rows) over the vocabulary (cols).
// Throws SeqTooLong.
Mat decode_all(const Weights& w, const Mat& latent, std::span<const TokenId> tokens);

// Next-token logits after `prefix` (which starts with <S>). Throws SeqTooLong.
std::vector<double> decode_step(const Weights& w, const Mat& latent, std::span<const TokenId> prefix);

struct TrainingExample {
    SupportSet support;
    std::vector<TokenId> gold; // <S> ... <F>
};

// Mean token-level negative log-likelihood under teacher forcing.
double forward_nll(const Weights& w, const SupportSet& support, std::span<const TokenId> gold,
                   const PatchView* patch = nullptr);

struct Gradient {
    Weights grad;
    double loss = 0.0;     // mean NLL over the batch
    double accuracy = 0.0; // teacher-forced top-1 token accuracy
};

// Exact reverse-mode gradient of the batch-mean NLL. Samples are processed in
// parallel and reduced in batch order.
Gradient grad_nll(const Weights& w, std::span<const TrainingExample> batch, const PatchView* patch = nullptr);

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

} // namespace srckt
