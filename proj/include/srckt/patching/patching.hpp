#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "srckt/expr/relations.hpp"
#include "srckt/train/dataset.hpp"

namespace srckt {

enum class PatchStrategy { Mean, Resample, Str };

std::string to_string(PatchStrategy s);
// "mean", "resample", "str". Throws ConfigError.
PatchStrategy parse_strategy(const std::string& name);

// Replacement activation for every component, indexed like component_ids().
struct PatchSet {
    PatchStrategy strategy = PatchStrategy::Mean;
    std::vector<Mat> values;
    nlohmann::json provenance;

    PatchView view(const ComponentSet& excluded) const { return {&excluded, values}; }
    bool covers(const ComponentSet& excluded) const;
};

// Mean patches are shared by every sample; resample and STR patches are built
// per sample.
struct PatchBank {
    PatchStrategy strategy = PatchStrategy::Mean;
    std::vector<PatchSet> sets; // one entry for Mean, else one per sample

    bool per_sample() const { return strategy != PatchStrategy::Mean; }
    const PatchSet& for_sample(std::size_t i) const { return per_sample() ? sets.at(i) : sets.at(0); }
};

// Clean activations of every component for one input.
std::vector<Mat> clean_activations(const Weights& w, const SupportSet& support);

// Per-component arithmetic mean over the samples. Samples must share a
// support size. Throws EmptyDataset / ShapeMismatch.
PatchSet build_mean_patch(const Weights& w, const std::vector<SupportSet>& samples);

struct CounterfactualOptions {
    SupportOptions support{64, -10.0, 10.0, 2};
    std::uint64_t seed = 0;
};

// The record's target operator (at gold position t) swapped for each of
// `replacements`; y is recomputed on the original points and invalid points are
// resampled. Variants whose domain cannot be repaired are skipped. Returns the
// mean activations over the remaining variants; throws NoValidCounterfactual
// if none remain. The random stream of each variant depends only on the seed,
// the record id and the replacement token.
PatchSet build_counterfactual_patch(const Weights& w, const Record& r, int t, const std::vector<TokenId>& replacements,
                                    const CounterfactualOptions& opts, std::vector<TokenId>* used = nullptr);

// Alternatives of equal arity excluding the target and its related tokens.
std::vector<TokenId> resample_alternatives(TokenId target, const RelationMap& relations);

PatchSet build_resample_patch(const Weights& w, const Record& r, TokenId target, const RelationMap& relations,
                              const CounterfactualOptions& opts);
// Throws NoRelatedToken.
PatchSet build_str_patch(const Weights& w, const Record& r, TokenId target, const CounterfactualOptions& opts);

struct PatchedOutput {
    std::vector<double> logits; // next-token logits at timestep t
    std::size_t patched_taps = 0;
};

// Encode with `excluded` overwritten from `patches`, then teacher-force the
// gold prefix up to t. Throws MissingPatch.
PatchedOutput patched_forward(const Weights& w, const Record& r, int t, const ComponentSet& excluded,
                              const PatchSet& patches);

// Latent of a patched encode, for callers that decode freely (beam search).
Mat patched_latent(const Weights& w, const SupportSet& support, const ComponentSet& excluded, const PatchSet& patches);

// Patch cache file (SRPCH1): one tensor per component name plus a header with
// strategy, provenance and the model checksum.
void save_patch_bank(const PatchBank& bank, const ModelConfig& config, const std::string& model_checksum,
                     const std::string& path);
// Throws ConfigMismatch when the checksum or shapes do not match.
PatchBank load_patch_bank(const std::string& path, const ModelConfig& config, const std::string& model_checksum);

} // namespace srckt
