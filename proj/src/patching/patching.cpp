#include "srckt/patching/patching.hpp"

#include "srckt/model/tensor_io.hpp"
#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

std::string to_string(PatchStrategy s) {
    switch (s) {
    case PatchStrategy::Mean:
        return "mean";
    case PatchStrategy::Resample:
        return "resample";
    case PatchStrategy::Str:
        return "str";
    }
    return {};
}

PatchStrategy parse_strategy(const std::string& name) {
    if (name == "mean") return PatchStrategy::Mean;
    if (name == "resample") return PatchStrategy::Resample;
    if (name == "str") return PatchStrategy::Str;
    fail(ErrorCode::ConfigError, "unknown patch strategy: " + name);
}

bool PatchSet::covers(const ComponentSet& excluded) const {
    for (std::size_t i : excluded.indices()) {
        if (i >= values.size() || values[i].empty()) return false;
    }
    return true;
}

std::vector<Mat> clean_activations(const Weights& w, const SupportSet& support) {
    const ComponentSet all(component_count(w.config), true);
    EncodeResult r = encode(w, support, &all);
    std::vector<Mat> out;
    out.reserve(r.cache.values.size());
    for (auto& v : r.cache.values) out.push_back(std::move(*v));
    return out;
}

namespace {

// Mean over per-variant activation lists, summed in list order.
std::vector<Mat> mean_of(const std::vector<std::vector<Mat>>& acts) {
    std::vector<Mat> sum = acts.front();
    for (std::size_t s = 1; s < acts.size(); ++s) {
        for (std::size_t c = 0; c < sum.size(); ++c) {
            if (!sum[c].same_shape(acts[s][c])) {
                fail(ErrorCode::ShapeMismatch, "activation shapes differ between samples; support sizes must match");
            }
            add_inplace(sum[c], acts[s][c]);
        }
    }
    const double inv = 1.0 / static_cast<double>(acts.size());
    for (auto& m : sum) {
        for (double& x : m.v) x *= inv;
    }
    return sum;
}

} // namespace

PatchSet build_mean_patch(const Weights& w, const std::vector<SupportSet>& samples) {
    if (samples.empty()) fail(ErrorCode::EmptyDataset, "mean patch needs at least one sample");
    // Fixed-size chunks keep the summation order independent of the worker count
    // and bound memory.
    constexpr std::size_t chunk = 32;
    const std::size_t n_chunks = (samples.size() + chunk - 1) / chunk;
    std::vector<std::vector<Mat>> partial(n_chunks);
    parallel_for(n_chunks, [&](std::size_t ci) {
        const std::size_t lo = ci * chunk;
        const std::size_t hi = std::min(samples.size(), lo + chunk);
        std::vector<Mat> sum = clean_activations(w, samples[lo]);
        for (std::size_t i = lo + 1; i < hi; ++i) {
            const auto a = clean_activations(w, samples[i]);
            for (std::size_t c = 0; c < sum.size(); ++c) {
                if (!sum[c].same_shape(a[c])) {
                    fail(ErrorCode::ShapeMismatch, "activation shapes differ between samples; support sizes must match");
                }
                add_inplace(sum[c], a[c]);
            }
        }
        partial[ci] = std::move(sum);
    });
    std::vector<Mat> total = std::move(partial[0]);
    for (std::size_t ci = 1; ci < n_chunks; ++ci) {
        for (std::size_t c = 0; c < total.size(); ++c) {
            if (!total[c].same_shape(partial[ci][c])) {
                fail(ErrorCode::ShapeMismatch, "activation shapes differ between samples; support sizes must match");
            }
            add_inplace(total[c], partial[ci][c]);
        }
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (auto& m : total) {
        for (double& x : m.v) x *= inv;
    }
    PatchSet p;
    p.strategy = PatchStrategy::Mean;
    p.values = std::move(total);
    p.provenance = {{"n_samples", samples.size()}};
    return p;
}

std::vector<TokenId> resample_alternatives(TokenId target, const RelationMap& relations) {
    const Vocabulary& v = Vocabulary::standard();
    const TokenSet& related = relations.related(target);
    std::vector<TokenId> out;
    for (TokenId t : v.ops_of_arity(v.arity(target))) {
        if (t != target && !related.count(t)) out.push_back(t);
    }
    return out;
}

PatchSet build_counterfactual_patch(const Weights& w, const Record& r, int t, const std::vector<TokenId>& replacements,
                                    const CounterfactualOptions& opts, std::vector<TokenId>* used) {
    if (t < 1) fail(ErrorCode::NoValidCounterfactual, "record " + std::to_string(r.id) + " has no target position");
    const auto pos = static_cast<std::size_t>(t - 1);
    std::vector<std::optional<std::vector<Mat>>> acts(replacements.size());
    SupportOptions so = opts.support;
    so.n_vars = static_cast<int>(r.support.n_vars());
    parallel_for(replacements.size(), [&](std::size_t i) {
        const Expression corrupted = replace_at(r.expr, pos, replacements[i]);
        Rng rng = make_rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r.id)),
                           static_cast<std::uint64_t>(replacements[i]));
        try {
            acts[i] = clean_activations(w, reevaluate_support(corrupted, r.support, so, rng));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UnsatisfiableDomain) throw;
        }
    });
    std::vector<std::vector<Mat>> valid;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        if (!acts[i]) continue;
        valid.push_back(std::move(*acts[i]));
        names.emplace_back(Vocabulary::standard().symbol(replacements[i]));
        if (used) used->push_back(replacements[i]);
    }
    if (valid.empty()) {
        fail(ErrorCode::NoValidCounterfactual, "no valid counterfactual for record " + std::to_string(r.id));
    }
    PatchSet p;
    p.values = mean_of(valid);
    p.provenance = {{"record", r.id}, {"counterfactuals", names}, {"y_recomputed", true}};
    return p;
}

PatchSet build_resample_patch(const Weights& w, const Record& r, TokenId target, const RelationMap& relations,
                              const CounterfactualOptions& opts) {
    PatchSet p = build_counterfactual_patch(w, r, r.t.value_or(-1), resample_alternatives(target, relations), opts);
    p.strategy = PatchStrategy::Resample;
    return p;
}

PatchSet build_str_patch(const Weights& w, const Record& r, TokenId target, const CounterfactualOptions& opts) {
    const auto partner = closest_related(target);
    if (!partner) {
        fail(ErrorCode::NoRelatedToken,
             "no related token for " + std::string(Vocabulary::standard().symbol(target)));
    }
    PatchSet p = build_counterfactual_patch(w, r, r.t.value_or(-1), {*partner}, opts);
    p.strategy = PatchStrategy::Str;
    return p;
}

Mat patched_latent(const Weights& w, const SupportSet& support, const ComponentSet& excluded, const PatchSet& patches) {
    const PatchView view = patches.view(excluded);
    return encode(w, support, nullptr, &view).latent;
}

PatchedOutput patched_forward(const Weights& w, const Record& r, int t, const ComponentSet& excluded,
                              const PatchSet& patches) {
    const auto gold = r.gold();
    if (t < 1 || static_cast<std::size_t>(t) >= gold.size()) {
        fail(ErrorCode::SeqTooLong, "timestep " + std::to_string(t) + " outside gold sequence");
    }
    const PatchView view = patches.view(excluded);
    const EncodeResult enc = encode(w, r.support, nullptr, &view);
    PatchedOutput out;
    out.logits = decode_step(w, enc.latent, std::span<const TokenId>(gold.data(), static_cast<std::size_t>(t)));
    out.patched_taps = enc.patched_taps;
    return out;
}

void save_patch_bank(const PatchBank& bank, const ModelConfig& config, const std::string& model_checksum,
                     const std::string& path) {
    const auto ids = component_ids(config);
    TensorFile f;
    f.header["strategy"] = to_string(bank.strategy);
    f.header["n_sets"] = bank.sets.size();
    f.header["model_checksum"] = model_checksum;
    f.header["config"] = config.to_json();
    nlohmann::json prov = nlohmann::json::array();
    for (std::size_t s = 0; s < bank.sets.size(); ++s) {
        prov.push_back(bank.sets[s].provenance);
        for (std::size_t c = 0; c < ids.size(); ++c) {
            f.tensors.push_back({std::to_string(s) + "/" + ids[c].name(), bank.sets[s].values.at(c)});
        }
    }
    f.header["provenance"] = std::move(prov);
    write_tensor_file(path, kPatchMagic, f);
}

PatchBank load_patch_bank(const std::string& path, const ModelConfig& config, const std::string& model_checksum) {
    TensorFile f = read_tensor_file(path, kPatchMagic);
    if (f.header.value("model_checksum", std::string()) != model_checksum) {
        fail(ErrorCode::ConfigMismatch, "patch file " + path + " was built for a different model");
    }
    const auto ids = component_ids(config);
    PatchBank bank;
    bank.strategy = parse_strategy(f.header.at("strategy").get<std::string>());
    const auto n_sets = f.header.at("n_sets").get<std::size_t>();
    if (f.tensors.size() != n_sets * ids.size()) fail(ErrorCode::ConfigMismatch, "patch file tensor count mismatch");
    std::size_t k = 0;
    for (std::size_t s = 0; s < n_sets; ++s) {
        PatchSet p;
        p.strategy = bank.strategy;
        p.provenance = f.header.at("provenance").at(s);
        for (std::size_t c = 0; c < ids.size(); ++c, ++k) {
            if (f.tensors[k].name != std::to_string(s) + "/" + ids[c].name()) {
                fail(ErrorCode::ConfigMismatch, "unexpected tensor " + f.tensors[k].name + " in " + path);
            }
            p.values.push_back(std::move(f.tensors[k].value));
        }
        bank.sets.push_back(std::move(p));
    }
    return bank;
}

} // namespace srckt
