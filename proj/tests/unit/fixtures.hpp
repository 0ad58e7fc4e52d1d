#pragma once

// Small shared builders for tests that need a model, a target dataset and
// patches without a trained checkpoint.

#include <functional>

#include "doctest.h"
#include "srckt/criteria/criteria.hpp"
#include "srckt/model/beam_search.hpp"
#include "srckt/util/error.hpp"

namespace srckt::testing {

inline ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

inline Weights random_model(std::uint64_t seed, const ModelConfig& c = {}) {
    Rng rng(seed);
    return init_model(c, rng);
}

// Zero the value projection of one head: its output is 0 for every input, so
// mean patching it changes nothing.
inline void make_head_inert(Weights& w, int layer, Block block, int head) {
    auto& mab = block == Block::Mab1 ? w.encoder[static_cast<std::size_t>(layer - 1)].mab1
                                     : w.encoder[static_cast<std::size_t>(layer - 1)].mab2;
    const std::size_t dh = static_cast<std::size_t>(w.config.head_dim());
    const std::size_t c0 = static_cast<std::size_t>(head - 1) * dh;
    for (std::size_t r = 0; r < mab.attn.v.w.rows; ++r)
        for (std::size_t c = c0; c < c0 + dh; ++c) mab.attn.v.w(r, c) = 0.0;
    for (std::size_t c = c0; c < c0 + dh; ++c) mab.attn.v.b(0, c) = 0.0;
}

inline void make_mlp_inert(Weights& w, int layer, Block block) {
    auto& mab = block == Block::Mab1 ? w.encoder[static_cast<std::size_t>(layer - 1)].mab1
                                     : w.encoder[static_cast<std::size_t>(layer - 1)].mab2;
    mab.ff.out.w.fill(0.0);
    mab.ff.out.b.fill(0.0);
}

// Every head and MLP inert; only OUT carries input-dependent signal.
inline void make_all_but_out_inert(Weights& w) {
    for (int l = 1; l <= w.config.enc_layers; ++l)
        for (Block b : {Block::Mab1, Block::Mab2}) {
            for (int h = 1; h <= w.config.heads_per_mab; ++h) make_head_inert(w, l, b, h);
            make_mlp_inert(w, l, b);
        }
}

// Records containing `target`, with t set; supports of 32 points.
inline Dataset target_records(TokenId target, std::size_t n, std::uint64_t seed) {
    DataConfig d;
    d.support.n_points = 32;
    const TargetSpec spec = TargetSpec::single(target);
    Dataset out;
    std::size_t batch = 0;
    while (out.size() < n) {
        for (Record& r : generate_training_set(d, 400, derive_seed(seed, batch++))) {
            if (out.size() == n) break;
            if (!spec.matches(r.expr)) continue;
            r.t = first_timestep(r, target);
            r.id = static_cast<int>(out.size());
            out.push_back(std::move(r));
        }
    }
    return out;
}

inline PatchBank mean_bank(const Weights& w, std::size_t n, std::uint64_t seed) {
    DataConfig d;
    d.support.n_points = 32;
    std::vector<SupportSet> s;
    for (const Record& r : generate_training_set(d, n, seed)) s.push_back(r.support);
    PatchBank b;
    b.sets.push_back(build_mean_patch(w, s));
    return b;
}

} // namespace srckt::testing
