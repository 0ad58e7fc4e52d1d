#pragma once

#include <string>
#include <vector>

#include "srckt/model/config.hpp"
#include "srckt/tensor.hpp"
#include "srckt/util/rng.hpp"

namespace srckt {

struct LinearW {
    Mat w; // in x out
    Mat b; // 1 x out
    friend bool operator==(const LinearW&, const LinearW&) = default;
};

struct NormW {
    Mat gain; // 1 x d
    Mat bias; // 1 x d
    friend bool operator==(const NormW&, const NormW&) = default;
};

struct AttentionW {
    LinearW q, k, v, o;
    friend bool operator==(const AttentionW&, const AttentionW&) = default;
};

struct FeedForwardW {
    LinearW hidden, out;
    friend bool operator==(const FeedForwardW&, const FeedForwardW&) = default;
};

struct MabW {
    NormW norm_q, norm_kv, norm_ff;
    AttentionW attn;
    FeedForwardW ff;
    friend bool operator==(const MabW&, const MabW&) = default;
};

struct EncoderLayerW {
    Mat inducing; // m x d
    MabW mab1, mab2;
    friend bool operator==(const EncoderLayerW&, const EncoderLayerW&) = default;
};

// Pooling by attention from learned seeds followed by the output projection;
// its output is the latent handed to the decoder.
struct OutputBlockW {
    Mat seeds; // m x d
    NormW norm;
    AttentionW attn;
    friend bool operator==(const OutputBlockW&, const OutputBlockW&) = default;
};

struct DecoderLayerW {
    NormW norm_self, norm_cross, norm_ff;
    AttentionW self_attn, cross_attn;
    FeedForwardW ff;
    friend bool operator==(const DecoderLayerW&, const DecoderLayerW&) = default;
};

struct Weights {
    ModelConfig config;
    LinearW input;
    std::vector<EncoderLayerW> encoder;
    OutputBlockW output;
    Mat token_embedding;    // vocab x d
    Mat position_embedding; // max_seq_len x d
    NormW memory_norm;
    std::vector<DecoderLayerW> decoder;
    NormW final_norm;
    LinearW vocab;

    // All tensors zero, shapes per config.
    static Weights zeros(const ModelConfig& config);

    template <class F> void visit(F&& f);
    template <class F> void visit(F&& f) const;

    std::size_t parameter_count() const;
    // Round every parameter to the nearest float so the f32 weight file is lossless.
    void snap_to_float();
    bool all_finite() const;

    friend bool operator==(const Weights&, const Weights&) = default;
};

// Xavier-uniform matrices (the vocabulary projection scaled by 0.1), zero
// biases, unit norm gains. Deterministic per seed.
Weights init_model(const ModelConfig& config, Rng& rng);

namespace detail {

template <class W, class F> void visit_linear(W& l, const std::string& p, F& f) {
    f(p + ".w", l.w);
    f(p + ".b", l.b);
}
template <class W, class F> void visit_norm(W& n, const std::string& p, F& f) {
    f(p + ".gain", n.gain);
    f(p + ".bias", n.bias);
}
template <class W, class F> void visit_attn(W& a, const std::string& p, F& f) {
    visit_linear(a.q, p + ".q", f);
    visit_linear(a.k, p + ".k", f);
    visit_linear(a.v, p + ".v", f);
    visit_linear(a.o, p + ".o", f);
}
template <class W, class F> void visit_ff(W& ff, const std::string& p, F& f) {
    visit_linear(ff.hidden, p + ".hidden", f);
    visit_linear(ff.out, p + ".out", f);
}
template <class W, class F> void visit_mab(W& m, const std::string& p, F& f) {
    visit_norm(m.norm_q, p + ".norm_q", f);
    visit_norm(m.norm_kv, p + ".norm_kv", f);
    visit_norm(m.norm_ff, p + ".norm_ff", f);
    visit_attn(m.attn, p + ".attn", f);
    visit_ff(m.ff, p + ".ff", f);
}

template <class W, class F> void visit_all(W& w, F& f) {
    visit_linear(w.input, "enc.input", f);
    for (std::size_t l = 0; l < w.encoder.size(); ++l) {
        const std::string p = "enc.l" + std::to_string(l + 1);
        f(p + ".inducing", w.encoder[l].inducing);
        visit_mab(w.encoder[l].mab1, p + ".mab1", f);
        visit_mab(w.encoder[l].mab2, p + ".mab2", f);
    }
    f(std::string("enc.out.seeds"), w.output.seeds);
    visit_norm(w.output.norm, "enc.out.norm", f);
    visit_attn(w.output.attn, "enc.out.attn", f);
    f(std::string("dec.token_embedding"), w.token_embedding);
    f(std::string("dec.position_embedding"), w.position_embedding);
    visit_norm(w.memory_norm, "dec.memory_norm", f);
    for (std::size_t l = 0; l < w.decoder.size(); ++l) {
        const std::string p = "dec.l" + std::to_string(l + 1);
        visit_norm(w.decoder[l].norm_self, p + ".norm_self", f);
        visit_norm(w.decoder[l].norm_cross, p + ".norm_cross", f);
        visit_norm(w.decoder[l].norm_ff, p + ".norm_ff", f);
        visit_attn(w.decoder[l].self_attn, p + ".self_attn", f);
        visit_attn(w.decoder[l].cross_attn, p + ".cross_attn", f);
        visit_ff(w.decoder[l].ff, p + ".ff", f);
    }
    visit_norm(w.final_norm, "dec.final_norm", f);
    visit_linear(w.vocab, "dec.vocab", f);
}

} // namespace detail

template <class F> void Weights::visit(F&& f) { detail::visit_all(*this, f); }
template <class F> void Weights::visit(F&& f) const { detail::visit_all(*this, f); }

} // namespace srckt
