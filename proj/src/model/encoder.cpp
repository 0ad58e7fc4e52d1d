#include <cmath>

#include "internal.hpp"
#include "srckt/util/error.hpp"

namespace srckt {

Mat encoder_features(const SupportSet& support, const ModelConfig& config) {
    const auto n_in = static_cast<std::size_t>(config.n_inputs);
    if (support.x.rows != support.y.size()) fail(ErrorCode::ShapeMismatch, "support x/y row count differs");
    if (support.x.cols > n_in) {
        fail(ErrorCode::ShapeMismatch, "support has " + std::to_string(support.x.cols) + " variables, model takes " +
                                           std::to_string(n_in));
    }
    if (support.y.empty()) fail(ErrorCode::ShapeMismatch, "empty support set");
    Mat f(support.y.size(), n_in + 1);
    for (std::size_t i = 0; i < f.rows; ++i) {
        for (std::size_t j = 0; j < support.x.cols; ++j) f(i, j) = std::asinh(support.x(i, j));
        f(i, n_in) = std::asinh(support.y[i]);
    }
    return f;
}

namespace detail {
namespace {

std::size_t heads_of(const ModelConfig& c) { return static_cast<std::size_t>(c.heads_per_mab); }

// Component index of the first head of (layer, block); the MLP follows the heads.
std::size_t block_base(const ModelConfig& c, int layer, int block) {
    return (static_cast<std::size_t>(layer) * 2 + static_cast<std::size_t>(block)) * (heads_of(c) + 1);
}

} // namespace

Mat encode_traced(const Weights& w, const SupportSet& support, layers::TapContext* ctx, EncoderTrace* trace) {
    using namespace layers;
    const ModelConfig& c = w.config;
    Mat features = encoder_features(support, c);
    Mat e = linear(features, w.input);
    if (trace) {
        trace->features = std::move(features);
        trace->mab1.assign(w.encoder.size(), {});
        trace->mab2.assign(w.encoder.size(), {});
    }

    for (std::size_t l = 0; l < w.encoder.size(); ++l) {
        const EncoderLayerW& lw = w.encoder[l];
        MabTrace* t1 = trace ? &trace->mab1[l] : nullptr;
        MabTrace* t2 = trace ? &trace->mab2[l] : nullptr;
        const std::size_t base1 = block_base(c, static_cast<int>(l), 0);
        const std::size_t base2 = block_base(c, static_cast<int>(l), 1);

        // MAB1: inducing points attend to the set.
        const Mat q1 = layer_norm(lw.inducing, lw.mab1.norm_q, t1 ? &t1->norm_q : nullptr);
        const Mat kv1 = layer_norm(e, lw.mab1.norm_kv, t1 ? &t1->norm_kv : nullptr);
        Mat h = lw.inducing;
        add_inplace(h, attention(q1, kv1, lw.mab1.attn, c.heads_per_mab, false, t1 ? &t1->attn : nullptr, ctx, base1));
        Mat f1 = feed_forward(layer_norm(h, lw.mab1.norm_ff, t1 ? &t1->norm_ff : nullptr), lw.mab1.ff,
                              t1 ? &t1->ff : nullptr);
        const bool r1 = ctx ? ctx->apply(base1 + heads_of(c), f1) : false;
        if (t1) t1->ff_replaced = r1;
        add_inplace(h, f1);

        // MAB2: the set attends to the induced summary.
        const Mat q2 = layer_norm(e, lw.mab2.norm_q, t2 ? &t2->norm_q : nullptr);
        const Mat kv2 = layer_norm(h, lw.mab2.norm_kv, t2 ? &t2->norm_kv : nullptr);
        Mat z = attention(q2, kv2, lw.mab2.attn, c.heads_per_mab, false, t2 ? &t2->attn : nullptr, ctx, base2);
        Mat f2 = feed_forward(layer_norm(z, lw.mab2.norm_ff, t2 ? &t2->norm_ff : nullptr), lw.mab2.ff,
                              t2 ? &t2->ff : nullptr);
        const bool r2 = ctx ? ctx->apply(base2 + heads_of(c), f2) : false;
        if (t2) t2->ff_replaced = r2;
        add_inplace(z, f2);
        add_inplace(e, z);
    }

    const Mat en = layer_norm(e, w.output.norm, trace ? &trace->out_norm : nullptr);
    Mat latent = attention(w.output.seeds, en, w.output.attn, 1, false, trace ? &trace->out_attn : nullptr);
    const bool rout = ctx ? ctx->apply(component_count(c) - 1, latent) : false;
    if (trace) trace->out_replaced = rout;
    return latent;
}

void encode_backward(const Weights& w, const EncoderTrace& t, const Mat& dlatent, Weights& g) {
    using namespace layers;
    if (t.out_replaced) return;
    auto [dseeds, den] = attention_backward(t.out_attn, w.output.attn, 1, false, dlatent, g.output.attn);
    add_inplace(g.output.seeds, dseeds);
    Mat de = layer_norm_backward(t.out_norm, w.output.norm, den, g.output.norm);

    for (std::size_t li = w.encoder.size(); li-- > 0;) {
        const EncoderLayerW& lw = w.encoder[li];
        EncoderLayerW& lg = g.encoder[li];
        const MabTrace& t1 = t.mab1[li];
        const MabTrace& t2 = t.mab2[li];
        const int heads = w.config.heads_per_mab;

        // e_out = e_in + z, z = a2 + ff(ln(a2))
        Mat da2 = de;
        if (!t2.ff_replaced) {
            const Mat dn = feed_forward_backward(t2.ff, lw.mab2.ff, de, lg.mab2.ff);
            add_inplace(da2, layer_norm_backward(t2.norm_ff, lw.mab2.norm_ff, dn, lg.mab2.norm_ff));
        }
        auto [dq2, dkv2] = attention_backward(t2.attn, lw.mab2.attn, heads, false, da2, lg.mab2.attn);
        add_inplace(de, layer_norm_backward(t2.norm_q, lw.mab2.norm_q, dq2, lg.mab2.norm_q));
        const Mat dh = layer_norm_backward(t2.norm_kv, lw.mab2.norm_kv, dkv2, lg.mab2.norm_kv);

        // h = h1 + ff(ln(h1)), h1 = inducing + a1
        Mat dh1 = dh;
        if (!t1.ff_replaced) {
            const Mat dn = feed_forward_backward(t1.ff, lw.mab1.ff, dh, lg.mab1.ff);
            add_inplace(dh1, layer_norm_backward(t1.norm_ff, lw.mab1.norm_ff, dn, lg.mab1.norm_ff));
        }
        add_inplace(lg.inducing, dh1);
        auto [dq1, dkv1] = attention_backward(t1.attn, lw.mab1.attn, heads, false, dh1, lg.mab1.attn);
        add_inplace(lg.inducing, layer_norm_backward(t1.norm_q, lw.mab1.norm_q, dq1, lg.mab1.norm_q));
        add_inplace(de, layer_norm_backward(t1.norm_kv, lw.mab1.norm_kv, dkv1, lg.mab1.norm_kv));
    }
    linear_backward(t.features, w.input, de, g.input);
}

} // namespace detail

EncodeResult encode(const Weights& w, const SupportSet& support, const ComponentSet* taps, const PatchView* patch) {
    const std::size_t n = component_count(w.config);
    if (taps && taps->universe() != n) fail(ErrorCode::ShapeMismatch, "tap set size differs from component count");
    if (patch && patch->excluded && patch->excluded->universe() != n) {
        fail(ErrorCode::ShapeMismatch, "mask size differs from component count");
    }
    EncodeResult r;
    layers::TapContext ctx;
    ctx.taps = taps;
    ctx.patch = patch;
    if (taps) {
        r.cache.values.resize(n);
        ctx.cache = &r.cache;
    }
    r.latent = detail::encode_traced(w, support, (taps || patch) ? &ctx : nullptr, nullptr);
    r.patched_taps = ctx.patched;
    return r;
}

const Mat& ActivationCache::at(std::size_t index) const {
    if (!has(index)) fail(ErrorCode::MissingComponent, "component " + std::to_string(index) + " not cached");
    return *values[index];
}

} // namespace srckt
