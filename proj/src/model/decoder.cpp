#include "internal.hpp"
#include "srckt/util/error.hpp"

namespace srckt::detail {

Mat decode_traced(const Weights& w, const Mat& latent, std::span<const TokenId> tokens, DecoderTrace* trace) {
    using namespace layers;
    const ModelConfig& c = w.config;
    if (tokens.empty()) fail(ErrorCode::SeqTooLong, "empty decoder input");
    if (tokens.size() > static_cast<std::size_t>(c.max_seq_len)) {
        fail(ErrorCode::SeqTooLong, "sequence of " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                                        std::to_string(c.max_seq_len));
    }
    const auto d = static_cast<std::size_t>(c.d_model);
    Mat x(tokens.size(), d);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const TokenId t = tokens[i];
        if (t < 0 || t >= c.vocab_size) fail(ErrorCode::UnknownToken, "token id " + std::to_string(t));
        for (std::size_t j = 0; j < d; ++j) {
            x(i, j) = w.token_embedding(static_cast<std::size_t>(t), j) + w.position_embedding(i, j);
        }
    }
    if (trace) {
        trace->tokens.assign(tokens.begin(), tokens.end());
        trace->layers.assign(w.decoder.size(), {});
    }
    const Mat mem = layer_norm(latent, w.memory_norm, trace ? &trace->memory_norm : nullptr);

    for (std::size_t l = 0; l < w.decoder.size(); ++l) {
        const DecoderLayerW& lw = w.decoder[l];
        DecoderLayerTrace* t = trace ? &trace->layers[l] : nullptr;
        const Mat xs = layer_norm(x, lw.norm_self, t ? &t->norm_self : nullptr);
        add_inplace(x, attention(xs, xs, lw.self_attn, c.dec_heads, true, t ? &t->self_attn : nullptr));
        const Mat xc = layer_norm(x, lw.norm_cross, t ? &t->norm_cross : nullptr);
        add_inplace(x, attention(xc, mem, lw.cross_attn, c.dec_heads, false, t ? &t->cross_attn : nullptr));
        const Mat xf = layer_norm(x, lw.norm_ff, t ? &t->norm_ff : nullptr);
        add_inplace(x, feed_forward(xf, lw.ff, t ? &t->ff : nullptr));
    }
    Mat out = layer_norm(x, w.final_norm, trace ? &trace->final_norm : nullptr);
    Mat logits = linear(out, w.vocab);
    if (trace) trace->final_out = std::move(out);
    return logits;
}

Mat decode_backward(const Weights& w, const DecoderTrace& t, const Mat& dlogits, Weights& g) {
    using namespace layers;
    const ModelConfig& c = w.config;
    const Mat dout = linear_backward(t.final_out, w.vocab, dlogits, g.vocab);
    Mat dx = layer_norm_backward(t.final_norm, w.final_norm, dout, g.final_norm);
    Mat dmem(static_cast<std::size_t>(c.inducing_points), static_cast<std::size_t>(c.d_model));

    for (std::size_t l = w.decoder.size(); l-- > 0;) {
        const DecoderLayerW& lw = w.decoder[l];
        DecoderLayerW& lg = g.decoder[l];
        const DecoderLayerTrace& lt = t.layers[l];

        const Mat dxf = feed_forward_backward(lt.ff, lw.ff, dx, lg.ff);
        add_inplace(dx, layer_norm_backward(lt.norm_ff, lw.norm_ff, dxf, lg.norm_ff));

        auto [dxc, dm] = attention_backward(lt.cross_attn, lw.cross_attn, c.dec_heads, false, dx, lg.cross_attn);
        add_inplace(dmem, dm);
        add_inplace(dx, layer_norm_backward(lt.norm_cross, lw.norm_cross, dxc, lg.norm_cross));

        auto [dq, dkv] = attention_backward(lt.self_attn, lw.self_attn, c.dec_heads, true, dx, lg.self_attn);
        add_inplace(dq, dkv);
        add_inplace(dx, layer_norm_backward(lt.norm_self, lw.norm_self, dq, lg.norm_self));
    }
    const auto d = static_cast<std::size_t>(c.d_model);
    for (std::size_t i = 0; i < t.tokens.size(); ++i) {
        const auto tokr = static_cast<std::size_t>(t.tokens[i]);
        for (std::size_t j = 0; j < d; ++j) {
            g.token_embedding(tokr, j) += dx(i, j);
            g.position_embedding(i, j) += dx(i, j);
        }
    }
    return layer_norm_backward(t.memory_norm, w.memory_norm, dmem, g.memory_norm);
}

} // namespace srckt::detail
