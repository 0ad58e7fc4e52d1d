#pragma once

#include <vector>

#include "srckt/model/layers.hpp"

// Forward traces kept for reverse-mode differentiation.
namespace srckt::detail {

struct MabTrace {
    layers::NormCache norm_q, norm_kv, norm_ff;
    layers::AttnCache attn;
    layers::FfCache ff;
    bool ff_replaced = false;
};

struct EncoderTrace {
    Mat features;
    std::vector<MabTrace> mab1, mab2;
    layers::NormCache out_norm;
    layers::AttnCache out_attn;
    bool out_replaced = false;
};

struct DecoderLayerTrace {
    layers::NormCache norm_self, norm_cross, norm_ff;
    layers::AttnCache self_attn, cross_attn;
    layers::FfCache ff;
};

struct DecoderTrace {
    std::vector<TokenId> tokens;
    layers::NormCache memory_norm;
    std::vector<DecoderLayerTrace> layers;
    layers::NormCache final_norm;
    Mat final_out; // input of the vocabulary projection
};

Mat encode_traced(const Weights& w, const SupportSet& support, layers::TapContext* ctx, EncoderTrace* trace);
void encode_backward(const Weights& w, const EncoderTrace& trace, const Mat& dlatent, Weights& g);

Mat decode_traced(const Weights& w, const Mat& latent, std::span<const TokenId> tokens, DecoderTrace* trace);
// Returns d latent.
Mat decode_backward(const Weights& w, const DecoderTrace& trace, const Mat& dlogits, Weights& g);

} // namespace srckt::detail
