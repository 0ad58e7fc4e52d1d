#pragma once

#include <vector>

#include "srckt/model/model.hpp"

// Forward/backward building blocks shared by encoder and decoder.
namespace srckt::layers {

// Replacement and recording of component outputs during a forward pass.
struct TapContext {
    const ComponentSet* taps = nullptr;
    const PatchView* patch = nullptr;
    ActivationCache* cache = nullptr;
    std::size_t patched = 0;

    // Overwrites `value` when the component is excluded and records it when
    // tapped. Returns true if overwritten.
    bool apply(std::size_t index, Mat& value);
};

Mat linear(const Mat& x, const LinearW& l);
// Returns dx; accumulates into g.
Mat linear_backward(const Mat& x, const LinearW& l, const Mat& dy, LinearW& g);

struct NormCache {
    Mat xhat;
    std::vector<double> rstd;
};
Mat layer_norm(const Mat& x, const NormW& n, NormCache* cache);
Mat layer_norm_backward(const NormCache& c, const NormW& n, const Mat& dy, NormW& g);

struct AttnCache {
    Mat q_in, kv_in;
    Mat q, k, v;
    std::vector<Mat> probs; // per head, rows x keys
    Mat concat;             // rows x d after any replacement
    std::vector<char> replaced;
};

// Multi-head attention with output projection. When `ctx` is given, head h's
// output (before concatenation) is tap point `first_component + h`.
Mat attention(const Mat& q_in, const Mat& kv_in, const AttentionW& a, int heads, bool causal, AttnCache* cache,
              TapContext* ctx = nullptr, std::size_t first_component = 0);
// Returns {d q_in, d kv_in}.
std::pair<Mat, Mat> attention_backward(const AttnCache& c, const AttentionW& a, int heads, bool causal,
                                       const Mat& dy, AttentionW& g);

struct FfCache {
    Mat x, pre, hidden;
};
Mat feed_forward(const Mat& x, const FeedForwardW& f, FfCache* cache);
Mat feed_forward_backward(const FfCache& c, const FeedForwardW& f, const Mat& dy, FeedForwardW& g);

void softmax_rows(Mat& m);

} // namespace srckt::layers
