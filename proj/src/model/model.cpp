#include "srckt/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

std::vector<double> log_softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double x : logits) s += std::exp(x - mx);
    const double lse = mx + std::log(s);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        s += out[i];
    }
    for (double& x : out) x /= s;
    return out;
}

Mat decode_all(const Weights& w, const Mat& latent, std::span<const TokenId> tokens) {
    return detail::decode_traced(w, latent, tokens, nullptr);
}

std::vector<double> decode_step(const Weights& w, const Mat& latent, std::span<const TokenId> prefix) {
    if (prefix.empty() || prefix.front() != tok::Start) fail(ErrorCode::MalformedPrefix, "prefix must start with <S>");
    const Mat logits = decode_all(w, latent, prefix);
    const double* last = logits.row(logits.rows - 1);
    return {last, last + logits.cols};
}

namespace {

void check_gold(const ModelConfig& c, std::span<const TokenId> gold) {
    if (gold.size() < 2 || gold.front() != tok::Start || gold.back() != tok::End) {
        fail(ErrorCode::MalformedPrefix, "gold sequence must be bracketed by <S> and <F>");
    }
    if (gold.size() - 1 > static_cast<std::size_t>(c.max_seq_len)) {
        fail(ErrorCode::SeqTooLong, "gold sequence of " + std::to_string(gold.size()) + " tokens too long");
    }
}

struct SampleGrad {
    Weights grad;
    double loss = 0.0;
    double correct = 0.0;
};

SampleGrad sample_gradient(const Weights& w, const TrainingExample& ex, const PatchView* patch) {
    check_gold(w.config, ex.gold);
    SampleGrad out{Weights::zeros(w.config), 0.0, 0.0};
    layers::TapContext ctx;
    ctx.patch = patch;
    detail::EncoderTrace et;
    const Mat latent = detail::encode_traced(w, ex.support, patch ? &ctx : nullptr, &et);

    const std::span<const TokenId> input(ex.gold.data(), ex.gold.size() - 1);
    detail::DecoderTrace dt;
    const Mat logits = detail::decode_traced(w, latent, input, &dt);
    const auto steps = static_cast<double>(input.size());
    Mat dlogits(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const auto target = static_cast<std::size_t>(ex.gold[i + 1]);
        const auto p = softmax(logits.row_span(i));
        out.loss -= std::log(std::max(p[target], 1e-300));
        const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        out.correct += best == target ? 1.0 : 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) dlogits(i, j) = (p[j] - (j == target ? 1.0 : 0.0)) / steps;
    }
    out.loss /= steps;
    out.correct /= steps;
    const Mat dlatent = detail::decode_backward(w, dt, dlogits, out.grad);
    detail::encode_backward(w, et, dlatent, out.grad);
    return out;
}

} // namespace

double forward_nll(const Weights& w, const SupportSet& support, std::span<const TokenId> gold,
                   const PatchView* patch) {
    check_gold(w.config, gold);
    const EncodeResult enc = encode(w, support, nullptr, patch);
    const Mat logits = decode_all(w, enc.latent, gold.first(gold.size() - 1));
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        loss -= log_softmax(logits.row_span(i))[static_cast<std::size_t>(gold[i + 1])];
    }
    return loss / static_cast<double>(logits.rows);
}

Gradient grad_nll(const Weights& w, std::span<const TrainingExample> batch, const PatchView* patch) {
    if (batch.empty()) fail(ErrorCode::EmptyDataset, "empty batch");
    std::vector<SampleGrad> parts(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { parts[i] = sample_gradient(w, batch[i], patch); });

    Gradient g{Weights::zeros(w.config), 0.0, 0.0};
    const double inv = 1.0 / static_cast<double>(batch.size());
    // Fixed reduction order keeps the result independent of the worker count.
    for (auto& part : parts) {
        std::vector<Mat*> dst;
        g.grad.visit([&](const std::string&, Mat& m) { dst.push_back(&m); });
        std::size_t k = 0;
        part.grad.visit([&](const std::string&, const Mat& m) { add_scaled(*dst[k++], inv, m); });
        g.loss += part.loss * inv;
        g.accuracy += part.correct * inv;
        part.grad = Weights{};
    }
    return g;
}

} // namespace srckt
