#include "srckt/model/weights.hpp"

#include <cmath>

namespace srckt {
namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

LinearW linear_zeros(std::size_t in, std::size_t out) { return {Mat(in, out), Mat(1, out)}; }
NormW norm_zeros(std::size_t d) { return {Mat(1, d), Mat(1, d)}; }
AttentionW attn_zeros(std::size_t d) {
    return {linear_zeros(d, d), linear_zeros(d, d), linear_zeros(d, d), linear_zeros(d, d)};
}
FeedForwardW ff_zeros(std::size_t d, std::size_t h) { return {linear_zeros(d, h), linear_zeros(h, d)}; }
MabW mab_zeros(std::size_t d, std::size_t h) {
    return {norm_zeros(d), norm_zeros(d), norm_zeros(d), attn_zeros(d), ff_zeros(d, h)};
}

} // namespace

Weights Weights::zeros(const ModelConfig& config) {
    config.validate();
    const auto d = static_cast<std::size_t>(config.d_model);
    const auto h = static_cast<std::size_t>(config.ff_hidden);
    const auto m = static_cast<std::size_t>(config.inducing_points);
    Weights w;
    w.config = config;
    w.input = linear_zeros(static_cast<std::size_t>(config.n_inputs) + 1, d);
    for (int l = 0; l < config.enc_layers; ++l) w.encoder.push_back({Mat(m, d), mab_zeros(d, h), mab_zeros(d, h)});
    w.output = {Mat(m, d), norm_zeros(d), attn_zeros(d)};
    w.token_embedding = Mat(static_cast<std::size_t>(config.vocab_size), d);
    w.position_embedding = Mat(static_cast<std::size_t>(config.max_seq_len), d);
    w.memory_norm = norm_zeros(d);
    for (int l = 0; l < config.dec_layers; ++l) {
        w.decoder.push_back(
            {norm_zeros(d), norm_zeros(d), norm_zeros(d), attn_zeros(d), attn_zeros(d), ff_zeros(d, h)});
    }
    w.final_norm = norm_zeros(d);
    w.vocab = linear_zeros(d, static_cast<std::size_t>(config.vocab_size));
    return w;
}

std::size_t Weights::parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Mat& m) { n += m.size(); });
    return n;
}

void Weights::snap_to_float() {
    visit([](const std::string&, Mat& m) {
        for (double& x : m.v) x = static_cast<double>(static_cast<float>(x));
    });
}

bool Weights::all_finite() const {
    bool ok = true;
    visit([&](const std::string&, const Mat& m) {
        for (double x : m.v) ok = ok && std::isfinite(x);
    });
    return ok;
}

Weights init_model(const ModelConfig& config, Rng& rng) {
    Weights w = Weights::zeros(config);
    w.visit([&](const std::string& name, Mat& m) {
        if (ends_with(name, ".gain")) {
            m.fill(1.0);
        } else if (ends_with(name, ".b") || ends_with(name, ".bias")) {
            m.fill(0.0);
        } else {
            double limit = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
            // Small output projection: a fresh model starts near uniform next-token probabilities.
            if (name == "dec.vocab.w") limit *= 0.1;
            for (double& x : m.v) x = uniform(rng, -limit, limit);
        }
    });
    w.snap_to_float();
    return w;
}

} // namespace srckt
