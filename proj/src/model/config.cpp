#include "srckt/model/config.hpp"

#include "srckt/util/error.hpp"

namespace srckt {

void ModelConfig::validate() const {
    const auto positive = [](int v, const char* name) {
        if (v < 1) fail(ErrorCode::ConfigError, std::string(name) + " must be >= 1");
    };
    positive(enc_layers, "enc_layers");
    positive(heads_per_mab, "heads_per_mab");
    positive(d_model, "d_model");
    positive(inducing_points, "inducing_points");
    positive(dec_layers, "dec_layers");
    positive(dec_heads, "dec_heads");
    positive(ff_hidden, "ff_hidden");
    positive(max_seq_len, "max_seq_len");
    positive(vocab_size, "vocab_size");
    positive(n_inputs, "n_inputs");
    if (d_model % heads_per_mab != 0) {
        fail(ErrorCode::ConfigError, "d_model " + std::to_string(d_model) + " not divisible by heads_per_mab " +
                                         std::to_string(heads_per_mab));
    }
    if (d_model % dec_heads != 0) fail(ErrorCode::ConfigError, "d_model not divisible by dec_heads");
    if (max_seq_len < 2) fail(ErrorCode::ConfigError, "max_seq_len must be >= 2");
}

nlohmann::json ModelConfig::to_json() const {
    return {{"enc_layers", enc_layers},         {"heads_per_mab", heads_per_mab}, {"d_model", d_model},
            {"inducing_points", inducing_points}, {"dec_layers", dec_layers},       {"dec_heads", dec_heads},
            {"ff_hidden", ff_hidden},           {"max_seq_len", max_seq_len},     {"vocab_size", vocab_size},
            {"n_inputs", n_inputs}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        c.enc_layers = j.value("enc_layers", c.enc_layers);
        c.heads_per_mab = j.value("heads_per_mab", c.heads_per_mab);
        c.d_model = j.value("d_model", c.d_model);
        c.inducing_points = j.value("inducing_points", c.inducing_points);
        c.dec_layers = j.value("dec_layers", c.dec_layers);
        c.dec_heads = j.value("dec_heads", c.dec_heads);
        c.ff_hidden = j.value("ff_hidden", c.ff_hidden);
        c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
        c.vocab_size = j.value("vocab_size", c.vocab_size);
        c.n_inputs = j.value("n_inputs", c.n_inputs);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

} // namespace srckt
