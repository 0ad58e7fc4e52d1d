#pragma once

#include <string>

#include "json.hpp"

namespace srckt {

// Shape of the toy set-transformer. Defaults give 13 patchable components.
struct ModelConfig {
    int enc_layers = 2;
    int heads_per_mab = 2;
    int d_model = 32;
    int inducing_points = 8;
    int dec_layers = 2;
    int dec_heads = 2;
    int ff_hidden = 64;
    int max_seq_len = 16;
    int vocab_size = 17;
    int n_inputs = 3; // x columns fed to the encoder, plus one y column

    // Throws ConfigError.
    void validate() const;
    int head_dim() const { return d_model / heads_per_mab; }

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

} // namespace srckt
