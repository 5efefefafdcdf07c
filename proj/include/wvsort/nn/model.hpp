#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wvsort/kv_config.hpp"
#include "wvsort/nn/tensor.hpp"

namespace wvsort::nn {

enum class EmbeddingMode { wvembs, lembs };
enum class Mode { train, eval };

std::string_view to_string(EmbeddingMode mode);
EmbeddingMode embedding_mode_from_string(std::string_view name);

using NamedTensor = std::pair<std::string, Tensor>;

struct ModelConfig {
    std::size_t blocks = 3;
    std::size_t kernel = 13;
    std::size_t ffn_mult = 2;
    double dropout = 0.1;
    std::size_t classes = 2;
    std::size_t variables = 5;
    EmbeddingMode mode = EmbeddingMode::wvembs;
    /// Width D of the wide-value embedding tensor fed to the backbone.
    std::size_t embed_dim = 16;
    /// D of the learned-embedding baseline.
    std::size_t lembs_dim = 16;
    /// Stage switches; a disabled stage is the identity.
    bool batch_norm = true;
    bool ffn = true;

    std::size_t dim() const { return mode == EmbeddingMode::lembs ? lembs_dim : embed_dim; }
    void validate() const;
};

/// Reads `model.*` keys. `embed_dim` comes from the embedding config.
ModelConfig model_config_from(const KeyValueConfig& cfg, std::size_t classes, std::size_t embed_dim);
void model_config_to(const ModelConfig& config, KeyValueConfig& cfg);

/// y = x + FFN_vars(FFN_dims(BN(DWConv(x)))) on [B, L, N, D]:
///  - DWConv: depthwise along time, one kernel per (n, d) channel
///  - FFN_dims: per variable, D -> ffn_mult*D -> D with GELU
///  - FFN_vars: per dimension, N -> ffn_mult*N -> N with GELU
class ResidualBlock {
public:
    ResidualBlock(const ModelConfig& config, std::mt19937_64& rng);

    Tensor forward(const Tensor& x, Mode mode);
    void collect(const std::string& prefix, std::vector<NamedTensor>& params, std::vector<NamedTensor>& buffers) const;

    Tensor dw_weight, dw_bias;           // [K, N, D], [N, D]
    Tensor bn_gamma, bn_beta;            // [N, D]
    Tensor bn_running_mean, bn_running_var;
    Tensor dims_w1, dims_b1, dims_w2, dims_b2;  // [N, H, D], [N, H], [N, D, H], [N, D]
    Tensor vars_w1, vars_b1, vars_w2, vars_b2;  // [D, H', N], [D, H'], [D, N, H'], [D, N]

private:
    bool batch_norm_;
    bool ffn_;
};

/// Token classifier: embedding -> residual blocks -> flatten -> dropout ->
/// linear probe -> softmax. WV mode takes pre-embedded [B, L, N, D] input;
/// LEmbs mode takes raw [B, L, N] windows and standardises them internally.
class Model {
public:
    Model(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }

    /// LEmbs embedding of raw windows; [B, L, N] -> [B, L, N, D].
    Tensor embed(const Tensor& raw) const;
    Tensor backbone(const Tensor& embedded, Mode mode);
    /// [B, L, N, D] -> [B*L, C] logits. dropout_rng is required in train mode.
    Tensor head(const Tensor& z, Mode mode, std::mt19937_64* dropout_rng) const;
    Tensor logits(const Tensor& input, Mode mode, std::mt19937_64* dropout_rng);
    Tensor probabilities(const Tensor& input);

    std::vector<NamedTensor> parameters() const;
    std::vector<NamedTensor> buffers() const;
    /// Parameters followed by buffers.
    std::vector<NamedTensor> state() const;
    std::vector<Tensor> parameter_tensors() const;
    /// Copies values by name; throws ShapeError on missing names or shape mismatch.
    void load_state(const std::vector<NamedTensor>& state);

    Tensor lembs_weight, lembs_bias;  // [N, D]
    std::vector<ResidualBlock> blocks;
    Tensor head_weight, head_bias;    // [C, N*D], [C]

private:
    ModelConfig config_;
};

}  // namespace wvsort::nn
