#include "wvsort/nn/model.hpp"

#include <cmath>

#include "wvsort/error.hpp"
#include "wvsort/nn/ops.hpp"

namespace wvsort::nn {
namespace {

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(shape_size(shape));
    for (auto& v : values) v = dist(rng);
    return Tensor::from(std::move(shape), std::move(values), true);
}

Tensor zeros_param(Shape shape) { return Tensor::zeros(std::move(shape), true); }

}  // namespace

std::string_view to_string(EmbeddingMode mode) { return mode == EmbeddingMode::lembs ? "lembs" : "wvembs"; }

EmbeddingMode embedding_mode_from_string(std::string_view name) {
    if (name == "wvembs") return EmbeddingMode::wvembs;
    if (name == "lembs") return EmbeddingMode::lembs;
    throw ConfigError("unknown embedding mode `" + std::string(name) + "` (expected wvembs or lembs)");
}

void ModelConfig::validate() const {
    if (blocks == 0) throw ConfigError("model.blocks must be positive");
    if (kernel == 0 || kernel % 2 == 0) throw ConfigError("model.kernel must be odd and positive");
    if (ffn_mult == 0) throw ConfigError("model.ffn_mult must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
    if (classes < 2) throw ConfigError("model: at least two classes are required");
    if (variables == 0 || dim() == 0) throw ConfigError("model: embedding width must be positive");
}

ModelConfig model_config_from(const KeyValueConfig& cfg, std::size_t classes, std::size_t embed_dim) {
    ModelConfig m;
    auto size = [&](const char* key, std::size_t fallback) {
        const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
        if (v <= 0) throw ConfigError(std::string("config key `") + key + "` must be positive");
        return static_cast<std::size_t>(v);
    };
    m.blocks = size("model.blocks", m.blocks);
    m.kernel = size("model.kernel", m.kernel);
    m.ffn_mult = size("model.ffn_mult", m.ffn_mult);
    m.dropout = cfg.get_double("model.dropout", m.dropout);
    m.mode = embedding_mode_from_string(cfg.get_string("model.mode", "wvembs"));
    m.embed_dim = embed_dim;
    m.lembs_dim = size("model.lembs_dim", embed_dim);
    m.classes = classes;
    m.validate();
    return m;
}

void model_config_to(const ModelConfig& m, KeyValueConfig& cfg) {
    cfg.set("model.blocks", static_cast<std::int64_t>(m.blocks));
    cfg.set("model.kernel", static_cast<std::int64_t>(m.kernel));
    cfg.set("model.ffn_mult", static_cast<std::int64_t>(m.ffn_mult));
    cfg.set("model.dropout", m.dropout);
    cfg.set("model.mode", std::string(to_string(m.mode)));
    cfg.set("model.lembs_dim", static_cast<std::int64_t>(m.lembs_dim));
    cfg.set("model.embed_dim", static_cast<std::int64_t>(m.embed_dim));
    cfg.set("model.classes", static_cast<std::int64_t>(m.classes));
}

ResidualBlock::ResidualBlock(const ModelConfig& config, std::mt19937_64& rng)
    : batch_norm_(config.batch_norm), ffn_(config.ffn) {
    const std::size_t n = config.variables, d = config.dim(), k = config.kernel;
    const std::size_t hd = config.ffn_mult * d, hn = config.ffn_mult * n;
    dw_weight = kaiming_uniform({k, n, d}, k, rng);
    dw_bias = zeros_param({n, d});
    bn_gamma = Tensor::full({n, d}, 1.0, true);
    bn_beta = zeros_param({n, d});
    bn_running_mean = Tensor::zeros({n, d});
    bn_running_var = Tensor::full({n, d}, 1.0);
    dims_w1 = kaiming_uniform({n, hd, d}, d, rng);
    dims_b1 = zeros_param({n, hd});
    dims_w2 = kaiming_uniform({n, d, hd}, hd, rng);
    dims_b2 = zeros_param({n, d});
    vars_w1 = kaiming_uniform({d, hn, n}, n, rng);
    vars_b1 = zeros_param({d, hn});
    vars_w2 = kaiming_uniform({d, n, hn}, hn, rng);
    vars_b2 = zeros_param({d, n});
}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 4 || x.dim(2) != dw_bias.dim(0) || x.dim(3) != dw_bias.dim(1)) {
        throw ShapeError("residual block: input " + shape_string(x.shape()) + " does not match [B, L, " +
                         std::to_string(dw_bias.dim(0)) + ", " + std::to_string(dw_bias.dim(1)) + "]");
    }
    Tensor h = depthwise_conv_time(x, dw_weight, dw_bias);
    if (batch_norm_) h = batch_norm(h, bn_gamma, bn_beta, bn_running_mean, bn_running_var, mode == Mode::train);
    if (ffn_) {
        h = grouped_linear(gelu(grouped_linear(h, dims_w1, dims_b1)), dims_w2, dims_b2);
        Tensor t = transpose_last2(h);
        t = grouped_linear(gelu(grouped_linear(t, vars_w1, vars_b1)), vars_w2, vars_b2);
        h = transpose_last2(t);
    }
    return add(x, h);
}

void ResidualBlock::collect(const std::string& prefix, std::vector<NamedTensor>& params,
                            std::vector<NamedTensor>& buffers) const {
    params.emplace_back(prefix + "dw.weight", dw_weight);
    params.emplace_back(prefix + "dw.bias", dw_bias);
    params.emplace_back(prefix + "bn.gamma", bn_gamma);
    params.emplace_back(prefix + "bn.beta", bn_beta);
    params.emplace_back(prefix + "ffn_dims.w1", dims_w1);
    params.emplace_back(prefix + "ffn_dims.b1", dims_b1);
    params.emplace_back(prefix + "ffn_dims.w2", dims_w2);
    params.emplace_back(prefix + "ffn_dims.b2", dims_b2);
    params.emplace_back(prefix + "ffn_vars.w1", vars_w1);
    params.emplace_back(prefix + "ffn_vars.b1", vars_b1);
    params.emplace_back(prefix + "ffn_vars.w2", vars_w2);
    params.emplace_back(prefix + "ffn_vars.b2", vars_b2);
    buffers.emplace_back(prefix + "bn.running_mean", bn_running_mean);
    buffers.emplace_back(prefix + "bn.running_var", bn_running_var);
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t n = config_.variables, d = config_.dim();
    if (config_.mode == EmbeddingMode::lembs) {
        lembs_weight = kaiming_uniform({n, d}, 1, rng);
        lembs_bias = zeros_param({n, d});
    }
    for (std::size_t b = 0; b < config_.blocks; ++b) blocks.emplace_back(config_, rng);
    head_weight = kaiming_uniform({config_.classes, n * d}, n * d, rng);
    head_bias = zeros_param({config_.classes});
}

Tensor Model::embed(const Tensor& raw) const {
    if (config_.mode != EmbeddingMode::lembs) throw ConfigError("embed(): model is not in lembs mode");
    if (raw.rank() != 3 || raw.dim(2) != config_.variables) {
        throw ShapeError("lembs input must be [B, L, N], got " + shape_string(raw.shape()));
    }
    Tensor z = Tensor::from(raw.shape(), standardize_windows(raw.data(), raw.dim(0), raw.dim(1), raw.dim(2)));
    return lembs(z, lembs_weight, lembs_bias);
}

Tensor Model::backbone(const Tensor& embedded, Mode mode) {
    Tensor x = embedded;
    for (auto& block : blocks) x = block.forward(x, mode);
    return x;
}

Tensor Model::head(const Tensor& z, Mode mode, std::mt19937_64* dropout_rng) const {
    if (z.rank() != 4) throw ShapeError("head: expected [B, L, N, D], got " + shape_string(z.shape()));
    Tensor flat = reshape(z, {z.dim(0) * z.dim(1), z.dim(2) * z.dim(3)});
    if (mode == Mode::train && config_.dropout > 0.0) {
        if (!dropout_rng) throw PreconditionError("head: training mode needs a dropout RNG");
        flat = dropout(flat, config_.dropout, *dropout_rng);
    }
    return linear(flat, head_weight, head_bias);
}

Tensor Model::logits(const Tensor& input, Mode mode, std::mt19937_64* dropout_rng) {
    const Tensor embedded = config_.mode == EmbeddingMode::lembs ? embed(input) : input;
    if (embedded.rank() != 4 || embedded.dim(2) != config_.variables || embedded.dim(3) != config_.dim()) {
        throw ShapeError("model input " + shape_string(embedded.shape()) + " does not match [B, L, " +
                         std::to_string(config_.variables) + ", " + std::to_string(config_.dim()) + "]");
    }
    return head(backbone(embedded, mode), mode, dropout_rng);
}

Tensor Model::probabilities(const Tensor& input) { return softmax(logits(input, Mode::eval, nullptr)); }

std::vector<NamedTensor> Model::parameters() const {
    std::vector<NamedTensor> params, buffers;
    if (config_.mode == EmbeddingMode::lembs) {
        params.emplace_back("lembs.weight", lembs_weight);
        params.emplace_back("lembs.bias", lembs_bias);
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        blocks[b].collect("blocks." + std::to_string(b) + ".", params, buffers);
    }
    params.emplace_back("head.weight", head_weight);
    params.emplace_back("head.bias", head_bias);
    return params;
}

std::vector<NamedTensor> Model::buffers() const {
    std::vector<NamedTensor> params, buffers;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        blocks[b].collect("blocks." + std::to_string(b) + ".", params, buffers);
    }
    return buffers;
}

std::vector<NamedTensor> Model::state() const {
    auto all = parameters();
    auto bufs = buffers();
    all.insert(all.end(), bufs.begin(), bufs.end());
    return all;
}

std::vector<Tensor> Model::parameter_tensors() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : parameters()) out.push_back(t);
    return out;
}

void Model::load_state(const std::vector<NamedTensor>& source) {
    for (auto& [name, target] : state()) {
        const NamedTensor* match = nullptr;
        for (const auto& entry : source) {
            if (entry.first == name) match = &entry;
        }
        if (!match) throw ShapeError("checkpoint is missing tensor `" + name + "`");
        if (match->second.shape() != target.shape()) {
            throw ShapeError("checkpoint tensor `" + name + "` has shape " + shape_string(match->second.shape()) +
                             ", model expects " + shape_string(target.shape()));
        }
        auto dst = target.data();
        const auto src = match->second.data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

}  // namespace wvsort::nn
