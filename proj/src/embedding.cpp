#include "wvsort/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wvsort/error.hpp"

namespace wvsort {
namespace {

constexpr double kPhaseTolerance = 1e-6;
constexpr double kCombineTolerance = 1e-3;

double floor_mod1(double x) {
    double r = x - std::floor(x);
    // x slightly below an integer can round to exactly 1.0.
    if (r >= 1.0) r = 0.0;
    return r;
}

double circular_distance(double u, double v) {
    const double d = std::fabs(u - v);
    return std::min(d, 1.0 - d);
}

}  // namespace

std::string_view to_string(PeriodicFunction f) {
    return f == PeriodicFunction::sinusoidal ? "sinusoidal" : "linear_periodic";
}

PeriodicFunction periodic_function_from_string(std::string_view name) {
    if (name == "linear_periodic") return PeriodicFunction::linear_periodic;
    if (name == "sinusoidal") return PeriodicFunction::sinusoidal;
    throw ConfigError("unknown f_variant `" + std::string(name) + "` (expected linear_periodic or sinusoidal)");
}

double f_periodic(double x, PeriodicFunction variant) {
    if (!std::isfinite(x)) throw NumericError("f_periodic: argument is not finite");
    if (variant == PeriodicFunction::sinusoidal) return std::sin(2.0 * std::numbers::pi * x);
    return floor_mod1(x) * 2.0 - 1.0;
}

double VariableEmbedding::period(std::size_t group) const {
    double p = 1.0;
    for (std::size_t i = 0; i < group; ++i) p *= static_cast<double>(k);
    return p;
}

void VariableEmbedding::validate(std::string_view name) const {
    const std::string who = "embedding for `" + std::string(name) + "`: ";
    if (delta == 0 || dim == 0) throw ConfigError(who + "D and delta must be positive");
    if (dim % delta != 0) throw ConfigError(who + "delta must divide D");
    if (k < 2) throw ConfigError(who + "k must be an integer >= 2");
    if (!std::isfinite(max_modulus())) throw ConfigError(who + "k^(D/delta) overflows");
    if (m_max() < 100.0) throw ConfigError(who + "m_max = k^(D/delta - 1) must be >= 100");
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError(who + "affine scale a must be positive and finite");
    if (!std::isfinite(b)) throw ConfigError(who + "affine offset b must be finite");
}

EmbedConfig EmbedConfig::defaults() {
    EmbedConfig cfg;
    cfg.variables[static_cast<std::size_t>(Variable::toa)].dim = 16;
    return cfg;
}

std::size_t EmbedConfig::max_dim() const {
    std::size_t d = 0;
    for (const auto& v : variables) d = std::max(d, v.dim);
    return d;
}

void EmbedConfig::validate() const {
    for (std::size_t n = 0; n < kNumVariables; ++n) variables[n].validate(kVariableNames[n]);
}

EmbedConfig embed_config_from(const KeyValueConfig& cfg) {
    EmbedConfig out = EmbedConfig::defaults();
    auto read_size = [&](const std::string& key, std::size_t fallback) {
        const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
        if (v <= 0) throw ConfigError("config key `" + key + "` must be positive");
        return static_cast<std::size_t>(v);
    };
    if (cfg.contains("embed.D")) {
        for (auto& v : out.variables) v.dim = read_size("embed.D", v.dim);
    }
    for (auto& v : out.variables) {
        v.delta = read_size("embed.delta", v.delta);
        v.k = read_size("embed.k", v.k);
    }
    out.f_variant = periodic_function_from_string(cfg.get_string("embed.f_variant", "linear_periodic"));
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        auto& v = out.variables[n];
        const std::string p = "embed." + std::string(kVariableNames[n]) + ".";
        v.dim = read_size(p + "D", v.dim);
        v.delta = read_size(p + "delta", v.delta);
        v.k = read_size(p + "k", v.k);
        v.a = cfg.get_double(p + "a", v.a);
        v.b = cfg.get_double(p + "b", v.b);
    }
    out.validate();
    return out;
}

void embed_config_to(const EmbedConfig& config, KeyValueConfig& cfg) {
    cfg.set("embed.f_variant", std::string(to_string(config.f_variant)));
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        const auto& v = config.variables[n];
        const std::string p = "embed." + std::string(kVariableNames[n]) + ".";
        cfg.set(p + "D", static_cast<std::int64_t>(v.dim));
        cfg.set(p + "delta", static_cast<std::int64_t>(v.delta));
        cfg.set(p + "k", static_cast<std::int64_t>(v.k));
        cfg.set(p + "a", v.a);
        cfg.set(p + "b", v.b);
    }
}

EmbedConfig fit_affine(const std::vector<PdwWindow>& corpus, EmbedConfig skeleton) {
    if (corpus.empty()) throw ConfigError("fit_affine: corpus is empty");
    std::array<double, kNumVariables> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& w : corpus) {
        for (std::size_t l = 0; l < w.length; ++l) {
            for (std::size_t n = 0; n < kNumVariables; ++n) {
                lo[n] = std::min(lo[n], w.at(l, n));
                hi[n] = std::max(hi[n], w.at(l, n));
            }
        }
    }
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        auto& v = skeleton.variables[n];
        if (!std::isfinite(lo[n]) || !std::isfinite(hi[n])) throw ConfigError("fit_affine: corpus holds no finite values");
        if (hi[n] > lo[n]) {
            v.a = kAffineHeadroom * v.m_max() / (hi[n] - lo[n]);
            v.b = -v.a * lo[n];
        } else {
            v.a = 1.0;
            v.b = -lo[n];
        }
    }
    skeleton.validate();
    return skeleton;
}

void encode_value(double x, const VariableEmbedding& var, PeriodicFunction f, std::span<double> out) {
    const std::size_t groups = var.groups();
    const double delta = static_cast<double>(var.delta);
    double period = 1.0;
    for (std::size_t i = 0; i < groups; ++i) {
        const double scaled = x / period;
        for (std::size_t j = 1; j <= var.delta; ++j) {
            out[var.delta * i + j - 1] = f_periodic(scaled + static_cast<double>(j) / delta, f);
        }
        period *= static_cast<double>(var.k);
    }
}

EmbeddedWindow encode(const PdwWindow& window, const EmbedConfig& config) {
    EmbeddedWindow e;
    e.length = window.length;
    e.dim = config.max_dim();
    e.values.assign(e.length * kNumVariables * e.dim, 0.0);
    for (std::size_t l = 0; l < window.length; ++l) {
        for (std::size_t n = 0; n < kNumVariables; ++n) {
            const auto& var = config.variables[n];
            const double x = var.transform(window.at(l, n));
            if (!std::isfinite(x)) {
                throw NumericError("encode: non-finite value at (l=" + std::to_string(l) + ", n=" + std::to_string(n) +
                                   ")");
            }
            encode_value(x, var, config.f_variant, {e.values.data() + e.offset(l, n, 0), var.dim});
        }
    }
    return e;
}

DecodeTrace decode_lenient(std::span<const double> embedding, const VariableEmbedding& var) {
    const std::size_t groups = var.groups();
    const double delta = static_cast<double>(var.delta);
    DecodeTrace trace;
    trace.group_phase.resize(groups);
    for (std::size_t i = 0; i < groups; ++i) {
        const double reference = floor_mod1((embedding[var.delta * i + var.delta - 1] + 1.0) / 2.0);
        trace.group_phase[i] = reference;
        for (std::size_t j = 1; j < var.delta; ++j) {
            const double frac = (embedding[var.delta * i + j - 1] + 1.0) / 2.0;
            const double phase = floor_mod1(frac - static_cast<double>(j) / delta);
            trace.phase_inconsistency = std::max(trace.phase_inconsistency, circular_distance(phase, reference));
        }
    }
    double x = trace.group_phase[groups - 1] * var.period(groups - 1);
    for (std::size_t g = groups - 1; g-- > 0;) {
        const double period = var.period(g);
        const double residue = trace.group_phase[g] * period;
        const double q = (x - residue) / period;
        const double n = std::round(q);
        trace.combine_inconsistency = std::max(trace.combine_inconsistency, std::fabs(q - n));
        x = n * period + residue;
    }
    trace.value = x;
    return trace;
}

double decode_value(std::span<const double> embedding, const VariableEmbedding& var) {
    if (embedding.size() < var.dim) throw DecodeError("decode: embedding shorter than D");
    for (std::size_t d = 0; d < var.dim; ++d) {
        if (!(embedding[d] >= -1.0 && embedding[d] < 1.0)) {
            throw DecodeError("decode: entry " + std::to_string(d) + " outside [-1, 1)");
        }
    }
    const auto trace = decode_lenient(embedding, var);
    if (trace.phase_inconsistency > kPhaseTolerance) {
        throw DecodeError("decode: phase copies within a group disagree");
    }
    if (trace.combine_inconsistency > kCombineTolerance) {
        throw DecodeError("decode: residues of adjacent groups are inconsistent");
    }
    return trace.value;
}

std::array<double, kNumVariables> decode(std::span<const double> token, std::size_t dim, const EmbedConfig& config) {
    if (config.f_variant != PeriodicFunction::linear_periodic) {
        throw DecodeError("decode: only the linear_periodic variant is invertible");
    }
    if (token.size() != kNumVariables * dim) throw DecodeError("decode: token size does not match N x dim");
    std::array<double, kNumVariables> out{};
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        out[n] = decode_value(token.subspan(n * dim, dim), config.variables[n]);
    }
    return out;
}

}  // namespace wvsort
