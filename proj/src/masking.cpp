#include "wvsort/masking.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wvsort/error.hpp"
#include "wvsort/log.hpp"

namespace wvsort {

double SpreadDistribution::sample(std::size_t variable, std::mt19937_64& rng) const {
    const auto& pool = spreads.at(variable);
    if (pool.empty()) throw ConfigError("spread distribution for `" + std::string(kVariableNames[variable]) + "` is empty");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)];
}

SpreadDistribution estimate_spreads(const std::vector<PdwStream>& trains, const EmbedConfig& config) {
    SpreadDistribution out;
    for (std::size_t n = 0; n < kNumVariables; ++n) out.affine_scale[n] = config.variables[n].a;
    for (std::size_t t = 0; t < trains.size(); ++t) {
        const auto& train = trains[t];
        if (train.empty()) continue;
        for (const auto& rec : train) {
            if (rec.label != train.front().label) {
                throw PreconditionError("estimate_spreads: train " + std::to_string(t) + " mixes labels");
            }
        }
        for (std::size_t n = 0; n < kNumVariables; ++n) {
            const auto [lo, hi] = std::minmax_element(train.begin(), train.end(), [n](const PdwRecord& a, const PdwRecord& b) {
                return a.feature(n) < b.feature(n);
            });
            out.spreads[n].push_back(config.variables[n].a * (hi->feature(n) - lo->feature(n)));
        }
    }
    if (out.spreads[0].empty()) throw PreconditionError("estimate_spreads: no non-empty single-class trains");
    return out;
}

void spreads_to_config(const SpreadDistribution& spreads, KeyValueConfig& cfg) {
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        const std::string key = "spreads." + std::string(kVariableNames[n]);
        std::string text;
        for (std::size_t i = 0; i < spreads.spreads[n].size(); ++i) {
            if (i) text += ", ";
            text += format_double(spreads.spreads[n][i]);
        }
        cfg.set(key, text);
        cfg.set(key + ".a", spreads.affine_scale[n]);
    }
}

SpreadDistribution spreads_from_config(const KeyValueConfig& cfg) {
    SpreadDistribution out;
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        const std::string key = "spreads." + std::string(kVariableNames[n]);
        out.spreads[n] = cfg.get_doubles(key);
        if (out.spreads[n].empty()) throw ConfigError("missing or empty config key `" + key + "`");
        out.affine_scale[n] = cfg.require_double(key + ".a");
    }
    return out;
}

std::size_t d_low(double m, const VariableEmbedding& var) {
    if (!(m > 0.0)) {
        log::warn("d_low: non-positive spread (constant feature); masking every dimension");
        return 0;
    }
    const double delta = static_cast<double>(var.delta);
    const double raw = delta * std::log(m) / std::log(static_cast<double>(var.k));
    if (raw <= 0.0) return 0;
    if (raw >= static_cast<double>(var.dim)) return var.dim;
    // The quotient of logs can land just below an exact integer (log(1000)/log(10)),
    // so settle the floor with the equivalent power comparison m^delta >= k^n.
    auto n = static_cast<std::int64_t>(std::floor(raw + 1e-9));
    const long double lhs = std::pow(static_cast<long double>(m), static_cast<long double>(delta));
    while (n > 0 && lhs < std::pow(static_cast<long double>(var.k), static_cast<long double>(n)) * (1.0L - 1e-12L)) --n;
    return static_cast<std::size_t>(std::clamp<std::int64_t>(n, 0, static_cast<std::int64_t>(var.dim)));
}

std::string_view to_string(MaskFill fill) { return fill == MaskFill::uniform_pm1 ? "uniform_pm1" : "uniform01"; }

MaskFill mask_fill_from_string(std::string_view name) {
    if (name == "uniform01") return MaskFill::uniform01;
    if (name == "uniform_pm1") return MaskFill::uniform_pm1;
    throw ConfigError("unknown mask fill `" + std::string(name) + "` (expected uniform01 or uniform_pm1)");
}

void MaskConfig::validate() const {
    if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw ConfigError("mask.prob must be in [0, 1]");
}

MaskConfig mask_config_from(const KeyValueConfig& cfg) {
    MaskConfig m;
    m.mask_prob = cfg.get_double("mask.prob", m.mask_prob);
    m.fill = mask_fill_from_string(cfg.get_string("mask.fill", std::string(to_string(m.fill))));
    m.validate();
    return m;
}

void mask_config_to(const MaskConfig& mask, KeyValueConfig& cfg) {
    cfg.set("mask.prob", mask.mask_prob);
    cfg.set("mask.fill", std::string(to_string(mask.fill)));
}

void mask_from_dimension(EmbeddedWindow& embedded, std::size_t variable, std::size_t d_star,
                         const VariableEmbedding& var, MaskFill fill, std::mt19937_64& rng) {
    if (d_star > var.dim) return;
    const double lo = fill == MaskFill::uniform01 ? 0.0 : -1.0;
    std::uniform_real_distribution<double> draw(lo, 1.0);
    const std::size_t first = d_star == 0 ? 0 : d_star - 1;
    for (std::size_t l = 0; l < embedded.length; ++l) {
        double* row = embedded.values.data() + embedded.offset(l, variable, 0);
        for (std::size_t d = first; d < var.dim; ++d) row[d] = draw(rng);
    }
}

EmbeddedWindow apply_mask(const EmbeddedWindow& embedded, const SpreadDistribution& spreads,
                          const EmbedConfig& config, const MaskConfig& mask, std::uint64_t seed) {
    mask.validate();
    if (embedded.dim != config.max_dim()) throw ConfigError("apply_mask: embedding width does not match EmbedConfig");
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        if (spreads.affine_scale[n] != config.variables[n].a) {
            throw ConfigError("apply_mask: spreads were measured under a different affine fit for `" +
                              std::string(kVariableNames[n]) + "`");
        }
    }
    EmbeddedWindow out = embedded;
    if (mask.mask_prob <= 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        if (unit(rng) >= mask.mask_prob) continue;
        const auto& var = config.variables[n];
        const std::size_t d_star = d_low(spreads.sample(n, rng), var);
        mask_from_dimension(out, n, d_star, var, mask.fill, rng);
    }
    return out;
}

}  // namespace wvsort
