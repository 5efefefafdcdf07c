#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "wvsort/embedding.hpp"
#include "wvsort/kv_config.hpp"
#include "wvsort/pdw.hpp"

namespace wvsort {

/// Empirical per-variable multiset of single-emitter feature spreads
/// (max - min), in affine-transformed units.
struct SpreadDistribution {
    std::array<std::vector<double>, kNumVariables> spreads;
    /// Affine scales the spreads were measured with; checked against the
    /// EmbedConfig passed to apply_mask.
    std::array<double, kNumVariables> affine_scale{};

    double sample(std::size_t variable, std::mt19937_64& rng) const;
};

/// One spread per (train, variable). Every train must carry a single label.
SpreadDistribution estimate_spreads(const std::vector<PdwStream>& single_class_trains, const EmbedConfig& config);

void spreads_to_config(const SpreadDistribution& spreads, KeyValueConfig& cfg);
SpreadDistribution spreads_from_config(const KeyValueConfig& cfg);

/// Lowest masked dimension: floor(delta * log_k m), clamped to [0, D].
/// m <= 0 is a degenerate constant feature and yields 0 with a warning.
std::size_t d_low(double m, const VariableEmbedding& var);

enum class MaskFill { uniform01, uniform_pm1 };
std::string_view to_string(MaskFill fill);
MaskFill mask_fill_from_string(std::string_view name);

struct MaskConfig {
    double mask_prob = 0.5;
    MaskFill fill = MaskFill::uniform01;

    void validate() const;
};

MaskConfig mask_config_from(const KeyValueConfig& cfg);
void mask_config_to(const MaskConfig& mask, KeyValueConfig& cfg);

/// Replaces dimensions d >= d_star (1-based) of `variable` at every time step
/// with fresh draws from `fill`. d_star == D replaces only the last dimension;
/// d_star == 0 masks everything.
void mask_from_dimension(EmbeddedWindow& embedded, std::size_t variable, std::size_t d_star,
                         const VariableEmbedding& var, MaskFill fill, std::mt19937_64& rng);

/// Independently per variable: with probability mask_prob draw m from the
/// spread distribution and mask from d_low(m) upward. Deterministic per seed.
EmbeddedWindow apply_mask(const EmbeddedWindow& embedded, const SpreadDistribution& spreads,
                          const EmbedConfig& config, const MaskConfig& mask, std::uint64_t seed);

}  // namespace wvsort
