#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "wvsort/kv_config.hpp"
#include "wvsort/pdw.hpp"

namespace wvsort {

enum class PeriodicFunction { linear_periodic, sinusoidal };

std::string_view to_string(PeriodicFunction f);
PeriodicFunction periodic_function_from_string(std::string_view name);

/// Period-1 feature map. linear_periodic: 2 * floor_mod(x, 1) - 1, in [-1, 1).
/// sinusoidal: sin(2 pi x), in [-1, 1]. Throws NumericError for non-finite x.
double f_periodic(double x, PeriodicFunction variant);

/// Wide-value embedding parameters for one PDW variable.
///
/// The D dimensions form D/delta groups; group i has period k^i in
/// transformed units and holds delta phase-shifted copies j/delta,
/// j = 1..delta. The coarsest period is m_max = k^(D/delta - 1) and the
/// maximum modulus M = k^(D/delta).
struct VariableEmbedding {
    std::size_t dim = 8;
    std::size_t delta = 2;
    std::uint64_t k = 10;
    double a = 1.0;  ///< affine scale, > 0
    double b = 0.0;  ///< affine offset

    std::size_t groups() const { return dim / delta; }
    double period(std::size_t group) const;
    double max_modulus() const { return period(groups()); }
    double m_max() const { return period(groups() - 1); }
    double transform(double raw) const { return a * raw + b; }

    /// Throws ConfigError (naming `name`) unless delta | D, k >= 2, m_max >= 100, a > 0.
    void validate(std::string_view name = "variable") const;
};

struct EmbedConfig {
    std::array<VariableEmbedding, kNumVariables> variables{};
    PeriodicFunction f_variant = PeriodicFunction::linear_periodic;

    /// Defaults: TOA D=16, the other four variables D=8; delta=2, k=10.
    static EmbedConfig defaults();

    std::size_t max_dim() const;
    void validate() const;
};

/// Reads `embed.*` keys on top of defaults(): global `embed.D`, `embed.delta`,
/// `embed.k`, `embed.f_variant`, per-variable `embed.<var>.{D,delta,k,a,b}`.
EmbedConfig embed_config_from(const KeyValueConfig& cfg);
/// Writes the full per-variable form, including fitted a/b.
void embed_config_to(const EmbedConfig& config, KeyValueConfig& cfg);

/// Per-variable affine fit over a window corpus: a = 0.9 m_max / (max - min),
/// b = -a min; a constant variable gets a = 1, b = -min.
EmbedConfig fit_affine(const std::vector<PdwWindow>& corpus, EmbedConfig skeleton);

inline constexpr double kAffineHeadroom = 0.9;

/// L x N x max_dim embedding. Variables with a smaller D are zero beyond
/// their own D. Dimension index d here is 0-based: d = delta*i + j - 1.
struct EmbeddedWindow {
    std::size_t length = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    std::size_t offset(std::size_t l, std::size_t n, std::size_t d) const {
        return (l * kNumVariables + n) * dim + d;
    }
    double at(std::size_t l, std::size_t n, std::size_t d) const { return values[offset(l, n, d)]; }
    double& at(std::size_t l, std::size_t n, std::size_t d) { return values[offset(l, n, d)]; }
    std::span<const double> token(std::size_t l) const {
        return {values.data() + l * kNumVariables * dim, kNumVariables * dim};
    }
};

/// Embeds one already-transformed value into `out` (size var.dim).
void encode_value(double x, const VariableEmbedding& var, PeriodicFunction f, std::span<double> out);

/// Applies the fitted affine transform and embeds every entry of the window.
/// Throws NumericError naming (l, n) for non-finite inputs.
EmbeddedWindow encode(const PdwWindow& window, const EmbedConfig& config);

/// Coarse-to-fine reconstruction of a transformed value from its embedding.
struct DecodeTrace {
    double value = 0.0;
    /// Recovered phase in [0, 1) of each group, read from its j = delta entry.
    std::vector<double> group_phase;
    /// Largest phase disagreement among the delta entries of any group.
    double phase_inconsistency = 0.0;
    /// Largest distance from an integer while combining residues.
    double combine_inconsistency = 0.0;
};

/// Never throws on inconsistency; reports it instead. Linear variant only.
DecodeTrace decode_lenient(std::span<const double> embedding, const VariableEmbedding& var);

/// Strict decode of one variable. Throws DecodeError if residues disagree.
double decode_value(std::span<const double> embedding, const VariableEmbedding& var);

/// Decodes one token (kNumVariables x dim entries) into transformed values.
std::array<double, kNumVariables> decode(std::span<const double> token, std::size_t dim, const EmbedConfig& config);

}  // namespace wvsort
