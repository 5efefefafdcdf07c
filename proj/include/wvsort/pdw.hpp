#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "wvsort/kv_config.hpp"

namespace wvsort {

/// Number of PDW variables and their fixed order in every window matrix.
inline constexpr std::size_t kNumVariables = 5;
enum class Variable : std::size_t { toa = 0, rf = 1, pw = 2, pa = 3, doa = 4 };
inline constexpr std::array<std::string_view, kNumVariables> kVariableNames = {"toa", "rf", "pw", "pa",
                                                                               "doa"};

/// Noise-free sentinel for snr_db.
inline constexpr double kNoiseDisabled = std::numeric_limits<double>::infinity();

using Label = std::uint16_t;

/// One pulse descriptor word plus its emitter label.
struct PdwRecord {
    double toa = 0.0;  ///< microseconds
    double rf = 0.0;   ///< MHz
    double pw = 0.0;   ///< microseconds
    double pa = 0.0;   ///< dBm
    double doa = 0.0;  ///< degrees, [0, 360)
    Label label = 0;

    double feature(std::size_t n) const;
    friend bool operator==(const PdwRecord&, const PdwRecord&) = default;
};

using PdwStream = std::vector<PdwRecord>;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

enum class PriPattern { constant, jittered, staggered };

struct EmitterSpec {
    Label id = 0;
    Interval doa_deg;
    Interval pw_us;
    Interval rf_mhz;
    Interval pri_us;
    Interval pa_dbm;
    PriPattern pri_pattern = PriPattern::jittered;
    std::vector<double> stagger_levels_us;  ///< used when pri_pattern == staggered
    std::size_t pulse_count = 1;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Per-variable measurement-noise standard deviation at the 0 dB reference.
struct NoiseScales {
    double toa_us = 0.05;
    double rf_mhz = 1.0;
    double pw_us = 0.05;
    double doa_deg = 0.5;
};

struct ScenarioConfig {
    std::string name = "custom";
    std::vector<EmitterSpec> emitters;
    double drop_prob = 0.05;
    /// Training mixtures draw one SNR per mixture from this list.
    std::vector<double> snr_db = {20.0};
    /// SNR of the generated validation and test streams.
    double eval_snr_db = 10.0;
    NoiseScales noise;
    std::size_t window_len = 128;
    std::size_t window_stride = 64;
    /// Validation/test streams use round(pulse_count * eval_fraction) pulses per emitter.
    double eval_fraction = 0.25;
    /// Random interception keeps a contiguous sub-span of at least this fraction of a train.
    double intercept_min_fraction = 0.5;
    std::uint64_t seed = 1;

    std::size_t num_classes() const { return emitters.size(); }
    void validate() const;
};

/// The built-in twelve-radar catalogue, with pulse
/// counts divided by `count_divisor`.
std::vector<EmitterSpec> catalog_emitters(std::size_t count_divisor = 100);
/// Named scenario presets: "catalog", "hard" (radars 2, 3, 5: overlapping
/// DOA/RF/PRI), "easy" (radars 1, 4, 11: separable by DOA, RF or PW).
ScenarioConfig scenario_preset(std::string_view name);

/// Reads `scenario.*` keys. Either `scenario.preset` or an explicit
/// `scenario.emitter_count` with `scenario.emitter.<i>.*` rows.
ScenarioConfig scenario_from_config(const KeyValueConfig& cfg);
void scenario_to_config(const ScenarioConfig& scenario, KeyValueConfig& cfg);

/// Single-emitter pulse train starting at t0; pure function of (spec, t0, seed).
PdwStream generate_train(const EmitterSpec& spec, double t0, std::uint64_t seed);

/// Stable merge by TOA; on ties the earlier input train wins.
PdwStream interleave(const std::vector<PdwStream>& trains);

/// Random drops, SNR-scaled Gaussian measurement noise and the SNR amplitude
/// offset, then a stable re-sort by perturbed TOA.
PdwStream apply_nonideal(const PdwStream& stream, double drop_prob, double snr_db,
                         const NoiseScales& noise, std::uint64_t seed);

/// Amplitude offset in dB applied at a given SNR; 0 for the noise-free sentinel.
double snr_amplitude_offset(double snr_db);
/// Noise standard-deviation multiplier 10^(-snr/20); 0 for the noise-free sentinel.
double snr_noise_factor(double snr_db);

/// L x N window with TOA re-expressed relative to the window's first pulse.
struct PdwWindow {
    std::size_t length = 0;
    std::vector<double> features;  ///< row-major length x kNumVariables
    std::vector<Label> labels;

    double at(std::size_t l, std::size_t n) const { return features[l * kNumVariables + n]; }
    double& at(std::size_t l, std::size_t n) { return features[l * kNumVariables + n]; }
};

PdwWindow make_window(const PdwStream& stream, std::size_t begin, std::size_t length);
std::vector<PdwWindow> windowize(const PdwStream& stream, std::size_t window_len, std::size_t stride);

}  // namespace wvsort
