#include "wvsort/pdw.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wvsort/error.hpp"

namespace wvsort {
namespace {

double draw_uniform(std::mt19937_64& rng, const Interval& range) {
    if (range.hi <= range.lo) return range.lo;
    return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
}

void check_interval(const Interval& r, const std::string& field, Label id) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
        throw ConfigError("emitter " + std::to_string(id) + ": " + field + " is empty or not finite");
    }
}

struct CatalogRow {
    Interval doa, pw, rf, pri, pa;
    std::size_t pulses;
};

// Parameter settings for the twelve single-emitter classes.
constexpr std::array<CatalogRow, 12> kCatalog = {{
    {{54, 61}, {8, 9}, {9591, 9619}, {37, 147}, {-102, 0}, 129720},
    {{39, 47}, {8, 10}, {9610, 9620}, {37, 148}, {-115, 0}, 120110},
    {{38, 45}, {9, 10}, {9606, 9612}, {37, 63}, {-135, 0}, 193320},
    {{44, 51}, {8, 10}, {9636, 9643}, {37, 121}, {-103, 0}, 133054},
    {{45, 52}, {9, 11}, {9592, 9625}, {37, 113}, {-117, 0}, 137488},
    {{43, 51}, {8, 10}, {9579, 9596}, {36, 111}, {-114, 0}, 143848},
    {{57, 63}, {9, 11}, {9557, 9564}, {37, 98}, {-109, 0}, 155580},
    {{58, 65}, {9, 10}, {9566, 9616}, {7, 41}, {-132, 0}, 222870},
    {{57, 64}, {9, 10}, {9558, 9613}, {16, 52}, {-120, 0}, 150702},
    {{51, 58}, {9, 10}, {9575, 9580}, {24, 44}, {-112, 0}, 120392},
    {{38, 45}, {1, 2}, {9579, 9653}, {7, 39}, {-132, 0}, 157934},
    {{49, 55}, {33, 38}, {2825, 2841}, {398, 508}, {-91, 0}, 22112},
}};

EmitterSpec from_row(const CatalogRow& row, Label id, std::size_t pulses) {
    EmitterSpec spec;
    spec.id = id;
    spec.doa_deg = row.doa;
    spec.pw_us = row.pw;
    spec.rf_mhz = row.rf;
    spec.pri_us = row.pri;
    spec.pa_dbm = row.pa;
    spec.pri_pattern = PriPattern::jittered;
    spec.pulse_count = pulses;
    return spec;
}

ScenarioConfig subset_preset(std::string name, std::initializer_list<std::size_t> radars,
                             std::size_t pulses) {
    ScenarioConfig sc;
    sc.name = std::move(name);
    Label id = 0;
    for (std::size_t radar : radars) {
        sc.emitters.push_back(from_row(kCatalog[radar - 1], id++, pulses));
    }
    return sc;
}

Interval parse_interval(const KeyValueConfig& cfg, const std::string& key) {
    const auto values = cfg.get_doubles(key);
    if (values.size() != 2) throw ConfigError("config key `" + key + "` must be `lo, hi`");
    return {values[0], values[1]};
}

std::string pattern_name(PriPattern p) {
    switch (p) {
        case PriPattern::constant: return "constant";
        case PriPattern::jittered: return "jittered";
        case PriPattern::staggered: return "staggered";
    }
    return "jittered";
}

std::string format_interval(const Interval& r) { return format_double(r.lo) + ", " + format_double(r.hi); }

}  // namespace

double PdwRecord::feature(std::size_t n) const {
    switch (static_cast<Variable>(n)) {
        case Variable::toa: return toa;
        case Variable::rf: return rf;
        case Variable::pw: return pw;
        case Variable::pa: return pa;
        case Variable::doa: return doa;
    }
    throw std::out_of_range("PDW variable index out of range");
}

void EmitterSpec::validate() const {
    check_interval(doa_deg, "doa_range", id);
    check_interval(pw_us, "pw_range", id);
    check_interval(rf_mhz, "rf_range", id);
    check_interval(pri_us, "pri_range", id);
    check_interval(pa_dbm, "pa_range", id);
    const std::string who = "emitter " + std::to_string(id) + ": ";
    if (pri_us.lo <= 0.0) throw ConfigError(who + "pri_range lower bound must be > 0");
    if (pw_us.lo <= 0.0) throw ConfigError(who + "pw_range lower bound must be > 0");
    if (doa_deg.lo < 0.0 || doa_deg.hi >= 360.0) throw ConfigError(who + "doa_range must lie in [0, 360)");
    if (pulse_count == 0) throw ConfigError(who + "pulse_count must be positive");
    if (pri_pattern == PriPattern::staggered) {
        if (stagger_levels_us.empty()) throw ConfigError(who + "stagger_levels is empty");
        for (double level : stagger_levels_us) {
            if (!pri_us.contains(level)) throw ConfigError(who + "stagger_levels outside pri_range");
        }
    }
}

void ScenarioConfig::validate() const {
    if (emitters.empty()) throw ConfigError("scenario: at least one emitter is required");
    for (std::size_t i = 0; i < emitters.size(); ++i) {
        emitters[i].validate();
        if (emitters[i].id != i) throw ConfigError("scenario: emitter ids must be 0..C-1 in order");
    }
    if (!(drop_prob >= 0.0 && drop_prob < 1.0)) throw ConfigError("scenario.drop_prob must be in [0, 1)");
    if (snr_db.empty()) throw ConfigError("scenario.snr_db must list at least one value");
    if (window_len == 0) throw ConfigError("scenario.window_len must be positive");
    if (window_stride == 0 || window_stride > window_len) {
        throw ConfigError("scenario.window_stride must be in [1, window_len]");
    }
    if (!(eval_fraction > 0.0)) throw ConfigError("scenario.eval_fraction must be positive");
    if (!(intercept_min_fraction > 0.0 && intercept_min_fraction <= 1.0)) {
        throw ConfigError("scenario.intercept_min_fraction must be in (0, 1]");
    }
}

std::vector<EmitterSpec> catalog_emitters(std::size_t count_divisor) {
    std::vector<EmitterSpec> out;
    for (std::size_t i = 0; i < kCatalog.size(); ++i) {
        const std::size_t pulses = std::max<std::size_t>(1, kCatalog[i].pulses / std::max<std::size_t>(1, count_divisor));
        out.push_back(from_row(kCatalog[i], static_cast<Label>(i), pulses));
    }
    return out;
}

ScenarioConfig scenario_preset(std::string_view name) {
    if (name == "catalog") {
        ScenarioConfig sc;
        sc.name = "catalog";
        sc.emitters = catalog_emitters();
        return sc;
    }
    if (name == "hard") return subset_preset("hard", {2, 3, 5}, 6700);
    if (name == "easy") return subset_preset("easy", {1, 4, 11}, 6700);
    throw ConfigError("unknown scenario preset `" + std::string(name) + "` (expected catalog, hard, easy)");
}

ScenarioConfig scenario_from_config(const KeyValueConfig& cfg) {
    ScenarioConfig sc;
    if (auto preset = cfg.get("scenario.preset")) {
        sc = scenario_preset(*preset);
    }
    if (cfg.contains("scenario.emitter_count")) {
        const auto count = cfg.require_int("scenario.emitter_count");
        if (count <= 0) throw ConfigError("scenario.emitter_count must be positive");
        sc.emitters.clear();
        for (std::int64_t i = 0; i < count; ++i) {
            const std::string p = "scenario.emitter." + std::to_string(i) + ".";
            EmitterSpec spec;
            spec.id = static_cast<Label>(i);
            spec.doa_deg = parse_interval(cfg, p + "doa_deg");
            spec.pw_us = parse_interval(cfg, p + "pw_us");
            spec.rf_mhz = parse_interval(cfg, p + "rf_mhz");
            spec.pri_us = parse_interval(cfg, p + "pri_us");
            spec.pa_dbm = parse_interval(cfg, p + "pa_dbm");
            const auto pattern = cfg.get_string(p + "pri_pattern", "jittered");
            if (pattern == "constant") {
                spec.pri_pattern = PriPattern::constant;
            } else if (pattern == "jittered") {
                spec.pri_pattern = PriPattern::jittered;
            } else if (pattern == "staggered") {
                spec.pri_pattern = PriPattern::staggered;
                spec.stagger_levels_us = cfg.get_doubles(p + "stagger_us");
            } else {
                throw ConfigError("config key `" + p + "pri_pattern`: unknown pattern `" + pattern + "`");
            }
            const auto pulses = cfg.require_int(p + "pulse_count");
            if (pulses <= 0) throw ConfigError("config key `" + p + "pulse_count` must be positive");
            spec.pulse_count = static_cast<std::size_t>(pulses);
            sc.emitters.push_back(std::move(spec));
        }
    }
    sc.name = cfg.get_string("scenario.name", sc.name);
    sc.drop_prob = cfg.get_double("scenario.drop_prob", sc.drop_prob);
    if (cfg.contains("scenario.snr_db")) sc.snr_db = cfg.get_doubles("scenario.snr_db");
    sc.eval_snr_db = cfg.get_double("scenario.eval_snr_db", sc.eval_snr_db);
    sc.noise.toa_us = cfg.get_double("scenario.noise.toa_us", sc.noise.toa_us);
    sc.noise.rf_mhz = cfg.get_double("scenario.noise.rf_mhz", sc.noise.rf_mhz);
    sc.noise.pw_us = cfg.get_double("scenario.noise.pw_us", sc.noise.pw_us);
    sc.noise.doa_deg = cfg.get_double("scenario.noise.doa_deg", sc.noise.doa_deg);
    const auto len = cfg.get_int("scenario.window_len", static_cast<std::int64_t>(sc.window_len));
    const auto stride = cfg.get_int("scenario.window_stride", static_cast<std::int64_t>(sc.window_stride));
    if (len <= 0 || stride <= 0) throw ConfigError("scenario.window_len and window_stride must be positive");
    sc.window_len = static_cast<std::size_t>(len);
    sc.window_stride = static_cast<std::size_t>(stride);
    sc.eval_fraction = cfg.get_double("scenario.eval_fraction", sc.eval_fraction);
    sc.intercept_min_fraction = cfg.get_double("scenario.intercept_min_fraction", sc.intercept_min_fraction);
    sc.seed = cfg.get_uint("scenario.seed", sc.seed);
    sc.validate();
    return sc;
}

void scenario_to_config(const ScenarioConfig& sc, KeyValueConfig& cfg) {
    cfg.set("scenario.name", sc.name);
    cfg.set("scenario.emitter_count", static_cast<std::int64_t>(sc.emitters.size()));
    for (std::size_t i = 0; i < sc.emitters.size(); ++i) {
        const auto& e = sc.emitters[i];
        const std::string p = "scenario.emitter." + std::to_string(i) + ".";
        cfg.set(p + "doa_deg", format_interval(e.doa_deg));
        cfg.set(p + "pw_us", format_interval(e.pw_us));
        cfg.set(p + "rf_mhz", format_interval(e.rf_mhz));
        cfg.set(p + "pri_us", format_interval(e.pri_us));
        cfg.set(p + "pa_dbm", format_interval(e.pa_dbm));
        cfg.set(p + "pri_pattern", pattern_name(e.pri_pattern));
        if (e.pri_pattern == PriPattern::staggered) {
            std::string levels;
            for (std::size_t k = 0; k < e.stagger_levels_us.size(); ++k) {
                if (k) levels += ", ";
                levels += format_double(e.stagger_levels_us[k]);
            }
            cfg.set(p + "stagger_us", levels);
        }
        cfg.set(p + "pulse_count", static_cast<std::int64_t>(e.pulse_count));
    }
    cfg.erase("scenario.preset");
    cfg.set("scenario.drop_prob", sc.drop_prob);
    std::string snrs;
    for (std::size_t k = 0; k < sc.snr_db.size(); ++k) {
        if (k) snrs += ", ";
        snrs += format_double(sc.snr_db[k]);
    }
    cfg.set("scenario.snr_db", snrs);
    cfg.set("scenario.eval_snr_db", sc.eval_snr_db);
    cfg.set("scenario.noise.toa_us", sc.noise.toa_us);
    cfg.set("scenario.noise.rf_mhz", sc.noise.rf_mhz);
    cfg.set("scenario.noise.pw_us", sc.noise.pw_us);
    cfg.set("scenario.noise.doa_deg", sc.noise.doa_deg);
    cfg.set("scenario.window_len", static_cast<std::int64_t>(sc.window_len));
    cfg.set("scenario.window_stride", static_cast<std::int64_t>(sc.window_stride));
    cfg.set("scenario.eval_fraction", sc.eval_fraction);
    cfg.set("scenario.intercept_min_fraction", sc.intercept_min_fraction);
    cfg.set("scenario.seed", std::to_string(sc.seed));
}

PdwStream generate_train(const EmitterSpec& spec, double t0, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    PdwStream train;
    train.reserve(spec.pulse_count);
    double toa = t0;
    for (std::size_t p = 0; p < spec.pulse_count; ++p) {
        PdwRecord rec;
        rec.toa = toa;
        rec.rf = draw_uniform(rng, spec.rf_mhz);
        rec.pw = draw_uniform(rng, spec.pw_us);
        rec.doa = draw_uniform(rng, spec.doa_deg);
        rec.pa = draw_uniform(rng, spec.pa_dbm);
        rec.label = spec.id;
        train.push_back(rec);

        switch (spec.pri_pattern) {
            case PriPattern::constant: toa += spec.pri_us.mid(); break;
            case PriPattern::jittered: toa += draw_uniform(rng, spec.pri_us); break;
            case PriPattern::staggered:
                toa += spec.stagger_levels_us[p % spec.stagger_levels_us.size()];
                break;
        }
    }
    return train;
}

PdwStream interleave(const std::vector<PdwStream>& trains) {
    std::size_t total = 0;
    for (std::size_t t = 0; t < trains.size(); ++t) {
        const auto& train = trains[t];
        const auto unsorted = std::is_sorted_until(
            train.begin(), train.end(), [](const PdwRecord& a, const PdwRecord& b) { return a.toa < b.toa; });
        if (unsorted != train.end()) {
            throw PreconditionError("interleave: train " + std::to_string(t) + " is not sorted by toa at index " +
                                    std::to_string(unsorted - train.begin()));
        }
        total += train.size();
    }
    PdwStream out;
    out.reserve(total);
    for (const auto& train : trains) out.insert(out.end(), train.begin(), train.end());
    std::stable_sort(out.begin(), out.end(), [](const PdwRecord& a, const PdwRecord& b) { return a.toa < b.toa; });
    return out;
}

double snr_noise_factor(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return std::pow(10.0, -snr_db / 20.0);
}

double snr_amplitude_offset(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    // Received amplitude relative to the noise-free level: -10 log10(1 + 10^(-snr/10)).
    return -10.0 * std::log10(1.0 + std::pow(10.0, -snr_db / 10.0));
}

PdwStream apply_nonideal(const PdwStream& stream, double drop_prob, double snr_db, const NoiseScales& noise,
                         std::uint64_t seed) {
    if (!(drop_prob >= 0.0 && drop_prob < 1.0)) {
        throw PreconditionError("apply_nonideal: drop_prob must be in [0, 1)");
    }
    if (std::isnan(snr_db)) throw PreconditionError("apply_nonideal: snr_db is NaN");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double factor = snr_noise_factor(snr_db);
    const double pa_offset = snr_amplitude_offset(snr_db);

    PdwStream out;
    out.reserve(stream.size());
    for (const auto& rec : stream) {
        if (unit(rng) < drop_prob) continue;
        PdwRecord r = rec;
        if (factor > 0.0) {
            r.toa = std::max(0.0, r.toa + noise.toa_us * factor * gauss(rng));
            r.rf += noise.rf_mhz * factor * gauss(rng);
            r.pw = std::max(1e-3, r.pw + noise.pw_us * factor * gauss(rng));
            const double doa = r.doa + noise.doa_deg * factor * gauss(rng);
            r.doa = doa - 360.0 * std::floor(doa / 360.0);
            if (r.doa >= 360.0) r.doa = 0.0;
            r.pa += pa_offset;
        }
        out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const PdwRecord& a, const PdwRecord& b) { return a.toa < b.toa; });
    return out;
}

PdwWindow make_window(const PdwStream& stream, std::size_t begin, std::size_t length) {
    PdwWindow w;
    w.length = length;
    w.features.resize(length * kNumVariables);
    w.labels.resize(length);
    const double origin = stream[begin].toa;
    for (std::size_t l = 0; l < length; ++l) {
        const auto& rec = stream[begin + l];
        w.at(l, 0) = rec.toa - origin;
        w.at(l, 1) = rec.rf;
        w.at(l, 2) = rec.pw;
        w.at(l, 3) = rec.pa;
        w.at(l, 4) = rec.doa;
        w.labels[l] = rec.label;
    }
    return w;
}

std::vector<PdwWindow> windowize(const PdwStream& stream, std::size_t window_len, std::size_t stride) {
    if (window_len == 0 || stride == 0) throw PreconditionError("windowize: window length and stride must be positive");
    if (stream.size() < window_len) {
        throw PreconditionError("windowize: stream has " + std::to_string(stream.size()) +
                                " pulses, fewer than the window length " + std::to_string(window_len) +
                                "; use a smaller window length");
    }
    std::vector<PdwWindow> windows;
    const std::size_t count = (stream.size() - window_len) / stride + 1;
    windows.reserve(count);
    for (std::size_t w = 0; w < count; ++w) windows.push_back(make_window(stream, w * stride, window_len));
    return windows;
}

}  // namespace wvsort
