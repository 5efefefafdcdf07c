#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "wvsort/error.hpp"
#include "wvsort/pdw.hpp"

using namespace wvsort;

namespace {

EmitterSpec simple_spec(Label id, Interval pri, PriPattern pattern, std::size_t count) {
    EmitterSpec s;
    s.id = id;
    s.doa_deg = {10, 20};
    s.pw_us = {1, 2};
    s.rf_mhz = {9000, 9100};
    s.pri_us = pri;
    s.pa_dbm = {-80, -10};
    s.pri_pattern = pattern;
    s.pulse_count = count;
    return s;
}

std::vector<double> toas(const PdwStream& s) {
    std::vector<double> out;
    for (const auto& r : s) out.push_back(r.toa);
    return out;
}

PdwStream with_toas(std::vector<double> t, Label label) {
    PdwStream s;
    for (double v : t) {
        PdwRecord r;
        r.toa = v;
        r.pw = 1.0;
        r.label = label;
        s.push_back(r);
    }
    return s;
}

}  // namespace

TEST_CASE("constant PRI uses the range midpoint") {
    const auto t = generate_train(simple_spec(0, {10, 10}, PriPattern::constant, 4), 0.0, 1);
    CHECK(toas(t) == std::vector<double>{0, 10, 20, 30});
}

TEST_CASE("staggered PRI cycles through its levels") {
    auto spec = simple_spec(0, {10, 15}, PriPattern::staggered, 5);
    spec.stagger_levels_us = {10, 15};
    const auto t = generate_train(spec, 0.0, 1);
    CHECK(toas(t) == std::vector<double>{0, 10, 25, 35, 50});
}

TEST_CASE("radar-1 preset: jittered PRI stays inside its row") {
    const auto radar1 = catalog_emitters().at(0);
    CHECK(radar1.pri_pattern == PriPattern::jittered);
    CHECK(radar1.pri_us.lo == 37);
    CHECK(radar1.pri_us.hi == 147);
    auto spec = radar1;
    spec.pulse_count = 5000;
    const auto t = generate_train(spec, 3.0, 99);
    REQUIRE(t.size() == 5000);
    CHECK(t.front().toa == 3.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double d = t[i].toa - t[i - 1].toa;
        REQUIRE(d >= 37.0 - 1e-9);
        REQUIRE(d <= 147.0 + 1e-9);
    }
}

TEST_CASE("every preset field lies inside its configured range before noise") {
    for (const auto& spec : catalog_emitters(1000)) {
        const auto t = generate_train(spec, 0.0, spec.id + 5);
        for (const auto& r : t) {
            REQUIRE(spec.rf_mhz.contains(r.rf));
            REQUIRE(spec.pw_us.contains(r.pw));
            REQUIRE(spec.doa_deg.contains(r.doa));
            REQUIRE(spec.pa_dbm.contains(r.pa));
            REQUIRE(r.label == spec.id);
        }
    }
}

TEST_CASE("table1 rows match the published parameter table") {
    const auto rows = catalog_emitters(1);
    REQUIRE(rows.size() == 12);
    // Radar 12: DOA 49-55, PW 33-38, RF 2825-2841, PRI 398-508, PA -91-0, 22112 pulses.
    CHECK(rows[11].doa_deg.lo == 49);
    CHECK(rows[11].pw_us.hi == 38);
    CHECK(rows[11].rf_mhz.lo == 2825);
    CHECK(rows[11].pri_us.hi == 508);
    CHECK(rows[11].pa_dbm.lo == -91);
    CHECK(rows[11].pulse_count == 22112);
    CHECK(rows[7].pulse_count == 222870);
}

TEST_CASE("generation is a pure function of the seed") {
    const auto spec = simple_spec(1, {5, 50}, PriPattern::jittered, 300);
    CHECK(generate_train(spec, 0.0, 42) == generate_train(spec, 0.0, 42));
    CHECK_FALSE(generate_train(spec, 0.0, 42) == generate_train(spec, 0.0, 43));
}

TEST_CASE("invalid specs name the field") {
    auto spec = simple_spec(0, {0, 10}, PriPattern::jittered, 3);
    try {
        generate_train(spec, 0.0, 1);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("pri"));
    }
    spec = simple_spec(0, {10, 20}, PriPattern::staggered, 3);
    spec.stagger_levels_us = {5};
    CHECK_THROWS_AS(generate_train(spec, 0.0, 1), ConfigError);
    spec = simple_spec(0, {10, 20}, PriPattern::jittered, 3);
    spec.rf_mhz = {5, 1};
    CHECK_THROWS_WITH(generate_train(spec, 0.0, 1), Catch::Matchers::ContainsSubstring("rf"));
}

TEST_CASE("interleave is a stable merge") {
    const auto a = with_toas({0, 10, 20, 30}, 0);
    const auto b = with_toas({0, 15, 30}, 1);
    const auto m = interleave({a, b});
    std::vector<std::pair<double, Label>> got;
    for (const auto& r : m) got.emplace_back(r.toa, r.label);
    const std::vector<std::pair<double, Label>> want = {{0, 0}, {0, 1}, {10, 0}, {15, 1}, {20, 0}, {30, 0}, {30, 1}};
    CHECK(got == want);
    CHECK(interleave({a}) == a);
    CHECK_THROWS_AS(interleave({with_toas({0, 5, 3}, 0)}), PreconditionError);
}

TEST_CASE("interleave of random trains matches a generic sort") {
    const auto a = generate_train(simple_spec(0, {5, 50}, PriPattern::jittered, 1000), 0.0, 1);
    const auto b = generate_train(simple_spec(1, {7, 60}, PriPattern::jittered, 1000), 2.0, 2);
    const auto m = interleave({a, b});
    REQUIRE(m.size() == 2000);
    PdwStream oracle = a;
    oracle.insert(oracle.end(), b.begin(), b.end());
    std::stable_sort(oracle.begin(), oracle.end(), [](auto& x, auto& y) { return x.toa < y.toa; });
    CHECK(m == oracle);
    std::map<Label, int> hist;
    for (const auto& r : m) ++hist[r.label];
    CHECK(hist[0] == 1000);
    CHECK(hist[1] == 1000);
}

TEST_CASE("apply_nonideal with no drops and no noise is the identity") {
    const auto a = generate_train(simple_spec(0, {5, 50}, PriPattern::jittered, 500), 0.0, 1);
    CHECK(apply_nonideal(a, 0.0, kNoiseDisabled, NoiseScales{}, 9) == a);
    CHECK(snr_amplitude_offset(kNoiseDisabled) == 0.0);
    CHECK(snr_noise_factor(kNoiseDisabled) == 0.0);
}

TEST_CASE("drop count stays within a 3-sigma binomial bound") {
    const auto a = generate_train(simple_spec(0, {5, 50}, PriPattern::jittered, 10000), 0.0, 1);
    const auto out = apply_nonideal(a, 0.5, kNoiseDisabled, NoiseScales{}, 77);
    CHECK(out.size() >= 5000 - 150);
    CHECK(out.size() <= 5000 + 150);
}

TEST_CASE("rf noise std scales by 100x between -20 and +20 dB") {
    auto spec = simple_spec(0, {5, 50}, PriPattern::jittered, 20000);
    spec.rf_mhz = {9000, 9000};
    const auto clean = generate_train(spec, 0.0, 3);
    NoiseScales noise;
    noise.rf_mhz = 1.0;
    auto rf_std = [&](double snr) {
        const auto out = apply_nonideal(clean, 0.0, snr, noise, 5);
        double s = 0, s2 = 0;
        for (const auto& r : out) {
            s += r.rf - 9000.0;
            s2 += (r.rf - 9000.0) * (r.rf - 9000.0);
        }
        const double n = static_cast<double>(out.size());
        return std::sqrt(s2 / n - (s / n) * (s / n));
    };
    const double ratio = rf_std(-20) / rf_std(20);
    CHECK(ratio == Catch::Approx(100.0).epsilon(0.10));
}

TEST_CASE("higher SNR yields higher amplitude and outputs stay valid") {
    CHECK(snr_amplitude_offset(20) > snr_amplitude_offset(-20));
    CHECK(snr_amplitude_offset(0) == Catch::Approx(-10.0 * std::log10(2.0)));
    const auto a = generate_train(simple_spec(0, {5, 50}, PriPattern::jittered, 3000), 0.0, 1);
    const auto out = apply_nonideal(a, 0.1, -20, NoiseScales{}, 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        REQUIRE(out[i].pw > 0.0);
        REQUIRE(out[i].doa >= 0.0);
        REQUIRE(out[i].doa < 360.0);
        REQUIRE(out[i].toa >= 0.0);
        if (i) REQUIRE(out[i - 1].toa <= out[i].toa);
    }
    CHECK(apply_nonideal(a, 0.1, -20, NoiseScales{}, 4) == out);
}

TEST_CASE("windowize counts, re-expresses toa and partitions labels") {
    PdwStream s;
    for (int i = 0; i < 256; ++i) {
        PdwRecord r;
        r.toa = 100.0 + i;
        r.pw = 1;
        r.label = static_cast<Label>(i % 3);
        s.push_back(r);
    }
    CHECK(windowize(s, 128, 64).size() == 3);
    const auto parts = windowize(s, 64, 64);
    REQUIRE(parts.size() == 4);
    std::vector<Label> joined;
    for (const auto& w : parts) {
        CHECK(w.at(0, 0) == 0.0);
        joined.insert(joined.end(), w.labels.begin(), w.labels.end());
    }
    for (std::size_t i = 0; i < joined.size(); ++i) REQUIRE(joined[i] == s[i].label);
    CHECK(parts[1].at(5, 0) == 5.0);
    CHECK_THROWS_WITH(windowize(s, 300, 10), Catch::Matchers::ContainsSubstring("smaller"));
}

TEST_CASE("scenario config round-trips through key-value form") {
    auto sc = scenario_preset("hard");
    sc.snr_db = {0, 10};
    sc.seed = 1234;
    KeyValueConfig cfg;
    scenario_to_config(sc, cfg);
    const auto back = scenario_from_config(KeyValueConfig::parse(cfg.to_string()));
    REQUIRE(back.emitters.size() == sc.emitters.size());
    CHECK(back.snr_db == sc.snr_db);
    CHECK(back.seed == 1234);
    for (std::size_t i = 0; i < sc.emitters.size(); ++i) {
        CHECK(back.emitters[i].rf_mhz.lo == sc.emitters[i].rf_mhz.lo);
        CHECK(back.emitters[i].pri_pattern == sc.emitters[i].pri_pattern);
        CHECK(back.emitters[i].stagger_levels_us == sc.emitters[i].stagger_levels_us);
        CHECK(back.emitters[i].pulse_count == sc.emitters[i].pulse_count);
    }
    CHECK_THROWS_AS(scenario_preset("nope"), ConfigError);
}
