#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "wvsort/error.hpp"
#include "wvsort/log.hpp"
#include "wvsort/masking.hpp"

using namespace wvsort;

namespace {

VariableEmbedding var8() {
    VariableEmbedding v;
    v.dim = 8;
    v.delta = 2;
    v.k = 10;
    return v;
}

EmbedConfig uniform_config() {
    EmbedConfig cfg;
    for (auto& v : cfg.variables) v = var8();
    return cfg;
}

PdwStream train_with(Label label, std::vector<double> rf) {
    PdwStream s;
    double toa = 0;
    for (double v : rf) {
        PdwRecord r;
        r.toa = toa += 10;
        r.rf = v;
        r.pw = 1.0;
        r.pa = -20;
        r.doa = 5;
        r.label = label;
        s.push_back(r);
    }
    return s;
}

EmbeddedWindow random_embedding(std::size_t length, const EmbedConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 900.0);
    PdwWindow w;
    w.length = length;
    for (std::size_t l = 0; l < length; ++l) {
        for (std::size_t n = 0; n < kNumVariables; ++n) w.features.push_back(u(rng));
        w.labels.push_back(0);
    }
    return encode(w, cfg);
}

SpreadDistribution fixed_spreads(double m, const EmbedConfig& cfg) {
    SpreadDistribution s;
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        s.spreads[n] = {m};
        s.affine_scale[n] = cfg.variables[n].a;
    }
    return s;
}

}  // namespace

TEST_CASE("d_low tabulated examples") {
    const auto v = var8();
    CHECK(d_low(100, v) == 4);
    CHECK(d_low(1, v) == 0);
    CHECK(d_low(50, v) == 3);
    CHECK(d_low(1000, v) == 6);
    CHECK(d_low(1e9, v) == 8);
    CHECK(d_low(0.5, v) == 0);
    const int saved = log::verbosity();
    log::verbosity() = 0;
    CHECK(d_low(0.0, v) == 0);
    CHECK(d_low(-3.0, v) == 0);
    log::verbosity() = saved;
}

TEST_CASE("d_low agrees with a brute-force power search") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 9.0);
    const auto v = var8();
    for (int i = 0; i < 5000; ++i) {
        const double m = std::pow(10.0, u(rng) - 0.5);
        // largest n with k^(n / delta) <= m, clamped to D
        std::size_t n = 0;
        while (n < v.dim && std::pow(10.0L, (n + 1) / 2.0L) <= m) ++n;
        REQUIRE(d_low(m, v) == n);
    }
}

TEST_CASE("estimate_spreads examples") {
    EmbedConfig cfg = uniform_config();
    const auto s = estimate_spreads({train_with(0, {9591, 9600, 9619}), train_with(1, {5, 5, 5})}, cfg);
    CHECK(s.spreads[1] == std::vector<double>{28.0, 0.0});
    CHECK(s.spreads[2] == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(estimate_spreads({}, cfg), PreconditionError);
    auto mixed = train_with(0, {1, 2});
    mixed[1].label = 1;
    CHECK_THROWS_AS(estimate_spreads({mixed}, cfg), PreconditionError);

    cfg.variables[1].a = 2.0;
    const auto scaled = estimate_spreads({train_with(0, {10, 20})}, cfg);
    CHECK(scaled.spreads[1] == std::vector<double>{20.0});
}

TEST_CASE("sampling returns only members of the multiset") {
    SpreadDistribution s;
    s.spreads[0] = {10, 20};
    std::mt19937_64 rng(1);
    int tens = 0;
    for (int i = 0; i < 1000; ++i) {
        const double v = s.sample(0, rng);
        REQUIRE((v == 10 || v == 20));
        tens += v == 10;
    }
    CHECK(tens > 400);
    CHECK(tens < 600);
    CHECK_THROWS_AS(s.sample(1, rng), ConfigError);
}

TEST_CASE("mask_prob 0 is the identity") {
    const auto cfg = uniform_config();
    const auto e = random_embedding(32, cfg, 1);
    MaskConfig m;
    m.mask_prob = 0.0;
    CHECK(apply_mask(e, fixed_spreads(100, cfg), cfg, m, 3).values == e.values);
}

TEST_CASE("forced d* = 4 keeps dims 1-3 and replaces dims 4-8") {
    const auto cfg = uniform_config();
    const auto e = random_embedding(64, cfg, 2);
    auto masked = e;
    std::mt19937_64 rng(9);
    mask_from_dimension(masked, 2, 4, cfg.variables[2], MaskFill::uniform01, rng);
    for (std::size_t l = 0; l < 64; ++l) {
        for (std::size_t n = 0; n < kNumVariables; ++n) {
            for (std::size_t d = 0; d < 8; ++d) {
                const bool replaced = n == 2 && d >= 3;
                if (!replaced) REQUIRE(masked.at(l, n, d) == e.at(l, n, d));
                if (replaced) {
                    REQUIRE(masked.at(l, n, d) != e.at(l, n, d));
                    REQUIRE(masked.at(l, n, d) >= 0.0);
                    REQUIRE(masked.at(l, n, d) < 1.0);
                }
            }
        }
    }
}

TEST_CASE("apply_mask with mask_prob 1 masks every variable from d_low up") {
    const auto cfg = uniform_config();
    const auto e = random_embedding(16, cfg, 3);
    MaskConfig m;
    m.mask_prob = 1.0;
    const auto out = apply_mask(e, fixed_spreads(100, cfg), cfg, m, 11);
    for (std::size_t l = 0; l < 16; ++l)
        for (std::size_t n = 0; n < kNumVariables; ++n) {
            for (std::size_t d = 0; d < 3; ++d) REQUIRE(out.at(l, n, d) == e.at(l, n, d));
            for (std::size_t d = 3; d < 8; ++d) REQUIRE(out.at(l, n, d) != e.at(l, n, d));
        }
    CHECK(apply_mask(e, fixed_spreads(100, cfg), cfg, m, 11).values == out.values);
    CHECK(apply_mask(e, fixed_spreads(100, cfg), cfg, m, 12).values != out.values);
}

TEST_CASE("apply_mask rejects spreads from a different affine fit") {
    auto cfg = uniform_config();
    const auto e = random_embedding(4, cfg, 3);
    const auto spreads = fixed_spreads(100, cfg);
    cfg.variables[0].a = 3.0;
    CHECK_THROWS_AS(apply_mask(e, spreads, cfg, MaskConfig{}, 1), ConfigError);
}

TEST_CASE("masked entries follow U(0,1): moments and rank test") {
    const auto cfg = uniform_config();
    std::vector<double> sample;
    std::uint64_t seed = 100;
    MaskConfig m;
    m.mask_prob = 1.0;
    while (sample.size() < 10000) {
        const auto e = random_embedding(50, cfg, seed);
        const auto out = apply_mask(e, fixed_spreads(1.0, cfg), cfg, m, seed++);
        for (double v : out.values) sample.push_back(v);
    }
    sample.resize(10000);
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / 1e4;
    double var = 0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= 1e4 - 1;
    CHECK(std::fabs(mean - 0.5) <= 0.015);
    CHECK(std::fabs(var - 1.0 / 12.0) <= 0.1 / 12.0);

    // Mann-Whitney U against fresh uniform draws, normal approximation.
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<double, int>> pooled;
    for (double v : sample) pooled.emplace_back(v, 0);
    for (int i = 0; i < 10000; ++i) pooled.emplace_back(u(rng), 1);
    std::sort(pooled.begin(), pooled.end());
    double rank_sum = 0;
    for (std::size_t i = 0; i < pooled.size(); ++i)
        if (pooled[i].second == 0) rank_sum += static_cast<double>(i + 1);
    const double n1 = 1e4, n2 = 1e4;
    const double u_stat = rank_sum - n1 * (n1 + 1) / 2;
    const double z = (u_stat - n1 * n2 / 2) / std::sqrt(n1 * n2 * (n1 + n2 + 1) / 12);
    CHECK(std::fabs(z) < 2.576);
}

TEST_CASE("uniform_pm1 fill covers [-1, 1)") {
    const auto cfg = uniform_config();
    auto e = random_embedding(200, cfg, 4);
    std::mt19937_64 rng(1);
    mask_from_dimension(e, 0, 0, cfg.variables[0], MaskFill::uniform_pm1, rng);
    double lo = 1, hi = -1, sum = 0;
    for (std::size_t l = 0; l < 200; ++l)
        for (std::size_t d = 0; d < 8; ++d) {
            lo = std::min(lo, e.at(l, 0, d));
            hi = std::max(hi, e.at(l, 0, d));
            sum += e.at(l, 0, d);
        }
    CHECK(lo < -0.9);
    CHECK(hi > 0.9);
    CHECK(std::fabs(sum / 1600) < 0.1);
}

TEST_CASE("masked embeddings fail to decode") {
    const auto v = var8();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 0.9 * v.m_max());
    int failures = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        const double x = u(rng);
        EmbeddedWindow e;
        e.length = 1;
        e.dim = 8;
        e.values.assign(kNumVariables * 8, 0.0);
        encode_value(x, v, PeriodicFunction::linear_periodic, {e.values.data(), 8});
        mask_from_dimension(e, 0, 1 + t % 6, v, MaskFill::uniform01, rng);
        try {
            const double xhat = decode_value({e.values.data(), 8}, v);
            if (std::fabs(xhat - x) > 1e-6 * v.m_max()) ++failures;
        } catch (const DecodeError&) {
            ++failures;
        }
    }
    CHECK(failures >= 0.99 * trials);
}

TEST_CASE("decode error grows monotonically with the number of masked groups") {
    const auto v = var8();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 0.9 * v.m_max());
    std::uniform_real_distribution<double> fill(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const double x = u(rng);
        std::vector<double> clean(8);
        encode_value(x, v, PeriodicFunction::linear_periodic, clean);
        std::vector<double> noise(8);
        for (auto& z : noise) z = fill(rng);
        double previous = -1.0;
        // From nothing masked to every group masked, coarsest groups first.
        for (std::size_t masked_groups = 0; masked_groups <= v.groups(); ++masked_groups) {
            auto e = clean;
            const std::size_t first = v.dim - masked_groups * v.delta;
            for (std::size_t d = first; d < v.dim; ++d) e[d] = noise[d];
            const auto trace = decode_lenient(e, v);
            double err = 0;
            for (std::size_t g = 0; g < v.groups(); ++g) {
                const double truth = static_cast<double>(oracle::frac(static_cast<long double>(x) / v.period(g)));
                err += oracle::circular_dist(trace.group_phase[g], truth);
            }
            REQUIRE(err >= previous - 1e-12);
            previous = err;
        }
    }
}

TEST_CASE("mask config parsing") {
    const auto m = mask_config_from(KeyValueConfig::parse("mask.prob = 0.25\nmask.fill = uniform_pm1\n"));
    CHECK(m.mask_prob == 0.25);
    CHECK(m.fill == MaskFill::uniform_pm1);
    CHECK_THROWS_AS(mask_config_from(KeyValueConfig::parse("mask.prob = 1.5\n")), ConfigError);
    CHECK_THROWS_AS(mask_config_from(KeyValueConfig::parse("mask.fill = gaussian\n")), ConfigError);
    const auto d = mask_config_from(KeyValueConfig{});
    CHECK(d.mask_prob == 0.5);
    CHECK(d.fill == MaskFill::uniform01);
}

TEST_CASE("spreads serialise with their affine scale") {
    const auto cfg = uniform_config();
    auto s = fixed_spreads(12.5, cfg);
    s.spreads[3] = {1, 2, 3.25};
    KeyValueConfig kv;
    spreads_to_config(s, kv);
    const auto back = spreads_from_config(KeyValueConfig::parse(kv.to_string()));
    CHECK(back.spreads[3] == s.spreads[3]);
    CHECK(back.affine_scale == s.affine_scale);
    CHECK_THROWS_AS(spreads_from_config(KeyValueConfig{}), ConfigError);
}
