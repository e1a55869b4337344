#include "grokfss/errors.hpp"
#include "grokfss/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace grokfss;

namespace {

const SynthCampaignResult& default_campaign()
{
    static const SynthCampaignResult r = run_synth_campaign(SynthConfig{}, CascadeConfig{});
    return r;
}

SynthConfig small_config()
{
    SynthConfig c;
    c.scales = {81, 201, 401, 801};
    c.n_seeds = 2;
    c.n_trials = 10;
    return c;
}

} // namespace

TEST_CASE("default campaign recovers a near-linear exponent on every topology")
{
    const auto& r = default_campaign();
    REQUIRE(r.fits.size() == 5);
    CHECK(r.d_synth >= 0.95);
    CHECK(r.d_synth <= 1.03);
    double lo = 10.0, hi = -10.0;
    for (const auto& f : r.fits) {
        CHECK(f.fit.r_squared > 0.98);
        CHECK(f.fit.points.size() == 8);
        lo = std::min(lo, f.fit.exponent);
        hi = std::max(hi, f.fit.exponent);
    }
    CHECK(r.cv < 0.01);
    CHECK(hi - lo < 0.05);
    CHECK(r.warnings.empty());
}

TEST_CASE("default campaign shape: 5 topologies x 8 scales x 6 seeds x 51 trials")
{
    const auto& r = default_campaign();
    REQUIRE(r.records.size() == 5);
    for (const auto& t : r.records) {
        CHECK(t.records.size() == 8 * 6 * 51);
        for (const auto& rec : t.records) CHECK(rec.phase == Phase::unknown);
    }
    CHECK(r.all_records().size() == 5 * 8 * 6 * 51);
}

TEST_CASE("mean total cascade size grows with N in the median across seeds")
{
    for (const auto& t : default_campaign().records) {
        std::map<std::size_t, std::map<std::uint64_t, std::pair<double, double>>> sums;  // N -> seed -> (sum, count)
        for (const auto& rec : t.records) {
            auto& [sum, count] = sums[rec.n_params][rec.seed];
            sum += static_cast<double>(rec.avalanche_size);
            count += 1.0;
        }
        double previous = 0.0;
        for (const auto& [n, by_seed] : sums) {
            std::vector<double> means;
            for (const auto& [seed, sc] : by_seed) means.push_back(sc.first / sc.second);
            std::sort(means.begin(), means.end());
            const double median = 0.5 * (means[2] + means[3]);
            CHECK(median > previous);
            previous = median;
        }
    }
}

TEST_CASE("synthetic fields are reproducible per (seed, trial)")
{
    const auto a = synthetic_field(201, 3, 7, 0.5, 0);
    CHECK(a == synthetic_field(201, 3, 7, 0.5, 0));
    CHECK(a != synthetic_field(201, 3, 8, 0.5, 0));
    CHECK(a != synthetic_field(201, 4, 7, 0.5, 0));
    CHECK(a != synthetic_field(201, 3, 7, 0.5, 1));
    const auto big = synthetic_field(20000, 0, 0, 0.5, 0);
    double ss = 0.0;
    for (double v : big) ss += v * v;
    CHECK(std::sqrt(ss / 20000.0) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("campaign is deterministic")
{
    const auto a = run_synth_campaign(small_config(), {});
    const auto b = run_synth_campaign(small_config(), {});
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t t = 0; t < a.records.size(); ++t) {
        REQUIRE(a.records[t].records.size() == b.records[t].records.size());
        for (std::size_t i = 0; i < a.records[t].records.size(); ++i)
            CHECK(a.records[t].records[i].avalanche_size == b.records[t].records[i].avalanche_size);
    }
    CHECK(a.d_synth == b.d_synth);
}

TEST_CASE("one topology has zero spread")
{
    auto c = small_config();
    c.topologies = {Topology::ring};
    const auto r = run_synth_campaign(c, {});
    CHECK(r.fits.size() == 1);
    CHECK(r.cv == 0.0);
    CHECK(r.d_synth == r.fits[0].fit.exponent);
}

TEST_CASE("sweeps")
{
    const auto c = small_config();
    SUBCASE("single values are trivially consistent")
    {
        CHECK(alpha_sweep({0.3}, c, {}).cv == 0.0);
        CHECK(quantile_sweep({0.9}, c, {}).cv == 0.0);
    }
    SUBCASE("sweep entries equal stand-alone campaigns")
    {
        const auto s = alpha_sweep({0.1, 0.5}, c, {});
        REQUIRE(s.entries.size() == 2);
        CascadeConfig k;
        k.alpha = 0.5;
        CHECK(s.entries[1].exponent == run_synth_campaign(c, k).d_synth);
        CHECK(s.entries[1].value == 0.5);
    }
    SUBCASE("invalid sweep values are rejected")
    {
        CHECK_THROWS_AS(alpha_sweep({1.5}, c, {}), ConfigError);
        CHECK_THROWS_AS(quantile_sweep({0.0}, c, {}), ConfigError);
    }
}

TEST_CASE("default alpha and quantile sweeps are flat")
{
    const SynthConfig c;
    const auto a = alpha_sweep({0.1, 0.3, 0.5}, c, {});
    for (const auto& e : a.entries) CHECK(e.cv_topology < 0.02);
    const auto q = quantile_sweep({0.80, 0.90, 0.95}, c, {});
    double lo = 10.0, hi = -10.0;
    for (const auto& e : q.entries) {
        CHECK(e.cv_topology < 0.02);
        lo = std::min(lo, e.exponent);
        hi = std::max(hi, e.exponent);
    }
    CHECK(hi - lo <= 0.05);
}

TEST_CASE("extreme quantile surfaces warnings")
{
    SynthConfig c;
    c.scales = {100, 200, 400};
    c.n_seeds = 2;
    c.n_trials = 10;
    CascadeConfig k;
    k.quantile = 0.999;
    const auto r = run_synth_campaign(c, k);
    CHECK_FALSE(r.warnings.empty());
    CHECK(quantile_sweep({0.999}, c, {}).warnings.size() == r.warnings.size());
}

TEST_CASE("config validation")
{
    SynthConfig c;
    c.sigma = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.scales = {81, 201};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.n_trials = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.topologies.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
