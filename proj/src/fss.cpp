#include "grokfss/fss.hpp"

#include "grokfss/errors.hpp"
#include "grokfss/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace grokfss {

std::string_view to_string(StatisticKind k)
{
    switch (k) {
    case StatisticKind::max: return "max";
    case StatisticKind::mean: return "mean";
    case StatisticKind::mean_total: return "mean_total";
    }
    return "unknown";
}

StatisticKind parse_statistic_kind(std::string_view name)
{
    if (name == "max") return StatisticKind::max;
    if (name == "mean") return StatisticKind::mean;
    if (name == "mean_total") return StatisticKind::mean_total;
    throw InvalidInput("unknown statistic kind '" + std::string(name) + "'");
}

std::string_view to_string(ResampleUnit u) { return u == ResampleUnit::runs ? "runs" : "records"; }

ResampleUnit parse_resample_unit(std::string_view name)
{
    if (name == "records") return ResampleUnit::records;
    if (name == "runs") return ResampleUnit::runs;
    throw ConfigError("unknown resample unit '" + std::string(name) + "'");
}

double sample_quantile(std::vector<double> values, double q)
{
    if (values.empty()) throw InvalidInput("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double rank = static_cast<double>(values.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean_of(std::span<const double> values)
{
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev_of(std::span<const double> values)
{
    if (values.size() < 2) return 0.0;
    // Identical values: report exactly zero rather than rounding noise from the mean.
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) return 0.0;
    const double m = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double coefficient_of_variation(std::span<const double> values)
{
    const double m = mean_of(values);
    if (m == 0.0) return 0.0;
    return std::abs(stddev_of(values) / m);
}

ScalingFit fit_power_law(std::span<const ScalePoint> points, StatisticKind kind)
{
    if (points.size() < 3)
        throw InvalidInput("power-law fit needs at least 3 points, got " + std::to_string(points.size()));
    std::set<double> seen;
    for (const auto& p : points) {
        if (!(p.n > 0.0) || !(p.value > 0.0) || !std::isfinite(p.n) || !std::isfinite(p.value))
            throw InvalidInput("power-law fit needs positive finite N and values");
        if (!seen.insert(p.n).second) throw InvalidInput("duplicate scale N=" + std::to_string(p.n));
    }

    const auto n = static_cast<double>(points.size());
    std::vector<double> x, y;
    for (const auto& p : points) {
        x.push_back(std::log10(p.n));
        y.push_back(std::log10(p.value));
    }
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }

    ScalingFit fit;
    fit.kind = kind;
    fit.points.assign(points.begin(), points.end());
    const bool constant = std::all_of(points.begin(), points.end(),
                                      [&](const ScalePoint& p) { return p.value == points.front().value; });
    if (constant) {
        fit.degenerate = true;
        fit.exponent = 0.0;
        fit.intercept = y.front();
        fit.r_squared = 1.0;
        fit.std_error = 0.0;
        return fit;
    }
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    const double ssr = std::max(0.0, syy - fit.exponent * sxy);
    fit.r_squared = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
    fit.std_error = std::sqrt(ssr / (n - 2.0) / sxx);
    return fit;
}

namespace {

double statistic(std::span<const double> sizes, StatisticKind kind)
{
    if (kind == StatisticKind::max) return *std::max_element(sizes.begin(), sizes.end());
    return mean_of(sizes);
}

std::map<std::size_t, std::vector<double>> sizes_by_scale(std::span<const CascadeRecord> records)
{
    std::map<std::size_t, std::vector<double>> pools;
    for (const auto& r : records) pools[r.n_params].push_back(static_cast<double>(r.avalanche_size));
    return pools;
}

} // namespace

AggregateResult aggregate_stats(std::span<const CascadeRecord> records, StatisticKind kind,
                                std::span<const std::size_t> expected_scales)
{
    AggregateResult out;
    const auto pools = sizes_by_scale(records);
    for (std::size_t n : expected_scales)
        if (!pools.count(n)) out.warnings.push_back("scale N=" + std::to_string(n) + " has no records; excluded");
    for (const auto& [n, sizes] : pools) {
        const double v = statistic(sizes, kind);
        if (v <= 0.0) {
            out.warnings.push_back("scale N=" + std::to_string(n) + " has zero " + std::string(to_string(kind)) +
                                   " statistic; excluded");
            continue;
        }
        out.points.push_back({static_cast<double>(n), v});
    }
    return out;
}

ScalingFit fit_records(std::span<const CascadeRecord> records, StatisticKind kind)
{
    const auto agg = aggregate_stats(records, kind);
    return fit_power_law(agg.points, kind);
}

TimeSeriesResult time_resolved_D(std::span<const CascadeRecord> records, std::span<const std::size_t> epochs,
                                 std::size_t window)
{
    TimeSeriesResult out;
    for (std::size_t t : epochs) {
        std::map<std::size_t, double> best;
        for (const auto& r : records) {
            const std::size_t lo = t >= window ? t - window : 0;
            if (r.epoch < lo || r.epoch > t + window) continue;
            auto [it, inserted] = best.try_emplace(r.n_params, static_cast<double>(r.avalanche_size));
            if (!inserted) it->second = std::max(it->second, static_cast<double>(r.avalanche_size));
        }
        std::vector<ScalePoint> pts;
        for (auto [n, v] : best)
            if (v > 0.0) pts.push_back({static_cast<double>(n), v});
        if (pts.size() < 3) {
            out.warnings.push_back("epoch " + std::to_string(t) + ": only " + std::to_string(pts.size()) +
                                   " usable scales; skipped");
            continue;
        }
        out.series.push_back({t, fit_power_law(pts, StatisticKind::max)});
    }
    return out;
}

double CcdfCurve::survival(double x) const
{
    if (support.empty() || x < support.front()) return 1.0;
    // Last support point <= x.
    const auto it = std::upper_bound(support.begin(), support.end(), x);
    return probabilities[static_cast<std::size_t>(it - support.begin()) - 1];
}

std::vector<double> CcdfCurve::rescaled(double exponent) const
{
    std::vector<double> out(support);
    const double scale = n_scale > 0.0 ? std::pow(n_scale, exponent) : 1.0;
    for (double& s : out) s /= scale;
    return out;
}

CcdfCurve ccdf(std::span<const double> sizes, double n_scale)
{
    if (sizes.empty()) throw InvalidInput("ccdf of an empty sample");
    std::vector<double> sorted(sizes.begin(), sizes.end());
    for (double s : sorted)
        if (!(s > 0.0)) throw InvalidInput("ccdf sizes must be positive");
    std::sort(sorted.begin(), sorted.end());
    CcdfCurve c;
    c.n_scale = n_scale;
    c.total = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        c.support.push_back(sorted[i]);
        c.probabilities.push_back(static_cast<double>(sorted.size() - j) / c.total);
        i = j;
    }
    return c;
}

namespace {

struct LogStep {
    std::vector<double> u;  // log10 breakpoints
    std::vector<double> p;  // value on [u_k, u_{k+1})
    double at(double x) const
    {
        if (x < u.front()) return 1.0;
        const auto it = std::upper_bound(u.begin(), u.end(), x);
        return p[static_cast<std::size_t>(it - u.begin()) - 1];
    }
};

double pair_area(const LogStep& a, const LogStep& b)
{
    std::vector<double> knots(a.u);
    knots.insert(knots.end(), b.u.begin(), b.u.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        area += std::abs(a.at(knots[k]) - b.at(knots[k])) * (knots[k + 1] - knots[k]);
    return area;
}

} // namespace

double collapse_dispersion(std::span<const CcdfCurve> curves, double exponent)
{
    if (curves.size() < 2) return 0.0;
    std::vector<LogStep> steps;
    for (const auto& c : curves) {
        LogStep s;
        const double shift = c.n_scale > 0.0 ? exponent * std::log10(c.n_scale) : 0.0;
        for (double v : c.support) s.u.push_back(std::log10(v) - shift);
        s.p = c.probabilities;
        steps.push_back(std::move(s));
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < steps.size(); ++i)
        for (std::size_t j = i + 1; j < steps.size(); ++j) {
            total += pair_area(steps[i], steps[j]);
            ++pairs;
        }
    return total / static_cast<double>(pairs);
}

BootstrapResult bootstrap_D(std::span<const CascadeRecord> records, std::optional<Phase> phase,
                            const BootstrapConfig& config)
{
    if (config.n_resamples == 0) throw ConfigError("bootstrap needs at least one resample");

    // scale -> run seed -> sizes of the selected phase
    std::map<std::size_t, std::map<std::uint64_t, std::vector<double>>> runs;
    std::set<std::pair<std::size_t, std::uint64_t>> all_runs, matched_runs;
    for (const auto& r : records) {
        all_runs.insert({r.n_params, r.seed});
        if (phase && r.phase != *phase) continue;
        matched_runs.insert({r.n_params, r.seed});
        runs[r.n_params][r.seed].push_back(static_cast<double>(r.avalanche_size));
    }

    BootstrapResult out;
    out.excluded_runs = all_runs.size() - matched_runs.size();

    struct Pool {
        std::size_t n;
        std::vector<double> flat;                // all records
        std::vector<std::vector<double>> runs;   // per run
    };
    std::vector<Pool> pools;
    for (auto& [n, by_seed] : runs) {
        Pool p{n, {}, {}};
        for (auto& [seed, sizes] : by_seed) {
            p.flat.insert(p.flat.end(), sizes.begin(), sizes.end());
            p.runs.push_back(sizes);
        }
        pools.push_back(std::move(p));
        out.scales.push_back(n);
    }
    if (pools.size() < 3)
        throw InvalidInput("bootstrap needs records at >= 3 scales, have " + std::to_string(pools.size()));

    out.samples.reserve(config.n_resamples);
    std::vector<double> draw;
    std::vector<ScalePoint> pts;
    const std::size_t max_attempts = config.n_resamples * 10;
    for (std::size_t b = 0; out.samples.size() < config.n_resamples; ++b) {
        if (b >= max_attempts) throw InvalidInput("bootstrap could not assemble fits with >= 3 usable scales");
        std::mt19937_64 rng(derive_seed(config.rng_seed, b, 0, "bootstrap"));
        pts.clear();
        for (const auto& pool : pools) {
            draw.clear();
            if (config.unit == ResampleUnit::records) {
                std::uniform_int_distribution<std::size_t> pick(0, pool.flat.size() - 1);
                for (std::size_t k = 0; k < pool.flat.size(); ++k) draw.push_back(pool.flat[pick(rng)]);
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, pool.runs.size() - 1);
                for (std::size_t k = 0; k < pool.runs.size(); ++k) {
                    const auto& run = pool.runs[pick(rng)];
                    draw.insert(draw.end(), run.begin(), run.end());
                }
            }
            const double v = statistic(draw, config.kind);
            if (v > 0.0) pts.push_back({static_cast<double>(pool.n), v});
        }
        if (pts.size() < 3) {
            ++out.discarded;
            continue;
        }
        out.samples.push_back(fit_power_law(pts, config.kind).exponent);
    }

    out.mean = mean_of(out.samples);
    out.std = stddev_of(out.samples);
    out.p025 = sample_quantile(out.samples, 0.025);
    out.p16 = sample_quantile(out.samples, 0.16);
    out.p50 = sample_quantile(out.samples, 0.50);
    out.p84 = sample_quantile(out.samples, 0.84);
    out.p975 = sample_quantile(out.samples, 0.975);
    return out;
}

std::vector<LeaveOneOut> leave_one_out(std::span<const ScalePoint> points, StatisticKind kind)
{
    if (points.size() < 4)
        throw InvalidInput("leave-one-out needs at least 4 scales, got " + std::to_string(points.size()));
    std::vector<LeaveOneOut> out;
    for (std::size_t skip = 0; skip < points.size(); ++skip) {
        std::vector<ScalePoint> rest;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (i != skip) rest.push_back(points[i]);
        out.push_back({points[skip].n, fit_power_law(rest, kind)});
    }
    return out;
}

std::vector<LeaveOneOut> leave_one_out(std::span<const CascadeRecord> records, StatisticKind kind)
{
    const auto agg = aggregate_stats(records, kind);
    return leave_one_out(agg.points, kind);
}

} // namespace grokfss
