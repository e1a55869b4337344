#pragma once

#include "grokfss/cascade.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grokfss {

enum class StatisticKind { max, mean, mean_total };

std::string_view to_string(StatisticKind k);
StatisticKind parse_statistic_kind(std::string_view name);

struct ScalePoint {
    double n = 0.0;      // system size N
    double value = 0.0;  // statistic at that size
};

/// Ordinary least squares of log10(value) on log10(N).
struct ScalingFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double std_error = 0.0;
    bool degenerate = false;  // zero variance in log10(value); exponent is 0 and r_squared is 1
    StatisticKind kind = StatisticKind::max;
    std::vector<ScalePoint> points;
};

/// Requires >= 3 points with distinct positive N and positive values; throws InvalidInput otherwise.
ScalingFit fit_power_law(std::span<const ScalePoint> points, StatisticKind kind = StatisticKind::max);

struct AggregateResult {
    std::vector<ScalePoint> points;   // ascending in N
    std::vector<std::string> warnings;
};

/// Per-scale statistic of avalanche sizes. Records are grouped by n_params.
/// Scales listed in `expected_scales` with no records, and scales whose statistic is zero,
/// are dropped with a warning.
AggregateResult aggregate_stats(std::span<const CascadeRecord> records, StatisticKind kind,
                                std::span<const std::size_t> expected_scales = {});

/// aggregate_stats followed by fit_power_law.
ScalingFit fit_records(std::span<const CascadeRecord> records, StatisticKind kind);

struct TimePoint {
    std::size_t epoch = 0;
    ScalingFit fit;
};

struct TimeSeriesResult {
    std::vector<TimePoint> series;
    std::vector<std::string> warnings;
};

/// D(t): at each epoch t, pool records with |epoch - t| <= window, take the per-scale maximum and fit.
TimeSeriesResult time_resolved_D(std::span<const CascadeRecord> records, std::span<const std::size_t> epochs,
                                 std::size_t window = 20);

struct CcdfCurve {
    std::vector<double> support;        // ascending unique sizes
    std::vector<double> probabilities;  // P(>s) at each support point
    double n_scale = 0.0;
    double total = 0.0;

    /// P(>x) for any x.
    double survival(double x) const;
    /// Support divided by N^exponent.
    std::vector<double> rescaled(double exponent) const;
};

/// Empirical complementary CDF over positive sizes. Throws InvalidInput on empty or non-positive input.
CcdfCurve ccdf(std::span<const double> sizes, double n_scale = 0.0);

/// Mean pairwise area between step CCDFs in log10 space after rescaling each support by N^exponent.
/// Each curve is 1 below its smallest size and 0 at or above its largest.
double collapse_dispersion(std::span<const CcdfCurve> curves, double exponent);

enum class ResampleUnit { records, runs };

std::string_view to_string(ResampleUnit u);
ResampleUnit parse_resample_unit(std::string_view name);

struct BootstrapConfig {
    std::size_t n_resamples = 10000;
    std::uint64_t rng_seed = 0;
    StatisticKind kind = StatisticKind::max;
    ResampleUnit unit = ResampleUnit::records;
};

struct BootstrapResult {
    std::vector<double> samples;
    double mean = 0.0;
    double std = 0.0;
    double p025 = 0.0, p16 = 0.0, p50 = 0.0, p84 = 0.0, p975 = 0.0;
    std::size_t discarded = 0;       // resamples with fewer than 3 usable scales
    std::size_t excluded_runs = 0;   // runs without a phase match (e.g. never grokked)
    std::vector<std::size_t> scales; // scales that entered the fit
};

/// Bootstrap distribution of the FSS exponent over records of one phase.
/// `phase` filters records by their tag; pass std::nullopt to use every record (synthetic control).
/// Pools are per scale; each resample draws |pool| items with replacement from each pool.
BootstrapResult bootstrap_D(std::span<const CascadeRecord> records, std::optional<Phase> phase,
                            const BootstrapConfig& config);

struct LeaveOneOut {
    double excluded_n = 0.0;
    ScalingFit fit;
};

/// One refit per excluded scale. Requires >= 4 points.
std::vector<LeaveOneOut> leave_one_out(std::span<const ScalePoint> points, StatisticKind kind = StatisticKind::max);
std::vector<LeaveOneOut> leave_one_out(std::span<const CascadeRecord> records, StatisticKind kind);

/// Type-7 sample quantile (linear interpolation at rank (n-1)q).
double sample_quantile(std::vector<double> values, double q);

double mean_of(std::span<const double> values);
/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double stddev_of(std::span<const double> values);
/// Coefficient of variation |std/mean| using the sample standard deviation.
double coefficient_of_variation(std::span<const double> values);

} // namespace grokfss
