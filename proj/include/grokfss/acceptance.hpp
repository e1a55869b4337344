#pragma once

#include "grokfss/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

// Exit criteria shared by the `report` subcommand and the acceptance test binary.
// Store-backed checks take the analysis summary (nullptr when it is missing) and report
// `unevaluable` instead of guessing.
namespace grokfss::acceptance {

enum class Verdict { pass, fail, unevaluable };

std::string_view to_string(Verdict v);

struct Criterion {
    int id = 0;
    std::string title;
    Verdict verdict = Verdict::unevaluable;
    std::string detail;  // measured values against thresholds
};

std::string format_line(const Criterion& c);

Criterion cascade_oracle(const Tolerances& tol);
Criterion conservation(const Tolerances& tol, std::uint64_t seed);
Criterion gradient_check(const Tolerances& tol, std::uint64_t seed);
Criterion planted_exponents(const Tolerances& tol, std::uint64_t seed);
Criterion synthetic_control(const nlohmann::json* summary, const Tolerances& tol);
Criterion topology_invariance(const nlohmann::json* summary, const Tolerances& tol);
Criterion aggregate_fss(const nlohmann::json* summary, const Tolerances& tol);
Criterion phase_separation(const nlohmann::json* summary, const Tolerances& tol);
Criterion leave_one_out_stability(const nlohmann::json* summary, const Tolerances& tol);
Criterion gini_transient(const nlohmann::json* summary, const Tolerances& tol);
/// Regenerates every stored run (and the synthetic records, when present) and compares CSV bytes.
Criterion determinism(const std::filesystem::path& root, const std::string& run_set);
Criterion data_collapse(const nlohmann::json* summary, const std::filesystem::path& ccdf_csv);

/// Central-difference gradient of the mean BCE, one coordinate at a time.
std::vector<double> finite_difference_gradient(const MlpModel& model, double step);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6);

} // namespace grokfss::acceptance
