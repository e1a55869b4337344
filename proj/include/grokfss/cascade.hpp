#pragma once

#include "grokfss/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace grokfss {

/// Threshold-diffusion cascade parameters.
struct CascadeConfig {
    double alpha = 0.3;          // fraction of a supercritical value passed to neighbours
    double quantile = 0.90;      // threshold = this quantile of |g|
    std::size_t max_steps = 20;

    /// Throws ConfigError unless 0 < alpha < 1, 0 < quantile < 1 and max_steps >= 1.
    void validate() const;
};

enum class Phase { pre, post, unknown };

std::string_view to_string(Phase p);
Phase parse_phase(std::string_view name);

/// One avalanche.
struct CascadeRecord {
    std::size_t avalanche_size = 0;  // topple events summed over steps
    std::size_t steps_taken = 0;
    std::size_t epoch = 0;           // training epoch, or trial index for synthetic fields
    std::uint64_t seed = 0;
    std::size_t n_params = 0;
    Phase phase = Phase::unknown;
    double threshold = 0.0;
};

/// q-quantile of |g|, linear interpolation at rank (N-1)q over the ascending order statistics.
double compute_threshold(std::span<const double> gradient, double q);

struct DiffusionStepResult {
    std::vector<double> field;
    std::size_t n_toppled = 0;
};

/// One synchronous toppling step. Supercritical nodes are those with |g_i| > tau and k_i >= 1,
/// determined from the incoming field; each keeps (1-alpha) g_i and hands alpha g_i / k_i to
/// every neighbour. All donations read pre-step values.
DiffusionStepResult diffusion_step(std::span<const double> field, const DiffusionGraph& graph, double tau,
                                   double alpha);

/// In-place variant; `scratch` avoids reallocation in tight loops. Returns the topple count.
std::size_t diffusion_step_inplace(std::vector<double>& field, std::vector<double>& scratch,
                                   const DiffusionGraph& graph, double tau, double alpha);

struct CascadeResult {
    std::vector<double> field;   // redistributed gradient
    CascadeRecord record;        // size, steps, threshold; epoch/seed/phase left for the caller
};

/// Threshold is computed once from `gradient` and held fixed; steps repeat until nothing topples
/// or max_steps is reached.
CascadeResult run_cascade(std::span<const double> gradient, const DiffusionGraph& graph, const CascadeConfig& config);

/// Same as run_cascade with an externally supplied threshold.
CascadeResult run_cascade_with_threshold(std::span<const double> gradient, const DiffusionGraph& graph, double tau,
                                         const CascadeConfig& config);

} // namespace grokfss
