#include "grokfss/cascade.hpp"

#include "grokfss/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grokfss {

void CascadeConfig::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1), got " + std::to_string(alpha));
    if (!(quantile > 0.0 && quantile < 1.0))
        throw ConfigError("quantile must lie in (0,1), got " + std::to_string(quantile));
    if (max_steps == 0) throw ConfigError("max_steps must be positive");
}

std::string_view to_string(Phase p)
{
    switch (p) {
    case Phase::pre: return "pre";
    case Phase::post: return "post";
    case Phase::unknown: return "unknown";
    }
    return "unknown";
}

Phase parse_phase(std::string_view name)
{
    if (name == "pre") return Phase::pre;
    if (name == "post") return Phase::post;
    if (name == "unknown") return Phase::unknown;
    throw InvalidInput("unknown phase '" + std::string(name) + "'");
}

double compute_threshold(std::span<const double> gradient, double q)
{
    if (gradient.empty()) throw InvalidInput("threshold of an empty gradient");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile outside [0,1]");
    std::vector<double> mag(gradient.size());
    for (std::size_t i = 0; i < gradient.size(); ++i) {
        if (!std::isfinite(gradient[i])) throw InvalidInput("non-finite gradient entry at " + std::to_string(i));
        mag[i] = std::abs(gradient[i]);
    }
    const double rank = static_cast<double>(mag.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, mag.size() - 1);
    std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(lo), mag.end());
    const double x_lo = mag[lo];
    double x_hi = x_lo;
    if (hi != lo) x_hi = *std::min_element(mag.begin() + static_cast<std::ptrdiff_t>(hi), mag.end());
    const double frac = rank - static_cast<double>(lo);
    return x_lo + frac * (x_hi - x_lo);
}

std::size_t diffusion_step_inplace(std::vector<double>& field, std::vector<double>& scratch,
                                   const DiffusionGraph& graph, double tau, double alpha)
{
    const std::size_t n = graph.n_nodes();
    if (field.size() != n)
        throw StructuralError("field length " + std::to_string(field.size()) + " != graph size " + std::to_string(n));
    scratch.assign(field.begin(), field.end());
    std::size_t toppled = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = field[i];
        if (!(std::abs(g) > tau)) continue;
        const auto& nbrs = graph.neighbors(i);
        if (nbrs.empty()) continue;
        ++toppled;
        const double give = alpha * g;
        scratch[i] -= give;
        const double share = give / static_cast<double>(nbrs.size());
        for (std::size_t j : nbrs) scratch[j] += share;
    }
    field.swap(scratch);
    return toppled;
}

DiffusionStepResult diffusion_step(std::span<const double> field, const DiffusionGraph& graph, double tau,
                                   double alpha)
{
    DiffusionStepResult r;
    r.field.assign(field.begin(), field.end());
    std::vector<double> scratch;
    r.n_toppled = diffusion_step_inplace(r.field, scratch, graph, tau, alpha);
    return r;
}

CascadeResult run_cascade_with_threshold(std::span<const double> gradient, const DiffusionGraph& graph, double tau,
                                         const CascadeConfig& config)
{
    config.validate();
    CascadeResult r;
    r.field.assign(gradient.begin(), gradient.end());
    r.record.threshold = tau;
    r.record.n_params = gradient.size();
    std::vector<double> scratch;
    while (r.record.steps_taken < config.max_steps) {
        const std::size_t toppled = diffusion_step_inplace(r.field, scratch, graph, tau, config.alpha);
        if (toppled == 0) break;
        r.record.avalanche_size += toppled;
        ++r.record.steps_taken;
    }
    return r;
}

CascadeResult run_cascade(std::span<const double> gradient, const DiffusionGraph& graph, const CascadeConfig& config)
{
    config.validate();
    if (gradient.size() != graph.n_nodes())
        throw StructuralError("gradient length " + std::to_string(gradient.size()) + " != graph size " +
                              std::to_string(graph.n_nodes()));
    return run_cascade_with_threshold(gradient, graph, compute_threshold(gradient, config.quantile), config);
}

} // namespace grokfss
