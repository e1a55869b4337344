#include "grokfss/synth.hpp"

#include "grokfss/errors.hpp"
#include "grokfss/seeding.hpp"

#include <random>

namespace grokfss {

void SynthConfig::validate() const
{
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (n_trials == 0 || n_seeds == 0) throw ConfigError("trial and seed counts must be positive");
    if (topologies.empty()) throw ConfigError("no topologies configured");
    if (scales.size() < 3) throw ConfigError("synthetic campaign needs at least 3 scales");
}

std::vector<CascadeRecord> SynthCampaignResult::all_records() const
{
    std::vector<CascadeRecord> out;
    for (const auto& t : records) out.insert(out.end(), t.records.begin(), t.records.end());
    return out;
}

std::vector<double> synthetic_field(std::size_t n, std::size_t seed_index, std::size_t trial, double sigma,
                                    std::uint64_t master_seed)
{
    std::mt19937_64 rng(derive_seed(master_seed, n, (seed_index << 32) | trial, "synth-field"));
    std::normal_distribution<double> normal(0.0, sigma);
    std::vector<double> g(n);
    for (double& v : g) v = normal(rng);
    return g;
}

SynthCampaignResult run_synth_campaign(const SynthConfig& config, const CascadeConfig& cascade)
{
    config.validate();
    cascade.validate();
    SynthCampaignResult out;
    for (std::size_t n : config.scales)
        if (static_cast<double>(n) * (1.0 - cascade.quantile) < 1.0)
            out.warnings.push_back("N=" + std::to_string(n) + ": quantile " + std::to_string(cascade.quantile) +
                                   " leaves fewer than one expected initial trigger");
    std::vector<double> exponents;
    for (Topology topo : config.topologies) {
        TopologyRecords tr{topo, {}};
        for (std::size_t n : config.scales) {
            std::size_t zero = 0;
            for (std::size_t s = 0; s < config.n_seeds; ++s) {
                const auto graph = generate_graph(
                    topo, n, config.graph_params,
                    derive_seed(config.master_seed, n, s, "synth-graph:" + std::string(to_string(topo))));
                for (std::size_t trial = 0; trial < config.n_trials; ++trial) {
                    const auto field = synthetic_field(n, s, trial, config.sigma, config.master_seed);
                    CascadeResult r = run_cascade(field, graph, cascade);
                    r.record.epoch = trial;
                    r.record.seed = s;
                    r.record.phase = Phase::unknown;
                    if (r.record.avalanche_size == 0) ++zero;
                    tr.records.push_back(r.record);
                }
            }
            if (zero > 0)
                out.warnings.push_back(std::string(to_string(topo)) + " N=" + std::to_string(n) + ": " +
                                       std::to_string(zero) + " cascades with no supercritical node");
        }
        const auto agg = aggregate_stats(tr.records, StatisticKind::mean_total);
        out.warnings.insert(out.warnings.end(), agg.warnings.begin(), agg.warnings.end());
        TopologyFit tf{topo, fit_power_law(agg.points, StatisticKind::mean_total)};
        exponents.push_back(tf.fit.exponent);
        out.fits.push_back(std::move(tf));
        out.records.push_back(std::move(tr));
    }
    out.d_synth = mean_of(exponents);
    out.cv = coefficient_of_variation(exponents);
    return out;
}

namespace {

template <typename Apply>
SweepResult sweep(const std::vector<double>& values, const SynthConfig& config, const CascadeConfig& base,
                  Apply apply)
{
    if (values.empty()) throw ConfigError("empty sweep");
    SweepResult out;
    std::vector<double> exponents;
    for (double v : values) {
        CascadeConfig c = base;
        apply(c, v);
        c.validate();
        auto campaign = run_synth_campaign(config, c);
        for (auto& w : campaign.warnings) out.warnings.push_back("value " + std::to_string(v) + ": " + w);
        out.entries.push_back({v, campaign.d_synth, campaign.cv, std::move(campaign.fits)});
        exponents.push_back(campaign.d_synth);
    }
    out.cv = coefficient_of_variation(exponents);
    return out;
}

} // namespace

SweepResult alpha_sweep(const std::vector<double>& alphas, const SynthConfig& config, const CascadeConfig& base)
{
    return sweep(alphas, config, base, [](CascadeConfig& c, double v) { c.alpha = v; });
}

SweepResult quantile_sweep(const std::vector<double>& quantiles, const SynthConfig& config, const CascadeConfig& base)
{
    return sweep(quantiles, config, base, [](CascadeConfig& c, double v) { c.quantile = v; });
}

} // namespace grokfss
