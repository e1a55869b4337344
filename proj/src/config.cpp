#include "grokfss/config.hpp"

#include "grokfss/errors.hpp"
#include "grokfss/seeding.hpp"

namespace grokfss {

void CampaignConfig::validate() const
{
    if (hidden_sizes.empty()) throw ConfigError("hidden_sizes is empty");
    for (std::size_t h : hidden_sizes)
        if (h == 0) throw ConfigError("hidden sizes must be positive");
    if (seeds_per_scale == 0) throw ConfigError("seeds_per_scale must be positive");
    if (snapshot_interval == 0) throw ConfigError("snapshot_interval must be positive");
    if (epochs % snapshot_interval != 0)
        throw ConfigError("snapshot_interval " + std::to_string(snapshot_interval) + " does not divide epochs " +
                          std::to_string(epochs));
    if (grokking_window == 0) throw ConfigError("grokking_window must be positive");
    if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be non-negative");
    if (workers == 0) throw ConfigError("workers must be positive");
    if (run_set.empty() || run_set.find('/') != std::string::npos) throw ConfigError("run_set must be a plain name");
    cascade.validate();
    synth_config().validate();
    if (sweep_alphas.empty() || sweep_quantiles.empty()) throw ConfigError("sweep lists are empty");
}

TrainConfig CampaignConfig::train_config(std::size_t hidden, std::size_t seed_index) const
{
    TrainConfig t;
    t.hidden_size = hidden;
    t.seed = derive_seed(master_seed, hidden, seed_index, "init");
    t.epochs = epochs;
    t.eta = eta;
    t.init_scheme = init_scheme;
    t.init_scale = init_scale;
    t.activation = activation;
    t.cascade = cascade;
    t.probe_mode = probe_mode;
    t.snapshot_interval = snapshot_interval;
    t.keep_snapshots = !trace_only;
    t.grokking_window = grokking_window;
    return t;
}

std::uint64_t CampaignConfig::graph_seed(std::size_t hidden, std::size_t seed_index) const
{
    return derive_seed(master_seed, hidden, seed_index, "graph");
}

SynthConfig CampaignConfig::synth_config() const
{
    SynthConfig s;
    s.sigma = synth_sigma;
    s.n_trials = synth_trials;
    s.topologies = synth_topologies;
    s.scales = synth_scales;
    s.n_seeds = synth_seeds;
    s.master_seed = master_seed;
    s.graph_params = graph_params;
    return s;
}

nlohmann::json to_json(const Tolerances& t)
{
    return {
        {"cascade_oracle", t.cascade_oracle},
        {"conservation", t.conservation},
        {"conservation_trials", t.conservation_trials},
        {"gradient_rel_error", t.gradient_rel_error},
        {"planted_exponent", t.planted_exponent},
        {"d_synth_min", t.d_synth_min},
        {"d_synth_max", t.d_synth_max},
        {"synth_r2_min", t.synth_r2_min},
        {"cv_topology_max", t.cv_topology_max},
        {"cv_sweep_max", t.cv_sweep_max},
        {"d_aggregate_min", t.d_aggregate_min},
        {"d_aggregate_max", t.d_aggregate_max},
        {"gamma_min", t.gamma_min},
        {"gamma_max", t.gamma_max},
        {"fss_r2_min", t.fss_r2_min},
        {"min_grokked_scales", t.min_grokked_scales},
        {"phase_separation_min", t.phase_separation_min},
        {"loo_max_dev", t.loo_max_dev},
        {"gini_min_seeds", t.gini_min_seeds},
        {"gini_max_offset", t.gini_max_offset},
        {"gini_min_prominence", t.gini_min_prominence},
    };
}

nlohmann::json to_json(const CampaignConfig& c)
{
    std::vector<std::string> topologies;
    for (Topology t : c.synth_topologies) topologies.emplace_back(to_string(t));
    return {
        {"hidden_sizes", c.hidden_sizes},
        {"seeds_per_scale", c.seeds_per_scale},
        {"epochs", c.epochs},
        {"eta", c.eta},
        {"snapshot_interval", c.snapshot_interval},
        {"grokking_window", c.grokking_window},
        {"alpha", c.cascade.alpha},
        {"quantile", c.cascade.quantile},
        {"max_steps", c.cascade.max_steps},
        {"topology", to_string(c.topology)},
        {"ba_m", c.graph_params.ba_m},
        {"er_mean_degree", c.graph_params.er_mean_degree},
        {"ws_degree", c.graph_params.ws_degree},
        {"ws_rewire", c.graph_params.ws_rewire},
        {"init_scheme", to_string(c.init_scheme)},
        {"init_scale", c.init_scale},
        {"activation", to_string(c.activation)},
        {"probe_mode", to_string(c.probe_mode)},
        {"trace_only", c.trace_only},
        {"run_set", c.run_set},
        {"master_seed", c.master_seed},
        {"time_window", c.time_window},
        {"bootstrap_resamples", c.bootstrap_resamples},
        {"resample_unit", to_string(c.resample_unit)},
        {"synth_sigma", c.synth_sigma},
        {"synth_trials", c.synth_trials},
        {"synth_seeds", c.synth_seeds},
        {"synth_scales", c.synth_scales},
        {"synth_topologies", topologies},
        {"sweep_alphas", c.sweep_alphas},
        {"sweep_quantiles", c.sweep_quantiles},
        {"tolerances", to_json(c.tolerances)},
    };
}

} // namespace grokfss
