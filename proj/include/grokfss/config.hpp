#pragma once

#include "grokfss/cascade.hpp"
#include "grokfss/fss.hpp"
#include "grokfss/graph.hpp"
#include "grokfss/mlp.hpp"
#include "grokfss/synth.hpp"
#include "grokfss/training.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace grokfss {

/// Acceptance thresholds. Defaults are the shipped exit criteria; any of them can be overridden
/// from the config file and the report echoes the values it used.
struct Tolerances {
    double cascade_oracle = 1e-10;
    double conservation = 1e-9;
    std::size_t conservation_trials = 10000;
    double gradient_rel_error = 1e-4;
    double planted_exponent = 0.05;
    double d_synth_min = 0.95;
    double d_synth_max = 1.03;
    double synth_r2_min = 0.98;
    double cv_topology_max = 0.01;
    double cv_sweep_max = 0.02;
    double d_aggregate_min = 0.9;
    double d_aggregate_max = 1.1;
    double gamma_min = 1.0;
    double gamma_max = 1.3;
    double fss_r2_min = 0.95;
    std::size_t min_grokked_scales = 6;
    double phase_separation_min = 0.10;
    double loo_max_dev = 0.1;
    std::size_t gini_min_seeds = 100;
    double gini_max_offset = 20.0;
    double gini_min_prominence = 0.10;
};

struct CampaignConfig {
    std::vector<std::size_t> hidden_sizes{20, 30, 50, 70, 100, 120, 200, 500};
    std::size_t seeds_per_scale = 6;
    std::size_t epochs = 500;
    double eta = 0.5;
    std::size_t snapshot_interval = 10;
    std::size_t grokking_window = 10;
    CascadeConfig cascade{};
    Topology topology = Topology::barabasi_albert;
    GraphParams graph_params{};
    InitScheme init_scheme = InitScheme::fan_in;
    double init_scale = 1.0;
    Activation activation = Activation::tanh;
    ProbeMode probe_mode = ProbeMode::inline_probe;
    bool trace_only = false;
    std::string output_dir = "grokfss_store";
    std::string run_set = "main";
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;

    // analysis
    std::size_t time_window = 20;
    std::size_t bootstrap_resamples = 10000;
    ResampleUnit resample_unit = ResampleUnit::records;
    std::string gini_run_set = "gini";

    // synthetic control
    double synth_sigma = 0.5;
    std::size_t synth_trials = 51;
    std::size_t synth_seeds = 6;
    std::vector<std::size_t> synth_scales = kDefaultScales;
    std::vector<Topology> synth_topologies{std::begin(kAllTopologies), std::end(kAllTopologies)};
    std::vector<double> sweep_alphas{0.1, 0.3, 0.5};
    std::vector<double> sweep_quantiles{0.80, 0.90, 0.95};

    Tolerances tolerances{};

    /// Throws ConfigError on empty lists, non-dividing snapshot interval or invalid cascade settings.
    void validate() const;

    TrainConfig train_config(std::size_t hidden, std::size_t seed_index) const;
    std::uint64_t graph_seed(std::size_t hidden, std::size_t seed_index) const;
    SynthConfig synth_config() const;
};

nlohmann::json to_json(const CampaignConfig& c);
nlohmann::json to_json(const Tolerances& t);

} // namespace grokfss
