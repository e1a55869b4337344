#pragma once

#include "grokfss/cascade.hpp"
#include "grokfss/fss.hpp"
#include "grokfss/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace grokfss {

inline const std::vector<std::size_t> kDefaultScales{81, 121, 201, 281, 401, 481, 801, 2001};

/// i.i.d. Gaussian control campaign.
struct SynthConfig {
    double sigma = 0.5;
    std::size_t n_trials = 51;
    std::vector<Topology> topologies{std::begin(kAllTopologies), std::end(kAllTopologies)};
    std::vector<std::size_t> scales = kDefaultScales;
    std::size_t n_seeds = 6;
    std::uint64_t master_seed = 0;
    GraphParams graph_params{};

    void validate() const;
};

struct TopologyRecords {
    Topology topology = Topology::barabasi_albert;
    std::vector<CascadeRecord> records;  // epoch = trial index, seed = seed index
};

struct TopologyFit {
    Topology topology = Topology::barabasi_albert;
    ScalingFit fit;
};

struct SynthCampaignResult {
    std::vector<TopologyRecords> records;
    std::vector<TopologyFit> fits;   // mean total cascade size vs N, per topology
    double d_synth = 0.0;            // mean of the per-topology exponents
    double cv = 0.0;                 // coefficient of variation across topologies
    std::vector<std::string> warnings;

    std::vector<CascadeRecord> all_records() const;
};

/// Gaussian field for one (N, seed index, trial). Shared by every topology so they see identical inputs.
std::vector<double> synthetic_field(std::size_t n, std::size_t seed_index, std::size_t trial, double sigma,
                                    std::uint64_t master_seed);

SynthCampaignResult run_synth_campaign(const SynthConfig& config, const CascadeConfig& cascade);

struct SweepEntry {
    double value = 0.0;      // alpha or quantile
    double exponent = 0.0;   // D_synth at that value
    double cv_topology = 0.0;
    std::vector<TopologyFit> fits;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    double cv = 0.0;  // across sweep values
    std::vector<std::string> warnings;
};

SweepResult alpha_sweep(const std::vector<double>& alphas, const SynthConfig& config, const CascadeConfig& base);
SweepResult quantile_sweep(const std::vector<double>& quantiles, const SynthConfig& config, const CascadeConfig& base);

} // namespace grokfss
