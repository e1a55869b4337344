#pragma once

#include "grokfss/cascade.hpp"
#include "grokfss/graph.hpp"
#include "grokfss/mlp.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace grokfss {

/// inline: the redistributed gradient drives the update.
/// shadow: raw gradient drives the update, the cascade runs on a copy for measurement only.
enum class ProbeMode { inline_probe, shadow };

std::string_view to_string(ProbeMode m);
ProbeMode parse_probe_mode(std::string_view name);

struct TrainConfig {
    std::size_t hidden_size = 20;
    std::uint64_t seed = 0;            // drives initialization
    std::size_t epochs = 500;
    double eta = 0.5;
    InitScheme init_scheme = InitScheme::gaussian;
    double init_scale = 1.0;
    Activation activation = Activation::tanh;
    CascadeConfig cascade{};
    ProbeMode probe_mode = ProbeMode::inline_probe;
    std::size_t snapshot_interval = 10;
    bool keep_snapshots = true;        // false for trace-only runs
    std::size_t grokking_window = 10;
};

struct EpochRow {
    std::size_t epoch = 0;
    double accuracy = 0.0;   // before the epoch's update
    double loss = 0.0;
    double gini = 0.0;       // of |theta| before the update
    std::size_t avalanche_size = 0;
    std::size_t cascade_steps = 0;
    double threshold = 0.0;
};

struct TrainingTrace {
    std::size_t hidden_size = 0;
    std::size_t n_params = 0;
    std::uint64_t seed = 0;
    std::vector<EpochRow> rows;
    std::optional<std::size_t> grokking_epoch;
    std::vector<std::size_t> snapshot_epochs;

    std::vector<double> accuracy_series() const;
    std::vector<double> gini_series() const;
};

struct RunResult {
    TrainingTrace trace;
    std::vector<CascadeRecord> cascades;         // one per epoch, phase tagged against grokking_epoch
    std::vector<std::vector<double>> snapshots;  // raw gradients at trace.snapshot_epochs
};

/// One full training run on XOR. A pure function of (config, graph).
///
/// Epoch e evaluates the model, computes the full-batch gradient, runs one cascade and applies
/// the update. Snapshots hold the raw gradient at every multiple of snapshot_interval in
/// [0, epochs]; the one at `epochs` is taken from the final model without a further update.
RunResult train_run(const TrainConfig& config, const DiffusionGraph& graph);

/// Gini peak relative to the grokking epoch.
struct GiniAlignment {
    std::size_t grokking_epoch = 0;
    std::size_t peak_epoch = 0;    // argmax of the Gini series (first occurrence)
    double peak = 0.0;
    double baseline = 0.0;         // mean Gini over pre-grokking epochs; epoch-0 value when grokking at 0
    double prominence = 0.0;       // (peak - baseline) / baseline
    double offset = 0.0;           // |peak_epoch - grokking_epoch|
};

/// Absent for ungrokked or empty traces.
std::optional<GiniAlignment> gini_alignment(const TrainingTrace& trace);

/// Tags each record pre/post against the grokking epoch, or unknown when there is none.
void assign_phases(std::vector<CascadeRecord>& records, std::optional<std::size_t> grokking_epoch);

} // namespace grokfss
