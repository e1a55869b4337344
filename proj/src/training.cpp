#include "grokfss/training.hpp"

#include "grokfss/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace grokfss {

std::string_view to_string(ProbeMode m)
{
    return m == ProbeMode::shadow ? "shadow" : "inline";
}

ProbeMode parse_probe_mode(std::string_view name)
{
    if (name == "inline") return ProbeMode::inline_probe;
    if (name == "shadow") return ProbeMode::shadow;
    throw ConfigError("unknown probe mode '" + std::string(name) + "'");
}

std::vector<double> TrainingTrace::accuracy_series() const
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.accuracy);
    return out;
}

std::vector<double> TrainingTrace::gini_series() const
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.gini);
    return out;
}

std::optional<GiniAlignment> gini_alignment(const TrainingTrace& trace)
{
    if (!trace.grokking_epoch || trace.rows.empty()) return std::nullopt;
    const auto series = trace.gini_series();
    GiniAlignment a;
    a.grokking_epoch = *trace.grokking_epoch;
    a.peak_epoch = static_cast<std::size_t>(std::max_element(series.begin(), series.end()) - series.begin());
    a.peak = series[a.peak_epoch];
    const std::size_t pre = std::min(a.grokking_epoch, series.size());
    if (pre == 0) {
        a.baseline = series.front();
    } else {
        a.baseline = std::accumulate(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(pre), 0.0) /
                     static_cast<double>(pre);
    }
    a.prominence = a.baseline > 0.0 ? (a.peak - a.baseline) / a.baseline : 0.0;
    a.offset = std::abs(static_cast<double>(a.peak_epoch) - static_cast<double>(a.grokking_epoch));
    return a;
}

void assign_phases(std::vector<CascadeRecord>& records, std::optional<std::size_t> grokking_epoch)
{
    for (auto& r : records) {
        if (!grokking_epoch) r.phase = Phase::unknown;
        else r.phase = r.epoch < *grokking_epoch ? Phase::pre : Phase::post;
    }
}

RunResult train_run(const TrainConfig& config, const DiffusionGraph& graph)
{
    if (config.hidden_size == 0) throw ConfigError("hidden size must be positive");
    if (config.snapshot_interval == 0) throw ConfigError("snapshot interval must be positive");
    config.cascade.validate();
    const std::size_t n = param_count(config.hidden_size);
    if (graph.n_nodes() != n)
        throw StructuralError("graph has " + std::to_string(graph.n_nodes()) + " nodes, model has " + std::to_string(n));

    RunResult out;
    out.trace.hidden_size = config.hidden_size;
    out.trace.n_params = n;
    out.trace.seed = config.seed;
    if (config.epochs == 0) return out;

    MlpModel model = MlpModel::initialize(config.init_scheme, config.hidden_size, config.init_scale, config.seed,
                                          config.activation);
    out.trace.rows.reserve(config.epochs);
    out.cascades.reserve(config.epochs);

    for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
        const bool snapshot = epoch % config.snapshot_interval == 0;
        if (epoch == config.epochs) {
            if (snapshot) {
                out.trace.snapshot_epochs.push_back(epoch);
                if (config.keep_snapshots) out.snapshots.push_back(backward(model));
            }
            break;
        }

        const ForwardResult fwd = forward(model);
        const ParameterField theta = model.flatten();
        ParameterField grad = backward(model);
        if (snapshot) {
            out.trace.snapshot_epochs.push_back(epoch);
            if (config.keep_snapshots) out.snapshots.push_back(grad);
        }

        CascadeResult cascade = run_cascade(grad, graph, config.cascade);
        cascade.record.epoch = epoch;
        cascade.record.seed = config.seed;

        EpochRow row;
        row.epoch = epoch;
        row.accuracy = accuracy(fwd);
        row.loss = fwd.loss;
        row.gini = gini(theta);
        row.avalanche_size = cascade.record.avalanche_size;
        row.cascade_steps = cascade.record.steps_taken;
        row.threshold = cascade.record.threshold;
        out.trace.rows.push_back(row);
        out.cascades.push_back(cascade.record);

        const ParameterField& applied = config.probe_mode == ProbeMode::shadow ? grad : cascade.field;
        model = sgd_step(model, applied, config.eta);
    }

    out.trace.grokking_epoch = detect_grokking(out.trace.accuracy_series(), config.grokking_window);
    assign_phases(out.cascades, out.trace.grokking_epoch);
    return out;
}

} // namespace grokfss
