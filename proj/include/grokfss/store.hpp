#pragma once

#include "grokfss/cascade.hpp"
#include "grokfss/config.hpp"
#include "grokfss/training.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// On-disk run store:
//   <root>/runs/<run_set>/<h>_<seed_index>/{trace.csv, snapshots.csv, meta.json}
//   <root>/synth/{records.csv, summary.json, sweep.json}
//   <root>/analysis/...
// meta.json is written last; a run directory without a valid, complete meta.json is corrupt.
namespace grokfss::store {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kTraceHeader = "epoch,accuracy,loss,gini,avalanche_size,cascade_steps,threshold";
inline constexpr std::string_view kSynthHeader = "topology,n_params,seed,trial,avalanche_size,cascade_steps,threshold";

fs::path run_set_dir(const fs::path& root, const std::string& run_set);
std::string run_name(std::size_t hidden, std::size_t seed_index);

/// Exactly the parameters that determine a run's output; stored under meta["run"] and
/// compared on resume.
nlohmann::json run_fingerprint(const CampaignConfig& config, std::size_t hidden, std::size_t seed_index);

/// Inverse of run_fingerprint: the training config and the diffusion graph of a stored run.
TrainConfig train_config_from_fingerprint(const nlohmann::json& fingerprint);
DiffusionGraph graph_from_fingerprint(const nlohmann::json& fingerprint);

/// Synthetic campaign settings as stored in synth/summary.json, and back.
nlohmann::json synth_config_json(const SynthConfig& synth, const CascadeConfig& cascade);
std::pair<SynthConfig, CascadeConfig> synth_configs_from_json(const nlohmann::json& j);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

std::string trace_csv(const TrainingTrace& trace);
std::string snapshots_csv(const TrainingTrace& trace, const std::vector<std::vector<double>>& snapshots);

/// Write to a sibling temp file, then rename over the target.
void write_text_atomic(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

void write_run(const fs::path& dir, const RunResult& result, const nlohmann::json& fingerprint);

enum class RunStatus { complete, missing, corrupt };
RunStatus check_run(const fs::path& dir, const nlohmann::json& expected_fingerprint);

/// Renames a bad run directory to <name>.corrupt-<k> and returns the new path.
fs::path quarantine(const fs::path& dir);

struct StoredRun {
    std::size_t hidden_size = 0;
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;
    std::size_t n_params = 0;
    std::optional<std::size_t> grokking_epoch;
    std::vector<EpochRow> rows;
    nlohmann::json meta;

    /// One record per epoch, phase-tagged from the stored grokking epoch.
    std::vector<CascadeRecord> cascade_records() const;
};

/// Throws StoreError on unknown schema versions, bad headers or malformed rows.
StoredRun read_run(const fs::path& dir);

struct RunSet {
    std::vector<StoredRun> runs;
    std::vector<std::string> warnings;  // skipped directories
};

/// Loads every complete run below <root>/runs/<run_set>; incomplete directories are reported, not read.
RunSet load_run_set(const fs::path& root, const std::string& run_set);

std::vector<TrainingTrace> traces(const RunSet& set);

std::string synth_records_csv(const std::vector<TopologyRecords>& records);
std::vector<TopologyRecords> read_synth_records(const fs::path& path);

} // namespace grokfss::store
