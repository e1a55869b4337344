#pragma once

#include "grokfss/config.hpp"
#include "grokfss/synth.hpp"

#include <json.hpp>

#include <cstddef>
#include <iosfwd>

namespace grokfss {

struct TrainReport {
    std::size_t ran = 0;
    std::size_t skipped = 0;      // already complete with a matching fingerprint
    std::size_t quarantined = 0;  // corrupt or stale directories moved aside and re-run
};

/// Runs every (h, seed index) of the campaign into <output_dir>/runs/<run_set>.
/// Resumable: complete runs are skipped. Runs are dispatched to `config.workers` threads.
TrainReport cmd_train(const CampaignConfig& config, std::ostream& log);

/// Synthetic control campaign into <output_dir>/synth; with `sweeps`, also the alpha and quantile sweeps.
SynthCampaignResult cmd_synth(const CampaignConfig& config, bool sweeps, std::ostream& log);

/// Reads the store, writes every analysis dataset to <output_dir>/analysis and returns the summary
/// (also written as analysis/summary.json). Throws StoreError when the main run set is empty.
nlohmann::json cmd_analyze(const CampaignConfig& config, std::ostream& log);

/// Evaluates the acceptance criteria against the store and prints one line per criterion.
/// Returns 0 when all pass, 2 otherwise.
int cmd_report(const CampaignConfig& config, std::ostream& out);

} // namespace grokfss
