// Runs the shipped default campaign end to end and prints one line per exit criterion.
// Thresholds come from grokfss::Tolerances defaults; the exit status is non-zero if any criterion fails.

#include "grokfss/acceptance.hpp"
#include "grokfss/campaign.hpp"
#include "grokfss/store.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace grokfss;
namespace fs = std::filesystem;
namespace acc = grokfss::acceptance;

namespace {

constexpr std::size_t kGiniHidden = 21;
constexpr std::size_t kGiniSeeds = 100;

void build_store(const CampaignConfig& config, std::ostream& log)
{
    cmd_train(config, log);
    CampaignConfig gini = config;
    gini.run_set = config.gini_run_set;
    gini.hidden_sizes = {kGiniHidden};
    gini.seeds_per_scale = kGiniSeeds;
    gini.trace_only = true;
    cmd_train(gini, log);
    cmd_synth(config, true, log);
    cmd_analyze(config, log);
}

std::map<std::string, std::string> csv_files(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            out[fs::relative(e.path(), root).string()] = store::read_text(e.path());
    return out;
}

} // namespace

int main()
{
    const auto base = fs::temp_directory_path() / ("grokfss-acceptance-" + std::to_string(std::random_device{}()));
    fs::remove_all(base);
    CampaignConfig config;
    config.output_dir = (base / "a").string();
    const auto& tol = config.tolerances;

    std::ostringstream log;
    const auto t0 = std::chrono::steady_clock::now();
    build_store(config, log);
    const auto t1 = std::chrono::steady_clock::now();

    const auto summary = nlohmann::json::parse(store::read_text(base / "a" / "analysis" / "summary.json"));
    std::vector<acc::Criterion> results{
        acc::cascade_oracle(tol),
        acc::conservation(tol, config.master_seed),
        acc::gradient_check(tol, config.master_seed),
        acc::planted_exponents(tol, config.master_seed),
        acc::synthetic_control(&summary, tol),
        acc::topology_invariance(&summary, tol),
        acc::aggregate_fss(&summary, tol),
        acc::phase_separation(&summary, tol),
        acc::leave_one_out_stability(&summary, tol),
        acc::gini_transient(&summary, tol),
        acc::determinism(base / "a", config.run_set),
        acc::data_collapse(&summary, base / "a" / "analysis" / "ccdf.csv"),
    };

    // Determinism also means a second, independent store is byte-identical.
    CampaignConfig again = config;
    again.output_dir = (base / "b").string();
    build_store(again, log);
    const auto a = csv_files(base / "a"), b = csv_files(base / "b");
    auto& det = results[10];
    if (a != b) det.verdict = acc::Verdict::fail;
    det.detail += "; second store: " + std::to_string(a.size()) + " CSV files " + (a == b ? "identical" : "DIFFER");

    std::size_t passed = 0;
    for (const auto& c : results) {
        std::cout << acc::format_line(c) << "\n";
        if (c.verdict == acc::Verdict::pass) ++passed;
    }
    std::cout << passed << "/" << results.size() << " criteria passed (campaign build "
              << std::chrono::duration<double>(t1 - t0).count() << " s)\n";
    fs::remove_all(base);
    return passed == results.size() ? 0 : 1;
}
