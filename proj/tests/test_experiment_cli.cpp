#include "grokfss/acceptance.hpp"
#include "grokfss/campaign.hpp"
#include "grokfss/errors.hpp"
#include "grokfss/seeding.hpp"
#include "grokfss/store.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace grokfss;
namespace fs = std::filesystem;

#ifndef GROKFSS_TEST_DATA
#error "GROKFSS_TEST_DATA must point at tests/data"
#endif

namespace {

CampaignConfig tiny(const testing::TempDir& dir)
{
    CampaignConfig c;
    c.output_dir = dir.str();
    c.hidden_sizes = {2, 3, 5};
    c.seeds_per_scale = 2;
    c.epochs = 40;
    c.snapshot_interval = 10;
    c.bootstrap_resamples = 50;
    c.synth_scales = {81, 121, 201};
    c.synth_seeds = 2;
    c.synth_trials = 5;
    return c;
}

std::size_t count_dirs(const fs::path& p)
{
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(p)) n += e.is_directory() ? 1 : 0;
    return n;
}

std::map<std::string, std::string> csv_bytes(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            out[fs::relative(e.path(), root).string()] = store::read_text(e.path());
    return out;
}

std::ostringstream sink;

} // namespace

TEST_CASE("seed derivation is stable and purpose-specific")
{
    CHECK(mix64(0) == 0xe220a8397b1dcdafULL);  // first SplitMix64 output from state 0
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    static_assert(derive_seed(0, 20, 0, "init") == derive_seed(0, 20, 0, "init"));
    std::set<std::uint64_t> seen;
    for (std::uint64_t h : {20U, 30U, 50U})
        for (std::uint64_t s = 0; s < 6; ++s)
            for (const char* tag : {"init", "graph"}) seen.insert(derive_seed(0, h, s, tag));
    CHECK(seen.size() == 36);
}

TEST_CASE("campaign config defaults and validation")
{
    CampaignConfig c;
    CHECK(c.hidden_sizes == std::vector<std::size_t>{20, 30, 50, 70, 100, 120, 200, 500});
    CHECK(c.seeds_per_scale == 6);
    CHECK(c.epochs == 500);
    CHECK(c.eta == 0.5);
    CHECK(c.snapshot_interval == 10);
    CHECK_NOTHROW(c.validate());
    c.snapshot_interval = 7;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.hidden_sizes.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.cascade.alpha = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.synth_topologies.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);

    const auto j = to_json(CampaignConfig{});
    for (const char* key : {"hidden_sizes", "init_scheme", "activation", "probe_mode", "topology", "master_seed"})
        CHECK(j.contains(key));
}

TEST_CASE("fingerprint reconstructs the run exactly")
{
    CampaignConfig c;
    c.epochs = 30;
    c.probe_mode = ProbeMode::shadow;
    const auto fp = store::run_fingerprint(c, 5, 1);
    const auto t = store::train_config_from_fingerprint(fp);
    const auto direct = train_run(c.train_config(5, 1), generate_graph(c.topology, 21, c.graph_params, c.graph_seed(5, 1)));
    const auto rebuilt = train_run(t, store::graph_from_fingerprint(fp));
    CHECK(store::trace_csv(direct.trace) == store::trace_csv(rebuilt.trace));
    CHECK(fp["n_params"] == 21);
    CHECK(fp["probe_mode"] == "shadow");
}

TEST_CASE("format_double round trips")
{
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5})
        CHECK(std::stod(store::format_double(v)) == v);
}

TEST_CASE("train populates one directory per run and is idempotent")
{
    testing::TempDir dir("train");
    const auto c = tiny(dir);
    const auto first = cmd_train(c, sink);
    CHECK(first.ran == 6);
    const auto set = store::run_set_dir(dir.path(), "main");
    CHECK(count_dirs(set) == 6);
    for (const char* name : {"2_0", "2_1", "3_0", "3_1", "5_0", "5_1"}) {
        CHECK(fs::exists(set / name / "trace.csv"));
        CHECK(fs::exists(set / name / "snapshots.csv"));
        CHECK(fs::exists(set / name / "meta.json"));
    }
    const auto run = store::read_run(set / "3_1");
    CHECK(run.rows.size() == 40);
    CHECK(run.n_params == 13);
    CHECK(run.meta["run"]["activation"] == "tanh");
    CHECK(run.meta["run"]["topology"] == "barabasi_albert");
    CHECK(run.meta.contains("created_at"));

    std::istringstream snaps(store::read_text(set / "3_1" / "snapshots.csv"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(snaps, line)) ++lines;
    CHECK(lines == 1 + 5);  // header + epochs 0, 10, 20, 30, 40

    const auto before = csv_bytes(dir.path());
    const auto second = cmd_train(c, sink);
    CHECK(second.ran == 0);
    CHECK(second.skipped == 6);
    CHECK(csv_bytes(dir.path()) == before);
}

TEST_CASE("parallel workers give the same store as one worker")
{
    testing::TempDir a("serial"), b("parallel");
    auto ca = tiny(a);
    auto cb = tiny(b);
    cb.workers = 4;
    cmd_train(ca, sink);
    cmd_train(cb, sink);
    CHECK(csv_bytes(a.path()) == csv_bytes(b.path()));
}

TEST_CASE("zero epochs gives empty traces and succeeds")
{
    testing::TempDir dir("zero");
    auto c = tiny(dir);
    c.epochs = 0;
    CHECK(cmd_train(c, sink).ran == 6);
    const auto run = store::read_run(store::run_set_dir(dir.path(), "main") / "2_0");
    CHECK(run.rows.empty());
    CHECK(store::read_text(store::run_set_dir(dir.path(), "main") / "2_0" / "trace.csv") ==
          std::string(store::kTraceHeader) + "\n");
}

TEST_CASE("trace-only runs skip snapshots")
{
    testing::TempDir dir("traceonly");
    auto c = tiny(dir);
    c.trace_only = true;
    cmd_train(c, sink);
    const auto d = store::run_set_dir(dir.path(), "main") / "2_0";
    CHECK(fs::exists(d / "trace.csv"));
    CHECK_FALSE(fs::exists(d / "snapshots.csv"));
    CHECK(cmd_train(c, sink).skipped == 6);
}

TEST_CASE("corrupt and stale runs are quarantined and re-run")
{
    testing::TempDir dir("corrupt");
    const auto c = tiny(dir);
    cmd_train(c, sink);
    const auto set = store::run_set_dir(dir.path(), "main");
    const auto good = store::read_text(set / "2_0" / "trace.csv");

    // Truncated trace.
    {
        std::ofstream out(set / "2_0" / "trace.csv", std::ios::trunc);
        out << store::kTraceHeader << "\n0,0.5\n";
    }
    // Interrupted before metadata.
    fs::remove(set / "3_1" / "meta.json");
    const auto r = cmd_train(c, sink);
    CHECK(r.ran == 2);
    CHECK(r.quarantined == 2);
    CHECK(fs::exists(set / "2_0.corrupt-0"));
    CHECK(fs::exists(set / "3_1.corrupt-0"));
    CHECK(store::read_text(set / "2_0" / "trace.csv") == good);
    CHECK(store::load_run_set(dir.path(), "main").runs.size() == 6);

    // Changed parameters make the stored runs stale.
    auto changed = c;
    changed.eta = 0.25;
    CHECK(cmd_train(changed, sink).quarantined == 6);
}

TEST_CASE("reader rejects unknown schema versions and bad headers")
{
    testing::TempDir dir("schema");
    const auto c = tiny(dir);
    cmd_train(c, sink);
    const auto d = store::run_set_dir(dir.path(), "main") / "5_0";
    auto meta = nlohmann::json::parse(store::read_text(d / "meta.json"));
    meta["schema_version"] = 99;
    store::write_text_atomic(d / "meta.json", meta.dump());
    CHECK_THROWS_AS(store::read_run(d), StoreError);
    CHECK(store::check_run(d, store::run_fingerprint(c, 5, 0)) == store::RunStatus::corrupt);

    const auto e = store::run_set_dir(dir.path(), "main") / "5_1";
    store::write_text_atomic(e / "trace.csv", "epoch,loss\n");
    CHECK_THROWS_AS(store::read_run(e), StoreError);
    CHECK(store::load_run_set(dir.path(), "main").warnings.size() == 2);
}

TEST_CASE("analyze on an empty store is a coverage error without a summary")
{
    testing::TempDir dir("empty");
    const auto c = tiny(dir);
    CHECK_THROWS_AS(cmd_analyze(c, sink), StoreError);
    CHECK_FALSE(fs::exists(dir.path() / "analysis" / "summary.json"));
}

TEST_CASE("golden mini-store")
{
    testing::TempDir dir("golden");
    fs::copy(fs::path(GROKFSS_TEST_DATA) / "mini_store", dir.path(), fs::copy_options::recursive);
    CampaignConfig c;
    c.output_dir = dir.str();
    c.hidden_sizes = {2, 3};
    c.epochs = 20;
    c.bootstrap_resamples = 100;
    const auto summary = cmd_analyze(c, sink);
    const auto first = store::read_text(dir.path() / "analysis" / "summary.json");
    cmd_analyze(c, sink);
    CHECK(store::read_text(dir.path() / "analysis" / "summary.json") == first);
    CHECK(first == store::read_text(fs::path(GROKFSS_TEST_DATA) / "mini_store_summary.json"));

    CHECK(summary["runs"] == 2);
    CHECK(summary["grokked_scales"] == 2);
    CHECK_FALSE(summary.contains("D_aggregate"));
    CHECK(summary["gini_main"]["grokked_runs"] == 2);
    CHECK(store::read_text(dir.path() / "analysis" / "gini_main.csv") ==
          "h,seed_index,grokking_epoch,peak_epoch,peak,baseline,prominence,offset\n"
          "2,0,6,6,0.45,0.33499999999999996,0.3432835820895524,0\n"
          "3,0,9,9,0.47,0.3266666666666667,0.43877551020408134,0\n");
    CHECK(summary["median_cascade_steps"] == 4.0);
    CHECK(store::read_text(dir.path() / "analysis" / "coverage.csv") == "h,n_params,runs,grokked\n2,9,1,1\n3,13,1,1\n");
}

TEST_CASE("synth writes records, summary and sweeps")
{
    testing::TempDir dir("synth");
    auto c = tiny(dir);
    c.synth_topologies = {Topology::ring};
    const auto r = cmd_synth(c, true, sink);
    CHECK(r.cv == 0.0);
    const auto summary = nlohmann::json::parse(store::read_text(dir.path() / "synth" / "summary.json"));
    CHECK(summary["fits"].size() == 1);
    CHECK(summary["cv"] == 0.0);
    const auto back = store::read_synth_records(dir.path() / "synth" / "records.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].records.size() == 3 * 2 * 5);
    const auto sweep = nlohmann::json::parse(store::read_text(dir.path() / "synth" / "sweep.json"));
    CHECK(sweep["alpha"]["entries"].size() == 3);
    CHECK(sweep["quantile"]["entries"].size() == 3);
    const auto [sc, cc] = store::synth_configs_from_json(summary["config"]);
    CHECK(store::synth_records_csv(run_synth_campaign(sc, cc).records) ==
          store::read_text(dir.path() / "synth" / "records.csv"));
}

TEST_CASE("stored fixture graph reproduces the hand-computed cascade")
{
    std::istringstream graph_text(store::read_text(fs::path(GROKFSS_TEST_DATA) / "star4.edges"));
    const auto g = read_edge_list(graph_text);
    CascadeConfig c;
    const auto r = run_cascade_with_threshold(std::vector<double>{0.9, -0.3, 0.0, 0.6}, g, 0.5, c);
    CHECK(r.record.avalanche_size == 8);
    CHECK(r.record.steps_taken == 5);
    CHECK(std::abs(r.field[3] - 0.45798) < 1e-10);
}

TEST_CASE("report with only a synthetic campaign")
{
    testing::TempDir dir("report");
    auto c = tiny(dir);
    c.tolerances.conservation_trials = 200;
    cmd_synth(c, false, sink);
    std::ostringstream out;
    CHECK(cmd_report(c, out) == 2);
    const std::string text = out.str();
    CHECK(text.find("[PASS] 1.") != std::string::npos);
    CHECK(text.find("[UNEVALUABLE] 6.") != std::string::npos);
    for (const char* id : {"7.", "8.", "9.", "10."})
        CHECK(text.find(std::string("[UNEVALUABLE] ") + id) != std::string::npos);
    CHECK(text.find("5. Synthetic control") != std::string::npos);
    CHECK(text.find("[PASS] 11.") != std::string::npos);

    // A tolerance override shows up in the report.
    c.tolerances.d_synth_max = 0.5;
    std::ostringstream tightened;
    cmd_report(c, tightened);
    CHECK(tightened.str().find("[FAIL] 5.") != std::string::npos);
    CHECK(tightened.str().find("0.5]") != std::string::npos);
}

TEST_CASE("determinism check notices a tampered trace")
{
    testing::TempDir dir("tamper");
    const auto c = tiny(dir);
    cmd_train(c, sink);
    CHECK(acceptance::determinism(dir.path(), "main").verdict == acceptance::Verdict::pass);
    const auto trace = store::run_set_dir(dir.path(), "main") / "3_0" / "trace.csv";
    auto text = store::read_text(trace);
    text.back() = text.back() == '1' ? '2' : '1';
    text += "\n";
    store::write_text_atomic(trace, text);
    CHECK(acceptance::determinism(dir.path(), "main").verdict == acceptance::Verdict::fail);
}

TEST_CASE("default training campaign end to end")
{
    testing::TempDir dir("campaign");
    CampaignConfig c;
    c.output_dir = dir.str();
    c.bootstrap_resamples = 1000;
    cmd_train(c, sink);
    CHECK(count_dirs(store::run_set_dir(dir.path(), "main")) == 48);
    const auto s = cmd_analyze(c, sink);
    for (const char* key : {"D_aggregate", "gamma", "D_pre", "D_post", "loo_max_deviation", "median_cascade_steps"})
        CHECK(s.contains(key));
    CHECK(s["grokked_scales"] == 8);

    // The aggregate exponent sits between the phase-resolved ones.
    const double d = s["D_aggregate"], pre = s["D_pre"], post = s["D_post"];
    CHECK(pre < d);
    CHECK(d < post);
    CHECK(s["median_cascade_steps"].get<double>() < 10.0);

    // D(t): early epochs below late epochs.
    std::istringstream dt(store::read_text(dir.path() / "analysis" / "dt_series.csv"));
    std::string line;
    std::getline(dt, line);
    std::vector<double> series;
    while (std::getline(dt, line)) series.push_back(std::stod(line.substr(line.find(',') + 1)));
    REQUIRE(series.size() == 51);
    double early = 0.0, late = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        early += series[i];
        late += series[series.size() - 1 - i];
    }
    CHECK(early < late);

    for (const char* f : {"fss_points.csv", "ccdf.csv", "loo.csv", "bootstrap_pre.csv", "bootstrap_post.csv",
                          "dt_series.csv", "gini_main.csv", "coverage.csv", "plots.gp"})
        CHECK(fs::exists(dir.path() / "analysis" / f));
}
