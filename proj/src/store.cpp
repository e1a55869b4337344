#include "grokfss/store.hpp"

#include "grokfss/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace grokfss::store {

fs::path run_set_dir(const fs::path& root, const std::string& run_set) { return root / "runs" / run_set; }

std::string run_name(std::size_t hidden, std::size_t seed_index)
{
    return std::to_string(hidden) + "_" + std::to_string(seed_index);
}

namespace {

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

nlohmann::json run_fingerprint(const CampaignConfig& c, std::size_t hidden, std::size_t seed_index)
{
    const TrainConfig t = c.train_config(hidden, seed_index);
    return {
        {"h", hidden},
        {"n_params", param_count(hidden)},
        {"seed_index", seed_index},
        {"seed", t.seed},
        {"graph_seed", c.graph_seed(hidden, seed_index)},
        {"master_seed", c.master_seed},
        {"epochs", t.epochs},
        {"eta", t.eta},
        {"init_scheme", to_string(t.init_scheme)},
        {"init_scale", t.init_scale},
        {"activation", to_string(t.activation)},
        {"alpha", t.cascade.alpha},
        {"quantile", t.cascade.quantile},
        {"max_steps", t.cascade.max_steps},
        {"topology", to_string(c.topology)},
        {"ba_m", c.graph_params.ba_m},
        {"er_mean_degree", c.graph_params.er_mean_degree},
        {"ws_degree", c.graph_params.ws_degree},
        {"ws_rewire", c.graph_params.ws_rewire},
        {"probe_mode", to_string(t.probe_mode)},
        {"snapshot_interval", t.snapshot_interval},
        {"grokking_window", t.grokking_window},
        {"trace_only", !t.keep_snapshots},
    };
}

TrainConfig train_config_from_fingerprint(const nlohmann::json& fp)
{
    try {
        TrainConfig t;
        t.hidden_size = fp.at("h").get<std::size_t>();
        t.seed = fp.at("seed").get<std::uint64_t>();
        t.epochs = fp.at("epochs").get<std::size_t>();
        t.eta = fp.at("eta").get<double>();
        t.init_scheme = parse_init_scheme(fp.at("init_scheme").get<std::string>());
        t.init_scale = fp.at("init_scale").get<double>();
        t.activation = parse_activation(fp.at("activation").get<std::string>());
        t.cascade.alpha = fp.at("alpha").get<double>();
        t.cascade.quantile = fp.at("quantile").get<double>();
        t.cascade.max_steps = fp.at("max_steps").get<std::size_t>();
        t.probe_mode = parse_probe_mode(fp.at("probe_mode").get<std::string>());
        t.snapshot_interval = fp.at("snapshot_interval").get<std::size_t>();
        t.grokking_window = fp.at("grokking_window").get<std::size_t>();
        t.keep_snapshots = !fp.at("trace_only").get<bool>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw StoreError(std::string("incomplete run fingerprint: ") + e.what());
    }
}

DiffusionGraph graph_from_fingerprint(const nlohmann::json& fp)
{
    try {
        GraphParams g;
        g.ba_m = fp.at("ba_m").get<std::size_t>();
        g.er_mean_degree = fp.at("er_mean_degree").get<double>();
        g.ws_degree = fp.at("ws_degree").get<std::size_t>();
        g.ws_rewire = fp.at("ws_rewire").get<double>();
        return generate_graph(parse_topology(fp.at("topology").get<std::string>()), fp.at("n_params").get<std::size_t>(),
                              g, fp.at("graph_seed").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw StoreError(std::string("incomplete run fingerprint: ") + e.what());
    }
}

nlohmann::json synth_config_json(const SynthConfig& s, const CascadeConfig& c)
{
    std::vector<std::string> topologies;
    for (Topology t : s.topologies) topologies.emplace_back(to_string(t));
    return {
        {"sigma", s.sigma},
        {"n_trials", s.n_trials},
        {"topologies", topologies},
        {"scales", s.scales},
        {"n_seeds", s.n_seeds},
        {"master_seed", s.master_seed},
        {"ba_m", s.graph_params.ba_m},
        {"er_mean_degree", s.graph_params.er_mean_degree},
        {"ws_degree", s.graph_params.ws_degree},
        {"ws_rewire", s.graph_params.ws_rewire},
        {"alpha", c.alpha},
        {"quantile", c.quantile},
        {"max_steps", c.max_steps},
    };
}

std::pair<SynthConfig, CascadeConfig> synth_configs_from_json(const nlohmann::json& j)
{
    try {
        SynthConfig s;
        s.sigma = j.at("sigma").get<double>();
        s.n_trials = j.at("n_trials").get<std::size_t>();
        s.topologies.clear();
        for (const auto& t : j.at("topologies")) s.topologies.push_back(parse_topology(t.get<std::string>()));
        s.scales = j.at("scales").get<std::vector<std::size_t>>();
        s.n_seeds = j.at("n_seeds").get<std::size_t>();
        s.master_seed = j.at("master_seed").get<std::uint64_t>();
        s.graph_params.ba_m = j.at("ba_m").get<std::size_t>();
        s.graph_params.er_mean_degree = j.at("er_mean_degree").get<double>();
        s.graph_params.ws_degree = j.at("ws_degree").get<std::size_t>();
        s.graph_params.ws_rewire = j.at("ws_rewire").get<double>();
        CascadeConfig c;
        c.alpha = j.at("alpha").get<double>();
        c.quantile = j.at("quantile").get<double>();
        c.max_steps = j.at("max_steps").get<std::size_t>();
        return {s, c};
    } catch (const nlohmann::json::exception& e) {
        throw StoreError(std::string("incomplete synthetic config: ") + e.what());
    }
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trace_csv(const TrainingTrace& trace)
{
    std::string out(kTraceHeader);
    out += '\n';
    for (const auto& r : trace.rows) {
        out += std::to_string(r.epoch) + ',' + format_double(r.accuracy) + ',' + format_double(r.loss) + ',' +
               format_double(r.gini) + ',' + std::to_string(r.avalanche_size) + ',' + std::to_string(r.cascade_steps) +
               ',' + format_double(r.threshold) + '\n';
    }
    return out;
}

std::string snapshots_csv(const TrainingTrace& trace, const std::vector<std::vector<double>>& snapshots)
{
    std::string out = "epoch";
    for (std::size_t i = 0; i < trace.n_params; ++i) out += ",g" + std::to_string(i);
    out += '\n';
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        out += std::to_string(trace.snapshot_epochs.at(k));
        for (double v : snapshots[k]) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

void write_text_atomic(const fs::path& path, const std::string& text)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw StoreError("cannot write " + tmp.string());
        os << text;
        if (!os) throw StoreError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw StoreError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_run(const fs::path& dir, const RunResult& result, const nlohmann::json& fingerprint)
{
    fs::create_directories(dir);
    write_text_atomic(dir / "trace.csv", trace_csv(result.trace));
    const bool snapshots = !fingerprint.value("trace_only", false);
    if (snapshots) write_text_atomic(dir / "snapshots.csv", snapshots_csv(result.trace, result.snapshots));

    nlohmann::json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["run"] = fingerprint;
    meta["grokking_epoch"] = result.trace.grokking_epoch ? nlohmann::json(*result.trace.grokking_epoch) : nullptr;
    meta["snapshot_epochs"] = result.trace.snapshot_epochs;
    meta["rows"] = result.trace.rows.size();
    meta["complete"] = true;
    meta["created_at"] = utc_timestamp();
    write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

namespace {

nlohmann::json read_meta(const fs::path& dir)
{
    const auto path = dir / "meta.json";
    if (!fs::exists(path)) throw StoreError("missing meta.json in " + dir.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw StoreError("unparseable meta.json in " + dir.string() + ": " + e.what());
    }
    if (meta.value("schema_version", -1) != kSchemaVersion)
        throw StoreError("unknown schema version in " + dir.string());
    if (!meta.value("complete", false)) throw StoreError("incomplete run in " + dir.string());
    if (!meta.contains("run")) throw StoreError("meta.json lacks run fingerprint in " + dir.string());
    return meta;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

std::vector<EpochRow> parse_trace(const fs::path& path)
{
    std::istringstream is(read_text(path));
    std::string line;
    if (!std::getline(is, line) || line != kTraceHeader) throw StoreError("unexpected trace header in " + path.string());
    std::vector<EpochRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split(line, ',');
        if (c.size() != 7) throw StoreError("malformed trace row in " + path.string());
        try {
            EpochRow r;
            r.epoch = std::stoull(c[0]);
            r.accuracy = std::stod(c[1]);
            r.loss = std::stod(c[2]);
            r.gini = std::stod(c[3]);
            r.avalanche_size = std::stoull(c[4]);
            r.cascade_steps = std::stoull(c[5]);
            r.threshold = std::stod(c[6]);
            rows.push_back(r);
        } catch (const std::exception&) {
            throw StoreError("malformed trace row in " + path.string());
        }
    }
    return rows;
}

} // namespace

RunStatus check_run(const fs::path& dir, const nlohmann::json& expected)
{
    if (!fs::exists(dir)) return RunStatus::missing;
    try {
        const auto meta = read_meta(dir);
        if (meta["run"] != expected) return RunStatus::corrupt;
        const auto rows = parse_trace(dir / "trace.csv");
        if (rows.size() != meta.value("rows", std::size_t{0})) return RunStatus::corrupt;
        if (!expected.value("trace_only", false) && !fs::exists(dir / "snapshots.csv")) return RunStatus::corrupt;
    } catch (const StoreError&) {
        return RunStatus::corrupt;
    }
    return RunStatus::complete;
}

fs::path quarantine(const fs::path& dir)
{
    for (int k = 0;; ++k) {
        fs::path target = dir;
        target += ".corrupt-" + std::to_string(k);
        if (!fs::exists(target)) {
            fs::rename(dir, target);
            return target;
        }
    }
}

std::vector<CascadeRecord> StoredRun::cascade_records() const
{
    std::vector<CascadeRecord> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        CascadeRecord c;
        c.avalanche_size = r.avalanche_size;
        c.steps_taken = r.cascade_steps;
        c.epoch = r.epoch;
        c.seed = seed;
        c.n_params = n_params;
        c.threshold = r.threshold;
        out.push_back(c);
    }
    assign_phases(out, grokking_epoch);
    return out;
}

StoredRun read_run(const fs::path& dir)
{
    StoredRun run;
    run.meta = read_meta(dir);
    const auto& fp = run.meta["run"];
    try {
        run.hidden_size = fp.at("h").get<std::size_t>();
        run.seed_index = fp.at("seed_index").get<std::size_t>();
        run.seed = fp.at("seed").get<std::uint64_t>();
        run.n_params = fp.at("n_params").get<std::size_t>();
        if (!run.meta.at("grokking_epoch").is_null()) run.grokking_epoch = run.meta["grokking_epoch"].get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw StoreError("bad run metadata in " + dir.string() + ": " + e.what());
    }
    run.rows = parse_trace(dir / "trace.csv");
    if (run.rows.size() != run.meta.value("rows", std::size_t{0}))
        throw StoreError("trace row count disagrees with metadata in " + dir.string());
    return run;
}

RunSet load_run_set(const fs::path& root, const std::string& run_set)
{
    RunSet set;
    const auto dir = run_set_dir(root, run_set);
    if (!fs::exists(dir)) return set;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        if (d.filename().string().find(".corrupt-") != std::string::npos) continue;
        try {
            set.runs.push_back(read_run(d));
        } catch (const StoreError& e) {
            set.warnings.push_back(e.what());
        }
    }
    std::sort(set.runs.begin(), set.runs.end(), [](const StoredRun& a, const StoredRun& b) {
        return std::tie(a.hidden_size, a.seed_index) < std::tie(b.hidden_size, b.seed_index);
    });
    return set;
}

std::vector<TrainingTrace> traces(const RunSet& set)
{
    std::vector<TrainingTrace> out;
    for (const auto& r : set.runs) {
        TrainingTrace t;
        t.hidden_size = r.hidden_size;
        t.n_params = r.n_params;
        t.seed = r.seed;
        t.rows = r.rows;
        t.grokking_epoch = r.grokking_epoch;
        out.push_back(std::move(t));
    }
    return out;
}

std::string synth_records_csv(const std::vector<TopologyRecords>& records)
{
    std::string out(kSynthHeader);
    out += '\n';
    for (const auto& t : records)
        for (const auto& r : t.records)
            out += std::string(to_string(t.topology)) + ',' + std::to_string(r.n_params) + ',' + std::to_string(r.seed) +
                   ',' + std::to_string(r.epoch) + ',' + std::to_string(r.avalanche_size) + ',' +
                   std::to_string(r.steps_taken) + ',' + format_double(r.threshold) + '\n';
    return out;
}

std::vector<TopologyRecords> read_synth_records(const fs::path& path)
{
    std::istringstream is(read_text(path));
    std::string line;
    if (!std::getline(is, line) || line != kSynthHeader) throw StoreError("unexpected synth header in " + path.string());
    std::map<std::string, TopologyRecords> by_topology;
    std::vector<std::string> order;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split(line, ',');
        if (c.size() != 7) throw StoreError("malformed synth row in " + path.string());
        try {
            CascadeRecord r;
            r.n_params = std::stoull(c[1]);
            r.seed = std::stoull(c[2]);
            r.epoch = std::stoull(c[3]);
            r.avalanche_size = std::stoull(c[4]);
            r.steps_taken = std::stoull(c[5]);
            r.threshold = std::stod(c[6]);
            auto [it, inserted] = by_topology.try_emplace(c[0], TopologyRecords{parse_topology(c[0]), {}});
            if (inserted) order.push_back(c[0]);
            it->second.records.push_back(r);
        } catch (const std::exception&) {
            throw StoreError("malformed synth row in " + path.string());
        }
    }
    std::vector<TopologyRecords> out;
    for (const auto& name : order) out.push_back(std::move(by_topology[name]));
    return out;
}

} // namespace grokfss::store
