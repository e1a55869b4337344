// grokfss: training campaigns, synthetic control, analysis and acceptance report.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 acceptance criteria not met, 3 corrupt or unusable store.

#include "grokfss/campaign.hpp"
#include "grokfss/errors.hpp"
#include "grokfss/graph.hpp"
#include "grokfss/store.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace grokfss;

namespace {

template <class Enum, class Parse>
CLI::Option* add_enum(CLI::App& app, const std::string& flag, Enum& target, Parse parse, const std::string& help)
{
    return app
        .add_option_function<std::string>(flag, [&target, parse](const std::string& s) { target = parse(s); }, help)
        ->default_str(std::string(to_string(target)));
}

std::vector<double> read_numbers(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw StoreError("cannot open " + path);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        if (tok.front() == '#') {
            std::getline(in, tok);
            continue;
        }
        for (char& c : tok)
            if (c == ',') c = ' ';
        std::istringstream ts(tok);
        double v;
        while (ts >> v) out.push_back(v);
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CampaignConfig cfg;
    CLI::App app{"Gradient-cascade finite-size scaling experiments on XOR perceptrons"};
    app.set_config("--config", "", "Read options from a TOML/INI file");
    app.require_subcommand(1);
    app.fallthrough();

    auto& t = cfg.tolerances;
    app.add_option("--output-dir", cfg.output_dir, "Store root")->envname("GROKFSS_OUTPUT_DIR")->capture_default_str();
    app.add_option("--master-seed", cfg.master_seed, "Seed every derived stream is drawn from")->capture_default_str();
    app.add_option("--run-set", cfg.run_set, "Run set for train/analyze")->capture_default_str();
    app.add_option("--hidden-sizes", cfg.hidden_sizes, "Hidden widths")->capture_default_str();
    app.add_option("--seeds", cfg.seeds_per_scale, "Seeds per width")->capture_default_str();
    app.add_option("--epochs", cfg.epochs)->capture_default_str();
    app.add_option("--eta", cfg.eta, "Learning rate")->capture_default_str();
    app.add_option("--snapshot-interval", cfg.snapshot_interval)->capture_default_str();
    app.add_option("--grokking-window", cfg.grokking_window)->capture_default_str();
    app.add_option("--alpha", cfg.cascade.alpha, "Redistribution fraction")->capture_default_str();
    app.add_option("--quantile", cfg.cascade.quantile, "Threshold quantile of |g|")->capture_default_str();
    app.add_option("--max-steps", cfg.cascade.max_steps)->capture_default_str();
    add_enum(app, "--topology", cfg.topology, parse_topology, "Diffusion graph for training");
    app.add_option("--ba-m", cfg.graph_params.ba_m)->capture_default_str();
    app.add_option("--er-mean-degree", cfg.graph_params.er_mean_degree)->capture_default_str();
    app.add_option("--ws-degree", cfg.graph_params.ws_degree)->capture_default_str();
    app.add_option("--ws-rewire", cfg.graph_params.ws_rewire)->capture_default_str();
    add_enum(app, "--init-scheme", cfg.init_scheme, parse_init_scheme, "gaussian or fan_in");
    app.add_option("--init-scale", cfg.init_scale)->capture_default_str();
    add_enum(app, "--activation", cfg.activation, parse_activation, "tanh, relu or sigmoid");
    add_enum(app, "--probe-mode", cfg.probe_mode, parse_probe_mode, "inline or shadow");
    app.add_option("--workers", cfg.workers, "Training threads")->capture_default_str();
    app.add_option("--time-window", cfg.time_window)->capture_default_str();
    app.add_option("--bootstrap-resamples", cfg.bootstrap_resamples)->capture_default_str();
    add_enum(app, "--resample-unit", cfg.resample_unit, parse_resample_unit, "records or runs");
    app.add_option("--gini-run-set", cfg.gini_run_set)->capture_default_str();
    app.add_option("--synth-sigma", cfg.synth_sigma)->capture_default_str();
    app.add_option("--synth-trials", cfg.synth_trials)->capture_default_str();
    app.add_option("--synth-seeds", cfg.synth_seeds)->capture_default_str();
    app.add_option("--synth-scales", cfg.synth_scales)->capture_default_str();
    app.add_option_function<std::vector<std::string>>(
        "--synth-topologies",
        [&](const std::vector<std::string>& names) {
            cfg.synth_topologies.clear();
            for (const auto& n : names) cfg.synth_topologies.push_back(parse_topology(n));
        });
    app.add_option("--sweep-alphas", cfg.sweep_alphas)->capture_default_str();
    app.add_option("--sweep-quantiles", cfg.sweep_quantiles)->capture_default_str();

    auto* tol = app.add_option_group("tolerances", "Acceptance thresholds");
    tol->add_option("--tol-d-synth-min", t.d_synth_min);
    tol->add_option("--tol-d-synth-max", t.d_synth_max);
    tol->add_option("--tol-cv-topology", t.cv_topology_max);
    tol->add_option("--tol-cv-sweep", t.cv_sweep_max);
    tol->add_option("--tol-d-min", t.d_aggregate_min);
    tol->add_option("--tol-d-max", t.d_aggregate_max);
    tol->add_option("--tol-gamma-min", t.gamma_min);
    tol->add_option("--tol-gamma-max", t.gamma_max);
    tol->add_option("--tol-r2", t.fss_r2_min);
    tol->add_option("--tol-phase-separation", t.phase_separation_min);
    tol->add_option("--tol-loo", t.loo_max_dev);
    tol->add_option("--tol-gini-offset", t.gini_max_offset);
    tol->add_option("--tol-gini-prominence", t.gini_min_prominence);
    tol->add_option("--tol-gini-seeds", t.gini_min_seeds);
    tol->add_option("--conservation-trials", t.conservation_trials);

    auto* train = app.add_subcommand("train", "Train every (width, seed) of the campaign; resumable");
    train->add_flag("--trace-only", cfg.trace_only, "Skip gradient snapshots");

    auto* synth = app.add_subcommand("synth", "Synthetic Gaussian control across topologies");
    bool sweeps = false;
    synth->add_flag("--sweeps", sweeps, "Also run the alpha and quantile sweeps");

    app.add_subcommand("analyze", "Fit, bootstrap and write analysis datasets");
    app.add_subcommand("report", "Evaluate the acceptance criteria against the store");

    auto* all = app.add_subcommand("all", "train, gini validation set, synth --sweeps, analyze, report");
    std::size_t gini_hidden = 21, gini_seeds = 100;
    all->add_option("--gini-hidden", gini_hidden, "Width of the trace-only Gini set")->capture_default_str();
    all->add_option("--gini-seeds", gini_seeds, "Seeds in the Gini set (0 skips it)")->capture_default_str();

    auto* debug = app.add_subcommand("cascade-debug", "Run one cascade on a stored graph and gradient");
    std::string graph_path, gradient_path;
    std::optional<double> fixed_threshold;
    debug->add_option("--graph", graph_path, "Edge-list file")->required()->check(CLI::ExistingFile);
    debug->add_option("--gradient", gradient_path, "Whitespace or comma separated values")
        ->required()
        ->check(CLI::ExistingFile);
    debug->add_option("--threshold", fixed_threshold, "Use this threshold instead of the quantile");

    auto* gexport = app.add_subcommand("graph-export", "Write a generated graph as an edge list");
    std::size_t gexport_n = 0;
    std::uint64_t gexport_seed = 0;
    std::string gexport_out;
    gexport->add_option("--n", gexport_n, "Number of nodes")->required();
    gexport->add_option("--graph-seed", gexport_seed)->capture_default_str();
    gexport->add_option("--out", gexport_out, "Output file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (train->parsed()) {
            const auto r = cmd_train(cfg, std::cerr);
            std::cout << "ran " << r.ran << ", skipped " << r.skipped << ", quarantined " << r.quarantined << "\n";
        } else if (synth->parsed()) {
            cmd_synth(cfg, sweeps, std::cerr);
        } else if (app.got_subcommand("analyze")) {
            std::cout << cmd_analyze(cfg, std::cerr).dump(2) << "\n";
        } else if (app.got_subcommand("report")) {
            return cmd_report(cfg, std::cout);
        } else if (all->parsed()) {
            cmd_train(cfg, std::cerr);
            if (gini_seeds > 0) {
                CampaignConfig g = cfg;
                g.run_set = cfg.gini_run_set;
                g.hidden_sizes = {gini_hidden};
                g.seeds_per_scale = gini_seeds;
                g.trace_only = true;
                cmd_train(g, std::cerr);
            }
            cmd_synth(cfg, true, std::cerr);
            cmd_analyze(cfg, std::cerr);
            return cmd_report(cfg, std::cout);
        } else if (debug->parsed()) {
            cfg.cascade.validate();
            std::ifstream gin(graph_path);
            const auto graph = read_edge_list(gin);
            const auto gradient = read_numbers(gradient_path);
            const auto r = fixed_threshold ? run_cascade_with_threshold(gradient, graph, *fixed_threshold, cfg.cascade)
                                           : run_cascade(gradient, graph, cfg.cascade);
            std::cout << "threshold " << store::format_double(r.record.threshold) << "\n"
                      << "avalanche_size " << r.record.avalanche_size << "\n"
                      << "steps " << r.record.steps_taken << "\n"
                      << "field";
            for (double v : r.field) std::cout << " " << store::format_double(v);
            std::cout << "\n";
        } else if (gexport->parsed()) {
            const auto g = generate_graph(cfg.topology, gexport_n, cfg.graph_params, gexport_seed);
            if (gexport_out.empty()) {
                write_edge_list(std::cout, g);
            } else {
                std::ofstream out(gexport_out);
                write_edge_list(out, g);
            }
        }
    } catch (const StoreError& e) {
        std::cerr << "store error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
