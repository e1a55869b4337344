#include "grokfss/campaign.hpp"

#include "grokfss/acceptance.hpp"
#include "grokfss/errors.hpp"
#include "grokfss/seeding.hpp"
#include "grokfss/store.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace grokfss {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json fit_json(const ScalingFit& f)
{
    json pts = json::array();
    for (const auto& p : f.points) pts.push_back({p.n, p.value});
    return {{"exponent", f.exponent},   {"intercept", f.intercept}, {"r_squared", f.r_squared},
            {"std_error", f.std_error}, {"degenerate", f.degenerate}, {"statistic", to_string(f.kind)},
            {"points", pts}};
}

json bootstrap_json(const BootstrapResult& b)
{
    return {{"mean", b.mean},         {"std", b.std},         {"p025", b.p025},   {"p16", b.p16},
            {"p50", b.p50},           {"p84", b.p84},         {"p975", b.p975},   {"resamples", b.samples.size()},
            {"discarded", b.discarded}, {"excluded_runs", b.excluded_runs}, {"scales", b.scales}};
}

std::string samples_csv(const BootstrapResult& b)
{
    std::string out = "D\n";
    for (double v : b.samples) out += store::format_double(v) + "\n";
    return out;
}

json sweep_json(const SweepResult& s)
{
    json entries = json::array();
    for (const auto& e : s.entries) {
        json fits = json::array();
        for (const auto& f : e.fits) fits.push_back({{"topology", to_string(f.topology)}, {"fit", fit_json(f.fit)}});
        entries.push_back({{"value", e.value}, {"exponent", e.exponent}, {"cv_topology", e.cv_topology}, {"fits", fits}});
    }
    return {{"entries", entries}, {"cv", s.cv}, {"warnings", s.warnings}};
}

struct Job {
    std::size_t hidden;
    std::size_t seed_index;
};

std::optional<json> read_json_if_exists(const fs::path& p)
{
    if (!fs::exists(p)) return std::nullopt;
    try {
        return json::parse(store::read_text(p));
    } catch (const json::exception& e) {
        throw StoreError("unparseable " + p.string() + ": " + e.what());
    }
}

// Headline synthetic numbers from synth/summary.json; null when there is no synthetic campaign.
json synth_section(const fs::path& root)
{
    const auto synth = read_json_if_exists(root / "synth" / "summary.json");
    if (!synth) return nullptr;
    json s{{"d_synth", (*synth)["d_synth"]}, {"cv", (*synth)["cv"]}, {"fits", json::array()}};
    for (const auto& f : (*synth)["fits"])
        s["fits"].push_back({{"topology", f["topology"]}, {"exponent", f["exponent"]}, {"r_squared", f["r_squared"]}});
    return s;
}

json sweep_section(const fs::path& root)
{
    const auto sweep = read_json_if_exists(root / "synth" / "sweep.json");
    if (!sweep) return nullptr;
    json s;
    for (const char* key : {"alpha", "quantile"}) {
        json entries = json::array();
        for (const auto& e : (*sweep)[key]["entries"])
            entries.push_back({{"value", e["value"]}, {"exponent", e["exponent"]}, {"cv_topology", e["cv_topology"]}});
        s[key] = {{"entries", entries}, {"cv", (*sweep)[key]["cv"]}};
    }
    return s;
}

std::string gini_csv(const std::vector<store::StoredRun>& runs)
{
    std::string out = "h,seed_index,grokking_epoch,peak_epoch,peak,baseline,prominence,offset\n";
    for (const auto& r : runs) {
        TrainingTrace t;
        t.rows = r.rows;
        t.grokking_epoch = r.grokking_epoch;
        const auto a = gini_alignment(t);
        if (!a) continue;
        out += std::to_string(r.hidden_size) + "," + std::to_string(r.seed_index) + "," +
               std::to_string(a->grokking_epoch) + "," + std::to_string(a->peak_epoch) + "," +
               store::format_double(a->peak) + "," + store::format_double(a->baseline) + "," +
               store::format_double(a->prominence) + "," + store::format_double(a->offset) + "\n";
    }
    return out;
}

json gini_summary(const std::vector<store::StoredRun>& runs, double max_offset)
{
    std::vector<double> offsets, prominences;
    std::set<std::size_t> sizes;
    for (const auto& r : runs) {
        TrainingTrace t;
        t.rows = r.rows;
        t.grokking_epoch = r.grokking_epoch;
        sizes.insert(r.hidden_size);
        if (const auto a = gini_alignment(t)) {
            offsets.push_back(a->offset);
            prominences.push_back(a->prominence);
        }
    }
    json j{{"runs", runs.size()}, {"grokked_runs", offsets.size()},
           {"hidden_size", sizes.size() == 1 ? *sizes.begin() : std::size_t{0}}};
    if (!offsets.empty()) {
        j["median_offset"] = sample_quantile(offsets, 0.5);
        j["median_prominence"] = sample_quantile(prominences, 0.5);
        j["fraction_within_offset"] = static_cast<double>(std::count_if(
                                          offsets.begin(), offsets.end(), [&](double o) { return o <= max_offset; })) /
                                      static_cast<double>(offsets.size());
    }
    return j;
}

} // namespace

TrainReport cmd_train(const CampaignConfig& config, std::ostream& log)
{
    config.validate();
    const fs::path root = config.output_dir;
    const fs::path set_dir = store::run_set_dir(root, config.run_set);
    fs::create_directories(set_dir);
    store::write_text_atomic(set_dir / "campaign.json", to_json(config).dump(2) + "\n");

    TrainReport report;
    std::vector<Job> pending;
    for (std::size_t h : config.hidden_sizes) {
        for (std::size_t s = 0; s < config.seeds_per_scale; ++s) {
            const fs::path dir = set_dir / store::run_name(h, s);
            switch (store::check_run(dir, store::run_fingerprint(config, h, s))) {
            case store::RunStatus::complete:
                ++report.skipped;
                continue;
            case store::RunStatus::corrupt:
                log << "quarantined " << store::quarantine(dir).string() << "\n";
                ++report.quarantined;
                break;
            case store::RunStatus::missing:
                break;
            }
            pending.push_back({h, s});
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < pending.size(); i = next++) {
            const auto [h, s] = pending[i];
            try {
                const auto graph = generate_graph(config.topology, param_count(h), config.graph_params,
                                                  config.graph_seed(h, s));
                const RunResult result = train_run(config.train_config(h, s), graph);
                store::write_run(set_dir / store::run_name(h, s), result, store::run_fingerprint(config, h, s));
                std::lock_guard lock(log_mutex);
                log << "run h=" << h << " seed=" << s << " grokking_epoch="
                    << (result.trace.grokking_epoch ? std::to_string(*result.trace.grokking_epoch) : "none") << "\n";
            } catch (...) {
                std::lock_guard lock(log_mutex);
                if (!failure) failure = std::current_exception();
                next = pending.size();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.workers, pending.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    report.ran = pending.size();
    return report;
}

SynthCampaignResult cmd_synth(const CampaignConfig& config, bool sweeps, std::ostream& log)
{
    config.validate();
    const fs::path dir = fs::path(config.output_dir) / "synth";
    fs::create_directories(dir);
    const SynthConfig sc = config.synth_config();
    const SynthCampaignResult result = run_synth_campaign(sc, config.cascade);
    store::write_text_atomic(dir / "records.csv", store::synth_records_csv(result.records));

    json fits = json::array();
    for (const auto& f : result.fits) {
        fits.push_back({{"topology", to_string(f.topology)}, {"exponent", f.fit.exponent},
                        {"r_squared", f.fit.r_squared}, {"fit", fit_json(f.fit)}});
        log << "synth " << to_string(f.topology) << " D=" << f.fit.exponent << " R2=" << f.fit.r_squared << "\n";
    }
    const json summary{{"schema_version", store::kSchemaVersion},
                       {"config", store::synth_config_json(sc, config.cascade)},
                       {"fits", fits},
                       {"d_synth", result.d_synth},
                       {"cv", result.cv},
                       {"warnings", result.warnings}};
    store::write_text_atomic(dir / "summary.json", summary.dump(2) + "\n");
    log << "D_synth=" << result.d_synth << " cv=" << result.cv << "\n";

    if (sweeps) {
        const auto a = alpha_sweep(config.sweep_alphas, sc, config.cascade);
        const auto q = quantile_sweep(config.sweep_quantiles, sc, config.cascade);
        store::write_text_atomic(dir / "sweep.json", json{{"alpha", sweep_json(a)}, {"quantile", sweep_json(q)}}.dump(2) + "\n");
        log << "alpha sweep cv=" << a.cv << ", quantile sweep cv=" << q.cv << "\n";
    }
    return result;
}

json cmd_analyze(const CampaignConfig& config, std::ostream& log)
{
    config.validate();
    const fs::path root = config.output_dir;
    const fs::path out_dir = root / "analysis";

    const auto main_set = store::load_run_set(root, config.run_set);
    if (main_set.runs.empty())
        throw StoreError("no complete runs in " + store::run_set_dir(root, config.run_set).string());
    fs::create_directories(out_dir);

    json summary;
    summary["schema_version"] = store::kSchemaVersion;
    std::vector<std::string> warnings = main_set.warnings;

    // Coverage: which scales grokked.
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> coverage;  // h -> (runs, grokked)
    std::vector<CascadeRecord> grokked_records;
    for (const auto& r : main_set.runs) {
        auto& [total, grokked] = coverage[r.hidden_size];
        ++total;
        if (!r.grokking_epoch) continue;
        ++grokked;
        const auto recs = r.cascade_records();
        grokked_records.insert(grokked_records.end(), recs.begin(), recs.end());
    }
    std::string coverage_csv = "h,n_params,runs,grokked\n";
    std::size_t grokked_scales = 0;
    for (const auto& [h, c] : coverage) {
        coverage_csv += std::to_string(h) + "," + std::to_string(param_count(h)) + "," + std::to_string(c.first) +
                        "," + std::to_string(c.second) + "\n";
        if (c.second > 0) ++grokked_scales;
        else warnings.push_back("no run at h=" + std::to_string(h) + " grokked; scale excluded from fits");
    }
    store::write_text_atomic(out_dir / "coverage.csv", coverage_csv);
    summary["runs"] = main_set.runs.size();
    summary["grokked_scales"] = grokked_scales;

    std::vector<std::size_t> expected;
    for (std::size_t h : config.hidden_sizes) expected.push_back(param_count(h));

    // Aggregate fits.
    std::optional<ScalingFit> d_fit, g_fit;
    if (grokked_scales >= 3) {
        const auto agg_max = aggregate_stats(grokked_records, StatisticKind::max, expected);
        const auto agg_mean = aggregate_stats(grokked_records, StatisticKind::mean, expected);
        warnings.insert(warnings.end(), agg_max.warnings.begin(), agg_max.warnings.end());
        if (agg_max.points.size() >= 3) d_fit = fit_power_law(agg_max.points, StatisticKind::max);
        if (agg_mean.points.size() >= 3) g_fit = fit_power_law(agg_mean.points, StatisticKind::mean);
        std::string pts = "n_params,s_max,s_mean\n";
        for (std::size_t i = 0; i < agg_max.points.size(); ++i) {
            const auto n = agg_max.points[i].n;
            const auto it = std::find_if(agg_mean.points.begin(), agg_mean.points.end(),
                                         [&](const ScalePoint& p) { return p.n == n; });
            pts += store::format_double(n) + "," + store::format_double(agg_max.points[i].value) + "," +
                   (it != agg_mean.points.end() ? store::format_double(it->value) : "") + "\n";
        }
        store::write_text_atomic(out_dir / "fss_points.csv", pts);
    } else {
        warnings.push_back("fewer than 3 grokked scales; aggregate fits skipped");
    }
    if (d_fit) {
        summary["D_aggregate"] = d_fit->exponent;
        summary["D_aggregate_r2"] = d_fit->r_squared;
        summary["D_aggregate_fit"] = fit_json(*d_fit);
        log << "D=" << d_fit->exponent << " (R2 " << d_fit->r_squared << ")\n";
    }
    if (g_fit) {
        summary["gamma"] = g_fit->exponent;
        summary["gamma_r2"] = g_fit->r_squared;
        summary["gamma_fit"] = fit_json(*g_fit);
        log << "gamma=" << g_fit->exponent << " (R2 " << g_fit->r_squared << ")\n";
    }

    // Leave-one-out.
    if (d_fit && d_fit->points.size() >= 4) {
        const auto loo = leave_one_out(d_fit->points, StatisticKind::max);
        std::string csv = "excluded_n,D,r_squared,deviation\n";
        double worst = 0.0;
        for (const auto& l : loo) {
            const double dev = std::abs(l.fit.exponent - d_fit->exponent);
            worst = std::max(worst, dev);
            csv += store::format_double(l.excluded_n) + "," + store::format_double(l.fit.exponent) + "," +
                   store::format_double(l.fit.r_squared) + "," + store::format_double(dev) + "\n";
        }
        store::write_text_atomic(out_dir / "loo.csv", csv);
        summary["loo_max_deviation"] = worst;
        summary["loo_exclusions"] = loo.size();
    }

    // Time-resolved D at the snapshot epochs.
    {
        std::vector<std::size_t> epochs;
        for (std::size_t e = 0; e <= config.epochs; e += config.snapshot_interval) epochs.push_back(e);
        const auto ts = time_resolved_D(grokked_records, epochs, config.time_window);
        std::string csv = "epoch,D,r_squared,std_error,n_scales\n";
        for (const auto& p : ts.series)
            csv += std::to_string(p.epoch) + "," + store::format_double(p.fit.exponent) + "," +
                   store::format_double(p.fit.r_squared) + "," + store::format_double(p.fit.std_error) + "," +
                   std::to_string(p.fit.points.size()) + "\n";
        store::write_text_atomic(out_dir / "dt_series.csv", csv);
        if (!ts.warnings.empty()) warnings.push_back(std::to_string(ts.warnings.size()) + " D(t) windows skipped");
    }

    // CCDFs and collapse.
    if (d_fit) {
        std::map<std::size_t, std::vector<double>> sizes;
        for (const auto& r : grokked_records)
            if (r.avalanche_size > 0) sizes[r.n_params].push_back(static_cast<double>(r.avalanche_size));
        std::vector<CcdfCurve> curves;
        std::string csv = "n_params,s,P,s_rescaled\n";
        for (const auto& [n, s] : sizes) {
            curves.push_back(ccdf(s, static_cast<double>(n)));
            const auto& c = curves.back();
            const auto rescaled = c.rescaled(d_fit->exponent);
            for (std::size_t i = 0; i < c.support.size(); ++i)
                csv += std::to_string(n) + "," + store::format_double(c.support[i]) + "," +
                       store::format_double(c.probabilities[i]) + "," + store::format_double(rescaled[i]) + "\n";
        }
        store::write_text_atomic(out_dir / "ccdf.csv", csv);
        if (curves.size() >= 2) {
            summary["collapse_dispersion_fitted"] = collapse_dispersion(curves, d_fit->exponent);
            summary["collapse_dispersion_unscaled"] = collapse_dispersion(curves, 0.0);
        }
    }

    // Phase-resolved bootstrap.
    std::vector<CascadeRecord> all_records;
    for (const auto& r : main_set.runs) {
        const auto recs = r.cascade_records();
        all_records.insert(all_records.end(), recs.begin(), recs.end());
    }
    for (const auto& [phase, key, file] : {std::tuple{Phase::pre, "bootstrap_pre", "bootstrap_pre.csv"},
                                          std::tuple{Phase::post, "bootstrap_post", "bootstrap_post.csv"}}) {
        BootstrapConfig bc;
        bc.n_resamples = config.bootstrap_resamples;
        bc.rng_seed = derive_seed(config.master_seed, 0, 0, key);
        bc.kind = StatisticKind::max;
        bc.unit = config.resample_unit;
        try {
            const auto b = bootstrap_D(all_records, phase, bc);
            store::write_text_atomic(out_dir / file, samples_csv(b));
            summary[key] = bootstrap_json(b);
            log << key << " mean=" << b.mean << " [" << b.p025 << ", " << b.p975 << "]\n";
        } catch (const InvalidInput& e) {
            warnings.push_back(std::string(key) + ": " + e.what());
        }
    }
    if (summary.contains("bootstrap_pre")) summary["D_pre"] = summary["bootstrap_pre"]["mean"];
    if (summary.contains("bootstrap_post")) summary["D_post"] = summary["bootstrap_post"]["mean"];

    // Synthetic control, if a synth campaign is in the store.
    const json synth = synth_section(root);
    summary["synth"] = synth;
    if (!synth.is_null()) {
        const auto topo_records = store::read_synth_records(root / "synth" / "records.csv");
        std::vector<CascadeRecord> pooled;
        for (const auto& t : topo_records) pooled.insert(pooled.end(), t.records.begin(), t.records.end());
        BootstrapConfig bc;
        bc.n_resamples = config.bootstrap_resamples;
        bc.rng_seed = derive_seed(config.master_seed, 0, 0, "bootstrap_synth");
        bc.kind = StatisticKind::mean_total;
        bc.unit = ResampleUnit::records;
        const auto b = bootstrap_D(pooled, std::nullopt, bc);
        store::write_text_atomic(out_dir / "bootstrap_synth.csv", samples_csv(b));
        summary["synth"]["bootstrap"] = bootstrap_json(b);
        summary["D_synth"] = synth["d_synth"];
        summary["cv_topology"] = synth["cv"];
    } else {
        warnings.push_back("no synthetic campaign in the store");
    }
    summary["sweep"] = sweep_section(root);

    // Gini alignment.
    store::write_text_atomic(out_dir / "gini_main.csv", gini_csv(main_set.runs));
    summary["gini_main"] = gini_summary(main_set.runs, config.tolerances.gini_max_offset);
    const auto gini_set = store::load_run_set(root, config.gini_run_set);
    if (!gini_set.runs.empty()) {
        store::write_text_atomic(out_dir / "gini_validation.csv", gini_csv(gini_set.runs));
        summary["gini_validation"] = gini_summary(gini_set.runs, config.tolerances.gini_max_offset);
    } else {
        summary["gini_validation"] = nullptr;
    }

    // Cascade length diagnostics.
    {
        std::vector<double> steps;
        std::size_t saturated = 0;
        for (const auto& r : all_records) {
            steps.push_back(static_cast<double>(r.steps_taken));
            if (r.steps_taken >= config.cascade.max_steps) ++saturated;
        }
        summary["median_cascade_steps"] = sample_quantile(steps, 0.5);
        summary["max_steps_fraction"] = static_cast<double>(saturated) / static_cast<double>(steps.size());
    }

    store::write_text_atomic(out_dir / "plots.gp",
                             "set datafile separator ','\n"
                             "set logscale xy\n"
                             "set key autotitle columnhead\n"
                             "set terminal pngcairo size 900,600\n"
                             "set output 'fss.png'\n"
                             "plot 'fss_points.csv' using 1:2 with linespoints, '' using 1:3 with linespoints\n"
                             "set output 'ccdf_collapse.png'\n"
                             "plot 'ccdf.csv' using 4:3 with points pointtype 7 pointsize 0.4\n"
                             "unset logscale\n"
                             "set output 'dt_series.png'\n"
                             "plot 'dt_series.csv' using 1:2 with lines\n"
                             "set output 'bootstrap.png'\n"
                             "set style fill transparent solid 0.4\n"
                             "bin(x) = 0.01 * floor(x / 0.01)\n"
                             "plot 'bootstrap_pre.csv' using (bin($1)):(1) smooth frequency with boxes title 'pre', "
                             "'bootstrap_post.csv' using (bin($1)):(1) smooth frequency with boxes title 'post'\n");

    summary["warnings"] = warnings;
    summary["tolerances"] = to_json(config.tolerances);
    for (const auto& w : warnings) log << "warning: " << w << "\n";
    store::write_text_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
    return summary;
}

int cmd_report(const CampaignConfig& config, std::ostream& out)
{
    config.validate();
    const fs::path root = config.output_dir;
    // Without a training analysis the synthetic criteria are still evaluated from synth/.
    auto summary = read_json_if_exists(root / "analysis" / "summary.json");
    if (!summary) {
        const json synth = synth_section(root);
        if (!synth.is_null()) summary = json{{"synth", synth}, {"sweep", sweep_section(root)}};
    }
    const json* s = summary ? &*summary : nullptr;
    const auto& tol = config.tolerances;
    namespace acc = acceptance;
    const std::vector<acc::Criterion> results{
        acc::cascade_oracle(tol),
        acc::conservation(tol, config.master_seed),
        acc::gradient_check(tol, config.master_seed),
        acc::planted_exponents(tol, config.master_seed),
        acc::synthetic_control(s, tol),
        acc::topology_invariance(s, tol),
        acc::aggregate_fss(s, tol),
        acc::phase_separation(s, tol),
        acc::leave_one_out_stability(s, tol),
        acc::gini_transient(s, tol),
        acc::determinism(root, config.run_set),
        acc::data_collapse(s, root / "analysis" / "ccdf.csv"),
    };
    std::size_t passed = 0;
    for (const auto& c : results) {
        out << acc::format_line(c) << "\n";
        if (c.verdict == acc::Verdict::pass) ++passed;
    }
    out << passed << "/" << results.size() << " criteria passed\n";
    return passed == results.size() ? 0 : 2;
}

} // namespace grokfss
