#include "grokfss/acceptance.hpp"

#include "grokfss/cascade.hpp"
#include "grokfss/errors.hpp"
#include "grokfss/fss.hpp"
#include "grokfss/graph.hpp"
#include "grokfss/mlp.hpp"
#include "grokfss/seeding.hpp"
#include "grokfss/store.hpp"
#include "grokfss/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace grokfss::acceptance {

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::unevaluable: return "UNEVALUABLE";
    }
    return "?";
}

std::string format_line(const Criterion& c)
{
    std::ostringstream os;
    os << "[" << to_string(c.verdict) << "] " << c.id << ". " << c.title << ": " << c.detail;
    return os.str();
}

namespace {

Criterion make(int id, std::string title) { return Criterion{id, std::move(title), Verdict::unevaluable, ""}; }

Verdict verdict(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

std::string num(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

struct CascadeFixture {
    const char* name;
    std::size_t n;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> gradient;
    double tau;  // < 0: derive from the quantile
    double quantile;
    double alpha;
    std::size_t max_steps;
    std::vector<double> expected_field;
    std::size_t expected_size;
    std::size_t expected_steps;
};

// Expected values worked by hand and cross-checked with tests/oracles/cascade_fixtures.py.
const std::vector<CascadeFixture>& fixtures()
{
    static const std::vector<CascadeFixture> f{
        {"ring3_fixed", 3, {{0, 1}, {1, 2}, {2, 0}}, {1.0, 0.0, 0.0}, 0.5, 0.9, 0.3, 20, {0.49, 0.255, 0.255}, 2, 2},
        {"ring3_q90", 3, {{0, 1}, {1, 2}, {2, 0}}, {1.0, 0.0, 0.0}, -1.0, 0.9, 0.3, 20, {0.7, 0.15, 0.15}, 1, 1},
        {"star4", 4, {{0, 1}, {0, 2}, {0, 3}}, {0.9, -0.3, 0.0, 0.6}, 0.5, 0.9, 0.3, 20,
         {0.35406, 0.04398, 0.34398, 0.45798}, 8, 5},
        {"path_isolated5", 5, {{0, 1}, {1, 2}, {2, 3}}, {0.0, 0.0, 2.0, 0.0, 5.0}, 1.0, 0.9, 0.5, 20,
         {0.0, 0.5, 1.0, 0.5, 5.0}, 1, 1},
        {"ring4_pair_3steps", 4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {1.0, 1.0, 0.0, 0.0}, 0.5, 0.9, 0.3, 3,
         {0.614125, 0.614125, 0.385875, 0.385875}, 6, 3},
        {"k4_tail6_q90", 6, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 5}},
         {-1.2, 0.4, 0.1, 0.9, -0.2, 0.0}, -1.0, 0.9, 0.25, 20, {-0.9, 0.3, 0.0, 0.8, -0.2, 0.0}, 1, 1},
    };
    return f;
}

const nlohmann::json* section(const nlohmann::json* summary, const char* key)
{
    if (!summary || !summary->contains(key) || (*summary)[key].is_null()) return nullptr;
    return &(*summary)[key];
}

bool has_numbers(const nlohmann::json& j, std::initializer_list<const char*> keys)
{
    return std::all_of(keys.begin(), keys.end(),
                       [&](const char* k) { return j.contains(k) && j[k].is_number(); });
}

} // namespace

Criterion cascade_oracle(const Tolerances& tol)
{
    Criterion c = make(1, "Cascade oracle equivalence");
    double worst = 0.0;
    std::size_t failures = 0;
    for (const auto& f : fixtures()) {
        const DiffusionGraph g(f.n, f.edges, Topology::ring);
        CascadeConfig cfg;
        cfg.alpha = f.alpha;
        cfg.quantile = f.quantile;
        cfg.max_steps = f.max_steps;
        const CascadeResult r = f.tau < 0.0 ? run_cascade(f.gradient, g, cfg)
                                            : run_cascade_with_threshold(f.gradient, g, f.tau, cfg);
        double err = 0.0;
        for (std::size_t i = 0; i < f.n; ++i) err = std::max(err, std::abs(r.field[i] - f.expected_field[i]));
        worst = std::max(worst, err);
        if (err > tol.cascade_oracle || r.record.avalanche_size != f.expected_size ||
            r.record.steps_taken != f.expected_steps)
            ++failures;
    }
    c.verdict = verdict(failures == 0);
    c.detail = std::to_string(fixtures().size()) + " fixtures, " + std::to_string(failures) +
               " mismatches, max field error " + num(worst) + " (tol " + num(tol.cascade_oracle) + ")";
    return c;
}

Criterion conservation(const Tolerances& tol, std::uint64_t seed)
{
    Criterion c = make(2, "Conservation");
    std::mt19937_64 rng(derive_seed(seed, 0, 0, "conservation"));
    std::uniform_int_distribution<std::size_t> pick_n(5, 150);
    std::uniform_int_distribution<std::size_t> pick_topo(0, std::size(kAllTopologies) - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < tol.conservation_trials; ++t) {
        const std::size_t n = pick_n(rng);
        const auto graph = generate_graph(kAllTopologies[pick_topo(rng)], n, {}, rng());
        const double scale = std::exp(6.0 * u(rng) - 3.0);
        const bool heavy = u(rng) < 0.5;
        std::vector<double> field(n);
        for (double& v : field) {
            v = scale * normal(rng);
            if (heavy) v /= std::max(0.05, u(rng));
        }
        CascadeConfig cfg;
        cfg.alpha = 0.05 + 0.9 * u(rng);
        cfg.quantile = 0.5 + 0.49 * u(rng);
        const auto r = run_cascade(field, graph, cfg);
        double before = 0.0, after = 0.0, mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            before += field[i];
            after += r.field[i];
            mass += std::abs(field[i]);
        }
        worst = std::max(worst, std::abs(after - before) / mass);
    }
    c.verdict = verdict(worst < tol.conservation);
    c.detail = std::to_string(tol.conservation_trials) + " random cascades, max |sum change| / sum|g| = " + num(worst) +
               " (tol " + num(tol.conservation) + ")";
    return c;
}

std::vector<double> finite_difference_gradient(const MlpModel& model, double step)
{
    ParameterField theta = model.flatten();
    std::vector<double> out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double keep = theta[i];
        theta[i] = keep + step;
        const double up = forward(MlpModel::unflatten(theta, model.hidden_size, model.hidden_activation)).loss;
        theta[i] = keep - step;
        const double down = forward(MlpModel::unflatten(theta, model.hidden_size, model.hidden_activation)).loss;
        theta[i] = keep;
        out[i] = (up - down) / (2.0 * step);
    }
    return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor)
{
    if (a.size() != b.size()) throw StructuralError("relative error of vectors with different lengths");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

Criterion gradient_check(const Tolerances& tol, std::uint64_t seed)
{
    Criterion c = make(3, "Gradient correctness");
    double worst = 0.0;
    std::size_t models = 0;
    for (std::size_t h : {1U, 3U, 20U}) {
        for (std::size_t k = 0; k < 10; ++k) {
            const auto m = MlpModel::gaussian(h, 1.0, derive_seed(seed, h, k, "gradcheck"));
            worst = std::max(worst, max_relative_error(backward(m), finite_difference_gradient(m, 1e-5)));
            ++models;
        }
    }
    c.verdict = verdict(worst < tol.gradient_rel_error);
    c.detail = std::to_string(models) + " models (h in {1,3,20}), max relative error " + num(worst) + " (tol " +
               num(tol.gradient_rel_error) + ")";
    return c;
}

Criterion planted_exponents(const Tolerances& tol, std::uint64_t seed)
{
    Criterion c = make(4, "Planted-exponent recovery");
    std::mt19937_64 rng(derive_seed(seed, 0, 0, "planted"));
    std::normal_distribution<double> noise(0.0, 0.01);
    double worst = 0.0;
    for (double beta : {0.5, 1.0, 1.5}) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<ScalePoint> pts;
            for (std::size_t n : kDefaultScales)
                pts.push_back({static_cast<double>(n), 3.0 * std::pow(static_cast<double>(n), beta) * (1.0 + noise(rng))});
            worst = std::max(worst, std::abs(fit_power_law(pts).exponent - beta));
        }
    }
    c.verdict = verdict(worst <= tol.planted_exponent);
    c.detail = "300 noisy fits, max |slope - beta| = " + num(worst) + " (tol " + num(tol.planted_exponent) + ")";
    return c;
}

Criterion synthetic_control(const nlohmann::json* summary, const Tolerances& tol)
{
    Criterion c = make(5, "Synthetic control D_synth");
    const auto* synth = section(summary, "synth");
    if (!synth || !has_numbers(*synth, {"d_synth"}) || !synth->contains("fits")) {
        c.detail = "no synthetic campaign in the analysis summary";
        return c;
    }
    const double d = (*synth)["d_synth"].get<double>();
    double min_r2 = 1.0;
    for (const auto& f : (*synth)["fits"]) min_r2 = std::min(min_r2, f["r_squared"].get<double>());
    c.verdict = verdict(d >= tol.d_synth_min && d <= tol.d_synth_max && min_r2 > tol.synth_r2_min);
    c.detail = "D_synth = " + num(d) + " (want [" + num(tol.d_synth_min) + ", " + num(tol.d_synth_max) +
               "]), min per-topology R^2 = " + num(min_r2) + " (want > " + num(tol.synth_r2_min) +
               "); reference 0.99 +/- 0.01";
    return c;
}

Criterion topology_invariance(const nlohmann::json* summary, const Tolerances& tol)
{
    Criterion c = make(6, "Topology invariance");
    const auto* synth = section(summary, "synth");
    const auto* sweep = section(summary, "sweep");
    if (!synth || !has_numbers(*synth, {"cv"})) {
        c.detail = "no synthetic campaign in the analysis summary";
        return c;
    }
    if (!sweep || !sweep->contains("alpha") || !sweep->contains("quantile")) {
        c.detail = "no alpha/quantile sweep in the analysis summary";
        return c;
    }
    const double cv = (*synth)["cv"].get<double>();
    double worst_sweep = 0.0;
    std::string per_value;
    for (const char* key : {"alpha", "quantile"}) {
        for (const auto& e : (*sweep)[key]["entries"]) {
            const double v = e["cv_topology"].get<double>();
            worst_sweep = std::max(worst_sweep, v);
            per_value += std::string(key) + "=" + num(e["value"].get<double>()) + ":" + num(100.0 * v) + "% ";
        }
    }
    c.verdict = verdict(cv < tol.cv_topology_max && worst_sweep < tol.cv_sweep_max);
    c.detail = "CV at defaults " + num(100.0 * cv) + "% (want < " + num(100.0 * tol.cv_topology_max) +
               "%), worst sweep CV " + num(100.0 * worst_sweep) + "% (want < " + num(100.0 * tol.cv_sweep_max) +
               "%) [" + per_value + "]; reference CV < 0.3%";
    return c;
}

Criterion aggregate_fss(const nlohmann::json* summary, const Tolerances& tol)
{
    Criterion c = make(7, "Aggregate FSS D and gamma");
    if (!summary || !has_numbers(*summary, {"D_aggregate", "gamma", "D_aggregate_r2", "gamma_r2"})) {
        c.detail = "training fits missing from the analysis summary";
        return c;
    }
    const double d = (*summary)["D_aggregate"], g = (*summary)["gamma"];
    const double rd = (*summary)["D_aggregate_r2"], rg = (*summary)["gamma_r2"];
    const std::size_t grokked = summary->value("grokked_scales", std::size_t{0});
    const bool ok = d >= tol.d_aggregate_min && d <= tol.d_aggregate_max && g >= tol.gamma_min && g <= tol.gamma_max &&
                    rd > tol.fss_r2_min && rg > tol.fss_r2_min && grokked >= tol.min_grokked_scales;
    c.verdict = verdict(ok);
    c.detail = "D = " + num(d) + " (R^2 " + num(rd) + "), gamma = " + num(g) + " (R^2 " + num(rg) + "), " +
               std::to_string(grokked) + " grokked scales; want D in [" + num(tol.d_aggregate_min) + ", " +
               num(tol.d_aggregate_max) + "], gamma in [" + num(tol.gamma_min) + ", " + num(tol.gamma_max) +
               "], R^2 > " + num(tol.fss_r2_min) + "; reference D = 1.00 +/- 0.02, gamma = 1.15 +/- 0.06";
    return c;
}

Criterion phase_separation(const nlohmann::json* summary, const Tolerances& tol)
{
    Criterion c = make(8, "Phase separation D_pre < D_synth < D_post");
    const auto* pre = section(summary, "bootstrap_pre");
    const auto* post = section(summary, "bootstrap_post");
    const auto* synth = section(summary, "synth");
    if (!pre || !post) {
        c.detail = "phase-resolved bootstrap missing from the analysis summary";
        return c;
    }
    if (!synth || !has_numbers(*synth, {"d_synth"})) {
        c.detail = "D_synth missing; ordering cannot be evaluated";
        return c;
    }
    const double dpre = (*pre)["mean"], dpost = (*post)["mean"], dsynth = (*synth)["d_synth"];
    const double pre_hi = (*pre)["p975"], post_lo = (*post)["p025"];
    const bool ok = dpost - dpre > tol.phase_separation_min && pre_hi < post_lo && dpre < dsynth && dsynth < dpost;
    c.verdict = verdict(ok);
    c.detail = "D_pre = " + num(dpre) + " [95%: " + num((*pre)["p025"].get<double>()) + ", " + num(pre_hi) +
               "], D_post = " + num(dpost) + " [95%: " + num(post_lo) + ", " + num((*post)["p975"].get<double>()) +
               "], D_synth = " + num(dsynth) + ", separation " + num(dpost - dpre) + " (want > " +
               num(tol.phase_separation_min) + "); reference D_pre = 0.90, D_post = 1.20";
    return c;
}

Criterion leave_one_out_stability(const nlohmann::json* summary, const Tolerances& tol)
{
    Criterion c = make(9, "Leave-one-out stability");
    if (!summary || !has_numbers(*summary, {"loo_max_deviation"})) {
        c.detail = "leave-one-out table missing from the analysis summary";
        return c;
    }
    const double dev = (*summary)["loo_max_deviation"];
    const std::size_t n = summary->value("loo_exclusions", std::size_t{0});
    c.verdict = verdict(dev < tol.loo_max_dev);
    c.detail = "max |D_loo - D_full| = " + num(dev) + " over " + std::to_string(n) + " exclusions (want < " +
               num(tol.loo_max_dev) + ")";
    return c;
}

Criterion gini_transient(const nlohmann::json* summary, const Tolerances& tol)
{
    Criterion c = make(10, "Gini transient at grokking");
    const auto* g = section(summary, "gini_validation");
    if (!g || !has_numbers(*g, {"median_offset", "median_prominence"})) {
        c.detail = "no trace-only Gini run set analysed";
        return c;
    }
    const std::size_t seeds = g->value("grokked_runs", std::size_t{0});
    const double offset = (*g)["median_offset"], prominence = (*g)["median_prominence"];
    const bool ok = seeds >= tol.gini_min_seeds && offset <= tol.gini_max_offset && prominence >= tol.gini_min_prominence;
    c.verdict = verdict(ok);
    c.detail = std::to_string(seeds) + " grokked seeds at h=" + std::to_string(g->value("hidden_size", 0)) +
               ", median |argmax(Gini) - grokking epoch| = " + num(offset) + " (want <= " + num(tol.gini_max_offset) +
               "), median prominence " + num(100.0 * prominence) + "% (want >= " +
               num(100.0 * tol.gini_min_prominence) + "%)";
    return c;
}

Criterion determinism(const std::filesystem::path& root, const std::string& run_set)
{
    Criterion c = make(11, "Determinism");
    namespace fs = std::filesystem;
    const auto set_dir = store::run_set_dir(root, run_set);
    std::size_t compared = 0, mismatched = 0;
    if (fs::exists(set_dir)) {
        std::vector<fs::path> dirs;
        for (const auto& e : fs::directory_iterator(set_dir))
            if (e.is_directory() && e.path().filename().string().find(".corrupt-") == std::string::npos)
                dirs.push_back(e.path());
        std::sort(dirs.begin(), dirs.end());
        for (const auto& d : dirs) {
            const auto run = store::read_run(d);
            const auto& fp = run.meta["run"];
            const TrainConfig t = store::train_config_from_fingerprint(fp);
            const RunResult r = train_run(t, store::graph_from_fingerprint(fp));
            bool same = store::trace_csv(r.trace) == store::read_text(d / "trace.csv");
            if (t.keep_snapshots) same = same && store::snapshots_csv(r.trace, r.snapshots) == store::read_text(d / "snapshots.csv");
            ++compared;
            if (!same) ++mismatched;
        }
    }
    const auto synth_summary = root / "synth" / "summary.json";
    bool synth_checked = false;
    if (fs::exists(synth_summary)) {
        const auto j = nlohmann::json::parse(store::read_text(synth_summary));
        const auto [sc, cc] = store::synth_configs_from_json(j["config"]);
        const auto result = run_synth_campaign(sc, cc);
        synth_checked = true;
        ++compared;
        if (store::synth_records_csv(result.records) != store::read_text(root / "synth" / "records.csv")) ++mismatched;
    }
    if (compared == 0) {
        c.detail = "no stored runs to regenerate";
        return c;
    }
    c.verdict = verdict(mismatched == 0);
    c.detail = "regenerated " + std::to_string(compared) + " artifacts" +
               (synth_checked ? " (incl. synthetic records)" : "") + ", " + std::to_string(mismatched) +
               " byte mismatches";
    return c;
}

Criterion data_collapse(const nlohmann::json* summary, const std::filesystem::path& ccdf_csv)
{
    Criterion c = make(12, "Data collapse");
    if (!summary || !has_numbers(*summary, {"collapse_dispersion_fitted", "collapse_dispersion_unscaled"}) ||
        !std::filesystem::exists(ccdf_csv)) {
        c.detail = "collapse metrics or CCDF curves missing";
        return c;
    }
    // Re-read the emitted curves: per N, P must be non-increasing in s and within [0, 1].
    std::istringstream is(store::read_text(ccdf_csv));
    std::string line;
    std::getline(is, line);
    bool monotone = true;
    double last_n = -1.0, last_p = 2.0, last_s = -1.0;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double n, s, p, sr;
        char comma;
        std::istringstream ls(line);
        ls >> n >> comma >> s >> comma >> p >> comma >> sr;
        if (n != last_n) {
            last_n = n;
            last_p = 2.0;
            last_s = -1.0;
        }
        if (p > last_p || p < 0.0 || p > 1.0 || s <= last_s) monotone = false;
        last_p = p;
        last_s = s;
        ++rows;
    }
    const double fitted = (*summary)["collapse_dispersion_fitted"], unscaled = (*summary)["collapse_dispersion_unscaled"];
    c.verdict = verdict(monotone && rows > 0 && fitted < unscaled);
    c.detail = "dispersion with fitted D " + num(fitted) + " vs unscaled " + num(unscaled) + ", " +
               std::to_string(rows) + " CCDF rows " + (monotone ? "monotone" : "NOT monotone");
    return c;
}

} // namespace grokfss::acceptance
