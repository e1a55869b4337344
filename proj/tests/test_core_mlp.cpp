#include "grokfss/acceptance.hpp"
#include "grokfss/errors.hpp"
#include "grokfss/graph.hpp"
#include "grokfss/mlp.hpp"
#include "grokfss/training.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace grokfss;

namespace {

// Direct evaluation of the network on the four patterns, written independently of forward().
double reference_loss(const MlpModel& m)
{
    const double x[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const double y[4] = {0, 1, 1, 0};
    double loss = 0.0;
    for (int s = 0; s < 4; ++s) {
        double z = m.bias_out;
        for (std::size_t j = 0; j < m.hidden_size; ++j) {
            const double pre = m.weights_in[2 * j] * x[s][0] + m.weights_in[2 * j + 1] * x[s][1] + m.bias_hidden[j];
            z += m.weights_out[j] * std::tanh(pre);
        }
        const double p = 1.0 / (1.0 + std::exp(-z));
        loss -= y[s] * std::log(p) + (1.0 - y[s]) * std::log(1.0 - p);
    }
    return loss / 4.0;
}

DiffusionGraph ba_for(std::size_t h, std::uint64_t seed = 7)
{
    return generate_graph(Topology::barabasi_albert, param_count(h), {}, seed);
}

TrainConfig small_config(std::size_t h, std::uint64_t seed)
{
    TrainConfig c;
    c.hidden_size = h;
    c.seed = seed;
    c.init_scheme = InitScheme::fan_in;
    return c;
}

} // namespace

TEST_CASE("xor dataset holds the four patterns")
{
    constexpr XorDataset d;
    CHECK(d.inputs[0] == std::array<double, 2>{0, 0});
    CHECK(d.inputs[3] == std::array<double, 2>{1, 1});
    CHECK(d.targets == std::array<double, 4>{0, 1, 1, 0});
}

TEST_CASE("forward of the zero model predicts one half with loss ln 2")
{
    const auto r = forward(MlpModel::zeros(5));
    for (double p : r.predictions) CHECK(p == doctest::Approx(0.5));
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("forward of a near-perfect predictor has near-zero loss")
{
    // Two hidden units implement OR and AND; the output takes OR minus AND.
    MlpModel m = MlpModel::zeros(2);
    m.weights_in = {20, 20, 20, 20};
    m.bias_hidden = {-10, -30};
    m.weights_out = {30, -30};
    m.bias_out = -15;
    const auto r = forward(m);
    CHECK(accuracy(r) == 1.0);
    CHECK(r.loss < 1e-5);
}

TEST_CASE("forward agrees with a hand-rolled evaluation")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = MlpModel::gaussian(1 + seed % 7, 1.0, seed);
        CHECK(std::abs(forward(m).loss - reference_loss(m)) < 1e-10);
    }
}

TEST_CASE("forward rejects non-finite parameters")
{
    auto m = MlpModel::zeros(3);
    m.weights_out[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(forward(m), InvalidInput);
    m.weights_out[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(forward(m), InvalidInput);
}

TEST_CASE("backward on a constant-output h=1 model matches hand differentiation")
{
    // Hidden unit silent (tanh(0) = 0), output constant p = sigmoid(0.5) on every pattern.
    MlpModel m = MlpModel::zeros(1);
    m.weights_out = {1.0};
    m.bias_out = 0.5;
    const double p = 1.0 / (1.0 + std::exp(-0.5));
    const auto g = backward(m);
    REQUIRE(g.size() == 5);
    CHECK(std::abs(g[0] - (2 * p - 1) / 4) < 1e-8);
    CHECK(std::abs(g[1] - (2 * p - 1) / 4) < 1e-8);
    CHECK(std::abs(g[2] - (p - 0.5)) < 1e-8);
    CHECK(std::abs(g[3]) < 1e-8);
    CHECK(std::abs(g[4] - (p - 0.5)) < 1e-8);
}

TEST_CASE("backward matches central differences")
{
    for (std::size_t h : {1U, 3U, 20U}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto m = MlpModel::gaussian(h, 1.0, 1000 + seed);
            const auto fd = acceptance::finite_difference_gradient(m, 1e-5);
            CHECK(acceptance::max_relative_error(backward(m), fd) < 1e-4);
        }
    }
}

TEST_CASE("backward matches central differences for every activation and init scheme")
{
    for (Activation a : {Activation::tanh, Activation::relu, Activation::sigmoid}) {
        const auto m = MlpModel::fan_in(4, 1.0, 3, a);
        CHECK(acceptance::max_relative_error(backward(m), acceptance::finite_difference_gradient(m, 1e-5)) < 1e-4);
    }
}

TEST_CASE("parameter count is 4h+1")
{
    CHECK(backward(MlpModel::gaussian(20, 1.0, 1)).size() == 81);
    CHECK(param_count(500) == 2001);
    for (std::size_t h : {20U, 30U, 50U, 70U, 100U, 120U, 200U, 500U})
        CHECK(MlpModel::fan_in(h, 1.0, 0).flatten().size() == 4 * h + 1);
}

TEST_CASE("flatten and unflatten round trip in the documented order")
{
    const auto m = MlpModel::gaussian(3, 1.0, 5);
    const auto theta = m.flatten();
    CHECK(theta[0] == m.weights_in[0]);
    CHECK(theta[5] == m.weights_in[5]);
    CHECK(theta[6] == m.bias_hidden[0]);
    CHECK(theta[9] == m.weights_out[0]);
    CHECK(theta[12] == m.bias_out);
    CHECK(MlpModel::unflatten(theta, 3).flatten() == theta);
    CHECK_THROWS_AS(MlpModel::unflatten(theta, 4), StructuralError);
}

TEST_CASE("sgd_step")
{
    const auto m = MlpModel::gaussian(2, 1.0, 9);
    SUBCASE("zero learning rate leaves the model unchanged")
    {
        CHECK(sgd_step(m, backward(m), 0.0).flatten() == m.flatten());
    }
    SUBCASE("unit gradient on the zero model")
    {
        std::vector<double> g(9, 0.0);
        g[4] = 1.0;
        const auto theta = sgd_step(MlpModel::zeros(2), g, 0.5).flatten();
        for (std::size_t i = 0; i < theta.size(); ++i) CHECK(theta[i] == (i == 4 ? -0.5 : 0.0));
    }
    SUBCASE("length mismatch")
    {
        CHECK_THROWS_AS(sgd_step(m, std::vector<double>(8, 0.0), 0.1), StructuralError);
    }
}

TEST_CASE("gini examples")
{
    CHECK(gini(std::vector<double>{1, 1, 1, 1}) == doctest::Approx(0.0));
    CHECK(gini(std::vector<double>{0, 0, 0, 1}) == doctest::Approx(0.75));
    CHECK(gini(std::vector<double>{1, 2, 3, 4}) == doctest::Approx(0.25));
    CHECK(gini(std::vector<double>{-1, 2, -3, 4}) == doctest::Approx(0.25));
    CHECK(gini(std::vector<double>{0, 0, 0}) == 0.0);
    CHECK_THROWS_AS(gini(std::vector<double>{}), InvalidInput);
}

TEST_CASE("gini agrees with the double-sum definition and is scale invariant")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(1 + trial * 3);
        for (double& v : x) v = normal(rng);
        double num = 0.0, sum = 0.0;
        for (double a : x) {
            sum += std::abs(a);
            for (double b : x) num += std::abs(std::abs(a) - std::abs(b));
        }
        const double g = gini(x);
        CHECK(std::abs(g - num / (2.0 * static_cast<double>(x.size()) * sum)) < 1e-12);
        CHECK(g >= 0.0);
        CHECK(g < 1.0);
        for (double c : {1e-6, 0.37, 12.0, 1e8}) {
            std::vector<double> y = x;
            for (double& v : y) v *= c;
            CHECK(std::abs(gini(y) - g) < 1e-12);
        }
    }
}

TEST_CASE("detect_grokking examples")
{
    CHECK(detect_grokking(std::vector<double>(500, 1.0)) == 0U);
    CHECK_FALSE(detect_grokking(std::vector<double>(500, 0.5)).has_value());
    std::vector<double> series(500, 1.0);
    for (std::size_t e = 0; e <= 26; ++e) series[e] = 0.5;
    CHECK(detect_grokking(series) == 27U);
    CHECK_THROWS_AS(detect_grokking(std::vector<double>{}), InvalidInput);
}

TEST_CASE("detect_grokking ignores flickers shorter than the window")
{
    std::vector<double> series(100, 0.75);
    for (std::size_t e = 10; e < 19; ++e) series[e] = 1.0;  // 9 epochs
    for (std::size_t e = 40; e < 100; ++e) series[e] = 1.0;
    CHECK(detect_grokking(series) == 40U);
    CHECK(detect_grokking(series, 5) == 10U);
    // A run of 1.0 that ends before filling the window does not count.
    std::vector<double> tail(30, 0.5);
    for (std::size_t e = 25; e < 30; ++e) tail[e] = 1.0;
    CHECK_FALSE(detect_grokking(tail).has_value());
}

TEST_CASE("detect_grokking shifts by exactly the prepended prefix")
{
    std::mt19937_64 rng(11);
    std::bernoulli_distribution coin(0.7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(60);
        for (double& v : s) v = coin(rng) ? 1.0 : 0.75;
        const auto base = detect_grokking(s);
        for (std::size_t k : {1U, 7U, 31U}) {
            std::vector<double> shifted(k, 0.5);
            shifted.insert(shifted.end(), s.begin(), s.end());
            const auto d = detect_grokking(shifted);
            REQUIRE(d.has_value() == base.has_value());
            if (base) CHECK(*d == *base + k);
        }
    }
}

TEST_CASE("train_run with zero epochs is empty")
{
    auto c = small_config(4, 1);
    c.epochs = 0;
    const auto r = train_run(c, ba_for(4));
    CHECK(r.trace.rows.empty());
    CHECK(r.cascades.empty());
    CHECK(r.snapshots.empty());
    CHECK_FALSE(r.trace.grokking_epoch.has_value());
}

TEST_CASE("train_run at h=21 has 85 parameters and 51 snapshots")
{
    const auto r = train_run(small_config(21, 2), ba_for(21));
    CHECK(r.trace.n_params == 85);
    CHECK(r.trace.rows.size() == 500);
    CHECK(r.cascades.size() == 500);
    REQUIRE(r.snapshots.size() == 51);
    CHECK(r.trace.snapshot_epochs.front() == 0);
    CHECK(r.trace.snapshot_epochs.back() == 500);
    for (const auto& s : r.snapshots) CHECK(s.size() == 85);
    for (const auto& c : r.cascades) CHECK(c.n_params == 85);
}

TEST_CASE("train_run rejects a graph of the wrong size")
{
    CHECK_THROWS(train_run(small_config(5, 0), ba_for(6)));
}

TEST_CASE("train_run is a pure function of config and graph")
{
    const auto c = small_config(30, 42);
    const auto g = ba_for(30);
    const auto a = train_run(c, g);
    const auto b = train_run(c, g);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
        CHECK(a.trace.rows[i].loss == b.trace.rows[i].loss);
        CHECK(a.trace.rows[i].gini == b.trace.rows[i].gini);
        CHECK(a.trace.rows[i].avalanche_size == b.trace.rows[i].avalanche_size);
    }
    CHECK(a.snapshots == b.snapshots);
    CHECK(a.trace.grokking_epoch == b.trace.grokking_epoch);
}

TEST_CASE("shadow probe mode trains on the raw gradient")
{
    auto c = small_config(6, 5);
    c.epochs = 60;
    c.probe_mode = ProbeMode::shadow;
    const auto r = train_run(c, ba_for(6));

    auto m = MlpModel::initialize(c.init_scheme, c.hidden_size, c.init_scale, c.seed, c.activation);
    for (std::size_t e = 0; e < c.epochs; ++e) {
        CHECK(forward(m).loss == r.trace.rows[e].loss);
        m = sgd_step(m, backward(m), c.eta);
    }
    // Cascades are still measured.
    std::size_t total = 0;
    for (const auto& row : r.trace.rows) total += row.avalanche_size;
    CHECK(total > 0);
}

TEST_CASE("inline probe mode feeds the redistributed gradient into the update")
{
    auto c = small_config(6, 5);
    c.epochs = 60;
    const auto inline_run = train_run(c, ba_for(6));
    c.probe_mode = ProbeMode::shadow;
    const auto shadow_run = train_run(c, ba_for(6));
    CHECK(inline_run.trace.rows[0].loss == shadow_run.trace.rows[0].loss);
    CHECK(inline_run.trace.rows[59].loss != shadow_run.trace.rows[59].loss);
}

TEST_CASE("phases are assigned against the grokking epoch")
{
    std::vector<CascadeRecord> recs(5);
    for (std::size_t i = 0; i < recs.size(); ++i) recs[i].epoch = i;
    assign_phases(recs, 2);
    CHECK(recs[1].phase == Phase::pre);
    CHECK(recs[2].phase == Phase::post);
    assign_phases(recs, std::nullopt);
    CHECK(recs[4].phase == Phase::unknown);
}

TEST_CASE("gini alignment")
{
    TrainingTrace t;
    for (std::size_t e = 0; e < 8; ++e) {
        EpochRow r;
        r.epoch = e;
        r.gini = e == 5 ? 0.6 : 0.4;
        t.rows.push_back(r);
    }
    CHECK_FALSE(gini_alignment(t).has_value());
    t.grokking_epoch = 3;
    const auto a = gini_alignment(t);
    REQUIRE(a.has_value());
    CHECK(a->peak_epoch == 5);
    CHECK(a->baseline == doctest::Approx(0.4));
    CHECK(a->prominence == doctest::Approx(0.5));
    CHECK(a->offset == 2.0);
}
