#include "grokfss/mlp.hpp"

#include "grokfss/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace grokfss {

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    }
    return "unknown";
}

Activation parse_activation(std::string_view name)
{
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(InitScheme s)
{
    return s == InitScheme::fan_in ? "fan_in" : "gaussian";
}

InitScheme parse_init_scheme(std::string_view name)
{
    if (name == "gaussian") return InitScheme::gaussian;
    if (name == "fan_in") return InitScheme::fan_in;
    throw ConfigError("unknown init scheme '" + std::string(name) + "'");
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double activate(Activation a, double z)
{
    switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return sigmoid(z);
    }
    return z;
}

// Derivative expressed through the pre-activation z and the activation value a.
double activate_grad(Activation act, double z, double a)
{
    switch (act) {
    case Activation::tanh: return 1.0 - a * a;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return a * (1.0 - a);
    }
    return 1.0;
}

void require_finite(const MlpModel& m)
{
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(m.weights_in) || !finite(m.bias_hidden) || !finite(m.weights_out) || !std::isfinite(m.bias_out))
        throw InvalidInput("model has non-finite parameters");
    const std::size_t h = m.hidden_size;
    if (h == 0 || m.weights_in.size() != 2 * h || m.bias_hidden.size() != h || m.weights_out.size() != h)
        throw StructuralError("model arrays inconsistent with hidden_size");
}

} // namespace

MlpModel MlpModel::zeros(std::size_t hidden, Activation act)
{
    MlpModel m;
    m.hidden_size = hidden;
    m.weights_in.assign(2 * hidden, 0.0);
    m.bias_hidden.assign(hidden, 0.0);
    m.weights_out.assign(hidden, 0.0);
    m.hidden_activation = act;
    return m;
}

MlpModel MlpModel::gaussian(std::size_t hidden, double init_scale, std::uint64_t seed, Activation act)
{
    if (hidden == 0) throw ConfigError("hidden size must be positive");
    if (!(init_scale >= 0.0)) throw ConfigError("init scale must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ParameterField theta(param_count(hidden));
    for (double& v : theta) v = init_scale * normal(rng);
    return unflatten(theta, hidden, act);
}

MlpModel MlpModel::fan_in(std::size_t hidden, double init_scale, std::uint64_t seed, Activation act)
{
    if (hidden == 0) throw ConfigError("hidden size must be positive");
    if (!(init_scale >= 0.0)) throw ConfigError("init scale must be non-negative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double in_bound = init_scale / std::sqrt(2.0);
    const double out_bound = init_scale / std::sqrt(static_cast<double>(hidden));
    MlpModel m = zeros(hidden, act);
    for (double& w : m.weights_in) w = in_bound * unit(rng);
    for (double& b : m.bias_hidden) b = in_bound * unit(rng);
    for (double& w : m.weights_out) w = out_bound * unit(rng);
    m.bias_out = out_bound * unit(rng);
    return m;
}

MlpModel MlpModel::initialize(InitScheme scheme, std::size_t hidden, double init_scale, std::uint64_t seed,
                              Activation act)
{
    return scheme == InitScheme::fan_in ? fan_in(hidden, init_scale, seed, act)
                                        : gaussian(hidden, init_scale, seed, act);
}

ParameterField MlpModel::flatten() const
{
    ParameterField out;
    out.reserve(n_params());
    out.insert(out.end(), weights_in.begin(), weights_in.end());
    out.insert(out.end(), bias_hidden.begin(), bias_hidden.end());
    out.insert(out.end(), weights_out.begin(), weights_out.end());
    out.push_back(bias_out);
    return out;
}

MlpModel MlpModel::unflatten(std::span<const double> theta, std::size_t hidden, Activation act)
{
    if (theta.size() != param_count(hidden))
        throw StructuralError("flattened length " + std::to_string(theta.size()) + " != 4h+1 = " +
                              std::to_string(param_count(hidden)));
    MlpModel m;
    m.hidden_size = hidden;
    m.hidden_activation = act;
    auto it = theta.begin();
    m.weights_in.assign(it, it + 2 * hidden);
    it += 2 * hidden;
    m.bias_hidden.assign(it, it + hidden);
    it += hidden;
    m.weights_out.assign(it, it + hidden);
    it += hidden;
    m.bias_out = *it;
    return m;
}

ForwardResult forward(const MlpModel& model, const XorDataset& data)
{
    require_finite(model);
    ForwardResult r;
    const std::size_t h = model.hidden_size;
    double loss = 0.0;
    for (std::size_t s = 0; s < XorDataset::kSamples; ++s) {
        const auto& x = data.inputs[s];
        double z_out = model.bias_out;
        for (std::size_t j = 0; j < h; ++j) {
            const double z = model.weights_in[2 * j] * x[0] + model.weights_in[2 * j + 1] * x[1] + model.bias_hidden[j];
            z_out += model.weights_out[j] * activate(model.hidden_activation, z);
        }
        const double p = sigmoid(z_out);
        r.predictions[s] = p;
        const double pc = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
        const double y = data.targets[s];
        loss -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
    }
    r.loss = loss / static_cast<double>(XorDataset::kSamples);
    return r;
}

ParameterField backward(const MlpModel& model, const XorDataset& data)
{
    require_finite(model);
    const std::size_t h = model.hidden_size;
    ParameterField grad(param_count(h), 0.0);
    double* g_win = grad.data();
    double* g_bh = g_win + 2 * h;
    double* g_wout = g_bh + h;
    double& g_bout = grad.back();

    std::vector<double> z(h), a(h);
    const double inv_n = 1.0 / static_cast<double>(XorDataset::kSamples);
    for (std::size_t s = 0; s < XorDataset::kSamples; ++s) {
        const auto& x = data.inputs[s];
        double z_out = model.bias_out;
        for (std::size_t j = 0; j < h; ++j) {
            z[j] = model.weights_in[2 * j] * x[0] + model.weights_in[2 * j + 1] * x[1] + model.bias_hidden[j];
            a[j] = activate(model.hidden_activation, z[j]);
            z_out += model.weights_out[j] * a[j];
        }
        const double p = sigmoid(z_out);
        // d(BCE)/d(z_out) = p - y; inside the clamp region the clamp has zero derivative.
        const bool clamped = p < kBceEpsilon || p > 1.0 - kBceEpsilon;
        const double delta = clamped ? 0.0 : (p - data.targets[s]) * inv_n;
        g_bout += delta;
        for (std::size_t j = 0; j < h; ++j) {
            g_wout[j] += delta * a[j];
            const double dz = delta * model.weights_out[j] * activate_grad(model.hidden_activation, z[j], a[j]);
            g_win[2 * j] += dz * x[0];
            g_win[2 * j + 1] += dz * x[1];
            g_bh[j] += dz;
        }
    }
    return grad;
}

MlpModel sgd_step(const MlpModel& model, std::span<const double> gradient, double eta)
{
    if (gradient.size() != model.n_params())
        throw StructuralError("gradient length " + std::to_string(gradient.size()) + " != " +
                              std::to_string(model.n_params()));
    ParameterField theta = model.flatten();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta * gradient[i];
    return MlpModel::unflatten(theta, model.hidden_size, model.hidden_activation);
}

double accuracy(const ForwardResult& fwd, const XorDataset& data)
{
    std::size_t correct = 0;
    for (std::size_t s = 0; s < XorDataset::kSamples; ++s) {
        const bool predicted = fwd.predictions[s] > 0.5;
        const bool target = data.targets[s] > 0.5;
        correct += predicted == target ? 1U : 0U;
    }
    return static_cast<double>(correct) / static_cast<double>(XorDataset::kSamples);
}

double gini(std::span<const double> values)
{
    if (values.empty()) throw InvalidInput("gini of an empty vector");
    std::vector<double> x(values.size());
    std::transform(values.begin(), values.end(), x.begin(), [](double v) { return std::abs(v); });
    std::sort(x.begin(), x.end());
    const double total = std::accumulate(x.begin(), x.end(), 0.0);
    if (total == 0.0) return 0.0;
    // sum_i sum_j |x_i - x_j| = 2 sum_i (2i - n + 1) x_(i) over the ascending order.
    const double n = static_cast<double>(x.size());
    double weighted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) weighted += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
    return weighted / (n * total);
}

std::optional<std::size_t> detect_grokking(std::span<const double> accuracy_series, std::size_t window)
{
    if (accuracy_series.empty()) throw InvalidInput("accuracy series is empty");
    if (window == 0) throw ConfigError("grokking window must be positive");
    std::size_t run = 0;
    for (std::size_t e = 0; e < accuracy_series.size(); ++e) {
        run = accuracy_series[e] == 1.0 ? run + 1 : 0;
        if (run == window) return e + 1 - window;
    }
    return std::nullopt;
}

} // namespace grokfss
