#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grokfss {

/// The four XOR patterns. Immutable.
struct XorDataset {
    static constexpr std::size_t kSamples = 4;
    static constexpr std::array<std::array<double, 2>, kSamples> inputs{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
    static constexpr std::array<double, kSamples> targets{0, 1, 1, 0};
};

enum class Activation { tanh, relu, sigmoid };

/// gaussian: every parameter i.i.d. N(0, s^2).
/// fan_in: each layer U(-s/sqrt(fan_in), s/sqrt(fan_in)), fan_in = 2 for the hidden layer and h for the output.
enum class InitScheme { gaussian, fan_in };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);
std::string_view to_string(InitScheme s);
InitScheme parse_init_scheme(std::string_view name);

/// Flattened parameter or gradient vector. Length is the model's 4h+1.
using ParameterField = std::vector<double>;

constexpr std::size_t param_count(std::size_t hidden) { return 4 * hidden + 1; }

/// 2 -> h -> 1 perceptron with a sigmoid output unit.
///
/// Flattened order is fixed: [weights_in row-major (h x 2), bias_hidden (h), weights_out (h), bias_out].
/// Graph node i always refers to flattened index i.
struct MlpModel {
    std::size_t hidden_size = 0;
    std::vector<double> weights_in;   // h x 2, row j holds the two input weights of hidden unit j
    std::vector<double> bias_hidden;  // h
    std::vector<double> weights_out;  // h
    double bias_out = 0.0;
    Activation hidden_activation = Activation::tanh;

    static MlpModel zeros(std::size_t hidden, Activation act = Activation::tanh);
    /// i.i.d. N(0, init_scale^2) for every parameter, biases included.
    static MlpModel gaussian(std::size_t hidden, double init_scale, std::uint64_t seed,
                             Activation act = Activation::tanh);
    static MlpModel fan_in(std::size_t hidden, double init_scale, std::uint64_t seed,
                           Activation act = Activation::tanh);
    static MlpModel initialize(InitScheme scheme, std::size_t hidden, double init_scale, std::uint64_t seed,
                               Activation act = Activation::tanh);

    std::size_t n_params() const { return param_count(hidden_size); }
    ParameterField flatten() const;
    static MlpModel unflatten(std::span<const double> theta, std::size_t hidden,
                              Activation act = Activation::tanh);
};

struct ForwardResult {
    std::array<double, XorDataset::kSamples> predictions{};
    double loss = 0.0;
};

inline constexpr double kBceEpsilon = 1e-12;

/// Sigmoid outputs and mean binary cross-entropy over the four patterns.
/// Throws InvalidInput if any parameter is non-finite.
ForwardResult forward(const MlpModel& model, const XorDataset& data = {});

/// Exact gradient of the mean BCE, flattened in MlpModel order.
ParameterField backward(const MlpModel& model, const XorDataset& data = {});

/// theta' = theta - eta * g. Throws StructuralError on a length mismatch.
MlpModel sgd_step(const MlpModel& model, std::span<const double> gradient, double eta);

/// Fraction of patterns whose output, thresholded at 0.5, equals the target.
double accuracy(const ForwardResult& fwd, const XorDataset& data = {});

/// Gini coefficient of |values|; 0 for an all-zero vector.
double gini(std::span<const double> values);

/// First epoch that opens a run of `window` consecutive epochs at accuracy 1.0.
std::optional<std::size_t> detect_grokking(std::span<const double> accuracy_series,
                                           std::size_t window = 10);

} // namespace grokfss
