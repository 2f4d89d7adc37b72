#include "mtqsar/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mtqsar/error.hpp"
#include "mtqsar/random.hpp"

namespace mtqsar {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void apply_hidden(Activation activation, const Eigen::MatrixXd& z, Eigen::MatrixXd& y) {
    switch (activation) {
        case Activation::LogisticSigmoid: y = z.unaryExpr([](double v) { return sigmoid(v); }); break;
        case Activation::RectifiedLinear: y = z.cwiseMax(0.0); break;
    }
}

Eigen::MatrixXd hidden_derivative(Activation activation, const Eigen::MatrixXd& z) {
    switch (activation) {
        case Activation::LogisticSigmoid:
            return z.unaryExpr([](double v) {
                const double s = sigmoid(v);
                return s * (1.0 - s);
            });
        case Activation::RectifiedLinear:
            return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    }
    return {};
}

void check_same_shape(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                      const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorCode::ShapeError, std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                        std::to_string(b.cols()));
    }
}

// FNV-1a over 64-bit words rather than bytes; only ever compared in-process.
void fnv_mix(std::uint64_t& h, const double* data, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) {
        std::uint64_t word;
        std::memcpy(&word, data + i, sizeof word);
        h ^= word;
        h *= 1099511628211ULL;
    }
}

}  // namespace

std::string_view to_string(Activation activation) noexcept {
    switch (activation) {
        case Activation::LogisticSigmoid: return "sigmoid";
        case Activation::RectifiedLinear: return "relu";
    }
    return "unknown";
}

Activation activation_from_string(std::string_view name) {
    if (name == "sigmoid" || name == "logistic_sigmoid") return Activation::LogisticSigmoid;
    if (name == "relu" || name == "rectified_linear") return Activation::RectifiedLinear;
    fail(ErrorCode::InvalidArgument, "unknown activation '" + std::string(name) + "'");
}

void NetworkConfig::validate() const {
    require(input_dim >= 1, "input_dim must be positive");
    require(output_dim >= 1, "output_dim must be positive");
    require(hidden_sizes.size() <= 3, "at most three hidden layers are supported");
    for (const auto h : hidden_sizes) require(h >= 1, "hidden layer sizes must be positive");
    require(dropout_rates.size() == hidden_sizes.size() + 1,
            "dropout_rates needs one entry for the input layer and one per hidden layer");
    for (const double p : dropout_rates) require(p >= 0.0 && p <= 0.75, "dropout rates must lie in [0, 0.75]");
    require(init_scale >= 0.01 && init_scale <= 0.2, "init_scale must lie in [0.01, 0.2]");
    require(bottom_scale_log_multiplier >= -1.0 && bottom_scale_log_multiplier <= 1.0,
            "bottom_scale_log_multiplier must lie in [-1, 1]");
}

std::uint64_t NetworkParams::fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& layer : layers) {
        fnv_mix(h, layer.weights.data(), layer.weights.size());
        fnv_mix(h, layer.bias.data(), layer.bias.size());
    }
    return h;
}

bool NetworkParams::all_finite() const {
    for (const auto& layer : layers) {
        if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
}

ParamSet zeros_like(const ParamSet& like) {
    ParamSet out;
    out.reserve(like.size());
    for (const auto& layer : like) {
        out.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                       Eigen::VectorXd::Zero(layer.bias.size())});
    }
    return out;
}

NetworkParams init_network(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    NetworkParams params{config, {}};
    Rng rng(seed);

    std::vector<std::size_t> widths{config.input_dim};
    widths.insert(widths.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
    widths.push_back(config.output_dim);

    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const double stdev =
            l == 0 ? config.init_scale * std::exp(config.bottom_scale_log_multiplier) : config.init_scale;
        const auto fan_in = static_cast<Eigen::Index>(widths[l]);
        const auto fan_out = static_cast<Eigen::Index>(widths[l + 1]);
        LayerParams layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = stdev * rng.normal();
        }
        params.layers.push_back(std::move(layer));
    }
    return params;
}

ForwardTrace forward(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                     const ForwardMode& mode) {
    const auto& config = params.config;
    const std::size_t num_layers = params.layers.size();
    if (num_layers == 0) fail(ErrorCode::ShapeError, "network has no layers");
    if (static_cast<std::size_t>(inputs.cols()) != config.input_dim) {
        fail(ErrorCode::ShapeError, "input has " + std::to_string(inputs.cols()) + " columns, network expects " +
                                        std::to_string(config.input_dim));
    }
    if (!inputs.allFinite()) throw NumericalDivergence(0, "non-finite input");

    const auto* train = std::get_if<TrainMode>(&mode);
    Rng rng(train ? train->seed : 0);

    ForwardTrace trace;
    trace.params_fingerprint = params.fingerprint();
    trace.net_inputs.reserve(num_layers);
    trace.activations.reserve(num_layers + 1);
    trace.dropout_scales.resize(num_layers);

    Eigen::MatrixXd y = inputs;
    for (std::size_t l = 0; l < num_layers; ++l) {
        // Inverted dropout on the activations feeding layer l+1.
        const double rate = config.dropout_rates.at(l);
        if (train && rate > 0.0) {
            const double keep = 1.0 - rate;
            const double scale = 1.0 / keep;
            Eigen::MatrixXd mask(y.rows(), y.cols());
            for (Eigen::Index r = 0; r < mask.rows(); ++r) {
                for (Eigen::Index c = 0; c < mask.cols(); ++c) mask(r, c) = rng.bernoulli(keep) ? scale : 0.0;
            }
            y = y.cwiseProduct(mask);
            trace.dropout_scales[l] = std::move(mask);
        }
        trace.activations.push_back(y);

        const auto& layer = params.layers[l];
        Eigen::MatrixXd z = (y * layer.weights.transpose()).rowwise() + layer.bias.transpose();
        if (!z.allFinite()) throw NumericalDivergence(static_cast<int>(l + 1), "non-finite net input");

        if (l + 1 == num_layers) {
            y = z.unaryExpr([](double v) {
                return std::clamp(sigmoid(v), kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
            });
        } else {
            apply_hidden(config.activation, z, y);
        }
        trace.net_inputs.push_back(std::move(z));
    }
    trace.activations.push_back(std::move(y));
    return trace;
}

double loss_cross_entropy(const Eigen::Ref<const Eigen::MatrixXd>& outputs,
                          const Eigen::Ref<const Eigen::MatrixXd>& targets,
                          const Eigen::Ref<const Eigen::MatrixXd>& mask) {
    check_same_shape(outputs, targets, "cross-entropy targets");
    check_same_shape(outputs, mask, "cross-entropy mask");
    double loss = 0.0;
    for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
        for (Eigen::Index c = 0; c < outputs.cols(); ++c) {
            if (mask(r, c) == 0.0) continue;
            const double y = std::clamp(outputs(r, c), kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
            const double t = targets(r, c);
            loss -= mask(r, c) * (t * std::log(y) + (1.0 - t) * std::log(1.0 - y));
        }
    }
    return loss;
}

double loss_mse(const Eigen::Ref<const Eigen::MatrixXd>& outputs, const Eigen::Ref<const Eigen::MatrixXd>& targets,
                const Eigen::Ref<const Eigen::MatrixXd>& mask) {
    check_same_shape(outputs, targets, "mse targets");
    check_same_shape(outputs, mask, "mse mask");
    return 0.5 * ((outputs - targets).cwiseProduct(mask).array().square()).sum();
}

ParamSet backward(const NetworkParams& params, const ForwardTrace& trace,
                  const Eigen::Ref<const Eigen::MatrixXd>& targets, const Eigen::Ref<const Eigen::MatrixXd>& mask) {
    const std::size_t num_layers = params.layers.size();
    if (trace.net_inputs.size() != num_layers || trace.activations.size() != num_layers + 1 ||
        trace.params_fingerprint != params.fingerprint()) {
        fail(ErrorCode::StaleTrace, "trace was not produced by these parameters");
    }
    check_same_shape(trace.outputs(), targets, "backward targets");
    check_same_shape(trace.outputs(), mask, "backward mask");

    ParamSet grads(num_layers);
    // Sigmoid output with cross-entropy: dC/dz_L = y - t on observed entries.
    // Unobserved entries are selected out rather than multiplied, so any target value there is inert.
    Eigen::MatrixXd delta = (mask.array() != 0.0).select(mask.cwiseProduct(trace.outputs() - targets), 0.0);
    for (std::size_t l = num_layers; l-- > 0;) {
        const Eigen::MatrixXd& input = trace.activations[l];
        grads[l].weights = delta.transpose() * input;
        grads[l].bias = delta.colwise().sum().transpose();
        if (l == 0) break;

        Eigen::MatrixXd upstream = delta * params.layers[l].weights;
        if (trace.dropout_scales[l].size() != 0) upstream = upstream.cwiseProduct(trace.dropout_scales[l]);
        delta = upstream.cwiseProduct(hidden_derivative(params.config.activation, trace.net_inputs[l - 1]));
    }
    return grads;
}

Eigen::MatrixXd predict(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
    return forward(params, inputs, InferMode{}).outputs();
}

}  // namespace mtqsar
