#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace mtqsar {

enum class Activation { LogisticSigmoid, RectifiedLinear };

std::string_view to_string(Activation activation) noexcept;
Activation activation_from_string(std::string_view name);

/// Architecture and initialization metaparameters of a feedforward net.
///
/// Layers run input -> hidden_sizes... -> output_dim. Hidden layers share one
/// activation; the output layer is always a logistic sigmoid, one unit per
/// assay. dropout_rates holds one rate for the input layer followed by one per
/// hidden layer. The first weight matrix is drawn with stdev
/// init_scale * exp(bottom_scale_log_multiplier), all others with init_scale.
struct NetworkConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_sizes;
    std::size_t output_dim = 1;
    Activation activation = Activation::RectifiedLinear;
    std::vector<double> dropout_rates{0.0};
    double init_scale = 0.1;
    double bottom_scale_log_multiplier = 0.0;

    [[nodiscard]] std::size_t num_layers() const noexcept { return hidden_sizes.size() + 1; }
    /// Throws InvalidArgument on any out-of-range field.
    void validate() const;

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// W is fan_out x fan_in.
struct LayerParams {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

using ParamSet = std::vector<LayerParams>;

struct NetworkParams {
    NetworkConfig config;
    ParamSet layers;

    /// FNV-1a over the raw parameter bytes; identifies the exact parameter state.
    [[nodiscard]] std::uint64_t fingerprint() const;
    [[nodiscard]] bool all_finite() const;
};

/// Zero-filled tensors with the same shapes as `like`.
ParamSet zeros_like(const ParamSet& like);

/// Gaussian weights (mean 0), zero biases. Deterministic in `seed`.
NetworkParams init_network(const NetworkConfig& config, std::uint64_t seed);

struct InferMode {};
struct TrainMode {
    std::uint64_t seed = 0;
};
/// Train mode samples inverted-dropout masks from its seed; infer mode applies none.
using ForwardMode = std::variant<InferMode, TrainMode>;

/// Everything backward() needs. Batch rows are cases.
struct ForwardTrace {
    /// z_l for l = 1..L (index l-1).
    std::vector<Eigen::MatrixXd> net_inputs;
    /// y_l for l = 0..L. Entries below L are post-dropout, i.e. what the next layer consumed.
    std::vector<Eigen::MatrixXd> activations;
    /// Per non-output layer: empty when no dropout applied, else entries 0 or 1/(1-p).
    std::vector<Eigen::MatrixXd> dropout_scales;
    std::uint64_t params_fingerprint = 0;

    [[nodiscard]] const Eigen::MatrixXd& outputs() const { return activations.back(); }
};

/// Output probabilities are clamped to [kProbabilityEpsilon, 1 - kProbabilityEpsilon].
inline constexpr double kProbabilityEpsilon = 1e-12;

/// Throws ShapeError on width mismatch, NumericalDivergence on non-finite net inputs.
ForwardTrace forward(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                     const ForwardMode& mode);

/// Masked binary cross-entropy in nats; entries with mask 0 contribute nothing.
double loss_cross_entropy(const Eigen::Ref<const Eigen::MatrixXd>& outputs,
                          const Eigen::Ref<const Eigen::MatrixXd>& targets,
                          const Eigen::Ref<const Eigen::MatrixXd>& mask);

/// Half the masked sum of squared errors.
double loss_mse(const Eigen::Ref<const Eigen::MatrixXd>& outputs, const Eigen::Ref<const Eigen::MatrixXd>& targets,
                const Eigen::Ref<const Eigen::MatrixXd>& mask);

/// Exact gradient of the summed masked cross-entropy for the subnetwork
/// sampled in `trace`. Throws StaleTrace if params changed since forward().
ParamSet backward(const NetworkParams& params, const ForwardTrace& trace,
                  const Eigen::Ref<const Eigen::MatrixXd>& targets, const Eigen::Ref<const Eigen::MatrixXd>& mask);

/// Per-assay activity probabilities; identical to forward(..., InferMode{}).outputs().
Eigen::MatrixXd predict(const NetworkParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

}  // namespace mtqsar
