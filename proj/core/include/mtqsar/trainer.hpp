#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtqsar/dataset.hpp"
#include "mtqsar/network.hpp"
#include "mtqsar/random.hpp"

namespace mtqsar {

enum class AnnealMode { Linear, Exponential };

std::string_view to_string(AnnealMode mode) noexcept;
AnnealMode anneal_mode_from_string(std::string_view name);

inline constexpr double kLinearFinalLearningRate = 1e-8;
inline constexpr double kExponentialFinalLearningRate = 1e-6;
inline constexpr double kDivergenceLossFactor = 10.0;

/// Optimization metaparameters for one training run.
struct TrainSpec {
    std::size_t epochs = 50;
    double initial_lr = 0.05;
    AnnealMode anneal_mode = AnnealMode::Linear;
    double anneal_delay_fraction = 0.5;
    double momentum = 0.9;
    double weight_cost = 0.0;
    std::size_t batch_size = 128;
    /// Cases per minibatch drawn from each assay. Empty selects default quotas.
    std::map<std::string, std::size_t> assay_quotas;
    /// Receives the remainder of the default quotas; first assay when empty.
    std::string emphasized_assay;
    std::uint64_t seed = 0;

    /// Checks every field against the searchable ranges. train() itself only
    /// requires positive, finite values so that out-of-range runs can be forced.
    void validate() const;

    friend bool operator==(const TrainSpec&, const TrainSpec&) = default;
};

/// Per-assay minibatch counts (indexed like data.assay_ids()). Explicit quotas
/// must cover known assays and sum to batch_size; otherwise the batch is split
/// evenly with the remainder going to the emphasized assay.
std::vector<std::size_t> resolve_quotas(const MultiTaskDataset& data, const TrainSpec& spec);

/// Learning rate for a 0-based epoch. Constant until epoch
/// s = round(anneal_delay_fraction * epochs) (capped at epochs - 1), then
/// annealed to reach the mode's final rate exactly at the last epoch.
double lr_at_epoch(const TrainSpec& spec, std::size_t epoch);

struct MomentumStep {
    double learning_rate = 0.0;
    double momentum = 0.0;
    double weight_cost = 0.0;
};

/// v <- momentum * v + lr * (-grad - weight_cost * w);  w <- w + v.
/// Applied to weights and biases alike. When `active_outputs` is non-empty,
/// output units whose flag is 0 keep their incoming weights, bias and velocity
/// untouched. Throws NumericalDivergence if any parameter becomes non-finite.
void momentum_update(ParamSet& params, ParamSet& velocities, const ParamSet& avg_gradient, const MomentumStep& step,
                     std::span<const std::uint8_t> active_outputs = {});

struct Minibatch {
    std::vector<std::size_t> positions;
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
    /// One observed output per case: the column of the case's assay.
    Eigen::MatrixXd mask;
};

/// Builds input/target/mask matrices for the cases at `positions`.
Minibatch assemble_batch(const MultiTaskDataset& data, std::vector<std::size_t> positions);

/// Draws quota[a] cases uniformly with replacement from each assay a.
class MinibatchComposer {
public:
    MinibatchComposer(const MultiTaskDataset& data, std::vector<std::size_t> quotas);

    [[nodiscard]] Minibatch compose(Rng& rng) const;
    [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }
    [[nodiscard]] const std::vector<std::size_t>& quotas() const noexcept { return quotas_; }

private:
    const MultiTaskDataset* data_;
    std::vector<std::size_t> quotas_;
    std::vector<std::vector<std::size_t>> by_assay_;
    std::size_t batch_size_ = 0;
};

/// Quotas keyed by assay id. Throws UnknownAssay or EmptyAssay.
Minibatch compose_minibatch(const MultiTaskDataset& data, const std::map<std::string, std::size_t>& quotas, Rng& rng);

enum class TrainStatus { Completed, Diverged };

struct TrainOutcome {
    NetworkParams params;
    /// Mean per-case training loss (nats) of each completed epoch.
    std::vector<double> loss_history;
    std::vector<double> lr_history;
    /// Loss of the first minibatch before any update.
    double initial_loss = 0.0;
    TrainStatus status = TrainStatus::Completed;
    std::optional<std::size_t> diverged_epoch;

    [[nodiscard]] bool diverged() const noexcept { return status == TrainStatus::Diverged; }
};

/// True iff any loss or parameter is non-finite, or some epoch loss exceeds
/// kDivergenceLossFactor times `reference_loss` (default: the first entry).
bool detect_divergence(std::span<const double> loss_history, const NetworkParams& params,
                       std::optional<double> reference_loss = std::nullopt);

/// Seed streams derived from TrainSpec::seed.
inline constexpr std::uint64_t kInitSeedStream = 1;
inline constexpr std::uint64_t kBatchSeedStream = 2;

/// Minibatch SGD with momentum. Each epoch runs ceil(N / batch_size) composed
/// minibatches; divergence is reported in the outcome, not thrown.
TrainOutcome train(const MultiTaskDataset& data, const NetworkConfig& config, const TrainSpec& spec);
TrainOutcome train(const MultiTaskDataset& data, NetworkParams initial, const TrainSpec& spec);

}  // namespace mtqsar
