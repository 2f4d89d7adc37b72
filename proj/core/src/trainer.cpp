#include "mtqsar/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtqsar/error.hpp"

namespace mtqsar {

std::string_view to_string(AnnealMode mode) noexcept {
    switch (mode) {
        case AnnealMode::Linear: return "linear";
        case AnnealMode::Exponential: return "exponential";
    }
    return "unknown";
}

AnnealMode anneal_mode_from_string(std::string_view name) {
    if (name == "linear") return AnnealMode::Linear;
    if (name == "exponential") return AnnealMode::Exponential;
    fail(ErrorCode::InvalidArgument, "unknown anneal mode '" + std::string(name) + "'");
}

void TrainSpec::validate() const {
    require(epochs >= 2 && epochs <= 120, "epochs must lie in [2, 120]");
    require(initial_lr >= 0.001 && initial_lr <= 0.3, "initial_lr must lie in [0.001, 0.3]");
    require(anneal_delay_fraction >= 0.0 && anneal_delay_fraction <= 1.0, "anneal_delay_fraction must lie in [0, 1]");
    require(momentum >= 0.0 && momentum <= 0.95, "momentum must lie in [0, 0.95]");
    require(weight_cost >= 0.0 && weight_cost <= 0.007, "weight_cost must lie in [0, 0.007]");
    require(batch_size >= 1, "batch_size must be positive");
    if (!assay_quotas.empty()) {
        std::size_t total = 0;
        for (const auto& [assay, quota] : assay_quotas) total += quota;
        require(total == batch_size, "assay quotas must sum to batch_size");
    }
}

std::vector<std::size_t> resolve_quotas(const MultiTaskDataset& data, const TrainSpec& spec) {
    const std::size_t num_assays = data.num_assays();
    require(num_assays > 0, "dataset has no assays");
    std::vector<std::size_t> quotas(num_assays, 0);
    if (!spec.assay_quotas.empty()) {
        std::size_t total = 0;
        for (const auto& [assay, quota] : spec.assay_quotas) {
            quotas[data.assay_index(assay)] = quota;
            total += quota;
        }
        require(total == spec.batch_size, "assay quotas sum to " + std::to_string(total) + ", batch_size is " +
                                              std::to_string(spec.batch_size));
        return quotas;
    }
    const std::size_t emphasized = spec.emphasized_assay.empty() ? 0 : data.assay_index(spec.emphasized_assay);
    std::fill(quotas.begin(), quotas.end(), spec.batch_size / num_assays);
    quotas[emphasized] += spec.batch_size % num_assays;
    return quotas;
}

double lr_at_epoch(const TrainSpec& spec, std::size_t epoch) {
    if (epoch >= spec.epochs) {
        fail(ErrorCode::BadEpoch, "epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(spec.epochs) + ")");
    }
    const std::size_t last = spec.epochs - 1;
    const auto rounded = static_cast<std::size_t>(std::llround(spec.anneal_delay_fraction * static_cast<double>(spec.epochs)));
    const std::size_t start = std::min(rounded, last);
    const double final_lr =
        spec.anneal_mode == AnnealMode::Linear ? kLinearFinalLearningRate : kExponentialFinalLearningRate;

    if (epoch < start) return spec.initial_lr;
    if (epoch == last) return final_lr;
    const double progress = static_cast<double>(epoch - start) / static_cast<double>(last - start);
    if (spec.anneal_mode == AnnealMode::Linear) return spec.initial_lr + (final_lr - spec.initial_lr) * progress;
    return spec.initial_lr * std::pow(final_lr / spec.initial_lr, progress);
}

void momentum_update(ParamSet& params, ParamSet& velocities, const ParamSet& avg_gradient, const MomentumStep& step,
                     std::span<const std::uint8_t> active_outputs) {
    if (params.size() != velocities.size() || params.size() != avg_gradient.size()) {
        fail(ErrorCode::ShapeError, "parameter, velocity and gradient sets differ in layer count");
    }
    const double alpha = step.momentum;
    const double lr = step.learning_rate;
    const double lambda = step.weight_cost;

    for (std::size_t l = 0; l < params.size(); ++l) {
        auto& w = params[l];
        auto& v = velocities[l];
        const auto& g = avg_gradient[l];
        if (w.weights.rows() != g.weights.rows() || w.weights.cols() != g.weights.cols() ||
            v.weights.rows() != w.weights.rows() || v.weights.cols() != w.weights.cols() ||
            w.bias.size() != g.bias.size() || v.bias.size() != w.bias.size()) {
            fail(ErrorCode::ShapeError, "shape mismatch in layer " + std::to_string(l + 1));
        }

        const bool output_layer = l + 1 == params.size();
        if (output_layer && !active_outputs.empty()) {
            if (active_outputs.size() != static_cast<std::size_t>(w.bias.size())) {
                fail(ErrorCode::ShapeError, "active_outputs does not match the output layer");
            }
            for (Eigen::Index r = 0; r < w.weights.rows(); ++r) {
                if (!active_outputs[static_cast<std::size_t>(r)]) continue;
                v.weights.row(r) = alpha * v.weights.row(r) + lr * (-g.weights.row(r) - lambda * w.weights.row(r));
                w.weights.row(r) += v.weights.row(r);
                v.bias(r) = alpha * v.bias(r) + lr * (-g.bias(r) - lambda * w.bias(r));
                w.bias(r) += v.bias(r);
            }
        } else {
            v.weights = alpha * v.weights + lr * (-g.weights - lambda * w.weights);
            w.weights += v.weights;
            v.bias = alpha * v.bias + lr * (-g.bias - lambda * w.bias);
            w.bias += v.bias;
        }
        if (!w.weights.allFinite() || !w.bias.allFinite()) {
            throw NumericalDivergence(static_cast<int>(l + 1), "non-finite parameter after update");
        }
    }
}

Minibatch assemble_batch(const MultiTaskDataset& data, std::vector<std::size_t> positions) {
    Minibatch batch;
    const auto n = static_cast<Eigen::Index>(positions.size());
    const auto outputs = static_cast<Eigen::Index>(data.num_assays());
    batch.inputs = data.gather_inputs(positions);
    batch.targets = Eigen::MatrixXd::Zero(n, outputs);
    batch.mask = Eigen::MatrixXd::Zero(n, outputs);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Case& c = data.cases()[positions[static_cast<std::size_t>(i)]];
        const auto a = static_cast<Eigen::Index>(c.assay);
        batch.targets(i, a) = c.label;
        batch.mask(i, a) = 1.0;
    }
    batch.positions = std::move(positions);
    return batch;
}

MinibatchComposer::MinibatchComposer(const MultiTaskDataset& data, std::vector<std::size_t> quotas)
    : data_(&data), quotas_(std::move(quotas)), by_assay_(data.cases_by_assay()) {
    if (quotas_.size() != data.num_assays()) fail(ErrorCode::ShapeError, "one quota per assay is required");
    for (std::size_t a = 0; a < quotas_.size(); ++a) {
        if (quotas_[a] > 0 && by_assay_[a].empty()) {
            fail(ErrorCode::EmptyAssay, "assay '" + data.assay_ids()[a] + "' has a quota but no cases");
        }
        batch_size_ += quotas_[a];
    }
    require(batch_size_ > 0, "minibatch quotas are all zero");
}

Minibatch MinibatchComposer::compose(Rng& rng) const {
    std::vector<std::size_t> positions;
    positions.reserve(batch_size_);
    for (std::size_t a = 0; a < quotas_.size(); ++a) {
        const auto& members = by_assay_[a];
        for (std::size_t i = 0; i < quotas_[a]; ++i) positions.push_back(members[rng.index(members.size())]);
    }
    return assemble_batch(*data_, std::move(positions));
}

Minibatch compose_minibatch(const MultiTaskDataset& data, const std::map<std::string, std::size_t>& quotas, Rng& rng) {
    std::vector<std::size_t> per_assay(data.num_assays(), 0);
    for (const auto& [assay, quota] : quotas) per_assay[data.assay_index(assay)] = quota;
    return MinibatchComposer(data, std::move(per_assay)).compose(rng);
}

bool detect_divergence(std::span<const double> loss_history, const NetworkParams& params,
                       std::optional<double> reference_loss) {
    if (!params.all_finite()) return true;
    if (loss_history.empty()) return false;
    for (const double loss : loss_history) {
        if (!std::isfinite(loss)) return true;
    }
    const double reference = reference_loss.value_or(loss_history.front());
    return std::any_of(loss_history.begin(), loss_history.end(),
                       [&](double loss) { return loss > kDivergenceLossFactor * reference; });
}

TrainOutcome train(const MultiTaskDataset& data, const NetworkConfig& config, const TrainSpec& spec) {
    return train(data, init_network(config, derive_seed(spec.seed, kInitSeedStream)), spec);
}

TrainOutcome train(const MultiTaskDataset& data, NetworkParams initial, const TrainSpec& spec) {
    require(!data.empty(), "cannot train on an empty dataset");
    require(spec.epochs >= 1, "epochs must be positive");
    require(spec.batch_size >= 1, "batch_size must be positive");
    require(std::isfinite(spec.initial_lr) && spec.initial_lr > 0.0, "initial_lr must be positive");
    require(spec.momentum >= 0.0 && spec.momentum < 1.0, "momentum must lie in [0, 1)");
    require(spec.weight_cost >= 0.0, "weight_cost must be non-negative");
    if (initial.config.input_dim != data.input_dim() || initial.config.output_dim != data.num_assays()) {
        fail(ErrorCode::ShapeError, "network shape does not match the dataset (inputs " +
                                        std::to_string(data.input_dim()) + ", assays " +
                                        std::to_string(data.num_assays()) + ")");
    }

    const MinibatchComposer composer(data, resolve_quotas(data, spec));
    const std::size_t steps_per_epoch = (data.size() + spec.batch_size - 1) / spec.batch_size;
    Rng rng(derive_seed(spec.seed, kBatchSeedStream));

    TrainOutcome outcome;
    outcome.params = std::move(initial);
    ParamSet velocities = zeros_like(outcome.params.layers);
    bool have_initial = false;

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        const double lr = lr_at_epoch(spec, epoch);
        const MomentumStep step{lr, spec.momentum, spec.weight_cost};
        double epoch_loss = 0.0;
        try {
            for (std::size_t s = 0; s < steps_per_epoch; ++s) {
                const Minibatch batch = composer.compose(rng);
                const auto dropout_seed = rng.next_u64();
                const ForwardTrace trace = forward(outcome.params, batch.inputs, TrainMode{dropout_seed});
                const double n = static_cast<double>(batch.positions.size());
                const double batch_loss = loss_cross_entropy(trace.outputs(), batch.targets, batch.mask) / n;
                if (!have_initial) {
                    outcome.initial_loss = batch_loss;
                    have_initial = true;
                }
                epoch_loss += batch_loss;

                ParamSet grads = backward(outcome.params, trace, batch.targets, batch.mask);
                for (auto& g : grads) {
                    g.weights /= n;
                    g.bias /= n;
                }
                std::vector<std::uint8_t> active(static_cast<std::size_t>(batch.mask.cols()));
                for (Eigen::Index c = 0; c < batch.mask.cols(); ++c) {
                    active[static_cast<std::size_t>(c)] = batch.mask.col(c).any() ? 1 : 0;
                }
                momentum_update(outcome.params.layers, velocities, grads, step, active);
            }
        } catch (const NumericalDivergence&) {
            outcome.status = TrainStatus::Diverged;
            outcome.diverged_epoch = epoch;
            return outcome;
        }
        outcome.loss_history.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
        outcome.lr_history.push_back(lr);
        if (detect_divergence(outcome.loss_history, outcome.params, outcome.initial_loss)) {
            outcome.status = TrainStatus::Diverged;
            outcome.diverged_epoch = epoch;
            return outcome;
        }
    }
    return outcome;
}

}  // namespace mtqsar
