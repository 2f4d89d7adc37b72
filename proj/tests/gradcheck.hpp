#pragma once

#include <algorithm>
#include <cmath>

#include "mtqsar/network.hpp"
#include "mtqsar/random.hpp"

namespace mtqsar::fixtures {

/// A random net, batch and task mask with every hidden activation and dropout
/// pattern fixed by `seed`.
struct GradientCase {
    NetworkParams params;
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
    Eigen::MatrixXd mask;
    std::uint64_t dropout_seed = 0;
};

inline GradientCase random_gradient_case(std::uint64_t seed, std::size_t depth) {
    Rng rng(seed);
    NetworkConfig cfg;
    cfg.input_dim = 1 + rng.index(5);
    for (std::size_t l = 0; l < depth; ++l) cfg.hidden_sizes.push_back(2 + rng.index(5));
    cfg.output_dim = 1 + rng.index(3);
    cfg.activation = rng.bernoulli(0.5) ? Activation::LogisticSigmoid : Activation::RectifiedLinear;
    cfg.dropout_rates.clear();
    for (std::size_t l = 0; l <= depth; ++l) cfg.dropout_rates.push_back(rng.bernoulli(0.5) ? rng.uniform(0.1, 0.5) : 0.0);

    GradientCase g;
    g.params = init_network(cfg, rng.next_u64());
    // Larger weights than the initializer so gradients are far from zero.
    for (auto& layer : g.params.layers) {
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = 0.8 * rng.normal();
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.3 * rng.normal();
    }
    const auto batch = static_cast<Eigen::Index>(2 + rng.index(4));
    const auto out = static_cast<Eigen::Index>(cfg.output_dim);
    g.inputs.resize(batch, static_cast<Eigen::Index>(cfg.input_dim));
    for (Eigen::Index i = 0; i < g.inputs.size(); ++i) g.inputs.data()[i] = rng.normal();
    g.targets.resize(batch, out);
    g.mask.resize(batch, out);
    for (Eigen::Index r = 0; r < batch; ++r) {
        for (Eigen::Index c = 0; c < out; ++c) {
            g.targets(r, c) = rng.bernoulli(0.5) ? 1.0 : 0.0;
            g.mask(r, c) = rng.bernoulli(0.6) ? 1.0 : 0.0;
        }
        g.mask(r, static_cast<Eigen::Index>(rng.index(cfg.output_dim))) = 1.0;
    }
    g.dropout_seed = rng.next_u64();
    return g;
}

inline double case_loss(const GradientCase& g, const NetworkParams& params) {
    const ForwardTrace t = forward(params, g.inputs, TrainMode{g.dropout_seed});
    return loss_cross_entropy(t.outputs(), g.targets, g.mask);
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over all
/// parameters, with central differences of step h.
inline double max_relative_gradient_error(const GradientCase& g, double h = 1e-5, double floor = 1e-6) {
    const ForwardTrace trace = forward(g.params, g.inputs, TrainMode{g.dropout_seed});
    const ParamSet analytic = backward(g.params, trace, g.targets, g.mask);
    double worst = 0.0;
    NetworkParams p = g.params;
    auto check = [&](double& slot, double a) {
        const double saved = slot;
        slot = saved + h;
        const double up = case_loss(g, p);
        slot = saved - h;
        const double down = case_loss(g, p);
        slot = saved;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor}));
    };
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& w = p.layers[l].weights;
        for (Eigen::Index i = 0; i < w.size(); ++i) check(w.data()[i], analytic[l].weights.data()[i]);
        auto& b = p.layers[l].bias;
        for (Eigen::Index i = 0; i < b.size(); ++i) check(b(i), analytic[l].bias(i));
    }
    return worst;
}

}  // namespace mtqsar::fixtures
