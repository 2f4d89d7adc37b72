#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "mtqsar/error.hpp"
#include "mtqsar/eval.hpp"
#include "mtqsar/model_io.hpp"
#include "mtqsar/synthetic.hpp"
#include "mtqsar/trainer.hpp"
#include "test_util.hpp"

using namespace mtqsar;

namespace {

ParamSet scalar_params(double w) {
    LayerParams p;
    p.weights = Eigen::MatrixXd::Constant(1, 1, w);
    p.bias = Eigen::VectorXd::Zero(1);
    return {p};
}

MultiTaskDataset separable(std::size_t n, std::uint64_t seed) {
    const SyntheticData s = make_separable(n, seed);
    return build_dataset(std::make_shared<const DescriptorTable>(s.table), s.labels);
}

NetworkConfig hidden8(std::size_t in, std::size_t out) {
    NetworkConfig c;
    c.input_dim = in;
    c.hidden_sizes = {8};
    c.output_dim = out;
    c.dropout_rates = {0.0, 0.0};
    return c;
}

}  // namespace

TEST(MomentumUpdate, HandDerivedTwoSteps) {
    ParamSet w = scalar_params(1.0);
    ParamSet v = zeros_like(w);
    ParamSet g = scalar_params(0.5);
    g[0].bias.setZero();
    const MomentumStep step{0.1, 0.9, 0.0};
    momentum_update(w, v, g, step);
    EXPECT_EQ(v[0].weights(0, 0), -0.05);
    EXPECT_EQ(w[0].weights(0, 0), 0.95);
    momentum_update(w, v, g, step);
    EXPECT_EQ(v[0].weights(0, 0), -0.095);
    EXPECT_EQ(w[0].weights(0, 0), 0.855);
}

TEST(MomentumUpdate, WeightCostOnlyDecays) {
    ParamSet w = scalar_params(2.0);
    w[0].bias(0) = -1.0;
    ParamSet v = scalar_params(0.3);
    const ParamSet g = zeros_like(w);
    momentum_update(w, v, g, {0.1, 0.5, 0.01});
    EXPECT_DOUBLE_EQ(v[0].weights(0, 0), 0.5 * 0.3 - 0.1 * 0.01 * 2.0);
    EXPECT_DOUBLE_EQ(v[0].bias(0), 0.1 * 0.01 * 1.0);
}

TEST(MomentumUpdate, PlainSgdBitwiseWithoutMomentumOrDecay) {
    Rng rng(4);
    ParamSet w(2), sgd;
    for (auto& layer : w) {
        layer.weights = Eigen::MatrixXd::NullaryExpr(3, 4, [&] { return rng.normal(); });
        layer.bias = Eigen::VectorXd::NullaryExpr(3, [&] { return rng.normal(); });
    }
    sgd = w;
    ParamSet v = zeros_like(w);
    for (int t = 0; t < 100; ++t) {
        ParamSet g = zeros_like(w);
        for (auto& layer : g) {
            layer.weights = layer.weights.unaryExpr([&](double) { return rng.normal(); });
            layer.bias = layer.bias.unaryExpr([&](double) { return rng.normal(); });
        }
        const double lr = rng.uniform(0.001, 0.3);
        momentum_update(w, v, g, {lr, 0.0, 0.0});
        for (std::size_t l = 0; l < sgd.size(); ++l) {
            sgd[l].weights = sgd[l].weights - lr * g[l].weights;
            sgd[l].bias = sgd[l].bias - lr * g[l].bias;
        }
    }
    for (std::size_t l = 0; l < w.size(); ++l) {
        EXPECT_EQ(w[l].weights, sgd[l].weights);
        EXPECT_EQ(w[l].bias, sgd[l].bias);
    }
}

TEST(MomentumUpdate, NonFiniteResultThrows) {
    ParamSet w = scalar_params(1.0);
    ParamSet v = zeros_like(w);
    const ParamSet g = scalar_params(std::numeric_limits<double>::infinity());
    EXPECT_THROW(momentum_update(w, v, g, {0.1, 0.9, 0.0}), NumericalDivergence);
}

TEST(Schedule, DocumentedValues) {
    TrainSpec s;
    s.initial_lr = 0.1;
    s.epochs = 100;
    s.anneal_delay_fraction = 0.5;
    s.anneal_mode = AnnealMode::Linear;
    EXPECT_EQ(lr_at_epoch(s, 49), 0.1);
    EXPECT_EQ(lr_at_epoch(s, 50), 0.1);
    EXPECT_EQ(lr_at_epoch(s, 99), 1e-8);

    s.anneal_mode = AnnealMode::Exponential;
    s.anneal_delay_fraction = 0.0;
    EXPECT_NEAR(lr_at_epoch(s, 50), 0.1 * std::pow(1e-5, 50.0 / 99.0), 1e-15);
    EXPECT_EQ(lr_at_epoch(s, 99), 1e-6);
    EXPECT_THROW((void)lr_at_epoch(s, 100), Error);
}

TEST(Schedule, RandomSpecsHitFinalRateAndNeverIncrease) {
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        TrainSpec s;
        s.epochs = static_cast<std::size_t>(rng.integer(2, 120));
        s.initial_lr = rng.uniform(0.001, 0.3);
        s.anneal_delay_fraction = rng.uniform(0.0, 1.0);
        s.anneal_mode = rng.bernoulli(0.5) ? AnnealMode::Linear : AnnealMode::Exponential;
        const double final_lr = s.anneal_mode == AnnealMode::Linear ? 1e-8 : 1e-6;
        EXPECT_NEAR(lr_at_epoch(s, s.epochs - 1), final_lr, 1e-9 * final_lr);
        const auto start = std::min<std::size_t>(
            static_cast<std::size_t>(std::llround(s.anneal_delay_fraction * static_cast<double>(s.epochs))), s.epochs - 1);
        for (std::size_t e = 0; e < start; ++e) EXPECT_EQ(lr_at_epoch(s, e), s.initial_lr);
        for (std::size_t e = 1; e < s.epochs; ++e) EXPECT_LE(lr_at_epoch(s, e), lr_at_epoch(s, e - 1));
    }
}

TEST(Quotas, DefaultsAndExplicit) {
    const auto d = fixtures::random_dataset({10, 10, 10}, 2, 1);
    TrainSpec s;
    s.batch_size = 20;
    EXPECT_EQ(resolve_quotas(d, s), (std::vector<std::size_t>{8, 6, 6}));
    s.emphasized_assay = "A2";
    EXPECT_EQ(resolve_quotas(d, s), (std::vector<std::size_t>{6, 6, 8}));
    s.assay_quotas = {{"A1", 20}};
    EXPECT_EQ(resolve_quotas(d, s), (std::vector<std::size_t>{0, 20, 0}));
    s.assay_quotas = {{"A1", 19}};
    EXPECT_THROW(resolve_quotas(d, s), Error);
}

TEST(Quotas, ComposedBatchesHaveExactCounts) {
    const auto d = fixtures::random_dataset({30, 25, 12, 40, 9, 14, 50}, 3, 2);
    const std::vector<std::size_t> quotas{20, 10, 10, 10, 10, 10, 10};
    const MinibatchComposer composer(d, quotas);
    Rng rng(1);
    for (int b = 0; b < 10000; ++b) {
        const Minibatch batch = composer.compose(rng);
        ASSERT_EQ(batch.positions.size(), 80u);
        std::vector<std::size_t> counts(7, 0);
        for (const auto p : batch.positions) ++counts[d.cases()[p].assay];
        ASSERT_EQ(counts, quotas);
        ASSERT_EQ(batch.mask.sum(), 80.0);
    }
}

TEST(Quotas, SingleTaskIsOrdinaryBatchAndEmptyAssayFails) {
    const auto d = fixtures::random_dataset({100}, 3, 2);
    Rng rng(3);
    const auto batch = compose_minibatch(d, {{"A0", 64}}, rng);
    EXPECT_EQ(batch.positions.size(), 64u);
    EXPECT_TRUE(batch.mask.isOnes());

    const auto empty = d.subset(std::vector<std::size_t>{}, "empty");
    try {
        (void)MinibatchComposer(empty, {5});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyAssay);
    }
}

TEST(Divergence, Rules) {
    const auto p = init_network(hidden8(2, 1), 0);
    const std::vector<double> nan_loss{1.0, std::nan("")};
    EXPECT_TRUE(detect_divergence(nan_loss, p));
    const std::vector<double> falling{1.0, 0.8, 0.5, 0.3};
    EXPECT_FALSE(detect_divergence(falling, p));
    const std::vector<double> grown{1.0, 3.0, 12.0};
    EXPECT_TRUE(detect_divergence(grown, p));
    EXPECT_TRUE(detect_divergence(falling, p, 0.01));
    auto bad = p;
    bad.layers[0].bias(0) = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(bad.all_finite());
    EXPECT_TRUE(detect_divergence(falling, bad));
}

TEST(Train, SeparableSanityAcrossSeeds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = separable(200, 100 + seed);
        TrainSpec s;
        s.epochs = 30;
        s.initial_lr = 0.1;
        s.batch_size = 20;
        s.seed = seed;
        const auto out = train(d, hidden8(2, 1), s);
        ASSERT_FALSE(out.diverged());
        ASSERT_EQ(out.loss_history.size(), 30u);
        EXPECT_LT(out.loss_history.back(), out.initial_loss);
        EXPECT_GT(score_assays(out.params, d)[0], 0.95);
    }
}

TEST(Train, HugeLearningRateDiverges) {
    const auto d = separable(200, 1);
    TrainSpec s;
    s.epochs = 20;
    s.initial_lr = 1e3;
    s.batch_size = 20;
    const auto out = train(d, hidden8(2, 1), s);
    EXPECT_TRUE(out.diverged());
    EXPECT_TRUE(out.diverged_epoch.has_value());
}

TEST(Train, DeterministicAndSeedSensitive) {
    const auto d = fixtures::random_dataset({60, 40}, 4, 9);
    TrainSpec s;
    s.epochs = 5;
    s.batch_size = 16;
    s.seed = 5;
    auto cfg = hidden8(4, 2);
    cfg.dropout_rates = {0.2, 0.5};
    const auto a = train(d, cfg, s);
    const auto b = train(d, cfg, s);
    EXPECT_EQ(a.params.fingerprint(), b.params.fingerprint());
    EXPECT_EQ(a.loss_history, b.loss_history);
    s.seed = 6;
    EXPECT_NE(train(d, cfg, s).params.fingerprint(), a.params.fingerprint());
}

TEST(Train, ZeroQuotaTaskOutputsStayAtInitialValues) {
    const auto d = fixtures::random_dataset({50, 50, 50}, 4, 3);
    TrainSpec s;
    s.epochs = 10;
    s.batch_size = 20;
    s.weight_cost = 0.005;
    s.momentum = 0.9;
    s.assay_quotas = {{"A0", 12}, {"A1", 8}, {"A2", 0}};
    s.seed = 2;
    const auto cfg = hidden8(4, 3);
    const auto initial = init_network(cfg, derive_seed(s.seed, kInitSeedStream));
    const auto out = train(d, initial, s);
    ASSERT_FALSE(out.diverged());
    const auto& before = initial.layers.back();
    const auto& after = out.params.layers.back();
    EXPECT_EQ(after.weights.row(2), before.weights.row(2));
    EXPECT_EQ(after.bias(2), before.bias(2));
    EXPECT_NE(after.weights.row(0), before.weights.row(0));
    EXPECT_NE(out.params.layers.front().weights, initial.layers.front().weights);
}

TEST(Train, SingleTaskEqualsOneAssayMultiTask) {
    const auto d = fixtures::random_dataset({80}, 3, 4);
    TrainSpec s;
    s.epochs = 6;
    s.batch_size = 16;
    const auto a = train(d, hidden8(3, 1), s);
    s.assay_quotas = {{"A0", 16}};
    const auto b = train(d, hidden8(3, 1), s);
    ASSERT_EQ(a.loss_history.size(), b.loss_history.size());
    for (std::size_t e = 0; e < a.loss_history.size(); ++e) {
        EXPECT_NEAR(a.loss_history[e], b.loss_history[e], 1e-10 * std::abs(a.loss_history[e]));
    }
}

TEST(TrainSpecJson, RoundTrips) {
    TrainSpec s;
    s.epochs = 77;
    s.initial_lr = 0.013;
    s.anneal_mode = AnnealMode::Exponential;
    s.momentum = 0.5;
    s.weight_cost = 0.001;
    s.assay_quotas = {{"X", 3}, {"Y", 5}};
    s.batch_size = 8;
    s.seed = 123456789012345ULL;
    EXPECT_EQ(train_spec_from_json(to_json(s)), s);
    EXPECT_EQ(json_hash(to_json(s)), json_hash(to_json(train_spec_from_json(to_json(s)))));
}
