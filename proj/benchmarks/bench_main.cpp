#include <benchmark/benchmark.h>

#include "mtqsar/eval.hpp"
#include "mtqsar/featsel.hpp"
#include "mtqsar/network.hpp"
#include "mtqsar/random.hpp"
#include "mtqsar/synthetic.hpp"
#include "mtqsar/trainer.hpp"

using namespace mtqsar;

namespace {

NetworkConfig net(std::size_t inputs, std::size_t hidden, std::size_t outputs) {
    NetworkConfig c;
    c.input_dim = inputs;
    c.hidden_sizes = {hidden};
    c.output_dim = outputs;
    c.dropout_rates = {0.1, 0.25};
    return c;
}

void BM_ForwardBackward(benchmark::State& state) {
    const auto batch = state.range(0);
    const auto hidden = static_cast<std::size_t>(state.range(1));
    const auto params = init_network(net(1000, hidden, 10), 1);
    Rng rng(2);
    const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(batch, 1000, [&] { return rng.normal(); });
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(batch, 10);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(batch, 10);
    for (Eigen::Index i = 0; i < batch; ++i) {
        m(i, i % 10) = 1.0;
        t(i, i % 10) = static_cast<double>(i % 2);
    }
    std::uint64_t seed = 0;
    for (auto _ : state) {
        const auto trace = forward(params, x, TrainMode{++seed});
        benchmark::DoNotOptimize(backward(params, trace, t, m));
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBackward)->Args({128, 256})->Args({128, 1024})->Args({80, 3072});

void BM_Auc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.normal();
        y[i] = static_cast<std::uint8_t>(rng.bernoulli(0.3));
    }
    for (auto _ : state) benchmark::DoNotOptimize(auc(s, y));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

void BM_RankFeatures(benchmark::State& state) {
    InformativeFeatureOptions o;
    o.cases = static_cast<std::size_t>(state.range(0));
    o.descriptors = 500;
    o.informative = 20;
    const auto s = make_informative_features(o, 4);
    const auto data = build_dataset(std::make_shared<const DescriptorTable>(s.table), s.labels);
    for (auto _ : state) benchmark::DoNotOptimize(rank_features(data, "A"));
}
BENCHMARK(BM_RankFeatures)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
    LatentTaskOptions o;
    o.tasks = 3;
    o.cases_per_task = 1000;
    o.descriptors = 200;
    const auto s = make_latent_tasks(o, 5);
    const auto data = build_dataset(std::make_shared<const DescriptorTable>(s.table), s.labels);
    TrainSpec spec;
    spec.epochs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train(data, net(200, 512, 3), spec));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
