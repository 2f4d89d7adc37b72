#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mtqsar/error.hpp"
#include "mtqsar/gaussian_process.hpp"
#include "mtqsar/hyperopt.hpp"
#include "mtqsar/random.hpp"

using namespace mtqsar;

namespace {

double value_of(const Point& p, std::size_t i) {
    if (const auto* d = std::get_if<double>(&p.values[i])) return *d;
    return static_cast<double>(std::get<std::int64_t>(p.values[i]));
}

SearchSpace unit_interval() { return SearchSpace({Dimension::continuous("x", 0.0, 1.0)}); }

}  // namespace

TEST(GaussianProcess, InterpolatesNoiselessPoints) {
    Eigen::MatrixXd x(6, 2);
    Eigen::VectorXd y(6);
    Rng rng(1);
    for (int i = 0; i < 6; ++i) {
        x(i, 0) = rng.uniform();
        x(i, 1) = rng.uniform();
        y(i) = std::sin(3 * x(i, 0)) + x(i, 1) * x(i, 1);
    }
    GpHyperparameters h;
    h.lengthscales = Eigen::VectorXd::Constant(2, 0.3);
    h.noise_variance = 0.0;
    const auto gp = GaussianProcess::with_hyperparameters(x, y, h);
    EXPECT_EQ(gp.jitter(), 1e-8);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(gp.predict(x.row(i).transpose()).mean, y(i), 1e-4);
}

TEST(GaussianProcess, FitImprovesLikelihood) {
    Eigen::MatrixXd x(15, 1);
    Eigen::VectorXd y(15);
    for (int i = 0; i < 15; ++i) {
        x(i, 0) = i / 14.0;
        y(i) = -(x(i, 0) - 0.3) * (x(i, 0) - 0.3);
    }
    GpHyperparameters start;
    start.lengthscales = Eigen::VectorXd::Constant(1, 0.3);
    start.noise_variance = 1e-6 + 1e-3;
    const auto fixed = GaussianProcess::with_hyperparameters(x, y, start);
    const auto fitted = GaussianProcess::fit(x, y);
    EXPECT_GE(fitted.log_marginal_likelihood(), fixed.log_marginal_likelihood());
    EXPECT_GE(fitted.hyperparameters().noise_variance, 1e-6);
}

TEST(GaussianProcess, DuplicatePointsNeedJitterNotFailure) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(4, 1, 0.5);
    Eigen::VectorXd y(4);
    y << 1.0, 1.0, 1.0, 1.0;
    GpHyperparameters h;
    h.lengthscales = Eigen::VectorXd::Constant(1, 0.3);
    h.noise_variance = 0.0;
    const auto gp = GaussianProcess::with_hyperparameters(x, y, h);
    EXPECT_GT(gp.jitter(), 0.0);
    EXPECT_LE(gp.jitter(), 1e-4);
}

TEST(ExpectedImprovement, Properties) {
    EXPECT_EQ(expected_improvement(0.5, 0.0, 0.7), 0.0);
    EXPECT_EQ(expected_improvement(0.9, 0.0, 0.7), 0.9 - 0.7);
    for (double m : {-1.0, 0.0, 0.3, 2.0}) {
        for (double s : {1e-9, 0.1, 1.0}) EXPECT_GE(expected_improvement(m, s, 0.3), 0.0);
    }
    EXPECT_LT(expected_improvement(0.3, 1e-9, 0.3), 1e-9);

    // Noiseless history of validation AUCs: EI at the incumbent vanishes.
    Eigen::MatrixXd x(5, 1);
    Eigen::VectorXd y(5);
    x << 0.1, 0.3, 0.5, 0.7, 0.9;
    y << 0.71, 0.74, 0.73, 0.72, 0.70;
    GpHyperparameters h;
    h.lengthscales = Eigen::VectorXd::Constant(1, 0.2);
    h.noise_variance = 0.0;
    const auto gp = GaussianProcess::with_hyperparameters(x, y, h);
    const auto at_best = gp.predict(x.row(1).transpose());
    EXPECT_LE(expected_improvement(at_best.mean, std::sqrt(at_best.variance), 0.74), 1e-6);
}

TEST(SearchSpace, DefaultSpaceDimensions) {
    const auto one = default_search_space(1, false);
    for (const char* name : {"dropout_input", "dropout_hidden_1", "epochs", "hidden_units_1", "anneal_delay_fraction",
                             "initial_lr", "anneal_mode", "momentum", "weight_cost", "activation", "init_scale",
                             "bottom_scale_log_multiplier"}) {
        EXPECT_TRUE(one.contains(std::string_view(name))) << name;
    }
    EXPECT_EQ(one.size(), 12u);
    EXPECT_EQ(one.dimensions()[one.index_of("epochs")].max, 100.0);
    EXPECT_EQ(one.dimensions()[one.index_of("hidden_units_1")].max, 3072.0);

    const auto three = default_search_space(3, true);
    EXPECT_EQ(three.size(), 16u);
    EXPECT_EQ(three.dimensions()[three.index_of("epochs")].max, 120.0);
    EXPECT_EQ(three.dimensions()[three.index_of("hidden_units_3")].min, 512.0);
    EXPECT_EQ(three.dimensions()[three.index_of("hidden_units_3")].max, 2048.0);
    EXPECT_EQ(default_search_space(2, true).dimensions()[default_search_space(2, true).index_of("hidden_units_2")].max,
              3584.0);
    EXPECT_THROW(default_search_space(0, true), Error);
}

TEST(SearchSpace, SamplesStayInBounds) {
    const auto space = default_search_space(2, true);
    for (std::uint64_t s = 0; s < 10000; ++s) ASSERT_TRUE(space.contains(sample_uniform(space, s)));
    std::set<std::string> seen;
    for (std::uint64_t s = 0; s < 100; ++s) seen.insert(to_json(space, sample_uniform(space, s)).dump());
    EXPECT_EQ(seen.size(), 100u);
    EXPECT_EQ(sample_uniform(space, 5), sample_uniform(space, 5));
}

TEST(SearchSpace, DegenerateSpaceHasOnePoint) {
    const SearchSpace space({Dimension::continuous("a", 0.2, 0.2), Dimension::integer("b", 7, 7),
                             Dimension::categorical("c", {"only"})});
    const Point p = sample_uniform(space, 1);
    EXPECT_EQ(p, sample_uniform(space, 999));
    EXPECT_EQ(std::get<double>(p.values[0]), 0.2);
    EXPECT_EQ(std::get<std::int64_t>(p.values[1]), 7);
    EXPECT_EQ(std::get<std::string>(p.values[2]), "only");
}

TEST(SearchSpace, EncodingAndOverrides) {
    SearchSpace space({Dimension::continuous("a", 0.0, 2.0), Dimension::categorical("c", {"x", "y", "z"})});
    Point p{{1.5, std::string("y")}};
    const Eigen::VectorXd e = space.encode(p);
    ASSERT_EQ(e.size(), 4);
    EXPECT_DOUBLE_EQ(e(0), 0.75);
    EXPECT_EQ(e.tail(3), Eigen::Vector3d(0, 1, 0));

    space.apply_overrides(nlohmann::json::parse(R"({"a": {"min": 1.0, "max": 1.2}, "c": {"options": ["z"]}})"));
    EXPECT_EQ(space.dimensions()[0].min, 1.0);
    EXPECT_EQ(space.encoded_size(), 2u);
    EXPECT_THROW(space.apply_overrides(nlohmann::json::parse(R"({"nope": {"min": 0, "max": 1}})")), Error);
    EXPECT_THROW(space.apply_overrides(nlohmann::json::parse(R"({"a": {"min": 2, "max": 1}})")), Error);
}

TEST(SearchSpace, ApplyPointSetsConfig) {
    const auto space = default_search_space(2, false);
    const Point p = sample_uniform(space, 3);
    NetworkConfig cfg;
    cfg.input_dim = 5;
    TrainSpec spec;
    apply_point(space, p, cfg, spec);
    ASSERT_EQ(cfg.hidden_sizes.size(), 2u);
    ASSERT_EQ(cfg.dropout_rates.size(), 3u);
    EXPECT_EQ(static_cast<double>(cfg.hidden_sizes[1]), value_of(p, space.index_of("hidden_units_2")));
    EXPECT_EQ(spec.initial_lr, value_of(p, space.index_of("initial_lr")));
    EXPECT_EQ(static_cast<double>(spec.epochs), value_of(p, space.index_of("epochs")));
    EXPECT_EQ(cfg.dropout_rates[2], value_of(p, space.index_of("dropout_hidden_2")));
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_NO_THROW(spec.validate());
}

TEST(GpSuggest, FallsBackToUniformWithShortHistory) {
    const auto space = unit_interval();
    EXPECT_TRUE(space.contains(gp_suggest({}, space, 4)));
    std::vector<TrialRecord> history;
    for (int i = 0; i < 4; ++i) history.push_back({Point{{0.1 * i}}, TrialStatus::Ok, 0.5});
    EXPECT_TRUE(space.contains(gp_suggest(history, space, 4)));
}

TEST(GpSuggest, AvoidsRegionThatDiverged) {
    const auto space = unit_interval();
    std::vector<TrialRecord> history;
    // Objective rises toward x = 1 but everything above 0.6 diverged.
    for (int i = 0; i <= 6; ++i) history.push_back({Point{{0.1 * i}}, TrialStatus::Ok, 0.1 * i});
    for (double x : {0.7, 0.8, 0.9, 1.0}) history.push_back({Point{{x}}, TrialStatus::Diverged, std::nullopt});
    const Point p = gp_suggest(history, space, 11);
    EXPECT_LT(value_of(p, 0), 0.75);
}

TEST(RunSearch, QuadraticOptimumFound) {
    const auto space = unit_interval();
    const Objective f = [](const Point& p) -> std::optional<double> {
        const double x = std::get<double>(p.values[0]);
        return -(x - 0.3) * (x - 0.3);
    };
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = run_search(f, space, 30, SearchStrategy::Gp, seed);
        ASSERT_EQ(r.trials.size(), 30u);
        if (std::abs(value_of(r.best().point, 0) - 0.3) <= 0.05) ++hits;
    }
    EXPECT_GE(hits, 9);
}

TEST(RunSearch, RunningBestAndDivergenceHandling) {
    const auto space = unit_interval();
    const Objective f = [](const Point& p) -> std::optional<double> {
        const double x = std::get<double>(p.values[0]);
        if (x > 0.8) return std::nullopt;
        return x;
    };
    const auto r = run_search(f, space, 12, SearchStrategy::Random, 3);
    const auto best = r.best_so_far();
    for (std::size_t i = 1; i < best.size(); ++i) {
        if (best[i - 1]) EXPECT_GE(*best[i], *best[i - 1]);
    }
    for (const auto& t : r.trials) EXPECT_EQ(t.status == TrialStatus::Diverged, !t.validation_auc.has_value());
    EXPECT_EQ(r.best().validation_auc, best.back());

    const auto one = run_search(f, space, 1, SearchStrategy::Gp, 0);
    EXPECT_EQ(one.trials.size(), 1u);

    const Objective never = [](const Point&) -> std::optional<double> { return std::nullopt; };
    try {
        (void)run_search(never, space, 3, SearchStrategy::Gp, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoValidRuns);
    }
}
