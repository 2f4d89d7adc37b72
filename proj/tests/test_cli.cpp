#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "mtqsar/csv.hpp"
#include "mtqsar/eval.hpp"

namespace fs = std::filesystem;
using namespace mtqsar;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream s(text);
    for (std::string line; std::getline(s, line);) lines.push_back(line);
    return lines;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() / (std::string("mtqsar_cli_") + info->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    int cli(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return cli::run(args, out_, err_);
    }

    // Three latent assays, prepared into root/prep.
    void prepare(const std::string& kind = "latent") {
        ASSERT_EQ(cli({"synth", "--kind", kind, "--tasks", "3", "--cases", "120", "--descriptors", "12", "--seed", "5",
                       "--out", (root_ / "raw").string()}),
                  0)
            << err_.str();
        ASSERT_EQ(cli({"prepare", "--descriptors", (root_ / "raw/descriptors.csv").string(), "--labels",
                       (root_ / "raw/labels.csv").string(), "--seed", "5", "--out", (root_ / "prep").string()}),
                  0)
            << err_.str();
    }

    fs::path write_config(const std::string& name, nlohmann::json j) {
        j["data"] = "prep";
        const fs::path p = root_ / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }

    static nlohmann::json small_net() {
        return {{"hidden_sizes", {8}}, {"dropout_rates", {0.0, 0.0}}, {"epochs", 4}, {"initial_lr", 0.05},
                {"batch_size", 16}};
    }

    fs::path root_;
    std::ostringstream out_;
    std::ostringstream err_;
};

}  // namespace

TEST_F(CliTest, PrepareIsDeterministic) {
    prepare();
    ASSERT_EQ(cli({"prepare", "--descriptors", (root_ / "raw/descriptors.csv").string(), "--labels",
                   (root_ / "raw/labels.csv").string(), "--seed", "5", "--out", (root_ / "again").string()}),
              0);
    for (const char* f : {"descriptors.csv", "labels.csv", "norm_stats.json", "split.csv", "manifest.json"}) {
        EXPECT_EQ(slurp(root_ / "prep" / f), slurp(root_ / "again" / f)) << f;
    }
    const auto split = lines_of(slurp(root_ / "prep/split.csv"));
    EXPECT_EQ(split.front(), "compound_id,assay_id,split,fold");
    EXPECT_EQ(split.size(), 1u + 360u);
}

TEST_F(CliTest, MissingInputIsUsageError) {
    EXPECT_EQ(cli({"prepare", "--descriptors", (root_ / "nope.csv").string(), "--labels",
                   (root_ / "nope2.csv").string(), "--out", (root_ / "x").string()}),
              cli::kUsageError);
    EXPECT_EQ(cli({"frobnicate"}), cli::kUsageError);
    EXPECT_EQ(cli({"--help"}), cli::kSuccess);
}

TEST_F(CliTest, MalformedDataIsDataError) {
    std::ofstream(root_ / "d.csv") << "compound_id,a\nC1,1\nC2,oops\n";
    std::ofstream(root_ / "l.csv") << "compound_id,assay_id,label\nC1,A,1\n";
    EXPECT_EQ(cli({"prepare", "--descriptors", (root_ / "d.csv").string(), "--labels", (root_ / "l.csv").string(),
                   "--out", (root_ / "x").string()}),
              cli::kDataError);
    EXPECT_NE(err_.str().find("d.csv"), std::string::npos) << err_.str();
}

TEST_F(CliTest, BadConfigIsUsageError) {
    prepare();
    auto j = small_net();
    j["mode"] = "single";
    EXPECT_EQ(cli({"train", write_config("c.json", j).string(), "--out", (root_ / "run").string()}),
              cli::kUsageError);
    j["target_assay"] = "T00";
    j["hiden_sizes"] = {3};
    EXPECT_EQ(cli({"train", write_config("c.json", j).string(), "--out", (root_ / "run").string()}),
              cli::kUsageError);
}

TEST_F(CliTest, TrainBootstrapSignificance) {
    prepare();
    auto j = small_net();
    j["mode"] = "multi";
    const fs::path cfg = write_config("multi.json", j);
    ASSERT_EQ(cli({"train", cfg.string(), "--out", (root_ / "run").string()}), 0) << err_.str();

    const auto report = read_json(root_ / "run/report.json");
    EXPECT_EQ(report["mode"], "multi");
    ASSERT_EQ(report["reports"].size(), 3u);
    for (int k = 0; k < 4; ++k) {
        EXPECT_TRUE(fs::exists(root_ / "run" / ("train_log_fold" + std::to_string(k) + ".csv")));
        EXPECT_TRUE(fs::exists(root_ / "run" / ("model_fold" + std::to_string(k) + ".bin")));
    }
    const auto r0 = eval_report_from_json(report["reports"][0]);
    EXPECT_EQ(r0.fold_aucs.size(), 4u);

    // Significance needs variances first.
    const std::string t00 = (root_ / "run/report_T00.json").string();
    EXPECT_EQ(cli({"significance", t00, t00}), cli::kDataError);
    EXPECT_NE(err_.str().find("mtqsar bootstrap"), std::string::npos);

    ASSERT_EQ(cli({"bootstrap", cfg.string(), "--resamples", "3", "--out", (root_ / "run").string()}), 0)
        << err_.str();
    const auto boot = eval_report_from_json(read_json(root_ / "run/report_T00.json"));
    ASSERT_TRUE(boot.bootstrap_variance.has_value());
    EXPECT_GE(*boot.bootstrap_variance, 0.0);
    EXPECT_EQ(boot.bootstrap_aucs.size(), 3u);

    ASSERT_EQ(cli({"significance", t00, t00, "--resamples", "3"}), 0) << err_.str();
    EXPECT_NE(out_.str().find("not significant"), std::string::npos);

    // A different config in the same run directory cannot be bootstrapped.
    j["epochs"] = 5;
    EXPECT_NE(cli({"bootstrap", write_config("other.json", j).string(), "--out", (root_ / "run").string()}), 0);
}

TEST_F(CliTest, SingleAndCombinedModes) {
    prepare();
    auto j = small_net();
    j["mode"] = "single";
    j["target_assay"] = "T01";
    ASSERT_EQ(cli({"train", write_config("s.json", j).string(), "--out", (root_ / "s").string()}), 0) << err_.str();
    const auto single = read_json(root_ / "s/report.json");
    ASSERT_EQ(single["reports"].size(), 1u);
    EXPECT_EQ(single["reports"][0]["model"], "NNET");

    j["mode"] = "combined";
    j["combined_assays"] = {"T00", "T02"};
    ASSERT_EQ(cli({"train", write_config("c.json", j).string(), "--out", (root_ / "c").string()}), 0) << err_.str();
    const auto combined = read_json(root_ / "c/report.json");
    ASSERT_EQ(combined["reports"].size(), 1u);
    EXPECT_EQ(combined["reports"][0]["assay_id"], "T01");
    EXPECT_EQ(combined["reports"][0]["model"], "COMBINED");
}

TEST_F(CliTest, SearchWritesTrialsAndReproducibleBest) {
    prepare();
    auto j = small_net();
    j["mode"] = "multi";
    j["search_space"] = {{"hidden_units_1", {{"min", 4}, {"max", 16}}}, {"epochs", {{"min", 2}, {"max", 5}}}};
    ASSERT_EQ(cli({"search", write_config("m.json", j).string(), "--budget", "4", "--strategy", "random", "--out",
                   (root_ / "search").string()}),
              0)
        << err_.str();
    const auto trials = lines_of(slurp(root_ / "search/trials.csv"));
    ASSERT_EQ(trials.size(), 1u + 4u);
    EXPECT_EQ(trials[0].rfind("trial,status,val_auc,", 0), 0u);

    const auto manifest = read_json(root_ / "search/manifest.json");
    const double best = manifest["commands"]["search"]["best_validation_auc"];

    const auto best_config = cli::load_run_config(root_ / "search/best_config.json");
    EXPECT_TRUE(best_config.search_space.empty());
    const auto data = cli::load_prepared(best_config.data);
    const auto sel = cli::select(data, best_config);
    const auto result = cross_fold_validate(sel.train, sel.network, best_config.spec, sel.folds);
    double mean = 0.0;
    for (const auto& r : result.reports) mean += r.mean_validation_auc;
    mean /= static_cast<double>(result.reports.size());
    EXPECT_NEAR(mean, best, 1e-10);
}

TEST_F(CliTest, FeatureCurveAllMatchesFullTraining) {
    prepare();
    auto j = small_net();
    j["mode"] = "single";
    j["target_assay"] = "T00";
    const fs::path cfg = write_config("s.json", j);
    ASSERT_EQ(cli({"train", cfg.string(), "--out", (root_ / "full").string()}), 0) << err_.str();
    ASSERT_EQ(cli({"feature-curve", cfg.string(), "--ks", "3,all", "--out", (root_ / "curve").string()}), 0)
        << err_.str();
    const auto rows = lines_of(slurp(root_ / "curve/feature_curve.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "k,mean_auc");
    EXPECT_EQ(rows[1].rfind("3,", 0), 0u);
    const double full = read_json(root_ / "full/report.json")["reports"][0]["mean_auc"];
    EXPECT_EQ(rows[2], "12," + csv::format_double(full));
    EXPECT_EQ(lines_of(slurp(root_ / "curve/ranking.csv")).size(), 1u + 12u);
}

TEST_F(CliTest, DepthSweepRows) {
    prepare();
    auto j = small_net();
    j["mode"] = "multi";
    j["search_space"] = {{"hidden_units_1", {{"min", 4}, {"max", 8}}},
                         {"hidden_units_2", {{"min", 4}, {"max", 8}}},
                         {"epochs", {{"min", 2}, {"max", 3}}}};
    ASSERT_EQ(cli({"depth-sweep", write_config("m.json", j).string(), "--depths", "1,2", "--budget", "2", "--out",
                   (root_ / "sweep").string()}),
              0)
        << err_.str();
    const auto rows = lines_of(slurp(root_ / "sweep/depth_sweep.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "depth,best_val_auc,mean_test_auc");
    EXPECT_TRUE(fs::exists(root_ / "sweep/depth2/best_config.json"));
}

TEST(RunConfig, JsonRoundTrip) {
    const auto j = nlohmann::json::parse(R"({
        "data": "prep", "mode": "combined", "target_assay": "A", "combined_assays": ["B"],
        "hidden_sizes": [16, 8], "dropout_rates": [0.1, 0.2, 0.3], "activation": "sigmoid",
        "epochs": 7, "initial_lr": 0.02, "anneal_mode": "linear", "seed": 9,
        "search_space": {"epochs": {"min": 2, "max": 4}}})");
    const auto c = cli::run_config_from_json(j, "/base");
    EXPECT_EQ(c.data, fs::path("/base/prep"));
    EXPECT_EQ(c.mode, cli::Mode::Combined);
    EXPECT_EQ(c.model_label, "COMBINED");
    EXPECT_EQ(c.network.hidden_sizes, (std::vector<std::size_t>{16, 8}));
    EXPECT_EQ(c.spec.anneal_mode, AnnealMode::Linear);

    const auto again = cli::run_config_from_json(cli::to_json(c), "/elsewhere");
    EXPECT_EQ(cli::to_json(again).dump(), cli::to_json(c).dump());
    EXPECT_EQ(cli::config_hash(again), cli::config_hash(c));

    auto changed = c;
    changed.spec.epochs = 8;
    EXPECT_NE(cli::config_hash(changed), cli::config_hash(c));
}
