#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtqsar/dataset.hpp"
#include "mtqsar/network.hpp"
#include "mtqsar/trainer.hpp"

namespace mtqsar {

/// Area under the ROC curve via the rank-sum statistic with midranks, i.e. the
/// fraction of (active, inactive) pairs ranked correctly with half credit for
/// ties. Throws UndefinedAUC if either class is absent.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Test AUC of every network output over the matching cases of `data`.
std::vector<double> score_assays(const NetworkParams& params, const MultiTaskDataset& data);

/// Sample variance with denominator n - 1.
double unbiased_variance(std::span<const double> values);

struct EvalReport {
    std::string assay_id;
    std::string model_label;
    /// Test-set AUC of each fold model.
    std::vector<double> fold_aucs;
    double mean_auc = 0.0;
    /// Held-out-fold AUC of each fold model.
    std::vector<double> validation_aucs;
    double mean_validation_auc = 0.0;
    std::optional<double> bootstrap_variance;
    std::vector<double> bootstrap_aucs;
    std::vector<std::uint64_t> seeds;
    std::string config_hash;
    bool diverged = false;
    std::optional<std::size_t> diverged_fold;
};

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

struct FoldRunOptions {
    unsigned threads = 1;
    std::string model_label = "NNET";
    std::string config_hash;
    /// Called once per fold, in fold order, after all folds finish.
    std::function<void(std::size_t fold, const TrainOutcome&)> on_fold;
};

struct CrossFoldResult {
    /// One report per network output, in assay order.
    std::vector<EvalReport> reports;
    std::vector<TrainOutcome> fold_outcomes;

    [[nodiscard]] bool diverged() const { return !reports.empty() && reports.front().diverged; }
    [[nodiscard]] const EvalReport& report_for(const std::string& assay_id) const;
};

/// Seed of the training run for fold k.
std::uint64_t fold_seed(std::uint64_t base_seed, std::size_t fold);

/// For each fold k: train on the other folds, score fold k (validation) and the test set.
CrossFoldResult cross_fold_evaluate(const MultiTaskDataset& train, const MultiTaskDataset& test,
                                    const NetworkConfig& config, const TrainSpec& spec, const SplitAssignment& folds,
                                    const FoldRunOptions& options = {});

/// The same fold protocol scored on validation folds only. Never sees a test set.
CrossFoldResult cross_fold_validate(const MultiTaskDataset& train, const NetworkConfig& config, const TrainSpec& spec,
                                    const SplitAssignment& folds, const FoldRunOptions& options = {});

inline constexpr std::size_t kDefaultBootstrapResamples = 8;

struct BootstrapResult {
    std::vector<std::string> assay_ids;
    /// aucs[assay][run] over runs that did not diverge.
    std::vector<std::vector<double>> aucs;
    std::vector<double> variances;
    std::size_t valid_runs = 0;
    std::size_t diverged_runs = 0;
    std::vector<std::uint64_t> seeds;
};

/// Trains on `resamples` bootstrap resamples of the full training set and
/// returns the unbiased variance of each assay's test AUC across them.
/// Throws NoValidRuns when fewer than two runs complete.
BootstrapResult bootstrap_variance(const MultiTaskDataset& train, const MultiTaskDataset& test,
                                   const NetworkConfig& config, const TrainSpec& spec,
                                   std::size_t resamples = kDefaultBootstrapResamples, std::uint64_t seed = 0,
                                   unsigned threads = 1);

struct SignificanceResult {
    double y1 = 0.0;
    double y2 = 0.0;
    double var1 = 0.0;
    double var2 = 0.0;
    double threshold = 0.0;
    bool significant = false;
};

nlohmann::json to_json(const SignificanceResult& result);

/// |y1 - y2| > 1.96 * sqrt((var1 + var2) / resamples). Throws BadVariance on negative input.
SignificanceResult significance_test(double y1, double y2, double var1, double var2,
                                     std::size_t resamples = kDefaultBootstrapResamples);

}  // namespace mtqsar
