#include "mtqsar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtqsar/error.hpp"
#include "mtqsar/parallel.hpp"

namespace mtqsar {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) fail(ErrorCode::ShapeError, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (const auto l : labels) positives += l ? 1 : 0;
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) fail(ErrorCode::UndefinedAUC, "AUC needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of positive ranks with tied groups sharing their mean rank; ranks are
    // doubled to stay in exact integer arithmetic.
    std::uint64_t twice_rank_sum = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t group_positives = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            group_positives += labels[order[j]] ? 1 : 0;
            ++j;
        }
        // Ranks i+1..j have mean (i + 1 + j) / 2.
        twice_rank_sum += static_cast<std::uint64_t>(group_positives) * (i + 1 + j);
        i = j;
    }
    const auto p = static_cast<std::uint64_t>(positives);
    const std::uint64_t twice_u = twice_rank_sum - p * (p + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

std::vector<double> score_assays(const NetworkParams& params, const MultiTaskDataset& data) {
    if (params.config.output_dim != data.num_assays()) {
        fail(ErrorCode::ShapeError, "network outputs do not match dataset assays");
    }
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Eigen::MatrixXd probabilities = predict(params, data.gather_inputs(all));

    const auto groups = data.cases_by_assay();
    std::vector<double> aucs;
    for (std::size_t a = 0; a < groups.size(); ++a) {
        std::vector<double> scores;
        std::vector<std::uint8_t> labels;
        for (const std::size_t pos : groups[a]) {
            scores.push_back(probabilities(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(a)));
            labels.push_back(data.cases()[pos].label);
        }
        try {
            aucs.push_back(auc(scores, labels));
        } catch (const Error& e) {
            fail(e.code(), "assay '" + data.assay_ids()[a] + "' in " + data.provenance() + ": " + e.what());
        }
    }
    return aucs;
}

double unbiased_variance(std::span<const double> values) {
    require(values.size() >= 2, "variance needs at least two values");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(values.size() - 1);
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json j{
        {"assay_id", report.assay_id},
        {"model", report.model_label},
        {"fold_aucs", report.fold_aucs},
        {"mean_auc", report.mean_auc},
        {"validation_aucs", report.validation_aucs},
        {"mean_validation_auc", report.mean_validation_auc},
        {"bootstrap_variance", nullptr},
        {"bootstrap_aucs", report.bootstrap_aucs},
        {"seeds", report.seeds},
        {"config_hash", report.config_hash},
        {"diverged", report.diverged},
        {"diverged_fold", nullptr},
    };
    if (report.bootstrap_variance) j["bootstrap_variance"] = *report.bootstrap_variance;
    if (report.diverged_fold) j["diverged_fold"] = *report.diverged_fold;
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    j.at("assay_id").get_to(r.assay_id);
    j.at("model").get_to(r.model_label);
    j.at("fold_aucs").get_to(r.fold_aucs);
    j.at("mean_auc").get_to(r.mean_auc);
    if (j.contains("validation_aucs")) j.at("validation_aucs").get_to(r.validation_aucs);
    r.mean_validation_auc = j.value("mean_validation_auc", 0.0);
    if (j.contains("bootstrap_variance") && !j.at("bootstrap_variance").is_null()) {
        r.bootstrap_variance = j.at("bootstrap_variance").get<double>();
    }
    if (j.contains("bootstrap_aucs")) j.at("bootstrap_aucs").get_to(r.bootstrap_aucs);
    if (j.contains("seeds")) j.at("seeds").get_to(r.seeds);
    r.config_hash = j.value("config_hash", "");
    r.diverged = j.value("diverged", false);
    if (j.contains("diverged_fold") && !j.at("diverged_fold").is_null()) {
        r.diverged_fold = j.at("diverged_fold").get<std::size_t>();
    }
    return r;
}

const EvalReport& CrossFoldResult::report_for(const std::string& assay_id) const {
    for (const auto& r : reports) {
        if (r.assay_id == assay_id) return r;
    }
    fail(ErrorCode::UnknownAssay, "no report for assay '" + assay_id + "'");
}

std::uint64_t fold_seed(std::uint64_t base_seed, std::size_t fold) {
    return derive_seed(base_seed, 100 + fold);
}

namespace {

double mean_of(const std::vector<double>& values) {
    return values.empty() ? 0.0 : std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

struct FoldScores {
    TrainOutcome outcome;
    std::vector<double> validation;
    std::vector<double> test;
};

CrossFoldResult run_folds(const MultiTaskDataset& train, const MultiTaskDataset* test, const NetworkConfig& config,
                          const TrainSpec& spec, const SplitAssignment& folds, const FoldRunOptions& options) {
    require(folds.fold_of.size() == train.size(), "fold assignment does not match training set");
    const std::size_t k = folds.fold_count;
    std::vector<FoldScores> scores(k);

    parallel_for(k, options.threads, [&](std::size_t fold) {
        TrainSpec fold_spec = spec;
        fold_spec.seed = fold_seed(spec.seed, fold);
        auto& slot = scores[fold];
        slot.outcome = mtqsar::train(fold_training_view(train, folds, fold), config, fold_spec);
        if (slot.outcome.diverged()) return;
        slot.validation = score_assays(slot.outcome.params, fold_validation_view(train, folds, fold));
        if (test) slot.test = score_assays(slot.outcome.params, *test);
    });

    CrossFoldResult result;
    const auto& assays = train.assay_ids();
    result.reports.resize(assays.size());
    for (std::size_t a = 0; a < assays.size(); ++a) {
        auto& r = result.reports[a];
        r.assay_id = assays[a];
        r.model_label = options.model_label;
        r.config_hash = options.config_hash;
    }
    for (std::size_t fold = 0; fold < k; ++fold) {
        const auto& slot = scores[fold];
        for (std::size_t a = 0; a < assays.size(); ++a) {
            auto& r = result.reports[a];
            r.seeds.push_back(fold_seed(spec.seed, fold));
            if (slot.outcome.diverged()) {
                if (!r.diverged) r.diverged_fold = fold;
                r.diverged = true;
                continue;
            }
            r.validation_aucs.push_back(slot.validation[a]);
            if (test) r.fold_aucs.push_back(slot.test[a]);
        }
        if (options.on_fold) options.on_fold(fold, slot.outcome);
    }
    for (auto& r : result.reports) {
        if (r.diverged) {
            // Partial averages are not comparable across models.
            r.fold_aucs.clear();
            r.validation_aucs.clear();
            continue;
        }
        r.mean_auc = mean_of(r.fold_aucs);
        r.mean_validation_auc = mean_of(r.validation_aucs);
    }
    for (auto& slot : scores) result.fold_outcomes.push_back(std::move(slot.outcome));
    return result;
}

}  // namespace

CrossFoldResult cross_fold_evaluate(const MultiTaskDataset& train, const MultiTaskDataset& test,
                                    const NetworkConfig& config, const TrainSpec& spec, const SplitAssignment& folds,
                                    const FoldRunOptions& options) {
    if (test.assay_ids() != train.assay_ids()) fail(ErrorCode::ShapeError, "train and test assays differ");
    return run_folds(train, &test, config, spec, folds, options);
}

CrossFoldResult cross_fold_validate(const MultiTaskDataset& train, const NetworkConfig& config, const TrainSpec& spec,
                                    const SplitAssignment& folds, const FoldRunOptions& options) {
    return run_folds(train, nullptr, config, spec, folds, options);
}

BootstrapResult bootstrap_variance(const MultiTaskDataset& train, const MultiTaskDataset& test,
                                   const NetworkConfig& config, const TrainSpec& spec, std::size_t resamples,
                                   std::uint64_t seed, unsigned threads) {
    require(resamples >= 2, "bootstrap needs at least two resamples");
    if (test.assay_ids() != train.assay_ids()) fail(ErrorCode::ShapeError, "train and test assays differ");

    struct Run {
        bool diverged = false;
        std::vector<double> aucs;
    };
    std::vector<Run> runs(resamples);
    BootstrapResult result;
    result.assay_ids = train.assay_ids();
    for (std::size_t r = 0; r < resamples; ++r) result.seeds.push_back(derive_seed(seed, 200 + r));

    parallel_for(resamples, threads, [&](std::size_t r) {
        const MultiTaskDataset sample = bootstrap_resample(train, result.seeds[r]);
        TrainSpec run_spec = spec;
        run_spec.seed = derive_seed(spec.seed, 300 + r);
        const TrainOutcome outcome = mtqsar::train(sample, config, run_spec);
        if (outcome.diverged()) {
            runs[r].diverged = true;
            return;
        }
        runs[r].aucs = score_assays(outcome.params, test);
    });

    result.aucs.resize(result.assay_ids.size());
    for (const auto& run : runs) {
        if (run.diverged) {
            ++result.diverged_runs;
            continue;
        }
        ++result.valid_runs;
        for (std::size_t a = 0; a < run.aucs.size(); ++a) result.aucs[a].push_back(run.aucs[a]);
    }
    if (result.valid_runs < 2) {
        fail(ErrorCode::NoValidRuns, std::to_string(result.diverged_runs) + " of " + std::to_string(resamples) +
                                         " bootstrap runs diverged; variance undefined");
    }
    for (const auto& aucs : result.aucs) result.variances.push_back(unbiased_variance(aucs));
    return result;
}

nlohmann::json to_json(const SignificanceResult& result) {
    return {{"y1", result.y1},       {"y2", result.y2},
            {"var1", result.var1},   {"var2", result.var2},
            {"threshold", result.threshold}, {"significant", result.significant}};
}

SignificanceResult significance_test(double y1, double y2, double var1, double var2, std::size_t resamples) {
    if (!(var1 >= 0.0) || !(var2 >= 0.0)) fail(ErrorCode::BadVariance, "bootstrap variances must be non-negative");
    require(resamples >= 1, "resample count must be positive");
    SignificanceResult result{y1, y2, var1, var2, 0.0, false};
    result.threshold = 1.96 * std::sqrt((var1 + var2) / static_cast<double>(resamples));
    result.significant = std::abs(y1 - y2) > result.threshold;
    return result;
}

}  // namespace mtqsar
