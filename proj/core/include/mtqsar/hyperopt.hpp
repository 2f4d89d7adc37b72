#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mtqsar/dataset.hpp"
#include "mtqsar/network.hpp"
#include "mtqsar/trainer.hpp"

namespace mtqsar {

enum class DimensionKind { Continuous, Integer, Categorical };

struct Dimension {
    std::string name;
    DimensionKind kind = DimensionKind::Continuous;
    double min = 0.0;
    double max = 1.0;
    std::vector<std::string> options;

    static Dimension continuous(std::string name, double min, double max);
    static Dimension integer(std::string name, std::int64_t min, std::int64_t max);
    static Dimension categorical(std::string name, std::vector<std::string> options);
};

using ParamValue = std::variant<double, std::int64_t, std::string>;

/// Values aligned with SearchSpace::dimensions.
struct Point {
    std::vector<ParamValue> values;

    friend bool operator==(const Point&, const Point&) = default;
};

class SearchSpace {
public:
    SearchSpace() = default;
    explicit SearchSpace(std::vector<Dimension> dimensions);

    [[nodiscard]] const std::vector<Dimension>& dimensions() const noexcept { return dimensions_; }
    [[nodiscard]] std::size_t size() const noexcept { return dimensions_.size(); }
    [[nodiscard]] std::size_t index_of(std::string_view name) const;
    [[nodiscard]] bool contains(std::string_view name) const;

    /// Continuous and integer dims rescaled to [0, 1]; categoricals one-hot.
    [[nodiscard]] std::size_t encoded_size() const;
    [[nodiscard]] Eigen::VectorXd encode(const Point& point) const;
    [[nodiscard]] bool contains(const Point& point) const;

    /// Replaces ranges/options from a JSON map of dimension name to
    /// {"min":..,"max":..} or {"options":[..]}. Throws on unknown names.
    void apply_overrides(const nlohmann::json& overrides);

private:
    std::vector<Dimension> dimensions_;
};

/// Every searchable metaparameter for a net with `depth` hidden layers.
/// Hidden-unit bounds follow the single-/multi-task setting; other ranges take
/// the widest value used across settings.
SearchSpace default_search_space(std::size_t depth, bool multi_task);

nlohmann::json to_json(const SearchSpace& space, const Point& point);

/// Copies the point's values onto a base configuration by dimension name.
void apply_point(const SearchSpace& space, const Point& point, NetworkConfig& config, TrainSpec& spec);

Point sample_uniform(const SearchSpace& space, std::uint64_t seed);

enum class TrialStatus { Ok, Diverged };

struct TrialRecord {
    Point point;
    TrialStatus status = TrialStatus::Ok;
    /// Mean validation AUC; absent for diverged trials.
    std::optional<double> validation_auc;
};

struct GpSuggestOptions {
    std::size_t candidates = 2048;
    /// Extra candidates drawn around the best ok trials.
    std::size_t local_candidates = 1024;
    std::size_t local_parents = 3;
    /// Gaussian step as a fraction of each range; categoricals resample with this probability.
    double local_scale = 0.1;
    std::size_t min_ok_trials = 5;
};

/// Expected improvement under a GP fit to the ok trials, weighted by the
/// probability of not diverging from a separate GP on ok/diverged outcomes.
/// Falls back to sample_uniform(space, seed) with fewer than min_ok_trials ok
/// trials, so an early GP search visits the same points as a random one.
Point gp_suggest(const std::vector<TrialRecord>& history, const SearchSpace& space, std::uint64_t seed,
                 const GpSuggestOptions& options = {});

enum class SearchStrategy { Random, Gp };
std::string_view to_string(SearchStrategy strategy) noexcept;
SearchStrategy search_strategy_from_string(std::string_view name);

inline constexpr std::size_t kDefaultSearchBudget = 30;

struct SearchResult {
    std::vector<TrialRecord> trials;
    std::size_t best_index = 0;

    [[nodiscard]] const TrialRecord& best() const { return trials.at(best_index); }
    /// Running maximum of validation AUC over the ok trials seen so far.
    [[nodiscard]] std::vector<std::optional<double>> best_so_far() const;
};

/// Objective result: a score to maximize, or nullopt for a diverged trial.
using Objective = std::function<std::optional<double>(const Point&)>;

/// Sequential suggest -> evaluate -> record loop. Throws NoValidRuns if every trial diverged.
SearchResult run_search(const Objective& objective, const SearchSpace& space, std::size_t budget,
                        SearchStrategy strategy, std::uint64_t seed);

struct SearchOptions {
    std::size_t budget = kDefaultSearchBudget;
    SearchStrategy strategy = SearchStrategy::Gp;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    /// Assay whose validation AUC is maximized; empty averages over all assays.
    std::string target_assay;
    std::function<void(std::size_t trial, const TrialRecord&)> on_trial;
};

/// Searches metaparameters by 4-fold validation AUC of `train`. Only training
/// cases are visible; a test set cannot be passed.
SearchResult run_search(const MultiTaskDataset& train, const SplitAssignment& folds, const NetworkConfig& base_config,
                        const TrainSpec& base_spec, const SearchSpace& space, const SearchOptions& options);

}  // namespace mtqsar
