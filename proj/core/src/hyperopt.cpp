#include "mtqsar/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtqsar/error.hpp"
#include "mtqsar/eval.hpp"
#include "mtqsar/gaussian_process.hpp"
#include "mtqsar/random.hpp"

namespace mtqsar {

Dimension Dimension::continuous(std::string name, double min, double max) {
    return {std::move(name), DimensionKind::Continuous, min, max, {}};
}

Dimension Dimension::integer(std::string name, std::int64_t min, std::int64_t max) {
    return {std::move(name), DimensionKind::Integer, static_cast<double>(min), static_cast<double>(max), {}};
}

Dimension Dimension::categorical(std::string name, std::vector<std::string> options) {
    return {std::move(name), DimensionKind::Categorical, 0.0, 0.0, std::move(options)};
}

namespace {

void validate_dimension(const Dimension& d) {
    require(!d.name.empty(), "dimension needs a name");
    if (d.kind == DimensionKind::Categorical) {
        require(!d.options.empty(), "categorical dimension '" + d.name + "' needs options");
    } else {
        require(std::isfinite(d.min) && std::isfinite(d.max) && d.min <= d.max,
                "dimension '" + d.name + "' needs min <= max");
        if (d.kind == DimensionKind::Integer) {
            require(d.min == std::floor(d.min) && d.max == std::floor(d.max),
                    "integer dimension '" + d.name + "' needs integral bounds");
        }
    }
}

double unit_scale(double value, const Dimension& d) {
    return d.max > d.min ? (value - d.min) / (d.max - d.min) : 0.0;
}

double as_double(const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    fail(ErrorCode::InvalidArgument, "expected a numeric metaparameter value");
}

const std::string& as_string(const ParamValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    fail(ErrorCode::InvalidArgument, "expected a categorical metaparameter value");
}

}  // namespace

SearchSpace::SearchSpace(std::vector<Dimension> dimensions) : dimensions_(std::move(dimensions)) {
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        validate_dimension(dimensions_[i]);
        for (std::size_t j = 0; j < i; ++j) {
            require(dimensions_[i].name != dimensions_[j].name, "duplicate dimension '" + dimensions_[i].name + "'");
        }
    }
}

std::size_t SearchSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        if (dimensions_[i].name == name) return i;
    }
    fail(ErrorCode::InvalidArgument, "unknown search dimension '" + std::string(name) + "'");
}

bool SearchSpace::contains(std::string_view name) const {
    return std::any_of(dimensions_.begin(), dimensions_.end(), [&](const Dimension& d) { return d.name == name; });
}

std::size_t SearchSpace::encoded_size() const {
    std::size_t n = 0;
    for (const auto& d : dimensions_) n += d.kind == DimensionKind::Categorical ? d.options.size() : 1;
    return n;
}

Eigen::VectorXd SearchSpace::encode(const Point& point) const {
    require(point.values.size() == dimensions_.size(), "point does not match the search space");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(encoded_size()));
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        const auto& d = dimensions_[i];
        if (d.kind == DimensionKind::Categorical) {
            const auto& value = as_string(point.values[i]);
            const auto it = std::find(d.options.begin(), d.options.end(), value);
            require(it != d.options.end(), "'" + value + "' is not an option of '" + d.name + "'");
            x(k + (it - d.options.begin())) = 1.0;
            k += static_cast<Eigen::Index>(d.options.size());
        } else {
            x(k++) = unit_scale(as_double(point.values[i]), d);
        }
    }
    return x;
}

bool SearchSpace::contains(const Point& point) const {
    if (point.values.size() != dimensions_.size()) return false;
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        const auto& d = dimensions_[i];
        const auto& v = point.values[i];
        switch (d.kind) {
            case DimensionKind::Continuous: {
                const auto* x = std::get_if<double>(&v);
                if (!x || *x < d.min || *x > d.max) return false;
                break;
            }
            case DimensionKind::Integer: {
                const auto* x = std::get_if<std::int64_t>(&v);
                if (!x || static_cast<double>(*x) < d.min || static_cast<double>(*x) > d.max) return false;
                break;
            }
            case DimensionKind::Categorical: {
                const auto* x = std::get_if<std::string>(&v);
                if (!x || std::find(d.options.begin(), d.options.end(), *x) == d.options.end()) return false;
                break;
            }
        }
    }
    return true;
}

void SearchSpace::apply_overrides(const nlohmann::json& overrides) {
    require(overrides.is_object(), "space overrides must be a JSON object");
    for (const auto& [name, spec] : overrides.items()) {
        Dimension& d = dimensions_[index_of(name)];
        if (spec.contains("options")) {
            require(d.kind == DimensionKind::Categorical, "'" + name + "' is not categorical");
            d.options = spec.at("options").get<std::vector<std::string>>();
        } else {
            require(d.kind != DimensionKind::Categorical, "'" + name + "' needs an options list");
            d.min = spec.at("min").get<double>();
            d.max = spec.at("max").get<double>();
        }
        validate_dimension(d);
    }
}

SearchSpace default_search_space(std::size_t depth, bool multi_task) {
    require(depth >= 1 && depth <= 3, "depth must be 1, 2 or 3");
    std::int64_t min_units = 16;
    std::int64_t max_units = 3072;
    if (multi_task) {
        min_units = 512;
        max_units = depth == 3 ? 2048 : 3584;
    }

    std::vector<Dimension> dims;
    dims.push_back(Dimension::continuous("dropout_input", 0.0, 0.75));
    for (std::size_t l = 1; l <= depth; ++l) {
        dims.push_back(Dimension::continuous("dropout_hidden_" + std::to_string(l), 0.0, 0.75));
    }
    dims.push_back(Dimension::integer("epochs", 2, depth == 1 ? 100 : 120));
    for (std::size_t l = 1; l <= depth; ++l) {
        dims.push_back(Dimension::integer("hidden_units_" + std::to_string(l), min_units, max_units));
    }
    dims.push_back(Dimension::continuous("anneal_delay_fraction", 0.0, 1.0));
    dims.push_back(Dimension::continuous("initial_lr", 0.001, 0.3));
    dims.push_back(Dimension::categorical("anneal_mode", {"exponential", "linear"}));
    dims.push_back(Dimension::continuous("momentum", 0.0, 0.95));
    dims.push_back(Dimension::continuous("weight_cost", 0.0, 0.007));
    dims.push_back(Dimension::categorical("activation", {"sigmoid", "relu"}));
    dims.push_back(Dimension::continuous("init_scale", 0.01, 0.2));
    dims.push_back(Dimension::continuous("bottom_scale_log_multiplier", -1.0, 1.0));
    return SearchSpace(std::move(dims));
}

nlohmann::json to_json(const SearchSpace& space, const Point& point) {
    require(point.values.size() == space.size(), "point does not match the search space");
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < space.size(); ++i) {
        std::visit([&](const auto& v) { j[space.dimensions()[i].name] = v; }, point.values[i]);
    }
    return j;
}

void apply_point(const SearchSpace& space, const Point& point, NetworkConfig& config, TrainSpec& spec) {
    require(point.values.size() == space.size(), "point does not match the search space");
    std::size_t depth = 0;
    while (space.contains("hidden_units_" + std::to_string(depth + 1))) ++depth;
    if (depth > 0) {
        config.hidden_sizes.resize(depth, 1);
        config.dropout_rates.resize(depth + 1, 0.0);
    }

    for (std::size_t i = 0; i < space.size(); ++i) {
        const std::string& name = space.dimensions()[i].name;
        const ParamValue& v = point.values[i];
        if (name == "dropout_input") {
            config.dropout_rates.at(0) = as_double(v);
        } else if (name.starts_with("dropout_hidden_")) {
            config.dropout_rates.at(std::stoul(name.substr(15))) = as_double(v);
        } else if (name.starts_with("hidden_units_")) {
            config.hidden_sizes.at(std::stoul(name.substr(13)) - 1) = static_cast<std::size_t>(as_double(v));
        } else if (name == "epochs") {
            spec.epochs = static_cast<std::size_t>(as_double(v));
        } else if (name == "anneal_delay_fraction") {
            spec.anneal_delay_fraction = as_double(v);
        } else if (name == "initial_lr") {
            spec.initial_lr = as_double(v);
        } else if (name == "anneal_mode") {
            spec.anneal_mode = anneal_mode_from_string(as_string(v));
        } else if (name == "momentum") {
            spec.momentum = as_double(v);
        } else if (name == "weight_cost") {
            spec.weight_cost = as_double(v);
        } else if (name == "activation") {
            config.activation = activation_from_string(as_string(v));
        } else if (name == "init_scale") {
            config.init_scale = as_double(v);
        } else if (name == "bottom_scale_log_multiplier") {
            config.bottom_scale_log_multiplier = as_double(v);
        } else {
            fail(ErrorCode::InvalidArgument, "dimension '" + name + "' does not map to a metaparameter");
        }
    }
}

Point sample_uniform(const SearchSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    Point point;
    point.values.reserve(space.size());
    for (const auto& d : space.dimensions()) {
        switch (d.kind) {
            case DimensionKind::Continuous:
                point.values.emplace_back(d.max > d.min ? rng.uniform(d.min, d.max) : d.min);
                break;
            case DimensionKind::Integer:
                point.values.emplace_back(
                    rng.integer(static_cast<std::int64_t>(d.min), static_cast<std::int64_t>(d.max)));
                break;
            case DimensionKind::Categorical:
                point.values.emplace_back(d.options[rng.index(d.options.size())]);
                break;
        }
    }
    return point;
}

namespace {

Point perturb(const SearchSpace& space, const Point& point, double scale, Rng& rng) {
    Point out = point;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const Dimension& d = space.dimensions()[i];
        switch (d.kind) {
            case DimensionKind::Continuous:
                out.values[i] = std::clamp(std::get<double>(point.values[i]) + scale * (d.max - d.min) * rng.normal(),
                                           d.min, d.max);
                break;
            case DimensionKind::Integer: {
                const double v = static_cast<double>(std::get<std::int64_t>(point.values[i])) +
                                 scale * (d.max - d.min) * rng.normal();
                out.values[i] = static_cast<std::int64_t>(std::clamp(std::round(v), d.min, d.max));
                break;
            }
            case DimensionKind::Categorical:
                if (rng.bernoulli(scale)) out.values[i] = d.options[rng.index(d.options.size())];
                break;
        }
    }
    return out;
}

}  // namespace

Point gp_suggest(const std::vector<TrialRecord>& history, const SearchSpace& space, std::uint64_t seed,
                 const GpSuggestOptions& options) {
    std::vector<const TrialRecord*> ok;
    for (const auto& t : history) {
        if (t.status == TrialStatus::Ok && t.validation_auc) ok.push_back(&t);
    }
    if (ok.size() < std::max<std::size_t>(options.min_ok_trials, 1)) {
        return sample_uniform(space, seed);
    }

    const auto dim = static_cast<Eigen::Index>(space.encoded_size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ok.size()), dim);
    Eigen::VectorXd y(static_cast<Eigen::Index>(ok.size()));
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ok.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = space.encode(ok[i]->point).transpose();
        y(static_cast<Eigen::Index>(i)) = *ok[i]->validation_auc;
        best = std::max(best, *ok[i]->validation_auc);
    }
    const GaussianProcess objective = GaussianProcess::fit(x, y);

    // Success model: GP regression on the 1 (ok) / 0 (diverged) indicator; its
    // mean, clamped to [0, 1], is the probability a candidate trains.
    std::optional<GaussianProcess> success;
    const bool any_diverged =
        std::any_of(history.begin(), history.end(), [](const TrialRecord& t) { return t.status == TrialStatus::Diverged; });
    if (any_diverged) {
        Eigen::MatrixXd xs(static_cast<Eigen::Index>(history.size()), dim);
        Eigen::VectorXd ys(static_cast<Eigen::Index>(history.size()));
        for (std::size_t i = 0; i < history.size(); ++i) {
            xs.row(static_cast<Eigen::Index>(i)) = space.encode(history[i].point).transpose();
            ys(static_cast<Eigen::Index>(i)) = history[i].status == TrialStatus::Ok ? 1.0 : 0.0;
        }
        success = GaussianProcess::fit(xs, ys);
    }

    std::vector<const TrialRecord*> parents = ok;
    std::stable_sort(parents.begin(), parents.end(),
                     [](const TrialRecord* a, const TrialRecord* b) { return *a->validation_auc > *b->validation_auc; });
    parents.resize(std::min(parents.size(), options.local_parents));
    Rng local_rng(derive_seed(seed, options.candidates + 1));

    Point best_point;
    double best_score = -1.0;
    const std::size_t local = parents.empty() ? 0 : options.local_candidates;
    for (std::size_t c = 0; c < options.candidates + local; ++c) {
        Point candidate = c < options.candidates
                              ? sample_uniform(space, derive_seed(seed, c + 1))
                              : perturb(space, parents[c % parents.size()]->point, options.local_scale, local_rng);
        const Eigen::VectorXd e = space.encode(candidate);
        const auto pred = objective.predict(e);
        double score = expected_improvement(pred.mean, std::sqrt(pred.variance), best);
        if (success) {
            const auto s = success->predict(e);
            score *= std::clamp(s.mean, 0.0, 1.0);
        }
        if (score > best_score) {
            best_score = score;
            best_point = std::move(candidate);
        }
    }
    return best_point;
}

std::string_view to_string(SearchStrategy strategy) noexcept {
    return strategy == SearchStrategy::Gp ? "gp" : "random";
}

SearchStrategy search_strategy_from_string(std::string_view name) {
    if (name == "gp") return SearchStrategy::Gp;
    if (name == "random") return SearchStrategy::Random;
    fail(ErrorCode::InvalidArgument, "unknown search strategy '" + std::string(name) + "'");
}

std::vector<std::optional<double>> SearchResult::best_so_far() const {
    std::vector<std::optional<double>> out;
    std::optional<double> running;
    for (const auto& t : trials) {
        if (t.validation_auc && (!running || *t.validation_auc > *running)) running = t.validation_auc;
        out.push_back(running);
    }
    return out;
}

SearchResult run_search(const Objective& objective, const SearchSpace& space, std::size_t budget,
                        SearchStrategy strategy, std::uint64_t seed) {
    require(budget >= 1, "search budget must be at least 1");
    SearchResult result;
    std::optional<double> best;
    for (std::size_t t = 0; t < budget; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, 1000 + t);
        TrialRecord record;
        record.point = strategy == SearchStrategy::Gp ? gp_suggest(result.trials, space, trial_seed)
                                                      : sample_uniform(space, trial_seed);
        record.validation_auc = objective(record.point);
        record.status = record.validation_auc ? TrialStatus::Ok : TrialStatus::Diverged;
        if (record.validation_auc && (!best || *record.validation_auc > *best)) {
            best = record.validation_auc;
            result.best_index = t;
        }
        result.trials.push_back(std::move(record));
    }
    if (!best) fail(ErrorCode::NoValidRuns, "all " + std::to_string(budget) + " trials diverged");
    return result;
}

SearchResult run_search(const MultiTaskDataset& train, const SplitAssignment& folds, const NetworkConfig& base_config,
                        const TrainSpec& base_spec, const SearchSpace& space, const SearchOptions& options) {
    std::size_t trial = 0;
    const Objective objective = [&](const Point& point) -> std::optional<double> {
        NetworkConfig config = base_config;
        TrainSpec spec = base_spec;
        apply_point(space, point, config, spec);
        FoldRunOptions fold_options;
        fold_options.threads = options.threads;
        const CrossFoldResult r = cross_fold_validate(train, config, spec, folds, fold_options);

        std::optional<double> score;
        if (!r.diverged()) {
            if (!options.target_assay.empty()) {
                score = r.report_for(options.target_assay).mean_validation_auc;
            } else {
                double sum = 0.0;
                for (const auto& rep : r.reports) sum += rep.mean_validation_auc;
                score = sum / static_cast<double>(r.reports.size());
            }
        }
        if (options.on_trial) {
            options.on_trial(trial, TrialRecord{point, score ? TrialStatus::Ok : TrialStatus::Diverged, score});
        }
        ++trial;
        return score;
    };
    return run_search(objective, space, options.budget, options.strategy, options.seed);
}

}  // namespace mtqsar
