#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "mtqsar/csv.hpp"
#include "mtqsar/error.hpp"
#include "mtqsar/eval.hpp"
#include "mtqsar/featsel.hpp"
#include "mtqsar/hyperopt.hpp"
#include "mtqsar/model_io.hpp"
#include "mtqsar/synthetic.hpp"

#ifndef MTQSAR_VERSION
#define MTQSAR_VERSION "0.0.0"
#endif

namespace mtqsar::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    bool seed_given = false;
    fs::path out;
    unsigned threads = 1;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot write " + path.string());
    f << text;
    if (!f) fail(ErrorCode::Io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

fs::path require_out(const Globals& g) {
    if (g.out.empty()) fail(ErrorCode::InvalidArgument, "--out is required");
    fs::create_directories(g.out);
    return g.out;
}

/// Merges one command's entry into <out>/manifest.json.
void record_manifest(const fs::path& out, const std::string& command, nlohmann::json entry) {
    const fs::path path = out / "manifest.json";
    nlohmann::json manifest = fs::exists(path) ? read_json(path) : nlohmann::json::object();
    manifest["tool"] = "mtqsar";
    manifest["version"] = MTQSAR_VERSION;
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION);
    std::vector<std::string> artifacts;
    for (const auto& item : fs::directory_iterator(out)) {
        if (item.is_regular_file() && item.path().filename() != "manifest.json") {
            artifacts.push_back(item.path().filename().string());
        }
    }
    std::sort(artifacts.begin(), artifacts.end());
    manifest["artifacts"] = artifacts;
    manifest["commands"][command] = std::move(entry);
    write_json(path, manifest);
}

RunConfig load_config(const fs::path& path, const Globals& g) {
    RunConfig config = load_run_config(path);
    if (g.seed_given) config.spec.seed = g.seed;
    return config;
}

nlohmann::json config_entry(const RunConfig& config) {
    return {{"config", to_json(config)}, {"config_hash", config_hash(config)}, {"seed", config.spec.seed}};
}

// Rethrows a loader error with the file it came from.
template <typename F>
auto with_file_context(const fs::path& path, F&& load) {
    try {
        return load();
    } catch (const Error& e) {
        const std::string what = e.what();
        fail(e.code(), path.string() + ": " + what.substr(to_string(e.code()).size() + 2));
    }
}

// -- prepare ----------------------------------------------------------------

struct PrepareArgs {
    fs::path descriptors;
    fs::path labels;
    double test_fraction = 0.25;
    std::size_t folds = 4;
};

int cmd_prepare(const PrepareArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = require_out(g);
    const DescriptorTable raw = with_file_context(a.descriptors, [&] { return load_descriptor_table(a.descriptors); });
    const LabelSet labels = with_file_context(a.labels, [&] { return load_labels(a.labels); });
    auto [normalized, stats] = zscore_normalize(raw);
    auto table = std::make_shared<const DescriptorTable>(std::move(normalized));
    const MultiTaskDataset data = build_dataset(table, labels);
    const TrainTestSplit split = split_train_test(data, a.test_fraction, g.seed);
    const SplitAssignment folds = make_folds(split.train, a.folds, derive_seed(g.seed, 1));

    write_descriptor_table(dir / "descriptors.csv", *table);
    write_labels(dir / "labels.csv", labels);
    write_json(dir / "norm_stats.json", to_json(stats));

    std::ostringstream s;
    s << "compound_id,assay_id,split,fold\n";
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        const Case& c = split.train.cases()[i];
        s << table->compound_ids[c.row] << ',' << data.assay_ids()[c.assay] << ",train," << folds.fold_of[i] << '\n';
    }
    for (const Case& c : split.test.cases()) {
        s << table->compound_ids[c.row] << ',' << data.assay_ids()[c.assay] << ",test,\n";
    }
    write_text(dir / "split.csv", s.str());

    record_manifest(dir, "prepare",
                    {{"seed", g.seed},
                     {"test_fraction", a.test_fraction},
                     {"folds", a.folds},
                     {"descriptors", table->cols()},
                     {"dropped_descriptors", stats.dropped_columns.size()},
                     {"assays", data.assay_ids()},
                     {"train_cases", split.train.size()},
                     {"test_cases", split.test.size()}});
    out << "prepared " << data.num_assays() << " assays, " << split.train.size() << " training and "
        << split.test.size() << " test cases, " << table->cols() << " descriptors\n";
    return kSuccess;
}

// -- train / bootstrap ------------------------------------------------------

void write_reports(const fs::path& dir, const RunConfig& config, const std::vector<EvalReport>& reports) {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& r : reports) {
        all.push_back(to_json(r));
        write_json(dir / ("report_" + r.assay_id + ".json"), to_json(r));
    }
    write_json(dir / "report.json", {{"mode", std::string(to_string(config.mode))},
                                     {"model", config.model_label},
                                     {"config_hash", config_hash(config)},
                                     {"reports", all}});
}

std::vector<EvalReport> read_reports(const fs::path& path) {
    const nlohmann::json j = read_json(path);
    std::vector<EvalReport> reports;
    if (j.contains("reports")) {
        for (const auto& r : j.at("reports")) reports.push_back(eval_report_from_json(r));
    } else {
        reports.push_back(eval_report_from_json(j));
    }
    return reports;
}

void write_train_log(const fs::path& path, const TrainOutcome& outcome) {
    std::ostringstream s;
    s << "epoch,lr,mean_train_loss\n";
    for (std::size_t e = 0; e < outcome.loss_history.size(); ++e) {
        s << e << ',' << csv::format_double(outcome.lr_history[e]) << ','
          << csv::format_double(outcome.loss_history[e]) << '\n';
    }
    write_text(path, s.str());
}

void print_reports(std::ostream& out, const std::vector<EvalReport>& reports) {
    for (const auto& r : reports) {
        out << r.model_label << ' ' << r.assay_id << ": ";
        if (r.diverged) {
            out << "diverged in fold " << r.diverged_fold.value_or(0) << '\n';
            continue;
        }
        out << "mean test AUC " << csv::format_double(r.mean_auc) << ", mean validation AUC "
            << csv::format_double(r.mean_validation_auc);
        if (r.bootstrap_variance) out << ", bootstrap variance " << csv::format_double(*r.bootstrap_variance);
        out << '\n';
    }
}

int cmd_train(const fs::path& config_path, const Globals& g, std::ostream& out) {
    const fs::path dir = require_out(g);
    const RunConfig config = load_config(config_path, g);
    const PreparedData data = load_prepared(config.data);
    const Selection sel = select(data, config);

    FoldRunOptions options;
    options.threads = g.threads;
    options.model_label = config.model_label;
    options.config_hash = config_hash(config);
    options.on_fold = [&](std::size_t fold, const TrainOutcome& outcome) {
        const std::string k = std::to_string(fold);
        write_train_log(dir / ("train_log_fold" + k + ".csv"), outcome);
        if (outcome.diverged()) return;
        ModelMetadata meta{fold_seed(config.spec.seed, fold), data.table->descriptor_names, sel.train.assay_ids(),
                           (config.data / "norm_stats.json").string()};
        save_model(dir / ("model_fold" + k + ".bin"), outcome.params, meta);
    };
    const CrossFoldResult result = cross_fold_evaluate(sel.train, sel.test, sel.network, config.spec, sel.folds, options);
    write_reports(dir, config, result.reports);

    nlohmann::json entry = config_entry(config);
    entry["diverged"] = result.diverged();
    record_manifest(dir, "train", std::move(entry));
    print_reports(out, result.reports);
    return kSuccess;
}

int cmd_bootstrap(const fs::path& config_path, std::size_t resamples, const Globals& g, std::ostream& out) {
    const fs::path dir = require_out(g);
    const RunConfig config = load_config(config_path, g);
    const fs::path report_path = dir / "report.json";
    if (!fs::exists(report_path)) {
        fail(ErrorCode::Io, report_path.string() + " not found; run `mtqsar train` with the same --out first");
    }
    std::vector<EvalReport> reports = read_reports(report_path);
    if (!reports.empty() && reports.front().config_hash != config_hash(config)) {
        fail(ErrorCode::InvalidArgument, "report in " + dir.string() + " was produced by a different config");
    }
    const PreparedData data = load_prepared(config.data);
    const Selection sel = select(data, config);
    const BootstrapResult boot =
        bootstrap_variance(sel.train, sel.test, sel.network, config.spec, resamples, config.spec.seed, g.threads);
    for (auto& r : reports) {
        const auto it = std::find(boot.assay_ids.begin(), boot.assay_ids.end(), r.assay_id);
        if (it == boot.assay_ids.end()) fail(ErrorCode::UnknownAssay, "report assay '" + r.assay_id + "' not trained");
        const auto a = static_cast<std::size_t>(it - boot.assay_ids.begin());
        r.bootstrap_variance = boot.variances[a];
        r.bootstrap_aucs = boot.aucs[a];
    }
    write_reports(dir, config, reports);

    nlohmann::json entry = config_entry(config);
    entry["resamples"] = resamples;
    entry["valid_runs"] = boot.valid_runs;
    entry["diverged_runs"] = boot.diverged_runs;
    entry["bootstrap_seeds"] = boot.seeds;
    record_manifest(dir, "bootstrap", std::move(entry));
    print_reports(out, reports);
    return kSuccess;
}

// -- significance -----------------------------------------------------------

EvalReport pick_report(const fs::path& path, const std::string& assay) {
    const std::vector<EvalReport> reports = read_reports(path);
    if (assay.empty()) {
        if (reports.size() != 1) {
            fail(ErrorCode::InvalidArgument, path.string() + " holds several assays; pass --assay");
        }
        return reports.front();
    }
    for (const auto& r : reports) {
        if (r.assay_id == assay) return r;
    }
    fail(ErrorCode::UnknownAssay, path.string() + " has no report for assay '" + assay + "'");
}

int cmd_significance(const fs::path& a_path, const fs::path& b_path, const std::string& assay, std::size_t resamples,
                     const Globals& g, std::ostream& out) {
    const EvalReport a = pick_report(a_path, assay);
    const EvalReport b = pick_report(b_path, assay);
    for (const auto& [r, p] : {std::pair{&a, &a_path}, std::pair{&b, &b_path}}) {
        if (r->diverged) fail(ErrorCode::NumericalDivergence, p->string() + " is from a diverged run");
        if (!r->bootstrap_variance) {
            fail(ErrorCode::BadVariance,
                 p->string() + " has no bootstrap variance; run `mtqsar bootstrap` on its config first");
        }
    }
    const SignificanceResult result =
        significance_test(a.mean_auc, b.mean_auc, *a.bootstrap_variance, *b.bootstrap_variance, resamples);
    nlohmann::json j = to_json(result);
    j["model_1"] = a.model_label;
    j["model_2"] = b.model_label;
    j["assay_1"] = a.assay_id;
    j["assay_2"] = b.assay_id;
    j["resamples"] = resamples;

    out << a.model_label << ' ' << csv::format_double(a.mean_auc) << " vs " << b.model_label << ' '
        << csv::format_double(b.mean_auc) << ": " << (result.significant ? "significant" : "not significant")
        << " (threshold " << csv::format_double(result.threshold) << ")\n";
    out << j.dump() << '\n';
    if (!g.out.empty()) {
        const fs::path dir = require_out(g);
        write_json(dir / "significance.json", j);
        record_manifest(dir, "significance", {{"report_1", a_path.string()}, {"report_2", b_path.string()}});
    }
    return kSuccess;
}

// -- feature-curve ----------------------------------------------------------

std::string scored_assay(const RunConfig& config, const Selection& sel) {
    if (config.mode != Mode::Multi) return sel.train.assay_ids().front();
    return config.target_assay.empty() ? sel.train.assay_ids().front() : config.target_assay;
}

int cmd_feature_curve(const fs::path& config_path, const std::vector<std::string>& ks, const Globals& g,
                      std::ostream& out) {
    const fs::path dir = require_out(g);
    const RunConfig config = load_config(config_path, g);
    const PreparedData data = load_prepared(config.data);
    const Selection sel = select(data, config);
    const std::string assay = scored_assay(config, sel);

    std::vector<std::size_t> counts;
    for (const auto& k : ks) {
        if (k == "all") {
            counts.push_back(sel.network.input_dim);
            continue;
        }
        const auto v = csv::parse_double(k);
        if (!v || *v < 1 || *v != std::floor(*v)) fail(ErrorCode::InvalidArgument, "bad feature count '" + k + "'");
        counts.push_back(static_cast<std::size_t>(*v));
    }

    const FeatureRanking ranking = rank_features(sel.train, assay, g.threads);
    write_ranking_csv(dir / "ranking.csv", ranking, data.table->descriptor_names);

    std::ostringstream s;
    s << "k,mean_auc\n";
    for (const std::size_t k : counts) {
        const MultiTaskDataset train = subset_features(sel.train, ranking, k);
        const MultiTaskDataset test = subset_features(sel.test, ranking, k);
        NetworkConfig network = sel.network;
        network.input_dim = k;
        FoldRunOptions options;
        options.threads = g.threads;
        options.model_label = config.model_label;
        const CrossFoldResult result = cross_fold_evaluate(train, test, network, config.spec, sel.folds, options);
        const EvalReport& r = result.report_for(assay);
        s << k << ',' << (r.diverged ? std::string("nan") : csv::format_double(r.mean_auc)) << '\n';
        out << "k=" << k << ": " << (r.diverged ? std::string("diverged") : csv::format_double(r.mean_auc)) << '\n';
    }
    write_text(dir / "feature_curve.csv", s.str());

    nlohmann::json entry = config_entry(config);
    entry["ks"] = counts;
    entry["ranked_assay"] = assay;
    record_manifest(dir, "feature-curve", std::move(entry));
    return kSuccess;
}

// -- search / depth-sweep ---------------------------------------------------

struct SearchArgs {
    std::size_t budget = kDefaultSearchBudget;
    std::string strategy = "gp";
};

struct SearchOutcome {
    RunConfig best;
    double best_validation_auc = 0.0;
};

std::string format_value(const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return csv::format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    return std::get<std::string>(v);
}

SearchOutcome search_into(const fs::path& dir, const RunConfig& config, const SearchArgs& args, bool drop_unknown,
                          const Globals& g, std::ostream& out) {
    fs::create_directories(dir);
    const PreparedData data = load_prepared(config.data);
    const Selection sel = select(data, config);
    const std::size_t depth = config.network.hidden_sizes.size();
    if (depth < 1) fail(ErrorCode::InvalidArgument, "search needs at least one hidden layer in the base config");

    SearchSpace space = default_search_space(depth, config.mode == Mode::Multi);
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& [name, value] : config.search_space.items()) {
        if (!drop_unknown || space.contains(name)) overrides[name] = value;
    }
    space.apply_overrides(overrides);

    SearchOptions options;
    options.budget = args.budget;
    options.strategy = search_strategy_from_string(args.strategy);
    options.seed = config.spec.seed;
    options.threads = g.threads;
    if (config.mode == Mode::Multi) options.target_assay = config.target_assay;
    options.on_trial = [&](std::size_t t, const TrialRecord& r) {
        out << "trial " << t << ": "
            << (r.validation_auc ? "validation AUC " + csv::format_double(*r.validation_auc) : std::string("diverged"))
            << '\n';
    };
    const SearchResult result = run_search(sel.train, sel.folds, sel.network, config.spec, space, options);

    std::ostringstream s;
    s << "trial,status,val_auc";
    for (const auto& d : space.dimensions()) s << ',' << d.name;
    s << '\n';
    for (std::size_t t = 0; t < result.trials.size(); ++t) {
        const auto& r = result.trials[t];
        s << t << ',' << (r.status == TrialStatus::Ok ? "ok" : "diverged") << ','
          << (r.validation_auc ? csv::format_double(*r.validation_auc) : std::string());
        for (const auto& v : r.point.values) s << ',' << format_value(v);
        s << '\n';
    }
    write_text(dir / "trials.csv", s.str());

    SearchOutcome outcome{config, *result.best().validation_auc};
    apply_point(space, result.best().point, outcome.best.network, outcome.best.spec);
    outcome.best.search_space = nlohmann::json::object();
    write_json(dir / "best_config.json", to_json(outcome.best));

    nlohmann::json entry = config_entry(config);
    entry["budget"] = args.budget;
    entry["strategy"] = args.strategy;
    entry["best_trial"] = result.best_index;
    entry["best_validation_auc"] = outcome.best_validation_auc;
    entry["best_config_hash"] = config_hash(outcome.best);
    record_manifest(dir, "search", std::move(entry));
    return outcome;
}

int cmd_search(const fs::path& config_path, const SearchArgs& args, const Globals& g, std::ostream& out) {
    const fs::path dir = require_out(g);
    const SearchOutcome outcome = search_into(dir, load_config(config_path, g), args, false, g, out);
    out << "best validation AUC " << csv::format_double(outcome.best_validation_auc) << "; config in "
        << (dir / "best_config.json").string() << '\n';
    return kSuccess;
}

int cmd_depth_sweep(const fs::path& config_path, const std::vector<std::size_t>& depths, const SearchArgs& args,
                    const Globals& g, std::ostream& out) {
    const fs::path dir = require_out(g);
    const RunConfig base = load_config(config_path, g);
    require(!depths.empty(), "need at least one depth");
    std::ostringstream s;
    s << "depth,best_val_auc,mean_test_auc\n";
    for (const std::size_t depth : depths) {
        require(depth >= 1 && depth <= 3, "depths must be 1, 2 or 3");
        RunConfig config = base;
        const std::size_t width = base.network.hidden_sizes.empty() ? 64 : base.network.hidden_sizes.front();
        config.network.hidden_sizes.assign(depth, width);
        config.network.dropout_rates.resize(depth + 1, 0.0);
        out << "depth " << depth << '\n';
        const SearchOutcome found = search_into(dir / ("depth" + std::to_string(depth)), config, args, true, g, out);

        const PreparedData data = load_prepared(found.best.data);
        const Selection sel = select(data, found.best);
        FoldRunOptions options;
        options.threads = g.threads;
        options.model_label = found.best.model_label;
        const CrossFoldResult result =
            cross_fold_evaluate(sel.train, sel.test, sel.network, found.best.spec, sel.folds, options);
        std::string test_auc = "nan";
        if (!result.diverged()) {
            double mean = 0.0;
            if (config.mode == Mode::Multi && config.target_assay.empty()) {
                for (const auto& r : result.reports) mean += r.mean_auc;
                mean /= static_cast<double>(result.reports.size());
            } else {
                mean = result.report_for(scored_assay(found.best, sel)).mean_auc;
            }
            test_auc = csv::format_double(mean);
        }
        s << depth << ',' << csv::format_double(found.best_validation_auc) << ',' << test_auc << '\n';
    }
    write_text(dir / "depth_sweep.csv", s.str());
    nlohmann::json entry = config_entry(base);
    entry["depths"] = depths;
    entry["budget"] = args.budget;
    entry["strategy"] = args.strategy;
    record_manifest(dir, "depth-sweep", std::move(entry));
    out << s.str();
    return kSuccess;
}

// -- synth ------------------------------------------------------------------

struct SynthArgs {
    std::string kind = "latent";
    std::size_t tasks = 3;
    std::size_t cases = 400;
    std::size_t descriptors = 40;
};

int cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out) {
    const fs::path dir = require_out(g);
    SyntheticData data;
    if (a.kind == "latent") {
        LatentTaskOptions o;
        o.tasks = a.tasks;
        o.cases_per_task = a.cases;
        o.descriptors = a.descriptors;
        data = make_latent_tasks(o, g.seed);
    } else if (a.kind == "informative") {
        InformativeFeatureOptions o;
        o.cases = a.cases;
        o.descriptors = a.descriptors;
        data = make_informative_features(o, g.seed);
    } else if (a.kind == "separable") {
        data = make_separable(a.cases, g.seed);
    } else {
        fail(ErrorCode::InvalidArgument, "kind must be latent, informative or separable");
    }
    write_synthetic(dir / "descriptors.csv", dir / "labels.csv", data);
    out << "wrote " << data.table.rows() << " compounds and " << data.labels.records.size() << " labels to "
        << dir.string() << '\n';
    return kSuccess;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::BadFeatureCount:
            return kUsageError;
        default:
            return kDataError;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-task neural networks for QSAR activity prediction", "mtqsar"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", MTQSAR_VERSION);

    Globals g;
    app.add_option("--seed", g.seed, "Base seed for splits, initialization and sampling");
    app.add_option("--out", g.out, "Run directory for artifacts");
    app.add_option("--threads", g.threads, "Worker threads for folds, bootstrap runs and ranking")
        ->check(CLI::PositiveNumber);

    PrepareArgs prepare;
    auto* prepare_cmd = app.add_subcommand("prepare", "Normalize descriptors and write the test split and folds");
    prepare_cmd->add_option("--descriptors", prepare.descriptors, "Descriptor CSV")->required()->check(CLI::ExistingFile);
    prepare_cmd->add_option("--labels", prepare.labels, "Label CSV (compound_id,assay_id,label)")
        ->required()
        ->check(CLI::ExistingFile);
    prepare_cmd->add_option("--test-fraction", prepare.test_fraction, "Fraction of each assay held out")
        ->capture_default_str();
    prepare_cmd->add_option("--folds", prepare.folds, "Cross-validation folds")->capture_default_str();

    fs::path config_path;
    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "Run config JSON")->required()->check(CLI::ExistingFile);
    };
    auto* train_cmd = app.add_subcommand("train", "Cross-fold training and test evaluation");
    add_config(train_cmd);

    std::size_t resamples = kDefaultBootstrapResamples;
    auto* bootstrap_cmd = app.add_subcommand("bootstrap", "Attach bootstrap AUC variances to a trained run's report");
    add_config(bootstrap_cmd);
    bootstrap_cmd->add_option("--resamples", resamples, "Bootstrap resamples")->capture_default_str();

    fs::path report_a;
    fs::path report_b;
    std::string assay;
    auto* significance_cmd = app.add_subcommand("significance", "Compare two bootstrapped reports");
    significance_cmd->add_option("report_a", report_a)->required()->check(CLI::ExistingFile);
    significance_cmd->add_option("report_b", report_b)->required()->check(CLI::ExistingFile);
    significance_cmd->add_option("--assay", assay, "Assay to compare when a report holds several");
    significance_cmd->add_option("--resamples", resamples, "Resamples behind the variances")->capture_default_str();

    std::vector<std::string> ks{"100", "500", "1000", "1500", "2000", "2500", "all"};
    auto* curve_cmd = app.add_subcommand("feature-curve", "Mean test AUC against the number of top-ranked descriptors");
    add_config(curve_cmd);
    curve_cmd->add_option("--ks", ks, "Feature counts; 'all' means every descriptor")->delimiter(',')->capture_default_str();

    SearchArgs search;
    auto add_search = [&](CLI::App* cmd) {
        cmd->add_option("--budget", search.budget, "Trials")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--strategy", search.strategy, "gp or random")
            ->capture_default_str()
            ->check(CLI::IsMember({"gp", "random"}));
    };
    auto* search_cmd = app.add_subcommand("search", "Metaparameter search on validation AUC");
    add_config(search_cmd);
    add_search(search_cmd);

    std::vector<std::size_t> depths{1, 2, 3};
    auto* sweep_cmd = app.add_subcommand("depth-sweep", "Search once per hidden-layer count");
    add_config(sweep_cmd);
    add_search(sweep_cmd);
    sweep_cmd->add_option("--depths", depths, "Hidden-layer counts")->delimiter(',')->capture_default_str();

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic descriptor/label dataset");
    synth_cmd->add_option("--kind", synth.kind, "latent, informative or separable")->capture_default_str();
    synth_cmd->add_option("--tasks", synth.tasks, "Assays (latent)")->capture_default_str();
    synth_cmd->add_option("--cases", synth.cases, "Cases per assay")->capture_default_str();
    synth_cmd->add_option("--descriptors", synth.descriptors, "Descriptor count")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kSuccess : kUsageError;
    }
    g.seed_given = app.count("--seed") > 0;

    try {
        if (prepare_cmd->parsed()) return cmd_prepare(prepare, g, out);
        if (train_cmd->parsed()) return cmd_train(config_path, g, out);
        if (bootstrap_cmd->parsed()) return cmd_bootstrap(config_path, resamples, g, out);
        if (significance_cmd->parsed()) return cmd_significance(report_a, report_b, assay, resamples, g, out);
        if (curve_cmd->parsed()) return cmd_feature_curve(config_path, ks, g, out);
        if (search_cmd->parsed()) return cmd_search(config_path, search, g, out);
        if (sweep_cmd->parsed()) return cmd_depth_sweep(config_path, depths, search, g, out);
        if (synth_cmd->parsed()) return cmd_synth(synth, g, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed JSON: " << e.what() << '\n';
        return kDataError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kUsageError;
}

}  // namespace mtqsar::cli
