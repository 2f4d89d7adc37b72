#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "cli.hpp"
#include "mtqsar/csv.hpp"
#include "mtqsar/error.hpp"
#include "mtqsar/model_io.hpp"

namespace mtqsar::cli {

namespace fs = std::filesystem;

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::Single: return "single";
        case Mode::Combined: return "combined";
        case Mode::Multi: return "multi";
    }
    return "multi";
}

namespace {

Mode mode_from_string(const std::string& name) {
    if (name == "single") return Mode::Single;
    if (name == "combined") return Mode::Combined;
    if (name == "multi") return Mode::Multi;
    fail(ErrorCode::InvalidArgument, "mode must be single, combined or multi, not '" + name + "'");
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "data",       "mode",         "target_assay",          "combined_assays", "model",
        "search_space",
        "hidden_sizes", "activation", "dropout_rates",         "init_scale",      "bottom_scale_log_multiplier",
        "epochs",     "initial_lr",   "anneal_mode",           "anneal_delay_fraction",
        "momentum",   "weight_cost",  "batch_size",            "assay_quotas",    "emphasized_assay",
        "seed",
    };
    return keys;
}

std::string default_label(Mode mode) {
    switch (mode) {
        case Mode::Single: return "NNET";
        case Mode::Combined: return "COMBINED";
        case Mode::Multi: return "MULTI";
    }
    return "MULTI";
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    require(j.is_object(), "run config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        require(known_keys().contains(key), "unknown run config key '" + key + "'");
    }
    RunConfig c;
    require(j.contains("data"), "run config needs a 'data' directory");
    c.data = fs::path(j.at("data").get<std::string>());
    if (c.data.is_relative()) c.data = base_dir / c.data;
    c.data = c.data.lexically_normal();

    c.mode = mode_from_string(j.value("mode", std::string("multi")));
    c.target_assay = j.value("target_assay", std::string());
    if (j.contains("combined_assays")) j.at("combined_assays").get_to(c.combined_assays);
    c.model_label = j.value("model", default_label(c.mode));
    if (j.contains("search_space")) c.search_space = j.at("search_space");

    if (j.contains("hidden_sizes")) j.at("hidden_sizes").get_to(c.network.hidden_sizes);
    if (j.contains("activation")) c.network.activation = activation_from_string(j.at("activation").get<std::string>());
    if (j.contains("dropout_rates")) {
        j.at("dropout_rates").get_to(c.network.dropout_rates);
    } else {
        c.network.dropout_rates.assign(c.network.hidden_sizes.size() + 1, 0.0);
    }
    c.network.init_scale = j.value("init_scale", c.network.init_scale);
    c.network.bottom_scale_log_multiplier =
        j.value("bottom_scale_log_multiplier", c.network.bottom_scale_log_multiplier);
    c.spec = train_spec_from_json(j);

    switch (c.mode) {
        case Mode::Single:
            require(!c.target_assay.empty(), "single mode needs target_assay");
            require(c.combined_assays.empty(), "combined_assays is only valid in combined mode");
            break;
        case Mode::Combined:
            require(!c.target_assay.empty(), "combined mode needs target_assay");
            require(!c.combined_assays.empty(), "combined mode needs combined_assays");
            require(std::find(c.combined_assays.begin(), c.combined_assays.end(), c.target_assay) ==
                        c.combined_assays.end(),
                    "combined_assays must not repeat target_assay");
            break;
        case Mode::Multi:
            require(c.combined_assays.empty(), "combined_assays is only valid in combined mode");
            break;
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open run config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const RunConfig& config) {
    nlohmann::json j = to_json(config.spec);
    j["data"] = config.data.string();
    j["mode"] = std::string(to_string(config.mode));
    j["target_assay"] = config.target_assay;
    j["combined_assays"] = config.combined_assays;
    j["model"] = config.model_label;
    j["search_space"] = config.search_space;
    const nlohmann::json net = to_json(config.network);
    for (const char* key : {"hidden_sizes", "activation", "dropout_rates", "init_scale", "bottom_scale_log_multiplier"}) {
        j[key] = net.at(key);
    }
    return j;
}

std::string config_hash(const RunConfig& config) {
    nlohmann::json j = to_json(config);
    j.erase("data");
    return json_hash(j);
}

PreparedData load_prepared(const fs::path& dir) {
    auto table = std::make_shared<DescriptorTable>(load_descriptor_table(dir / "descriptors.csv"));
    const LabelSet labels = load_labels(dir / "labels.csv");
    const MultiTaskDataset all = build_dataset(table, labels);

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> position_of;
    for (std::size_t i = 0; i < all.size(); ++i) position_of[{all.cases()[i].row, all.cases()[i].assay}] = i;

    const fs::path split_path = dir / "split.csv";
    std::ifstream in(split_path);
    if (!in) fail(ErrorCode::Io, "cannot open " + split_path.string());
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_record(in, line, line_no)) fail(ErrorCode::EmptyInput, split_path.string() + " is empty");

    std::vector<std::size_t> train_positions;
    std::vector<std::size_t> test_positions;
    PreparedData out;
    out.table = table;
    while (csv::next_record(in, line, line_no)) {
        const auto fields = csv::split(line);
        if (fields.size() != 4) {
            throw ParseError(line_no, 0, split_path.string() + ": expected 4 fields");
        }
        const auto row = table->find_row(std::string(fields[0]));
        if (!row) fail(ErrorCode::UnknownCompound, split_path.string() + ": unknown compound '" + std::string(fields[0]) + "'");
        const auto it = position_of.find({*row, all.assay_index(fields[1])});
        if (it == position_of.end()) {
            throw ParseError(line_no, 0, split_path.string() + ": no label for this compound and assay");
        }
        if (fields[2] == "train") {
            train_positions.push_back(it->second);
            const auto fold = csv::parse_double(fields[3]);
            if (!fold || *fold < 0) throw ParseError(line_no, 4, split_path.string() + ": bad fold");
            out.folds.fold_of.push_back(static_cast<std::size_t>(*fold));
        } else if (fields[2] == "test") {
            test_positions.push_back(it->second);
        } else {
            throw ParseError(line_no, 3, split_path.string() + ": split must be train or test");
        }
    }
    out.train = all.subset(train_positions, "train");
    out.test = all.subset(test_positions, "test");
    out.folds.fold_count = out.folds.fold_of.empty()
                               ? 0
                               : *std::max_element(out.folds.fold_of.begin(), out.folds.fold_of.end()) + 1;
    return out;
}

Selection select(const PreparedData& data, const RunConfig& config) {
    Selection s;
    if (config.mode == Mode::Multi) {
        s.train = data.train;
        s.test = data.test;
        s.folds = data.folds;
        if (!config.target_assay.empty()) (void)data.train.assay_index(config.target_assay);
    } else {
        std::vector<std::uint8_t> selected(data.train.num_assays(), 0);
        selected[data.train.assay_index(config.target_assay)] = 1;
        for (const auto& other : config.combined_assays) selected[data.train.assay_index(other)] = 1;
        s.train = combine_assays(config.target_assay, config.combined_assays, data.train);
        s.test = combine_assays(config.target_assay, std::span<const std::string>{}, data.test);
        s.folds = data.folds;
        s.folds.fold_of.clear();
        for (std::size_t i = 0; i < data.train.size(); ++i) {
            if (selected[data.train.cases()[i].assay]) s.folds.fold_of.push_back(data.folds.fold_of[i]);
        }
    }
    s.network = config.network;
    s.network.input_dim = data.table->cols();
    s.network.output_dim = s.train.num_assays();
    s.network.validate();
    return s;
}

}  // namespace mtqsar::cli
