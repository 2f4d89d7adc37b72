#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtqsar/dataset.hpp"
#include "mtqsar/network.hpp"
#include "mtqsar/trainer.hpp"

namespace mtqsar::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2, kInternalError = 3 };

enum class Mode { Single, Combined, Multi };
std::string_view to_string(Mode mode) noexcept;

/// One experiment: which prepared data, which assays, which model, how to train.
/// Serialized as flat JSON whose keys mirror the NetworkConfig and TrainSpec
/// field names, plus: data, mode, target_assay, combined_assays, model, search_space.
struct RunConfig {
    /// Directory written by `prepare`. Relative paths resolve against the config file.
    std::filesystem::path data;
    Mode mode = Mode::Multi;
    std::string target_assay;
    std::vector<std::string> combined_assays;
    /// Report label; defaults to NNET, COMBINED or MULTI by mode.
    std::string model_label;
    /// input_dim and output_dim are filled in from the data.
    NetworkConfig network;
    TrainSpec spec;
    /// Overrides for the search space, as accepted by SearchSpace::apply_overrides.
    nlohmann::json search_space = nlohmann::json::object();
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Hash of every field except the data path.
std::string config_hash(const RunConfig& config);

/// The output of `prepare`, reloaded.
struct PreparedData {
    std::shared_ptr<const DescriptorTable> table;
    MultiTaskDataset train;
    MultiTaskDataset test;
    SplitAssignment folds;
};

PreparedData load_prepared(const std::filesystem::path& dir);

/// Training/test views and fold assignment for the config's mode, with the
/// network's input and output widths filled in.
struct Selection {
    MultiTaskDataset train;
    MultiTaskDataset test;
    SplitAssignment folds;
    NetworkConfig network;
};

Selection select(const PreparedData& data, const RunConfig& config);

/// Parses and executes a command line. Never throws; returns an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtqsar::cli
