#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtqsar/network.hpp"
#include "mtqsar/trainer.hpp"

namespace mtqsar {

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainSpec& spec);
/// Missing keys keep their TrainSpec defaults.
TrainSpec train_spec_from_json(const nlohmann::json& j);

/// FNV-1a of the compact JSON dump, as 16 hex digits. nlohmann::json objects
/// keep keys sorted, so equal values hash equally.
std::string json_hash(const nlohmann::json& j);

struct ModelMetadata {
    std::uint64_t seed = 0;
    std::vector<std::string> descriptor_names;
    std::vector<std::string> assay_ids;
    /// Path of the norm-stats JSON the inputs were normalized with.
    std::string norm_stats;
};

struct SavedModel {
    NetworkParams params;
    ModelMetadata metadata;
};

/// File layout: one line of JSON header terminated by '\n', followed by the
/// parameters as little-endian IEEE-754 doubles, layer by layer, each layer's
/// weight matrix row-major and then its bias vector.
void save_model(const std::filesystem::path& path, const NetworkParams& params, const ModelMetadata& metadata);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace mtqsar
