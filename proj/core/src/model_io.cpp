#include "mtqsar/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mtqsar/error.hpp"

namespace mtqsar {

namespace {

constexpr const char* kFormatName = "mtqsar-model";
constexpr int kFormatVersion = 1;

void write_le(std::ostream& out, double value) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) fail(ErrorCode::Io, "model payload is truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

nlohmann::json to_json(const NetworkConfig& config) {
    return {
        {"input_dim", config.input_dim},
        {"hidden_sizes", config.hidden_sizes},
        {"output_dim", config.output_dim},
        {"activation", std::string(to_string(config.activation))},
        {"dropout_rates", config.dropout_rates},
        {"init_scale", config.init_scale},
        {"bottom_scale_log_multiplier", config.bottom_scale_log_multiplier},
    };
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
    NetworkConfig config;
    j.at("input_dim").get_to(config.input_dim);
    j.at("hidden_sizes").get_to(config.hidden_sizes);
    j.at("output_dim").get_to(config.output_dim);
    config.activation = activation_from_string(j.at("activation").get<std::string>());
    j.at("dropout_rates").get_to(config.dropout_rates);
    j.at("init_scale").get_to(config.init_scale);
    j.at("bottom_scale_log_multiplier").get_to(config.bottom_scale_log_multiplier);
    return config;
}

nlohmann::json to_json(const TrainSpec& spec) {
    return {
        {"epochs", spec.epochs},
        {"initial_lr", spec.initial_lr},
        {"anneal_mode", std::string(to_string(spec.anneal_mode))},
        {"anneal_delay_fraction", spec.anneal_delay_fraction},
        {"momentum", spec.momentum},
        {"weight_cost", spec.weight_cost},
        {"batch_size", spec.batch_size},
        {"assay_quotas", spec.assay_quotas},
        {"emphasized_assay", spec.emphasized_assay},
        {"seed", spec.seed},
    };
}

TrainSpec train_spec_from_json(const nlohmann::json& j) {
    TrainSpec spec;
    spec.epochs = j.value("epochs", spec.epochs);
    spec.initial_lr = j.value("initial_lr", spec.initial_lr);
    if (j.contains("anneal_mode")) spec.anneal_mode = anneal_mode_from_string(j.at("anneal_mode").get<std::string>());
    spec.anneal_delay_fraction = j.value("anneal_delay_fraction", spec.anneal_delay_fraction);
    spec.momentum = j.value("momentum", spec.momentum);
    spec.weight_cost = j.value("weight_cost", spec.weight_cost);
    spec.batch_size = j.value("batch_size", spec.batch_size);
    if (j.contains("assay_quotas")) j.at("assay_quotas").get_to(spec.assay_quotas);
    spec.emphasized_assay = j.value("emphasized_assay", spec.emphasized_assay);
    spec.seed = j.value("seed", spec.seed);
    return spec;
}

std::string json_hash(const nlohmann::json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    return out;
}

void save_model(const std::filesystem::path& path, const NetworkParams& params, const ModelMetadata& metadata) {
    nlohmann::json layout = nlohmann::json::array();
    std::size_t count = 0;
    for (const auto& layer : params.layers) {
        layout.push_back({layer.weights.rows(), layer.weights.cols()});
        count += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    }
    const nlohmann::json header{
        {"format", kFormatName},
        {"version", kFormatVersion},
        {"config", to_json(params.config)},
        {"seed", metadata.seed},
        {"descriptor_names", metadata.descriptor_names},
        {"assay_ids", metadata.assay_ids},
        {"norm_stats", metadata.norm_stats},
        {"layout", layout},
        {"payload_doubles", count},
    };

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << header.dump() << '\n';
    for (const auto& layer : params.layers) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) write_le(out, layer.weights(r, c));
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) write_le(out, layer.bias(i));
    }
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Io, "model file has no header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Io, std::string("bad model header: ") + e.what());
    }
    if (header.value("format", "") != kFormatName || header.value("version", 0) != kFormatVersion) {
        fail(ErrorCode::Io, "unsupported model format in " + path.string());
    }

    SavedModel model;
    model.params.config = network_config_from_json(header.at("config"));
    header.at("seed").get_to(model.metadata.seed);
    header.at("descriptor_names").get_to(model.metadata.descriptor_names);
    header.at("assay_ids").get_to(model.metadata.assay_ids);
    header.at("norm_stats").get_to(model.metadata.norm_stats);

    for (const auto& shape : header.at("layout")) {
        const auto rows = shape.at(0).get<Eigen::Index>();
        const auto cols = shape.at(1).get<Eigen::Index>();
        LayerParams layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = read_le(in);
        }
        for (Eigen::Index i = 0; i < rows; ++i) layer.bias(i) = read_le(in);
        model.params.layers.push_back(std::move(layer));
    }
    if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::Io, "trailing bytes after model payload");
    return model;
}

}  // namespace mtqsar
