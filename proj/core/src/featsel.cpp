#include "mtqsar/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mtqsar/csv.hpp"
#include "mtqsar/error.hpp"
#include "mtqsar/parallel.hpp"

namespace mtqsar {

namespace {

double entropy_bits(double positives, double total) {
    if (total <= 0.0) return 0.0;
    const double p = positives / total;
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

}  // namespace

double label_entropy(std::span<const std::uint8_t> labels) {
    const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    return entropy_bits(positives, static_cast<double>(labels.size()));
}

double information_gain(std::span<const double> feature, std::span<const std::uint8_t> labels) {
    if (feature.size() != labels.size()) fail(ErrorCode::ShapeError, "feature and labels differ in length");
    if (feature.size() < 2) fail(ErrorCode::InvalidArgument, "information gain needs at least two samples");

    const std::size_t n = feature.size();
    const auto total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    if (total_pos == 0 || total_pos == n) fail(ErrorCode::UndefinedGain, "labels contain a single class");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return feature[a] < feature[b]; });

    const double h = entropy_bits(static_cast<double>(total_pos), static_cast<double>(n));
    const auto nd = static_cast<double>(n);
    double best_conditional = h;

    // Sweep: a split after position i is a candidate only between distinct values.
    std::size_t left_pos = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += labels[order[i]];
        if (feature[order[i]] == feature[order[i + 1]]) continue;
        const auto left_n = static_cast<double>(i + 1);
        const double right_n = nd - left_n;
        const double conditional = (left_n / nd) * entropy_bits(static_cast<double>(left_pos), left_n) +
                                   (right_n / nd) * entropy_bits(static_cast<double>(total_pos - left_pos), right_n);
        best_conditional = std::min(best_conditional, conditional);
    }
    return std::max(0.0, h - best_conditional);
}

FeatureRanking rank_features(const MultiTaskDataset& data, const std::string& assay_id, unsigned threads) {
    const std::size_t assay = data.assay_index(assay_id);
    std::vector<std::size_t> rows;
    std::vector<std::uint8_t> labels;
    for (const auto& c : data.cases()) {
        if (c.assay != assay) continue;
        rows.push_back(c.row);
        labels.push_back(c.label);
    }

    const auto& values = data.descriptors().values;
    const std::size_t width = data.input_dim();
    FeatureRanking ranking;
    ranking.assay_id = assay_id;
    ranking.features.resize(width);
    parallel_for(width, threads, [&](std::size_t col) {
        std::vector<double> feature(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            feature[i] = values(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(col));
        }
        ranking.features[col] = RankedFeature{col, information_gain(feature, labels)};
    });
    std::stable_sort(ranking.features.begin(), ranking.features.end(),
                     [](const RankedFeature& a, const RankedFeature& b) { return a.gain > b.gain; });
    return ranking;
}

MultiTaskDataset subset_features(const MultiTaskDataset& data, const FeatureRanking& ranking, std::size_t k) {
    const std::size_t width = data.input_dim();
    if (k < 1 || k > width || k > ranking.features.size()) {
        fail(ErrorCode::BadFeatureCount,
             "feature count " + std::to_string(k) + " outside [1, " + std::to_string(width) + "]");
    }
    if (k == width) return data;

    std::vector<std::size_t> columns;
    columns.reserve(k);
    for (std::size_t i = 0; i < k; ++i) columns.push_back(ranking.features[i].descriptor_index);
    std::sort(columns.begin(), columns.end());

    const auto& source = data.descriptors();
    auto table = std::make_shared<DescriptorTable>();
    table->compound_ids = source.compound_ids;
    table->values.resize(source.values.rows(), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        table->descriptor_names.push_back(source.descriptor_names.at(columns[i]));
        table->values.col(static_cast<Eigen::Index>(i)) = source.values.col(static_cast<Eigen::Index>(columns[i]));
    }
    return data.with_descriptors(std::move(table));
}

void write_ranking_csv(const std::filesystem::path& path, const FeatureRanking& ranking,
                       const std::vector<std::string>& descriptor_names) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << "rank,descriptor_index,descriptor_name,gain\n";
    for (std::size_t r = 0; r < ranking.features.size(); ++r) {
        const auto& f = ranking.features[r];
        out << r + 1 << ',' << f.descriptor_index << ',' << descriptor_names.at(f.descriptor_index) << ','
            << csv::format_double(f.gain) << '\n';
    }
}

}  // namespace mtqsar
