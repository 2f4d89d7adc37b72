#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtqsar/dataset.hpp"

namespace mtqsar {

struct RankedFeature {
    std::size_t descriptor_index = 0;
    double gain = 0.0;  // bits
};

/// Descriptors of one assay ordered by non-increasing information gain, ties by index.
struct FeatureRanking {
    std::string assay_id;
    std::vector<RankedFeature> features;
};

/// Binary entropy of a label vector, in bits.
double label_entropy(std::span<const std::uint8_t> labels);

/// Best single-threshold information gain of a continuous feature, in bits.
/// Candidate thresholds are the midpoints between consecutive distinct values.
/// Throws UndefinedGain when the labels hold only one class.
double information_gain(std::span<const double> feature, std::span<const std::uint8_t> labels);

/// Scores every descriptor against the labels of `assay_id`. Pass training cases only.
FeatureRanking rank_features(const MultiTaskDataset& data, const std::string& assay_id, unsigned threads = 1);

/// View over the k highest-ranked descriptors. Columns keep their original
/// relative order so that k = all reproduces the input exactly.
MultiTaskDataset subset_features(const MultiTaskDataset& data, const FeatureRanking& ranking, std::size_t k);

/// Writes `rank,descriptor_index,descriptor_name,gain`.
void write_ranking_csv(const std::filesystem::path& path, const FeatureRanking& ranking,
                       const std::vector<std::string>& descriptor_names);

}  // namespace mtqsar
