#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mtqsar/dataset.hpp"
#include "mtqsar/random.hpp"

namespace mtqsar::fixtures {

/// `per_assay[a]` cases for assay "A<a>", each on its own compound with Gaussian descriptors.
inline MultiTaskDataset random_dataset(const std::vector<std::size_t>& per_assay, std::size_t dims, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t total = 0;
    for (const auto n : per_assay) total += n;
    auto table = std::make_shared<DescriptorTable>();
    table->values.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dims));
    for (std::size_t j = 0; j < dims; ++j) table->descriptor_names.push_back("d" + std::to_string(j));
    LabelSet labels;
    std::size_t row = 0;
    for (std::size_t a = 0; a < per_assay.size(); ++a) {
        for (std::size_t i = 0; i < per_assay[a]; ++i, ++row) {
            table->compound_ids.push_back("C" + std::to_string(row));
            for (std::size_t j = 0; j < dims; ++j) {
                table->values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = rng.normal();
            }
            labels.records.push_back({table->compound_ids.back(), "A" + std::to_string(a),
                                      static_cast<std::uint8_t>(i % 2)});
        }
    }
    return build_dataset(table, labels);
}

}  // namespace mtqsar::fixtures
