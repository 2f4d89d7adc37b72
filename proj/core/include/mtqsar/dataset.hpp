#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtqsar {

/// Compounds x descriptors. Rows follow compound_ids, columns follow descriptor_names.
struct DescriptorTable {
    std::vector<std::string> compound_ids;
    std::vector<std::string> descriptor_names;
    Eigen::MatrixXd values;

    [[nodiscard]] std::size_t rows() const noexcept { return compound_ids.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return descriptor_names.size(); }

    /// Linear scan; callers joining many ids build their own index.
    [[nodiscard]] std::optional<std::size_t> find_row(std::string_view compound_id) const;

    /// Throws DuplicateCompound / ShapeError / ParseError(non-finite) when violated.
    void validate() const;
};

/// Per-descriptor statistics of the original (unnormalized) table.
struct NormStats {
    std::vector<double> means;
    std::vector<double> stdevs;
    std::vector<std::size_t> dropped_columns;
};

/// label: 1 = active, 0 = inactive.
struct LabelRecord {
    std::string compound_id;
    std::string assay_id;
    std::uint8_t label = 0;
};

struct LabelSet {
    std::vector<LabelRecord> records;

    /// Assay ids in order of first appearance.
    [[nodiscard]] std::vector<std::string> assay_ids() const;
    void validate() const;
};

/// One (compound, assay) observation. A compound screened in k assays gives k cases.
struct Case {
    std::size_t row = 0;
    std::size_t assay = 0;
    std::uint8_t label = 0;

    friend bool operator==(const Case&, const Case&) = default;
};

/// Descriptor table shared read-only between views, plus the cases each view holds.
class MultiTaskDataset {
public:
    MultiTaskDataset() = default;
    MultiTaskDataset(std::shared_ptr<const DescriptorTable> descriptors, std::vector<Case> cases,
                     std::vector<std::string> assay_ids, std::string provenance);

    [[nodiscard]] const DescriptorTable& descriptors() const { return *descriptors_; }
    [[nodiscard]] const std::shared_ptr<const DescriptorTable>& descriptors_ptr() const { return descriptors_; }
    [[nodiscard]] const std::vector<Case>& cases() const noexcept { return cases_; }
    [[nodiscard]] const std::vector<std::string>& assay_ids() const noexcept { return assay_ids_; }
    [[nodiscard]] const std::string& provenance() const noexcept { return provenance_; }

    [[nodiscard]] std::size_t size() const noexcept { return cases_.size(); }
    [[nodiscard]] bool empty() const noexcept { return cases_.empty(); }
    [[nodiscard]] std::size_t num_assays() const noexcept { return assay_ids_.size(); }
    [[nodiscard]] std::size_t input_dim() const { return descriptors_ ? descriptors_->cols() : 0; }

    /// Throws UnknownAssay.
    [[nodiscard]] std::size_t assay_index(std::string_view assay_id) const;

    /// Positions into cases(), grouped by assay index.
    [[nodiscard]] std::vector<std::vector<std::size_t>> cases_by_assay() const;

    /// A view holding only the cases at the given positions, in the given order.
    [[nodiscard]] MultiTaskDataset subset(std::span<const std::size_t> positions, std::string provenance) const;

    /// Same cases over a different descriptor table with identical row order.
    [[nodiscard]] MultiTaskDataset with_descriptors(std::shared_ptr<const DescriptorTable> table) const;

    /// Rows of the descriptor matrix for the given case positions.
    [[nodiscard]] Eigen::MatrixXd gather_inputs(std::span<const std::size_t> positions) const;

private:
    std::shared_ptr<const DescriptorTable> descriptors_;
    std::vector<Case> cases_;
    std::vector<std::string> assay_ids_;
    std::string provenance_;
};

struct TrainTestSplit {
    MultiTaskDataset train;
    MultiTaskDataset test;
};

/// Fold membership for each case of a training view.
struct SplitAssignment {
    double test_fraction = 0.0;
    std::uint64_t seed = 0;
    std::size_t fold_count = 0;
    std::vector<std::size_t> fold_of;

    [[nodiscard]] std::vector<std::size_t> fold_sizes() const;
};

// -- ingestion -------------------------------------------------------------

DescriptorTable parse_descriptor_table(std::istream& in);
DescriptorTable load_descriptor_table(const std::filesystem::path& path);
void write_descriptor_table(const std::filesystem::path& path, const DescriptorTable& table);

LabelSet parse_labels(std::istream& in);
LabelSet load_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelSet& labels);

/// Joins labels onto the table. Assays are ordered by first appearance unless
/// `assay_order` is given. Throws UnknownCompound for labels without descriptors.
MultiTaskDataset build_dataset(std::shared_ptr<const DescriptorTable> table, const LabelSet& labels,
                               std::optional<std::vector<std::string>> assay_order = std::nullopt);

// -- normalization ---------------------------------------------------------

/// Z-scores every column using the sample standard deviation (n - 1). Columns
/// with zero variance are dropped from the returned table.
std::pair<DescriptorTable, NormStats> zscore_normalize(const DescriptorTable& table);

/// Inverse of zscore_normalize for the retained columns.
DescriptorTable denormalize(const DescriptorTable& normalized, const NormStats& stats);

nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

// -- splitting -------------------------------------------------------------

/// Per-assay random hold-out: round(test_fraction * n_assay) cases of each assay go to test.
TrainTestSplit split_train_test(const MultiTaskDataset& dataset, double test_fraction, std::uint64_t seed);

/// Per-assay partition of the cases into k folds whose sizes differ by at most one.
SplitAssignment make_folds(const MultiTaskDataset& train, std::size_t k, std::uint64_t seed);

MultiTaskDataset fold_training_view(const MultiTaskDataset& train, const SplitAssignment& folds, std::size_t fold);
MultiTaskDataset fold_validation_view(const MultiTaskDataset& train, const SplitAssignment& folds, std::size_t fold);

/// Single-task view: cases of the primary and every other listed assay, all
/// relabeled to the one output of the primary assay.
MultiTaskDataset combine_assays(std::string_view primary_assay, std::span<const std::string> others,
                                const MultiTaskDataset& data);

/// Combined training set with a test set drawn only from the primary assay.
TrainTestSplit combine_assays(std::string_view primary_assay, std::span<const std::string> others,
                              const TrainTestSplit& split);

/// Per-assay sampling with replacement; output has the same per-assay counts.
MultiTaskDataset bootstrap_resample(const MultiTaskDataset& train, std::uint64_t seed);

}  // namespace mtqsar
