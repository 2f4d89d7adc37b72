#include "mtqsar/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "mtqsar/csv.hpp"
#include "mtqsar/error.hpp"
#include "mtqsar/random.hpp"

namespace mtqsar {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

// Columns whose sample stdev is this small relative to their magnitude are
// treated as constant; exact zero is not reachable for non-representable means.
constexpr double kZeroVarianceRelTol = 1e-12;

}  // namespace

// -- DescriptorTable / LabelSet ---------------------------------------------

std::optional<std::size_t> DescriptorTable::find_row(std::string_view compound_id) const {
    for (std::size_t i = 0; i < compound_ids.size(); ++i) {
        if (compound_ids[i] == compound_id) return i;
    }
    return std::nullopt;
}

void DescriptorTable::validate() const {
    if (static_cast<std::size_t>(values.rows()) != compound_ids.size() ||
        static_cast<std::size_t>(values.cols()) != descriptor_names.size()) {
        fail(ErrorCode::ShapeError, "descriptor matrix shape does not match ids/names");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : compound_ids) {
        if (!seen.insert(id).second) fail(ErrorCode::DuplicateCompound, "duplicate compound id '" + id + "'");
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (!std::isfinite(values(r, c))) {
                throw ParseError(static_cast<std::size_t>(r) + 2, static_cast<std::size_t>(c) + 2,
                                 "non-finite descriptor value");
            }
        }
    }
}

std::vector<std::string> LabelSet::assay_ids() const {
    std::vector<std::string> ids;
    std::unordered_set<std::string_view> seen;
    for (const auto& r : records) {
        if (seen.insert(r.assay_id).second) ids.push_back(r.assay_id);
    }
    return ids;
}

void LabelSet::validate() const {
    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (const auto& r : records) {
        if (r.label > 1) fail(ErrorCode::InvalidArgument, "label must be 0 or 1");
        if (!seen.emplace(r.compound_id, r.assay_id).second) {
            fail(ErrorCode::InvalidArgument,
                 "duplicate label for compound '" + r.compound_id + "' in assay '" + r.assay_id + "'");
        }
    }
}

// -- MultiTaskDataset --------------------------------------------------------

MultiTaskDataset::MultiTaskDataset(std::shared_ptr<const DescriptorTable> descriptors, std::vector<Case> cases,
                                   std::vector<std::string> assay_ids, std::string provenance)
    : descriptors_(std::move(descriptors)),
      cases_(std::move(cases)),
      assay_ids_(std::move(assay_ids)),
      provenance_(std::move(provenance)) {
    require(descriptors_ != nullptr, "dataset requires a descriptor table");
    for (const auto& c : cases_) {
        require(c.assay < assay_ids_.size(), "case assay index out of range");
        require(c.row < descriptors_->rows(), "case row index out of range");
        require(c.label <= 1, "case label must be 0 or 1");
    }
}

std::size_t MultiTaskDataset::assay_index(std::string_view assay_id) const {
    const auto it = std::find(assay_ids_.begin(), assay_ids_.end(), assay_id);
    if (it == assay_ids_.end()) fail(ErrorCode::UnknownAssay, "unknown assay '" + std::string(assay_id) + "'");
    return static_cast<std::size_t>(it - assay_ids_.begin());
}

std::vector<std::vector<std::size_t>> MultiTaskDataset::cases_by_assay() const {
    std::vector<std::vector<std::size_t>> groups(assay_ids_.size());
    for (std::size_t i = 0; i < cases_.size(); ++i) groups[cases_[i].assay].push_back(i);
    return groups;
}

MultiTaskDataset MultiTaskDataset::subset(std::span<const std::size_t> positions, std::string provenance) const {
    std::vector<Case> picked;
    picked.reserve(positions.size());
    for (const std::size_t p : positions) {
        require(p < cases_.size(), "subset position out of range");
        picked.push_back(cases_[p]);
    }
    return MultiTaskDataset(descriptors_, std::move(picked), assay_ids_, std::move(provenance));
}

MultiTaskDataset MultiTaskDataset::with_descriptors(std::shared_ptr<const DescriptorTable> table) const {
    require(table != nullptr && table->rows() == descriptors_->rows(), "replacement table must keep row order");
    return MultiTaskDataset(std::move(table), cases_, assay_ids_, provenance_);
}

Eigen::MatrixXd MultiTaskDataset::gather_inputs(std::span<const std::size_t> positions) const {
    const auto& values = descriptors_->values;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(positions.size()), values.cols());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(cases_[positions[i]].row));
    }
    return out;
}

std::vector<std::size_t> SplitAssignment::fold_sizes() const {
    std::vector<std::size_t> sizes(fold_count, 0);
    for (const std::size_t f : fold_of) ++sizes.at(f);
    return sizes;
}

// -- ingestion -----------------------------------------------------------------

DescriptorTable parse_descriptor_table(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_record(in, line, line_no)) fail(ErrorCode::EmptyInput, "descriptor file is empty");

    const auto header = csv::split(line);
    if (header.size() < 2) throw ParseError(line_no, 1, "header needs compound_id and at least one descriptor");

    DescriptorTable table;
    for (std::size_t c = 1; c < header.size(); ++c) table.descriptor_names.emplace_back(header[c]);
    const std::size_t width = table.descriptor_names.size();

    std::vector<double> flat;
    std::unordered_set<std::string> seen;
    while (csv::next_record(in, line, line_no)) {
        const auto fields = csv::split(line);
        if (fields.size() != width + 1) {
            throw ParseError(line_no, std::min(fields.size(), width + 1) + 1,
                             "expected " + std::to_string(width + 1) + " fields, got " +
                                 std::to_string(fields.size()));
        }
        std::string id(fields[0]);
        if (id.empty()) throw ParseError(line_no, 1, "empty compound id");
        if (!seen.insert(id).second) fail(ErrorCode::DuplicateCompound, "duplicate compound id '" + id + "'");
        for (std::size_t c = 1; c < fields.size(); ++c) {
            const auto value = csv::parse_double(fields[c]);
            if (!value) throw ParseError(line_no, c + 1, "non-numeric cell '" + std::string(fields[c]) + "'");
            if (!std::isfinite(*value)) throw ParseError(line_no, c + 1, "non-finite cell '" + std::string(fields[c]) + "'");
            flat.push_back(*value);
        }
        table.compound_ids.push_back(std::move(id));
    }
    if (table.compound_ids.empty()) fail(ErrorCode::EmptyInput, "descriptor file has no compounds");

    const auto rows = static_cast<Eigen::Index>(table.compound_ids.size());
    table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), rows, static_cast<Eigen::Index>(width));
    return table;
}

DescriptorTable load_descriptor_table(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_descriptor_table(in);
}

void write_descriptor_table(const std::filesystem::path& path, const DescriptorTable& table) {
    auto out = open_output(path);
    out << "compound_id";
    for (const auto& name : table.descriptor_names) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out << table.compound_ids[r];
        for (std::size_t c = 0; c < table.cols(); ++c) {
            out << ',' << csv::format_double(table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        }
        out << '\n';
    }
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

LabelSet parse_labels(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!csv::next_record(in, line, line_no)) fail(ErrorCode::EmptyInput, "label file is empty");
    const auto header = csv::split(line);
    if (header.size() != 3) throw ParseError(line_no, 1, "label header must be compound_id,assay_id,label");

    LabelSet labels;
    std::set<std::pair<std::string, std::string>> seen;
    while (csv::next_record(in, line, line_no)) {
        const auto fields = csv::split(line);
        if (fields.size() != 3) throw ParseError(line_no, std::min<std::size_t>(fields.size(), 3) + 1, "expected 3 fields");
        if (fields[0].empty()) throw ParseError(line_no, 1, "empty compound id");
        if (fields[1].empty()) throw ParseError(line_no, 2, "empty assay id");
        if (fields[2] != "0" && fields[2] != "1") throw ParseError(line_no, 3, "label must be 0 or 1");
        LabelRecord rec{std::string(fields[0]), std::string(fields[1]), static_cast<std::uint8_t>(fields[2] == "1")};
        if (!seen.emplace(rec.compound_id, rec.assay_id).second) {
            throw ParseError(line_no, 1, "duplicate (compound, assay) pair");
        }
        labels.records.push_back(std::move(rec));
    }
    if (labels.records.empty()) fail(ErrorCode::EmptyInput, "label file has no records");
    return labels;
}

LabelSet load_labels(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_labels(in);
}

void write_labels(const std::filesystem::path& path, const LabelSet& labels) {
    auto out = open_output(path);
    out << "compound_id,assay_id,label\n";
    for (const auto& r : labels.records) out << r.compound_id << ',' << r.assay_id << ',' << int{r.label} << '\n';
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

MultiTaskDataset build_dataset(std::shared_ptr<const DescriptorTable> table, const LabelSet& labels,
                               std::optional<std::vector<std::string>> assay_order) {
    require(table != nullptr, "build_dataset requires a descriptor table");
    labels.validate();
    std::vector<std::string> assays = assay_order ? std::move(*assay_order) : labels.assay_ids();

    std::unordered_map<std::string_view, std::size_t> row_of;
    row_of.reserve(table->rows());
    for (std::size_t r = 0; r < table->rows(); ++r) row_of.emplace(table->compound_ids[r], r);
    std::unordered_map<std::string_view, std::size_t> assay_of;
    for (std::size_t a = 0; a < assays.size(); ++a) assay_of.emplace(assays[a], a);

    std::vector<Case> cases;
    cases.reserve(labels.records.size());
    for (const auto& rec : labels.records) {
        const auto row = row_of.find(rec.compound_id);
        if (row == row_of.end()) fail(ErrorCode::UnknownCompound, "no descriptors for compound '" + rec.compound_id + "'");
        const auto assay = assay_of.find(rec.assay_id);
        if (assay == assay_of.end()) continue;  // assay not selected
        cases.push_back(Case{row->second, assay->second, rec.label});
    }
    return MultiTaskDataset(std::move(table), std::move(cases), std::move(assays), "all");
}

// -- normalization -------------------------------------------------------------

std::pair<DescriptorTable, NormStats> zscore_normalize(const DescriptorTable& table) {
    if (table.rows() == 0 || table.cols() == 0) fail(ErrorCode::EmptyInput, "cannot normalize an empty table");
    if (table.rows() < 2) fail(ErrorCode::InsufficientRows, "standard deviation needs at least two compounds");

    const auto n = static_cast<double>(table.rows());
    NormStats stats;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
        const auto col = table.values.col(c);
        const double mean = col.sum() / n;
        const double ss = (col.array() - mean).square().sum();
        const double stdev = std::sqrt(ss / (n - 1.0));
        stats.means.push_back(mean);
        stats.stdevs.push_back(stdev);
        if (stdev <= kZeroVarianceRelTol * std::max(1.0, std::abs(mean))) {
            stats.dropped_columns.push_back(static_cast<std::size_t>(c));
        } else {
            kept.push_back(c);
        }
    }

    DescriptorTable out;
    out.compound_ids = table.compound_ids;
    out.values.resize(table.values.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const Eigen::Index c = kept[k];
        const auto ci = static_cast<std::size_t>(c);
        out.descriptor_names.push_back(table.descriptor_names[ci]);
        out.values.col(static_cast<Eigen::Index>(k)) = (table.values.col(c).array() - stats.means[ci]) / stats.stdevs[ci];
    }
    return {std::move(out), std::move(stats)};
}

DescriptorTable denormalize(const DescriptorTable& normalized, const NormStats& stats) {
    std::vector<std::size_t> kept;
    std::size_t d = 0;
    for (std::size_t c = 0; c < stats.means.size(); ++c) {
        if (d < stats.dropped_columns.size() && stats.dropped_columns[d] == c) {
            ++d;
            continue;
        }
        kept.push_back(c);
    }
    if (kept.size() != normalized.cols()) fail(ErrorCode::ShapeError, "norm stats do not match table width");

    DescriptorTable out = normalized;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        out.values.col(col) = normalized.values.col(col).array() * stats.stdevs[kept[k]] + stats.means[kept[k]];
    }
    return out;
}

nlohmann::json to_json(const NormStats& stats) {
    return nlohmann::json{{"means", stats.means}, {"stdevs", stats.stdevs}, {"dropped", stats.dropped_columns}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
    NormStats stats;
    j.at("means").get_to(stats.means);
    j.at("stdevs").get_to(stats.stdevs);
    j.at("dropped").get_to(stats.dropped_columns);
    if (stats.means.size() != stats.stdevs.size()) fail(ErrorCode::ShapeError, "means/stdevs length mismatch");
    return stats;
}

// -- splitting -----------------------------------------------------------------

TrainTestSplit split_train_test(const MultiTaskDataset& dataset, double test_fraction, std::uint64_t seed) {
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
    Rng rng(seed);
    std::vector<std::uint8_t> is_test(dataset.size(), 0);
    const auto groups = dataset.cases_by_assay();
    for (std::size_t a = 0; a < groups.size(); ++a) {
        auto members = groups[a];
        if (members.size() < 4) {
            fail(ErrorCode::AssayTooSmall, "assay '" + dataset.assay_ids()[a] + "' has fewer than 4 cases");
        }
        rng.shuffle(std::span(members));
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < n_test; ++i) is_test[members[i]] = 1;
    }
    std::vector<std::size_t> train_pos;
    std::vector<std::size_t> test_pos;
    for (std::size_t i = 0; i < dataset.size(); ++i) (is_test[i] ? test_pos : train_pos).push_back(i);
    return {dataset.subset(train_pos, "train"), dataset.subset(test_pos, "test")};
}

SplitAssignment make_folds(const MultiTaskDataset& train, std::size_t k, std::uint64_t seed) {
    require(k >= 2, "fold count must be at least 2");
    SplitAssignment folds;
    folds.seed = seed;
    folds.fold_count = k;
    folds.fold_of.assign(train.size(), 0);

    Rng rng(seed);
    const auto groups = train.cases_by_assay();
    for (std::size_t a = 0; a < groups.size(); ++a) {
        auto members = groups[a];
        if (members.size() < k) {
            fail(ErrorCode::AssayTooSmall, "assay '" + train.assay_ids()[a] + "' has " +
                                               std::to_string(members.size()) + " cases, fewer than " +
                                               std::to_string(k) + " folds");
        }
        rng.shuffle(std::span(members));
        for (std::size_t i = 0; i < members.size(); ++i) folds.fold_of[members[i]] = i % k;
    }
    return folds;
}

namespace {

MultiTaskDataset fold_view(const MultiTaskDataset& train, const SplitAssignment& folds, std::size_t fold,
                           bool held_out) {
    require(folds.fold_of.size() == train.size(), "fold assignment does not match training set");
    require(fold < folds.fold_count, "fold index out of range");
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if ((folds.fold_of[i] == fold) == held_out) positions.push_back(i);
    }
    return train.subset(positions, (held_out ? "validation fold " : "train minus fold ") + std::to_string(fold));
}

}  // namespace

MultiTaskDataset fold_training_view(const MultiTaskDataset& train, const SplitAssignment& folds, std::size_t fold) {
    return fold_view(train, folds, fold, false);
}

MultiTaskDataset fold_validation_view(const MultiTaskDataset& train, const SplitAssignment& folds, std::size_t fold) {
    return fold_view(train, folds, fold, true);
}

MultiTaskDataset combine_assays(std::string_view primary_assay, std::span<const std::string> others,
                                const MultiTaskDataset& data) {
    std::vector<std::uint8_t> selected(data.num_assays(), 0);
    selected[data.assay_index(primary_assay)] = 1;
    for (const auto& other : others) selected[data.assay_index(other)] = 1;

    std::vector<Case> cases;
    for (const auto& c : data.cases()) {
        if (selected[c.assay]) cases.push_back(Case{c.row, 0, c.label});
    }
    return MultiTaskDataset(data.descriptors_ptr(), std::move(cases), {std::string(primary_assay)},
                            data.provenance() + " combined");
}

TrainTestSplit combine_assays(std::string_view primary_assay, std::span<const std::string> others,
                              const TrainTestSplit& split) {
    return {combine_assays(primary_assay, others, split.train),
            combine_assays(primary_assay, std::span<const std::string>{}, split.test)};
}

MultiTaskDataset bootstrap_resample(const MultiTaskDataset& train, std::uint64_t seed) {
    if (train.empty()) fail(ErrorCode::EmptyInput, "cannot resample an empty training set");
    Rng rng(seed);
    std::vector<std::size_t> picks;
    picks.reserve(train.size());
    for (const auto& members : train.cases_by_assay()) {
        for (std::size_t i = 0; i < members.size(); ++i) picks.push_back(members[rng.index(members.size())]);
    }
    return train.subset(picks, train.provenance() + " bootstrap");
}

}  // namespace mtqsar
