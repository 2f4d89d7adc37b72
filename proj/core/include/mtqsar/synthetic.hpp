#pragma once

#include <cstdint>
#include <filesystem>

#include "mtqsar/dataset.hpp"

namespace mtqsar {

/// Generated descriptors and labels, in the same shape as the CSV inputs.
struct SyntheticData {
    DescriptorTable table;
    LabelSet labels;
};

/// One assay; label is 1 iff x0 + x1 > 0.
SyntheticData make_separable(std::size_t cases, std::uint64_t seed);

struct LatentTaskOptions {
    std::size_t tasks = 2;
    std::size_t cases_per_task = 400;
    std::size_t descriptors = 40;
    std::size_t latent_units = 10;
    /// Scale of the per-task logits; larger is less label noise.
    double logit_scale = 4.0;
    /// Weight of each task's private direction against the shared one.
    double task_specificity = 0.5;
};

/// Every task reads a common layer of latent_units tanh features of the
/// descriptors through its own output weights. Each compound is labeled in
/// exactly one task.
SyntheticData make_latent_tasks(const LatentTaskOptions& options, std::uint64_t seed);

struct InformativeFeatureOptions {
    std::size_t cases = 1000;
    std::size_t descriptors = 200;
    std::size_t informative = 20;
    double logit_scale = 3.0;
};

/// One assay whose logit is the scaled mean of the informative descriptors;
/// the informative columns are spread over the table rather than leading it.
SyntheticData make_informative_features(const InformativeFeatureOptions& options, std::uint64_t seed);

void write_synthetic(const std::filesystem::path& descriptors, const std::filesystem::path& labels,
                     const SyntheticData& data);

}  // namespace mtqsar
