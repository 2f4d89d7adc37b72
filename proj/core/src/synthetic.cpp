#include "mtqsar/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "mtqsar/error.hpp"
#include "mtqsar/random.hpp"

namespace mtqsar {

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

DescriptorTable gaussian_table(std::size_t rows, std::size_t cols, Rng& rng) {
    DescriptorTable t;
    t.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) t.values(i, j) = rng.normal();
    }
    for (std::size_t i = 0; i < rows; ++i) t.compound_ids.push_back(numbered("C", i, 6));
    for (std::size_t j = 0; j < cols; ++j) t.descriptor_names.push_back(numbered("d", j, 4));
    return t;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

SyntheticData make_separable(std::size_t cases, std::uint64_t seed) {
    require(cases >= 2, "need at least two cases");
    Rng rng(seed);
    SyntheticData out{gaussian_table(cases, 2, rng), {}};
    for (std::size_t i = 0; i < cases; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const bool active = out.table.values(r, 0) + out.table.values(r, 1) > 0.0;
        out.labels.records.push_back({out.table.compound_ids[i], "A", static_cast<std::uint8_t>(active)});
    }
    return out;
}

SyntheticData make_latent_tasks(const LatentTaskOptions& options, std::uint64_t seed) {
    require(options.tasks >= 1 && options.cases_per_task >= 1 && options.descriptors >= 1 && options.latent_units >= 1,
            "latent task sizes must be positive");
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(options.descriptors);
    const auto h = static_cast<Eigen::Index>(options.latent_units);
    const std::size_t n = options.tasks * options.cases_per_task;

    Eigen::MatrixXd latent_weights(h, d);
    for (Eigen::Index i = 0; i < h; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) latent_weights(i, j) = rng.normal() * 1.5 / std::sqrt(static_cast<double>(d));
    }
    Eigen::VectorXd shared(h);
    for (Eigen::Index i = 0; i < h; ++i) shared(i) = rng.normal();
    std::vector<Eigen::VectorXd> heads;
    for (std::size_t t = 0; t < options.tasks; ++t) {
        Eigen::VectorXd own(h);
        for (Eigen::Index i = 0; i < h; ++i) own(i) = rng.normal();
        Eigen::VectorXd head = (1.0 - options.task_specificity) * shared + options.task_specificity * own;
        heads.push_back(head / head.norm());
    }

    SyntheticData out{gaussian_table(n, options.descriptors, rng), {}};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t task = i % options.tasks;
        const auto r = static_cast<Eigen::Index>(i);
        const Eigen::VectorXd features = (latent_weights * out.table.values.row(r).transpose()).array().tanh();
        const double logit = options.logit_scale * heads[task].dot(features);
        const bool active = rng.bernoulli(sigmoid(logit));
        out.labels.records.push_back(
            {out.table.compound_ids[i], numbered("T", task, 2), static_cast<std::uint8_t>(active)});
    }
    return out;
}

SyntheticData make_informative_features(const InformativeFeatureOptions& options, std::uint64_t seed) {
    require(options.informative >= 1 && options.informative <= options.descriptors, "bad informative count");
    require(options.cases >= 2, "need at least two cases");
    Rng rng(seed);
    SyntheticData out{gaussian_table(options.cases, options.descriptors, rng), {}};
    const std::size_t stride = options.descriptors / options.informative;
    for (std::size_t i = 0; i < options.cases; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        double sum = 0.0;
        for (std::size_t f = 0; f < options.informative; ++f) {
            sum += out.table.values(r, static_cast<Eigen::Index>(f * stride));
        }
        const double logit = options.logit_scale * sum / std::sqrt(static_cast<double>(options.informative));
        const bool active = rng.bernoulli(sigmoid(logit));
        out.labels.records.push_back({out.table.compound_ids[i], "A", static_cast<std::uint8_t>(active)});
    }
    return out;
}

void write_synthetic(const std::filesystem::path& descriptors, const std::filesystem::path& labels,
                     const SyntheticData& data) {
    write_descriptor_table(descriptors, data.table);
    write_labels(labels, data.labels);
}

}  // namespace mtqsar
