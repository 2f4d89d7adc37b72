#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mtqsar {

/// Squared-exponential kernel hyperparameters, in the units of the
/// standardized targets the process is fit on.
struct GpHyperparameters {
    Eigen::VectorXd lengthscales;
    double signal_variance = 1.0;
    double noise_variance = 1e-6;
};

struct GpFitOptions {
    double noise_floor = 1e-6;
    int iterations = 200;
    bool optimize = true;
};

/// GP regression with constant mean (the target mean) and an ARD
/// squared-exponential kernel. Targets are standardized internally.
class GaussianProcess {
public:
    /// Fits hyperparameters by gradient ascent on the log marginal likelihood.
    static GaussianProcess fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               const GpFitOptions& options = {});

    /// Uses the given hyperparameters as-is (lengthscales etc. in standardized units).
    static GaussianProcess with_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                                const GpHyperparameters& hyper);

    struct Prediction {
        double mean = 0.0;
        double variance = 0.0;
    };

    [[nodiscard]] Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    [[nodiscard]] double log_marginal_likelihood() const noexcept { return log_likelihood_; }
    [[nodiscard]] const GpHyperparameters& hyperparameters() const noexcept { return hyper_; }
    /// Diagonal jitter that made the kernel matrix factorizable.
    [[nodiscard]] double jitter() const noexcept { return jitter_; }

private:
    GaussianProcess() = default;
    void factorize();

    Eigen::MatrixXd inputs_;
    Eigen::VectorXd standardized_;
    double target_mean_ = 0.0;
    double target_scale_ = 1.0;
    GpHyperparameters hyper_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
    double log_likelihood_ = 0.0;
};

/// Expected improvement over `best` for maximization; zero when stdev is zero and mean <= best.
double expected_improvement(double mean, double stdev, double best);

double normal_cdf(double z);
double normal_pdf(double z);

}  // namespace mtqsar
