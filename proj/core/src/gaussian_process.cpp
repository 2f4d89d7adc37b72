#include "mtqsar/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mtqsar/error.hpp"

namespace mtqsar {

namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-4;
constexpr double kMinLogLengthscale = -4.6;  // ~0.01
constexpr double kMaxLogLengthscale = 2.3;   // ~10
constexpr double kMinLogSignal = -4.0;
constexpr double kMaxLogSignal = 4.0;
constexpr double kMaxLogNoise = 0.0;

Eigen::MatrixXd signal_kernel(const Eigen::MatrixXd& x, const GpHyperparameters& h) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double r2 = ((x.row(i) - x.row(j)).transpose().array() / h.lengthscales.array()).square().sum();
            k(i, j) = k(j, i) = h.signal_variance * std::exp(-0.5 * r2);
        }
    }
    return k;
}

struct Factorization {
    Eigen::LLT<Eigen::MatrixXd> chol;
    double jitter = 0.0;
};

// Cholesky of k + (noise + jitter) I with jitter escalating until it succeeds.
Factorization factorize_with_jitter(const Eigen::MatrixXd& k, double noise) {
    for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += noise + jitter;
        Factorization f{Eigen::LLT<Eigen::MatrixXd>(a), jitter};
        if (f.chol.info() == Eigen::Success) return f;
    }
    fail(ErrorCode::GPError, "kernel matrix is not positive definite even with jitter 1e-4");
}

struct LikelihoodEval {
    double value = 0.0;
    Eigen::VectorXd gradient;  // w.r.t. (log lengthscales..., log signal, log noise excess)
};

// Parameters: theta = [log l_1..log l_d, log s2, log(noise - floor)].
GpHyperparameters unpack(const Eigen::VectorXd& theta, Eigen::Index d, double floor) {
    GpHyperparameters h;
    h.lengthscales = theta.head(d).array().exp();
    h.signal_variance = std::exp(theta(d));
    h.noise_variance = floor + std::exp(theta(d + 1));
    return h;
}

LikelihoodEval evaluate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                        double floor) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const GpHyperparameters h = unpack(theta, d, floor);
    const Eigen::MatrixXd kf = signal_kernel(x, h);
    const Factorization f = factorize_with_jitter(kf, h.noise_variance);
    const Eigen::VectorXd alpha = f.chol.solve(y);
    const Eigen::MatrixXd l = f.chol.matrixL();

    LikelihoodEval out;
    out.value = -0.5 * y.dot(alpha) - l.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    // dL/dtheta_j = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta_j)
    const Eigen::MatrixXd w = alpha * alpha.transpose() - f.chol.solve(Eigen::MatrixXd::Identity(n, n));
    out.gradient.resize(d + 2);
    for (Eigen::Index dim = 0; dim < d; ++dim) {
        const double l2 = h.lengthscales(dim) * h.lengthscales(dim);
        double g = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const double diff = x(i, dim) - x(j, dim);
                g += w(i, j) * kf(i, j) * diff * diff / l2;
            }
        }
        out.gradient(dim) = 0.5 * g;
    }
    out.gradient(d) = 0.5 * (w.cwiseProduct(kf)).sum();
    out.gradient(d + 1) = 0.5 * w.trace() * std::exp(theta(d + 1));
    return out;
}

void clamp_theta(Eigen::VectorXd& theta, Eigen::Index d, double floor) {
    for (Eigen::Index i = 0; i < d; ++i) theta(i) = std::clamp(theta(i), kMinLogLengthscale, kMaxLogLengthscale);
    theta(d) = std::clamp(theta(d), kMinLogSignal, kMaxLogSignal);
    theta(d + 1) = std::clamp(theta(d + 1), std::log(floor) - 20.0, kMaxLogNoise);
}

}  // namespace

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double expected_improvement(double mean, double stdev, double best) {
    const double gap = mean - best;
    if (!(stdev > 1e-12)) return std::max(gap, 0.0);
    const double z = gap / stdev;
    return std::max(0.0, gap * normal_cdf(z) + stdev * normal_pdf(z));
}

GaussianProcess GaussianProcess::with_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                                      const GpHyperparameters& hyper) {
    if (inputs.rows() != targets.size() || inputs.rows() == 0) fail(ErrorCode::ShapeError, "GP needs matching, nonempty data");
    if (hyper.lengthscales.size() != inputs.cols()) fail(ErrorCode::ShapeError, "one lengthscale per input dimension");
    GaussianProcess gp;
    gp.inputs_ = inputs;
    gp.target_mean_ = targets.mean();
    const double var = targets.size() > 1 ? (targets.array() - gp.target_mean_).square().sum() / static_cast<double>(targets.size() - 1) : 0.0;
    gp.target_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
    gp.standardized_ = (targets.array() - gp.target_mean_) / gp.target_scale_;
    gp.hyper_ = hyper;
    gp.factorize();
    return gp;
}

GaussianProcess GaussianProcess::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                     const GpFitOptions& options) {
    const Eigen::Index d = inputs.cols();
    GpHyperparameters start;
    start.lengthscales = Eigen::VectorXd::Constant(d, 0.3);
    start.signal_variance = 1.0;
    start.noise_variance = options.noise_floor + 1e-3;
    GaussianProcess gp = with_hyperparameters(inputs, targets, start);
    if (!options.optimize || inputs.rows() < 2) return gp;

    const double floor = options.noise_floor;
    Eigen::VectorXd theta(d + 2);
    theta.head(d) = start.lengthscales.array().log();
    theta(d) = 0.0;
    theta(d + 1) = std::log(start.noise_variance - floor);

    LikelihoodEval current = evaluate(gp.inputs_, gp.standardized_, theta, floor);
    double step = 0.1;
    for (int it = 0; it < options.iterations && step > 1e-6; ++it) {
        const double norm = current.gradient.norm();
        if (!(norm > 1e-9)) break;
        Eigen::VectorXd candidate = theta + step * current.gradient / norm;
        clamp_theta(candidate, d, floor);
        LikelihoodEval next;
        bool ok = true;
        try {
            next = evaluate(gp.inputs_, gp.standardized_, candidate, floor);
        } catch (const Error&) {
            ok = false;
        }
        if (ok && std::isfinite(next.value) && next.value > current.value) {
            theta = candidate;
            current = std::move(next);
            step = std::min(step * 1.5, 1.0);
        } else {
            step *= 0.5;
        }
    }
    gp.hyper_ = unpack(theta, d, floor);
    gp.factorize();
    return gp;
}

void GaussianProcess::factorize() {
    const Eigen::MatrixXd kf = signal_kernel(inputs_, hyper_);
    Factorization f = factorize_with_jitter(kf, hyper_.noise_variance);
    chol_ = std::move(f.chol);
    jitter_ = f.jitter;
    alpha_ = chol_.solve(standardized_);
    const Eigen::MatrixXd l = chol_.matrixL();
    log_likelihood_ = -0.5 * standardized_.dot(alpha_) - l.diagonal().array().log().sum() -
                      0.5 * static_cast<double>(inputs_.rows()) * std::log(2.0 * std::numbers::pi);
}

GaussianProcess::Prediction GaussianProcess::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != inputs_.cols()) fail(ErrorCode::ShapeError, "query dimension does not match GP inputs");
    Eigen::VectorXd k(inputs_.rows());
    for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
        const double r2 = ((inputs_.row(i).transpose() - x).array() / hyper_.lengthscales.array()).square().sum();
        k(i) = hyper_.signal_variance * std::exp(-0.5 * r2);
    }
    const double mean = k.dot(alpha_);
    const Eigen::VectorXd v = chol_.matrixL().solve(k);
    const double var = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
    return {target_mean_ + target_scale_ * mean, target_scale_ * target_scale_ * var};
}

}  // namespace mtqsar
