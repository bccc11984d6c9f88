#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "mmfbo/grid.hpp"
#include "mmfbo/sampling.hpp"

namespace mmfbo {

struct KernelParams {
    double signal_variance = 1.0;
    std::vector<double> lengthscales;  // one per design dimension, unit-box scale
    double noise_variance = 1e-10;
};

namespace gp_detail {

constexpr double kJitterFloor = 1e-10;
constexpr double kJitterCeil = 1e-4;

inline void validate_params(const KernelParams& p, std::size_t dim) {
    if (!(p.signal_variance > 0.0)) throw DomainError("gp: signal variance must be positive");
    if (p.lengthscales.size() != dim) throw DimensionError("gp: lengthscale count mismatch");
    for (double l : p.lengthscales)
        if (!(l > 0.0)) throw DomainError("gp: lengthscales must be positive");
    if (p.noise_variance < 0.0) throw DomainError("gp: noise variance must be nonnegative");
}

// ARD squared-exponential on unit-box-scaled inputs.
inline double kernel(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                     const KernelParams& p) {
    double q = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double d = (a(i) - b(i)) / p.lengthscales[static_cast<std::size_t>(i)];
        q += d * d;
    }
    return p.signal_variance * std::exp(-0.5 * q);
}

inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const KernelParams& p) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = p.signal_variance;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = kernel(x.row(i), x.row(j), p);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

struct Factorization {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

// Cholesky of K + (noise + jitter) I, escalating jitter by decades on failure.
inline Factorization factorize(const Eigen::MatrixXd& k, double noise) {
    Factorization f;
    for (double jitter = kJitterFloor; jitter <= kJitterCeil * 1.0000001; jitter *= 10.0) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += noise + jitter;
        f.llt.compute(a);
        if (f.llt.info() == Eigen::Success) {
            f.jitter = jitter;
            return f;
        }
    }
    throw ConditioningError("gp: covariance not positive definite after jitter escalation to 1e-4");
}

}  // namespace gp_detail

/// Exact Gaussian log evidence of (targets - mean) under the kernel.
/// Inputs must already be scaled to the unit box.
inline double log_marginal_likelihood(const Eigen::MatrixXd& scaled_inputs,
                                      const Eigen::VectorXd& targets, double mean,
                                      const KernelParams& params) {
    gp_detail::validate_params(params, static_cast<std::size_t>(scaled_inputs.cols()));
    if (scaled_inputs.rows() != targets.size() || targets.size() < 1)
        throw DimensionError("gp: inputs/targets mismatch");
    const Eigen::MatrixXd k = gp_detail::kernel_matrix(scaled_inputs, params);
    auto f = gp_detail::factorize(k, params.noise_variance);
    const Eigen::VectorXd yc = targets.array() - mean;
    const Eigen::VectorXd alpha = f.llt.solve(yc);
    const double n = static_cast<double>(targets.size());
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < targets.size(); ++i)
        logdet += std::log(f.llt.matrixLLT()(i, i));
    return -0.5 * yc.dot(alpha) - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct GpFitOptions {
    int starts = 8;
    int evals_per_start = 200;
    // Fixed internal stream so fitting is a pure function of its data.
    std::uint64_t scramble_seed = 0x6770666974ULL;
};

/// Gaussian-process regression with an ARD squared-exponential kernel and a
/// constant mean equal to the training-target mean. Inputs are rescaled to
/// the unit box internally; hyperparameters are chosen by a multi-start
/// bounded coordinate search on the log marginal likelihood.
class GpModel {
public:
    struct Prediction {
        double mean = 0.0;
        double variance = 0.0;
    };

    static GpModel with_params(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               const DesignBox& box, KernelParams params) {
        check_data(inputs, targets, box, 1);
        params.noise_variance = std::max(params.noise_variance, gp_detail::kJitterFloor);
        gp_detail::validate_params(params, box.dim());
        GpModel m;
        m.box_ = box;
        m.x_ = scale_inputs(inputs, box);
        m.y_ = targets;
        m.mean_ = targets.mean();
        m.params_ = std::move(params);
        const Eigen::MatrixXd k = gp_detail::kernel_matrix(m.x_, m.params_);
        m.fact_ = gp_detail::factorize(k, m.params_.noise_variance);
        m.alpha_ = m.fact_.llt.solve(Eigen::VectorXd(targets.array() - m.mean_));
        return m;
    }

    static GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                       const DesignBox& box, const GpFitOptions& options = {}) {
        check_data(inputs, targets, box, 2);
        const std::size_t d = box.dim();
        const Eigen::MatrixXd xs = scale_inputs(inputs, box);
        const double mean = targets.mean();
        const double var_y = std::max((targets.array() - mean).square().mean(), 1e-12);

        // Search box in log space: lengthscales, signal variance, noise.
        const std::size_t np = d + 2;
        std::vector<double> lo(np), hi(np);
        for (std::size_t i = 0; i < d; ++i) {
            lo[i] = std::log(1e-2);
            hi[i] = std::log(1e1);
        }
        lo[d] = std::log(1e-4 * var_y);
        hi[d] = std::log(1e2 * var_y);
        lo[d + 1] = std::log(1e-8);
        hi[d + 1] = std::log(std::max(var_y, 1e-8));

        auto unpack = [&](const std::vector<double>& z) {
            KernelParams p;
            p.lengthscales.resize(d);
            for (std::size_t i = 0; i < d; ++i) p.lengthscales[i] = std::exp(z[i]);
            p.signal_variance = std::exp(z[d]);
            p.noise_variance = std::exp(z[d + 1]);
            return p;
        };
        auto objective = [&](const std::vector<double>& z) {
            try {
                return log_marginal_likelihood(xs, targets, mean, unpack(z));
            } catch (const ConditioningError&) {
                return -std::numeric_limits<double>::infinity();
            }
        };

        SobolSequence sobol(np, options.scramble_seed);
        std::vector<double> best_z;
        double best_f = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < options.starts; ++s) {
            const auto u = sobol.next();
            std::vector<double> z(np);
            for (std::size_t i = 0; i < np; ++i) z[i] = lo[i] + u[i] * (hi[i] - lo[i]);
            double f = objective(z);
            int evals = 1;
            double step = 0.5;
            while (evals < options.evals_per_start && step > 1e-3) {
                bool improved = false;
                for (std::size_t i = 0; i < np && evals < options.evals_per_start; ++i) {
                    for (double dir : {1.0, -1.0}) {
                        const double zi = std::clamp(z[i] + dir * step, lo[i], hi[i]);
                        if (zi == z[i]) continue;
                        std::vector<double> trial = z;
                        trial[i] = zi;
                        const double ft = objective(trial);
                        ++evals;
                        if (ft > f) {
                            z = std::move(trial);
                            f = ft;
                            improved = true;
                            break;
                        }
                        if (evals >= options.evals_per_start) break;
                    }
                }
                if (!improved) step *= 0.5;
            }
            if (f > best_f) {
                best_f = f;
                best_z = z;
            }
        }
        if (best_z.empty()) throw ConditioningError("gp: hyperparameter search found no viable model");
        return with_params(inputs, targets, box, unpack(best_z));
    }

    /// Posterior mean and variance of the latent function at a design point
    /// (original coordinates). Variance is clamped to
    /// [0, signal_variance + noise_variance].
    Prediction predict(const std::vector<double>& query) const {
        if (query.size() != box_.dim()) throw DimensionError("gp: query dimension mismatch");
        if (!box_.contains(query)) throw DomainError("gp: query outside the design box");
        const auto u = box_.to_unit(query);
        Eigen::RowVectorXd q(static_cast<Eigen::Index>(u.size()));
        for (std::size_t i = 0; i < u.size(); ++i) q(static_cast<Eigen::Index>(i)) = u[i];

        const Eigen::Index n = x_.rows();
        Eigen::VectorXd kstar(n);
        for (Eigen::Index i = 0; i < n; ++i) kstar(i) = gp_detail::kernel(q, x_.row(i), params_);

        Prediction out;
        out.mean = mean_ + kstar.dot(alpha_);
        const Eigen::VectorXd v = fact_.llt.matrixL().solve(kstar);
        out.variance = std::clamp(params_.signal_variance - v.squaredNorm(), 0.0,
                                  params_.signal_variance + params_.noise_variance);
        return out;
    }

    const KernelParams& params() const { return params_; }
    double target_mean() const { return mean_; }
    double jitter_used() const { return fact_.jitter; }
    const DesignBox& box() const { return box_; }
    Eigen::Index train_count() const { return x_.rows(); }

private:
    static void check_data(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                           const DesignBox& box, Eigen::Index min_rows) {
        if (inputs.rows() != targets.size()) throw DimensionError("gp: inputs/targets mismatch");
        if (inputs.rows() < min_rows) throw InsufficientDataError("gp: too few training points");
        if (inputs.cols() != static_cast<Eigen::Index>(box.dim()))
            throw DimensionError("gp: input dimension mismatch");
        for (Eigen::Index i = 0; i < targets.size(); ++i)
            if (!std::isfinite(targets(i))) throw DomainError("gp: targets must be finite");
        for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
            std::vector<double> row(static_cast<std::size_t>(inputs.cols()));
            for (Eigen::Index j = 0; j < inputs.cols(); ++j) row[static_cast<std::size_t>(j)] = inputs(i, j);
            if (!box.contains(row)) throw DomainError("gp: training input outside the design box");
        }
    }

    static Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& inputs, const DesignBox& box) {
        Eigen::MatrixXd xs = inputs;
        for (Eigen::Index j = 0; j < xs.cols(); ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const double span = box.upper[ju] - box.lower[ju];
            xs.col(j) = (xs.col(j).array() - box.lower[ju]) / span;
        }
        return xs;
    }

    DesignBox box_{{0.0}, {1.0}};
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    KernelParams params_;
    double mean_ = 0.0;
    gp_detail::Factorization fact_;
    Eigen::VectorXd alpha_;
};

/// One independent surrogate per score column.
inline std::vector<GpModel> fit_scores(const Eigen::MatrixXd& inputs,
                                       const Eigen::MatrixXd& score_columns, const DesignBox& box,
                                       const GpFitOptions& options = {}) {
    if (inputs.rows() != score_columns.rows())
        throw DimensionError("gp: score table row count mismatch");
    std::vector<GpModel> models;
    models.reserve(static_cast<std::size_t>(score_columns.cols()));
    for (Eigen::Index j = 0; j < score_columns.cols(); ++j)
        models.push_back(GpModel::fit(inputs, score_columns.col(j), box, options));
    return models;
}

}  // namespace mmfbo
