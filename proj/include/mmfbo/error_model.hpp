#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "mmfbo/fpca.hpp"
#include "mmfbo/gp.hpp"
#include "mmfbo/grid.hpp"

namespace mmfbo {

/// Gaussian moments of the deviation h = f - f* at each grid point.
struct DeviationMoments {
    std::vector<double> mu;
    std::vector<double> var;
};

/// Moments of the squared error e = h^2 (scaled noncentral chi-square).
struct ErrorMoments {
    std::vector<double> mean;  // mu_h^2 + var_h
    std::vector<double> sd;    // sqrt(2 var_h^2 + 4 mu_h^2 var_h)
};

/// Assembles the deviation moments from the basis expansion and explicit
/// Gaussian score posteriors, with the score covariance taken diagonal
/// (independent surrogates), so the cost is O(M) per grid point. `op_count`,
/// when given, accumulates the number of mode-times-gridpoint terms touched.
inline DeviationMoments deviation_moments_from_posteriors(const FpcaModel& fpca,
                                                          const std::vector<double>& post_mean,
                                                          const std::vector<double>& post_var,
                                                          const Target& target,
                                                          std::size_t* op_count = nullptr) {
    const std::size_t t = fpca.grid()->size();
    const std::size_t m = fpca.num_modes();
    if (target.values.size() != t) throw DimensionError("deviation_moments: target length mismatch");
    if (post_mean.size() != m || post_var.size() != m)
        throw DimensionError("deviation_moments: one score posterior per retained mode required");

    DeviationMoments dev;
    dev.mu.resize(t);
    dev.var.resize(t);
    const auto& phi = fpca.eigenfunctions();
    const auto& mean_curve = fpca.mean_curve();
    const auto& resid = fpca.residual_variance();
    for (std::size_t p = 0; p < t; ++p) {
        double mu = mean_curve[p] - target.values[p];
        double var = resid[p];
        for (std::size_t i = 0; i < m; ++i) {
            const double f = phi(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i));
            mu += f * post_mean[i];
            var += f * f * post_var[i];
            if (op_count) ++*op_count;
        }
        dev.mu[p] = mu;
        dev.var[p] = std::max(var, 0.0);
    }
    return dev;
}

/// Same, with the posteriors queried from the per-score surrogates.
inline DeviationMoments deviation_moments(const FpcaModel& fpca,
                                          const std::vector<GpModel>& score_models,
                                          const Target& target, const std::vector<double>& theta,
                                          std::size_t* op_count = nullptr) {
    const std::size_t m = fpca.num_modes();
    if (score_models.size() != m)
        throw DimensionError("deviation_moments: one score model per retained mode required");
    std::vector<double> post_mean(m), post_var(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto p = score_models[i].predict(theta);
        post_mean[i] = p.mean;
        post_var[i] = p.variance;
    }
    return deviation_moments_from_posteriors(fpca, post_mean, post_var, target, op_count);
}

/// E[e] = mu^2 + var and Var[e] = 2 var^2 + 4 mu^2 var, elementwise.
inline ErrorMoments error_moments(const DeviationMoments& dev) {
    if (dev.mu.size() != dev.var.size()) throw DimensionError("error_moments: length mismatch");
    ErrorMoments err;
    err.mean.resize(dev.mu.size());
    err.sd.resize(dev.mu.size());
    for (std::size_t p = 0; p < dev.mu.size(); ++p) {
        const double mu2 = dev.mu[p] * dev.mu[p];
        const double v = dev.var[p];
        err.mean[p] = mu2 + v;
        err.sd[p] = std::sqrt(std::max(2.0 * v * v + 4.0 * mu2 * v, 0.0));
    }
    return err;
}

/// Density of e = Z^2 for Z ~ N(mu_h, sigma_h^2), y > 0. The cosh factor is
/// evaluated in log space, otherwise it overflows once |mu_h sqrt(y)| / sigma_h^2
/// passes ~700.
inline double error_pdf(double y, double mu_h, double sigma_h) {
    if (!(y > 0.0)) throw DomainError("error_pdf: y must be positive");
    if (!(sigma_h > 0.0)) throw DomainError("error_pdf: sigma must be positive");
    const double s2 = sigma_h * sigma_h;
    const double x = std::abs(mu_h) * std::sqrt(y) / s2;
    const double log_cosh = x + std::log1p(std::exp(-2.0 * x)) - std::numbers::ln2;
    const double log_pdf = -std::log(sigma_h) - 0.5 * std::log(2.0 * std::numbers::pi * y) -
                           (y + mu_h * mu_h) / (2.0 * s2) + log_cosh;
    return std::exp(log_pdf);
}

/// Cov(e, e') = 2 K_h^2 + 4 mu mu' K_h from the Gaussian fourth-moment
/// identities; consistent with the variance formula at mu = mu', K_h = var.
inline double error_covariance(double mu, double mu_p, double k_h) {
    return 2.0 * k_h * k_h + 4.0 * mu * mu_p * k_h;
}

}  // namespace mmfbo
