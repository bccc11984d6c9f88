#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "mmfbo/error_model.hpp"
#include "mmfbo/rng.hpp"

using namespace mmfbo;

namespace {

// Adaptive Simpson on [a, b].
double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 24) {
    const double m = 0.5 * (a + b);
    auto s = [&](double x0, double x1) {
        return (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
    };
    std::function<double(double, double, double, double, int)> rec =
        [&](double x0, double x1, double whole, double eps, int d) -> double {
        const double xm = 0.5 * (x0 + x1);
        const double left = s(x0, xm), right = s(xm, x1);
        if (d <= 0 || std::abs(left + right - whole) < 15.0 * eps)
            return left + right + (left + right - whole) / 15.0;
        return rec(x0, xm, left, eps / 2.0, d - 1) + rec(xm, x1, right, eps / 2.0, d - 1);
    };
    return rec(a, b, s(a, b), tol, depth);
}

// Integrals of y^k * pdf(y) via the substitution y = u^2, which removes the
// 1/sqrt(y) singularity at the origin.
double pdf_moment(double mu, double sigma, int k, double tol = 1e-10) {
    auto integrand = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double y = u * u;
        return 2.0 * u * std::pow(y, k) * error_pdf(y, mu, sigma);
    };
    const double hi = std::abs(mu) + 12.0 * sigma;
    return simpson(integrand, 0.0, hi, tol);
}

struct FlatModel {
    FpcaModel model;
    GridPtr grid;
};

// T=2 grid with total weight 1 and a single flat unit-norm mode.
FlatModel flat_single_mode(double sr2) {
    auto grid = make_grid(FunctionalGrid({0.0, 1.0}, {0.5, 0.5}));
    Eigen::MatrixXd phi(2, 1);
    phi << 1.0, 1.0;  // weighted norm: 0.5 + 0.5 = 1
    return {FpcaModel::from_parts(grid, {0.0, 0.0}, phi, {1.0}, {sr2, sr2}, 1.0), grid};
}

}  // namespace

TEST_CASE("error moment formulas") {
    DeviationMoments dev;
    dev.mu = {0.0, 2.0, 1.0};
    dev.var = {1.0, 0.0, 4.0};
    const auto err = error_moments(dev);
    REQUIRE(err.mean[0] == Catch::Approx(1.0));
    REQUIRE(err.sd[0] == Catch::Approx(std::sqrt(2.0)));
    REQUIRE(err.mean[1] == Catch::Approx(4.0));
    REQUIRE(err.sd[1] == 0.0);
    REQUIRE(err.mean[2] == Catch::Approx(5.0));
    REQUIRE(err.sd[2] == Catch::Approx(std::sqrt(48.0)));
}

TEST_CASE("error moments match Monte Carlo on (1, 4)") {
    Rng rng(2024);
    const double mu = 1.0, var = 4.0, sd = 2.0;
    const int n = 1000000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = mu + sd * rng.normal();
        const double e = z * z;
        s1 += e;
        s2 += e * e;
        s4 += e * e * e * e;
    }
    const double mean_hat = s1 / n;
    const double var_hat = s2 / n - mean_hat * mean_hat;
    const double se_mean = std::sqrt(var_hat / n);
    // SE of the variance estimate from the fourth moment of e.
    const double m4 = s4 / n;
    const double se_var = std::sqrt(std::max(m4 - var_hat * var_hat, 0.0) / n);

    REQUIRE(std::abs(mean_hat - (mu * mu + var)) < 3.0 * se_mean);
    REQUIRE(std::abs(var_hat - (2.0 * var * var + 4.0 * mu * mu * var)) < 3.0 * se_var);
}

TEST_CASE("error pdf reference values and normalization") {
    // central chi-square(1) density at 1: exp(-1/2)/sqrt(2 pi)
    const double chi1 = std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
    REQUIRE(chi1 == Catch::Approx(0.24197).margin(1e-5));
    REQUIRE(error_pdf(1.0, 0.0, 1.0) == Catch::Approx(chi1).epsilon(1e-12));

    REQUIRE(pdf_moment(0.0, 1.0, 0) == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(pdf_moment(1.0, 1.0, 0) == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(pdf_moment(2.5, 0.7, 0) == Catch::Approx(1.0).margin(1e-6));

    // mean under the pdf equals mu^2 + sigma^2
    REQUIRE(pdf_moment(1.0, 1.0, 1) == Catch::Approx(2.0).margin(1e-5));
    REQUIRE(pdf_moment(0.5, 1.5, 1) == Catch::Approx(0.25 + 2.25).margin(1e-5));

    // second moment consistency: E[e^2] = Var + mean^2
    const double mu = 0.8, s = 1.2;
    const double mean = mu * mu + s * s;
    const double var = 2.0 * s * s * s * s + 4.0 * mu * mu * s * s;
    REQUIRE(pdf_moment(mu, s, 2) == Catch::Approx(var + mean * mean).epsilon(1e-5));

    REQUIRE_THROWS_AS(error_pdf(0.0, 1.0, 1.0), DomainError);
    REQUIRE_THROWS_AS(error_pdf(-1.0, 1.0, 1.0), DomainError);
    REQUIRE_THROWS_AS(error_pdf(1.0, 1.0, 0.0), DomainError);

    // log-space cosh keeps the density finite deep in the tail
    REQUIRE(std::isfinite(error_pdf(1e6, 50.0, 0.05)));
}

TEST_CASE("error covariance identities and Monte Carlo") {
    REQUIRE(error_covariance(3.0, -2.0, 0.0) == 0.0);
    const double s2 = 1.7;
    REQUIRE(error_covariance(0.0, 0.0, s2) == Catch::Approx(2.0 * s2 * s2));
    // consistency with the variance formula at identical arguments
    const double mu = 1.3, v = 0.6;
    REQUIRE(error_covariance(mu, mu, v) == Catch::Approx(2.0 * v * v + 4.0 * mu * mu * v));
    REQUIRE(error_covariance(1.0, -1.0, 0.5) == Catch::Approx(-1.5));

    // bivariate normal sampling oracle
    Rng rng(7);
    const double m1 = 1.0, m2 = -1.0, v1 = 1.0, v2 = 1.0, c12 = 0.5;
    const int n = 1000000;
    double se1 = 0.0, se2 = 0.0, s12 = 0.0, s12sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double h1 = m1 + std::sqrt(v1) * z1;
        const double h2 = m2 + c12 / std::sqrt(v1) * z1 + std::sqrt(v2 - c12 * c12 / v1) * z2;
        const double e1 = h1 * h1, e2 = h2 * h2;
        se1 += e1;
        se2 += e2;
        s12 += e1 * e2;
        s12sq += e1 * e2 * e1 * e2;
    }
    const double cov_hat = s12 / n - (se1 / n) * (se2 / n);
    const double se_cov = std::sqrt(std::max(s12sq / n - std::pow(s12 / n, 2), 0.0) / n);
    REQUIRE(std::abs(cov_hat - error_covariance(m1, m2, c12)) < 3.0 * se_cov + 1e-4);
}

TEST_CASE("deviation moments trivial cases") {
    auto fm = flat_single_mode(0.0);
    Target target({0.0, 0.0});  // equals the mean curve
    const auto dev = deviation_moments_from_posteriors(fm.model, {0.0}, {0.0}, target);
    for (double m : dev.mu) REQUIRE(m == 0.0);
    for (double v : dev.var) REQUIRE(v == 0.0);
    const auto err = error_moments(dev);
    for (double m : err.mean) REQUIRE(m == 0.0);

    // flat single mode with posterior (a, s^2) and residual sr2
    auto fm2 = flat_single_mode(0.3);
    Target t2({-0.5, -0.5});  // delta = mean - target = +0.5
    const double a = 1.2, s2 = 0.8;
    const auto dev2 = deviation_moments_from_posteriors(fm2.model, {a}, {s2}, t2);
    for (double m : dev2.mu) REQUIRE(m == Catch::Approx(0.5 + a));
    for (double v : dev2.var) REQUIRE(v == Catch::Approx(s2 + 0.3));
}

TEST_CASE("deviation moments match Monte Carlo through real surrogates") {
    auto grid = make_grid(FunctionalGrid::uniform(0.0, 1.0, 12));
    Rng gen(505);
    std::vector<FunctionalResponse> curves;
    DesignBox box({0.0, 0.0}, {1.0, 1.0});
    Eigen::MatrixXd inputs(14, 2);
    for (int i = 0; i < 14; ++i) {
        inputs(i, 0) = gen.uniform01();
        inputs(i, 1) = gen.uniform01();
        std::vector<double> v(12);
        for (std::size_t m = 0; m < 12; ++m) {
            const double x = grid->points()[m];
            v[m] = std::sin(3.0 * x + 2.0 * inputs(i, 0)) + inputs(i, 1) * x + 0.02 * gen.normal();
        }
        curves.emplace_back(grid, v);
    }
    const auto fpca = FpcaModel::fit(curves, grid, 0.99);
    const auto table = score_table(fpca, curves);
    const auto gps = fit_scores(inputs, table.values, box);

    std::vector<double> tvals(12);
    for (std::size_t m = 0; m < 12; ++m) tvals[m] = 0.4 * grid->points()[m];
    Target target(tvals);

    const std::vector<double> theta{0.35, 0.55};
    const auto dev = deviation_moments(fpca, gps, target, theta);

    // Monte Carlo: sample scores and diagonal residual, rebuild h
    std::vector<double> pm(fpca.num_modes()), pv(fpca.num_modes());
    for (std::size_t i = 0; i < fpca.num_modes(); ++i) {
        const auto p = gps[i].predict(theta);
        pm[i] = p.mean;
        pv[i] = p.variance;
    }
    const int n = 200000;
    Rng mc(606);
    std::vector<double> s1(12, 0.0), s2(12, 0.0);
    for (int it = 0; it < n; ++it) {
        std::vector<double> c(fpca.num_modes());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = pm[i] + std::sqrt(pv[i]) * mc.normal();
        for (std::size_t m = 0; m < 12; ++m) {
            double h = fpca.mean_curve()[m] - tvals[m];
            for (std::size_t i = 0; i < c.size(); ++i)
                h += fpca.eigenfunctions()(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) * c[i];
            h += std::sqrt(fpca.residual_variance()[m]) * mc.normal();
            s1[m] += h;
            s2[m] += h * h;
        }
    }
    for (std::size_t m = 0; m < 12; ++m) {
        const double mean_hat = s1[m] / n;
        const double var_hat = s2[m] / n - mean_hat * mean_hat;
        const double se_mean = std::sqrt(var_hat / n);
        const double se_var = var_hat * std::sqrt(2.0 / n);
        REQUIRE(std::abs(mean_hat - dev.mu[m]) < 3.0 * se_mean + 1e-9);
        REQUIRE(std::abs(var_hat - dev.var[m]) < 3.0 * se_var + 1e-9);
    }
}

TEST_CASE("deviation moment cost is linear in the mode count") {
    auto grid = make_grid(FunctionalGrid::uniform(0.0, 1.0, 10));
    Target target(std::vector<double>(10, 0.0));
    auto with_modes = [&](std::size_t m) {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(10, static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i)
            phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
                1.0 / std::sqrt(grid->weights()[i]);
        return FpcaModel::from_parts(grid, std::vector<double>(10, 0.0), phi,
                                     std::vector<double>(m, 1.0), std::vector<double>(10, 0.0), 1.0);
    };
    std::size_t ops2 = 0, ops4 = 0, ops8 = 0;
    deviation_moments_from_posteriors(with_modes(2), std::vector<double>(2, 0.0),
                                      std::vector<double>(2, 1.0), target, &ops2);
    deviation_moments_from_posteriors(with_modes(4), std::vector<double>(4, 0.0),
                                      std::vector<double>(4, 1.0), target, &ops4);
    deviation_moments_from_posteriors(with_modes(8), std::vector<double>(8, 0.0),
                                      std::vector<double>(8, 1.0), target, &ops8);
    REQUIRE(ops4 == 2 * ops2);
    REQUIRE(ops8 == 2 * ops4);
}

TEST_CASE("moment identities hold exactly by construction on random inputs") {
    Rng rng(88);
    for (int rep = 0; rep < 200; ++rep) {
        DeviationMoments dev;
        dev.mu = {rng.uniform(-5, 5)};
        dev.var = {rng.uniform(0, 9)};
        const auto err = error_moments(dev);
        REQUIRE(err.mean[0] == dev.mu[0] * dev.mu[0] + dev.var[0]);
        REQUIRE(err.mean[0] >= dev.mu[0] * dev.mu[0]);
        REQUIRE(err.sd[0] * err.sd[0] ==
                Catch::Approx(2.0 * dev.var[0] * dev.var[0] + 4.0 * dev.mu[0] * dev.mu[0] * dev.var[0]));
    }
}
