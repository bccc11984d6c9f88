#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mmfbo/gp.hpp"
#include "mmfbo/rng.hpp"

using namespace mmfbo;

namespace {

Eigen::MatrixXd random_inputs(Rng& rng, int n, const DesignBox& box) {
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(box.dim()));
    for (int i = 0; i < n; ++i)
        for (std::size_t j = 0; j < box.dim(); ++j)
            x(i, static_cast<Eigen::Index>(j)) = rng.uniform(box.lower[j], box.upper[j]);
    return x;
}

std::vector<double> row(const Eigen::MatrixXd& x, Eigen::Index i) {
    std::vector<double> out(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(j)] = x(i, j);
    return out;
}

// Dense-solve reference for posterior mean/variance, no Cholesky reuse.
GpModel::Prediction dense_oracle(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& y,
                                 const DesignBox& box, const KernelParams& p,
                                 const std::vector<double>& query, double jitter) {
    const Eigen::Index n = inputs.rows();
    Eigen::MatrixXd xs = inputs;
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        xs.col(j) = (xs.col(j).array() - box.lower[ju]) / (box.upper[ju] - box.lower[ju]);
    }
    auto kfun = [&](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
        double q = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            const double d = (a(i) - b(i)) / p.lengthscales[static_cast<std::size_t>(i)];
            q += d * d;
        }
        return p.signal_variance * std::exp(-0.5 * q);
    };
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) k(i, j) = kfun(xs.row(i), xs.row(j));
    k.diagonal().array() += p.noise_variance + jitter;

    const auto uq = box.to_unit(query);
    Eigen::RowVectorXd q(static_cast<Eigen::Index>(uq.size()));
    for (std::size_t i = 0; i < uq.size(); ++i) q(static_cast<Eigen::Index>(i)) = uq[i];
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) kstar(i) = kfun(q, xs.row(i));

    const double mean = y.mean();
    const Eigen::VectorXd yc = y.array() - mean;
    const Eigen::MatrixXd kinv = k.fullPivLu().inverse();
    GpModel::Prediction out;
    out.mean = mean + kstar.dot(kinv * yc);
    out.variance = p.signal_variance - kstar.dot(kinv * kstar);
    return out;
}

}  // namespace

TEST_CASE("constant targets collapse to the constant") {
    DesignBox box({0.0, 0.0}, {1.0, 1.0});
    Rng rng(1);
    const auto x = random_inputs(rng, 8, box);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 3.25);
    const auto gp = GpModel::fit(x, y, box);
    for (int rep = 0; rep < 20; ++rep) {
        const std::vector<double> q{rng.uniform01(), rng.uniform01()};
        const auto p = gp.predict(q);
        REQUIRE(p.mean == Catch::Approx(3.25).margin(1e-9));
        REQUIRE(p.variance <= gp.params().signal_variance + 1e-15);
    }
}

TEST_CASE("noise-floor interpolation at the training points") {
    DesignBox box({0.0}, {1.0});
    Eigen::MatrixXd x(2, 1);
    x << 0.2, 0.8;
    Eigen::VectorXd y(2);
    y << 1.0, -2.0;
    KernelParams params{1.5, {0.3}, 1e-10};
    const auto gp = GpModel::with_params(x, y, box, params);
    for (int i = 0; i < 2; ++i) {
        const auto p = gp.predict(row(x, i));
        REQUIRE(std::abs(p.mean - y(i)) < 1e-6);
        REQUIRE(p.variance < 1e-6);
    }
}

TEST_CASE("predictions match the dense-solve oracle") {
    DesignBox box({-1.0, 0.0, 2.0}, {1.0, 2.0, 5.0});
    Rng rng(42);
    const auto x = random_inputs(rng, 15, box);
    Eigen::VectorXd y(15);
    for (int i = 0; i < 15; ++i)
        y(i) = std::sin(2.0 * x(i, 0)) + 0.5 * x(i, 1) - 0.1 * x(i, 2) * x(i, 2);

    KernelParams params{0.8, {0.4, 0.6, 0.5}, 1e-6};
    const auto gp = GpModel::with_params(x, y, box, params);
    for (int rep = 0; rep < 25; ++rep) {
        std::vector<double> q(3);
        for (std::size_t j = 0; j < 3; ++j) q[j] = rng.uniform(box.lower[j], box.upper[j]);
        const auto got = gp.predict(q);
        const auto want = dense_oracle(x, y, box, params, q, gp.jitter_used());
        REQUIRE(got.mean == Catch::Approx(want.mean).margin(1e-8));
        REQUIRE(got.variance == Catch::Approx(std::max(want.variance, 0.0)).margin(1e-8));
    }
}

TEST_CASE("far queries revert to the prior") {
    DesignBox box({0.0}, {1.0});
    Eigen::MatrixXd x(3, 1);
    x << 0.01, 0.02, 0.03;
    Eigen::VectorXd y(3);
    y << 1.0, 1.2, 0.9;
    KernelParams params{2.0, {0.04}, 1e-8};  // query at >= 20 lengthscales
    const auto gp = GpModel::with_params(x, y, box, params);
    const auto p = gp.predict({0.9});
    REQUIRE(p.mean == Catch::Approx(gp.target_mean()).epsilon(1e-6));
    REQUIRE(p.variance == Catch::Approx(params.signal_variance).epsilon(1e-6));
}

TEST_CASE("log marginal likelihood closed form for one point") {
    Eigen::MatrixXd x(1, 1);
    x << 0.5;
    Eigen::VectorXd y(1);
    y << 1.7;
    const double m = 0.4;
    const double s2 = 0.9, noise = 0.2;
    KernelParams params{s2, {0.3}, noise};
    const double got = log_marginal_likelihood(x, y, m, params);
    const double jitter = 1e-10;  // factorization floor
    const double total = s2 + noise + jitter;
    const double want =
        -0.5 * (y(0) - m) * (y(0) - m) / total - 0.5 * std::log(2.0 * std::numbers::pi * total);
    REQUIRE(got == Catch::Approx(want).epsilon(1e-10));
}

TEST_CASE("log marginal likelihood is permutation invariant and peaks near the sample variance") {
    DesignBox box({0.0, 0.0}, {1.0, 1.0});
    Rng rng(9);
    Eigen::MatrixXd x = random_inputs(rng, 12, box);
    Eigen::VectorXd y(12);
    for (int i = 0; i < 12; ++i) y(i) = rng.normal();

    Eigen::MatrixXd xs = x;
    for (Eigen::Index j = 0; j < xs.cols(); ++j)
        xs.col(j) = (xs.col(j).array() - box.lower[static_cast<std::size_t>(j)]) /
                    (box.upper[static_cast<std::size_t>(j)] - box.lower[static_cast<std::size_t>(j)]);

    KernelParams params{0.5, {0.8, 0.8}, 0.1};
    const double base = log_marginal_likelihood(xs, y, y.mean(), params);

    std::vector<int> perm{5, 2, 9, 0, 11, 3, 7, 1, 10, 4, 8, 6};
    Eigen::MatrixXd xp(12, 2);
    Eigen::VectorXd yp(12);
    for (int i = 0; i < 12; ++i) {
        xp.row(i) = xs.row(perm[static_cast<std::size_t>(i)]);
        yp(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    REQUIRE(log_marginal_likelihood(xp, yp, y.mean(), params) == Catch::Approx(base).epsilon(1e-12));

    // Pure-noise data: a 1-D scan over the noise level peaks near var(y).
    KernelParams tiny_signal{1e-8, {1.0, 1.0}, 0.0};
    const double vy = (y.array() - y.mean()).square().mean();
    auto lml_at = [&](double noise) {
        KernelParams p = tiny_signal;
        p.noise_variance = noise;
        return log_marginal_likelihood(xs, y, y.mean(), p);
    };
    REQUIRE(lml_at(vy) > lml_at(0.25 * vy));
    REQUIRE(lml_at(vy) > lml_at(4.0 * vy));
    REQUIRE(lml_at(0.5 * vy) > lml_at(0.25 * vy));  // increasing toward the optimum
}

TEST_CASE("fitted model recovers data drawn from a known GP") {
    DesignBox box({0.0}, {1.0});
    KernelParams truth{1.0, {0.2}, 1e-8};
    Rng rng(101);
    Eigen::MatrixXd x(20, 1);
    for (int i = 0; i < 20; ++i) x(i, 0) = (i + 0.5) / 20.0;
    // Sample from the prior via dense Cholesky of the true kernel.
    Eigen::MatrixXd k(20, 20);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const double d = (x(i, 0) - x(j, 0)) / truth.lengthscales[0];
            k(i, j) = truth.signal_variance * std::exp(-0.5 * d * d);
        }
    k.diagonal().array() += 1e-10;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    Eigen::VectorXd z(20);
    for (int i = 0; i < 20; ++i) z(i) = rng.normal();
    Eigen::VectorXd y = llt.matrixL() * z;

    const auto gp = GpModel::with_params(x, y, box, truth);
    for (int i = 0; i < 20; ++i) {
        const auto p = gp.predict(row(x, i));
        REQUIRE(std::abs(p.mean - y(i)) < 1e-4);  // 20 dense points: conditioning-limited
    }
    const auto fitted = GpModel::fit(x, y, box);
    double sse = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto p = fitted.predict(row(x, i));
        sse += (p.mean - y(i)) * (p.mean - y(i));
    }
    REQUIRE(std::sqrt(sse / 20.0) < 0.05);  // MLE hyperparameters interpolate well
}

TEST_CASE("posterior variance never exceeds the prior and shrinks with data") {
    DesignBox box({0.0, 0.0}, {1.0, 1.0});
    Rng rng(13);
    Eigen::MatrixXd x = random_inputs(rng, 10, box);
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y(i) = std::sin(3.0 * x(i, 0)) + x(i, 1);
    KernelParams params{1.2, {0.3, 0.3}, 1e-6};
    const auto gp10 = GpModel::with_params(x, y, box, params);

    Eigen::MatrixXd x11(11, 2);
    x11.topRows(10) = x;
    x11(10, 0) = 0.5;
    x11(10, 1) = 0.5;
    Eigen::VectorXd y11(11);
    y11.head(10) = y;
    y11(10) = 0.7;
    const auto gp11 = GpModel::with_params(x11, y11, box, params);

    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> q{rng.uniform01(), rng.uniform01()};
        const double v10 = gp10.predict(q).variance;
        const double v11 = gp11.predict(q).variance;
        REQUIRE(v10 <= params.signal_variance + params.noise_variance);
        REQUIRE(v11 <= v10 + 1e-9);  // extra point cannot add variance
    }
}

TEST_CASE("prediction is invariant under training row permutation") {
    DesignBox box({0.0}, {2.0});
    Rng rng(23);
    Eigen::MatrixXd x = random_inputs(rng, 9, box);
    Eigen::VectorXd y(9);
    for (int i = 0; i < 9; ++i) y(i) = std::cos(x(i, 0));
    KernelParams params{0.7, {0.25}, 1e-7};
    const auto a = GpModel::with_params(x, y, box, params);

    std::vector<int> perm{4, 7, 1, 0, 8, 2, 6, 3, 5};
    Eigen::MatrixXd xp(9, 1);
    Eigen::VectorXd yp(9);
    for (int i = 0; i < 9; ++i) {
        xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
        yp(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    const auto b = GpModel::with_params(xp, yp, box, params);
    for (int rep = 0; rep < 30; ++rep) {
        const std::vector<double> q{rng.uniform(0.0, 2.0)};
        REQUIRE(a.predict(q).mean == Catch::Approx(b.predict(q).mean).margin(1e-10));
        REQUIRE(a.predict(q).variance == Catch::Approx(b.predict(q).variance).margin(1e-10));
    }
}

TEST_CASE("per-column score fits equal individually fitted models") {
    DesignBox box({0.0, 0.0}, {1.0, 1.0});
    Rng rng(3);
    Eigen::MatrixXd x = random_inputs(rng, 14, box);
    Eigen::MatrixXd scores(14, 3);
    for (int i = 0; i < 14; ++i) {
        scores(i, 0) = std::sin(4.0 * x(i, 0));
        scores(i, 1) = x(i, 1) * x(i, 1);
        scores(i, 2) = scores(i, 0);  // duplicate of column 0
    }
    const auto models = fit_scores(x, scores, box);
    REQUIRE(models.size() == 3);

    const auto solo = GpModel::fit(x, scores.col(0), box);
    for (int rep = 0; rep < 10; ++rep) {
        const std::vector<double> q{rng.uniform01(), rng.uniform01()};
        REQUIRE(models[0].predict(q).mean == Catch::Approx(solo.predict(q).mean).margin(1e-12));
        // duplicate columns see identical data, hence identical surrogates
        REQUIRE(models[2].predict(q).mean == Catch::Approx(models[0].predict(q).mean).margin(1e-12));
    }
    REQUIRE(models[0].params().signal_variance ==
            Catch::Approx(models[2].params().signal_variance).margin(1e-15));
}

TEST_CASE("input validation") {
    DesignBox box({0.0}, {1.0});
    Eigen::MatrixXd x(2, 1);
    x << 0.1, 0.9;
    Eigen::VectorXd y(2);
    y << 1.0, 2.0;
    const auto gp = GpModel::fit(x, y, box);
    REQUIRE_THROWS_AS(gp.predict({1.5}), DomainError);
    REQUIRE_THROWS_AS(gp.predict({0.1, 0.2}), DimensionError);

    Eigen::MatrixXd outside(2, 1);
    outside << -0.5, 0.5;
    REQUIRE_THROWS_AS(GpModel::fit(outside, y, box), DomainError);

    Eigen::MatrixXd one(1, 1);
    one << 0.5;
    Eigen::VectorXd y1(1);
    y1 << 1.0;
    REQUIRE_THROWS_AS(GpModel::fit(one, y1, box), InsufficientDataError);

    KernelParams bad{0.0, {0.1}, 0.0};
    REQUIRE_THROWS_AS(GpModel::with_params(x, y, box, bad), DomainError);
}
