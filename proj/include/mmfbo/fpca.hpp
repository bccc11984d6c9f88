#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mmfbo/grid.hpp"

namespace mmfbo {

/// Functional PCA of a curve sample under the grid's weighted inner product
/// <u,v> = sum_m w_m u_m v_m. Eigenpairs come from the symmetrized problem
/// W^{1/2} S W^{1/2} with S the sample covariance of the curves, so the
/// back-transformed eigenfunctions are exactly W-orthonormal.
class FpcaModel {
public:
    static FpcaModel fit(const std::vector<FunctionalResponse>& curves, GridPtr grid,
                         double explained_threshold = 0.99) {
        if (!grid) throw DimensionError("fpca: grid required");
        if (curves.size() < 2) throw InsufficientDataError("fpca: need at least 2 curves");
        if (!(explained_threshold > 0.0) || explained_threshold > 1.0)
            throw DomainError("fpca: explained threshold must be in (0, 1]");
        const std::size_t n = curves.size();
        const std::size_t t = grid->size();
        for (const auto& c : curves)
            if (c.values.size() != t || !(*c.grid == *grid))
                throw DimensionError("fpca: curve grid mismatch");
        for (double w : grid->weights())
            if (!(w > 0.0)) throw DomainError("fpca: weights must be strictly positive");

        Eigen::MatrixXd x(n, t);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t m = 0; m < t; ++m) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = curves[i].values[m];

        Eigen::RowVectorXd mean = x.colwise().mean();
        Eigen::MatrixXd xc = x.rowwise() - mean;

        Eigen::VectorXd w(t), sqw(t);
        for (std::size_t m = 0; m < t; ++m) {
            w(static_cast<Eigen::Index>(m)) = grid->weights()[m];
            sqw(static_cast<Eigen::Index>(m)) = std::sqrt(grid->weights()[m]);
        }

        const Eigen::MatrixXd cov = xc.transpose() * xc / static_cast<double>(n - 1);
        const Eigen::MatrixXd sym = sqw.asDiagonal() * cov * sqw.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
        if (eig.info() != Eigen::Success) throw ConditioningError("fpca: eigensolver failed");

        // Eigen returns ascending order; flip to energy-descending and clamp
        // the numerically negative tail to zero.
        const Eigen::Index tt = static_cast<Eigen::Index>(t);
        std::vector<double> evals(t);
        Eigen::MatrixXd evecs(tt, tt);
        for (Eigen::Index j = 0; j < tt; ++j) {
            evals[static_cast<std::size_t>(j)] = std::max(eig.eigenvalues()(tt - 1 - j), 0.0);
            evecs.col(j) = eig.eigenvectors().col(tt - 1 - j);
        }

        double total = 0.0;
        for (double v : evals) total += v;

        const std::size_t max_modes = std::min(n - 1, t);
        std::size_t m_keep = 1;
        double explained = 1.0;
        if (total > 0.0) {
            double cum = 0.0;
            for (std::size_t j = 0; j < max_modes; ++j) {
                cum += evals[j];
                m_keep = j + 1;
                if (cum / total >= explained_threshold) break;
            }
            explained = cum / total;
        }

        FpcaModel model;
        model.grid_ = grid;
        model.mean_.assign(mean.data(), mean.data() + t);
        model.eigenvalues_.assign(evals.begin(), evals.begin() + static_cast<std::ptrdiff_t>(m_keep));
        model.explained_ratio_ = explained;
        model.phi_.resize(tt, static_cast<Eigen::Index>(m_keep));
        for (std::size_t j = 0; j < m_keep; ++j) {
            Eigen::VectorXd phi = evecs.col(static_cast<Eigen::Index>(j)).cwiseQuotient(sqw);
            // Deterministic sign: largest-magnitude entry positive.
            Eigen::Index imax = 0;
            phi.cwiseAbs().maxCoeff(&imax);
            if (phi(imax) < 0.0) phi = -phi;
            model.phi_.col(static_cast<Eigen::Index>(j)) = phi;
        }

        // Per-point sample variance of the rank-M reconstruction residuals.
        model.residual_variance_.assign(t, 0.0);
        const Eigen::MatrixXd proj = model.phi_ * (model.phi_.transpose() * w.asDiagonal());
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd ci = xc.row(static_cast<Eigen::Index>(i)).transpose();
            const Eigen::VectorXd resid = ci - proj * ci;
            for (std::size_t m = 0; m < t; ++m)
                model.residual_variance_[m] += resid(static_cast<Eigen::Index>(m)) * resid(static_cast<Eigen::Index>(m));
        }
        for (double& v : model.residual_variance_) v = std::max(v / static_cast<double>(n - 1), 0.0);
        return model;
    }

    // Reassemble a model from serialized parts (see io.hpp).
    static FpcaModel from_parts(GridPtr grid, std::vector<double> mean, Eigen::MatrixXd phi,
                                std::vector<double> eigenvalues, std::vector<double> residual_variance,
                                double explained_ratio) {
        if (!grid) throw DimensionError("fpca: grid required");
        const auto t = static_cast<Eigen::Index>(grid->size());
        if (static_cast<Eigen::Index>(mean.size()) != t || phi.rows() != t ||
            static_cast<Eigen::Index>(residual_variance.size()) != t ||
            static_cast<std::size_t>(phi.cols()) != eigenvalues.size() || phi.cols() < 1)
            throw DimensionError("fpca: inconsistent model parts");
        FpcaModel model;
        model.grid_ = std::move(grid);
        model.mean_ = std::move(mean);
        model.phi_ = std::move(phi);
        model.eigenvalues_ = std::move(eigenvalues);
        model.residual_variance_ = std::move(residual_variance);
        model.explained_ratio_ = explained_ratio;
        return model;
    }

    std::size_t num_modes() const { return static_cast<std::size_t>(phi_.cols()); }
    const std::vector<double>& mean_curve() const { return mean_; }
    const Eigen::MatrixXd& eigenfunctions() const { return phi_; }
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    const std::vector<double>& residual_variance() const { return residual_variance_; }
    double explained_ratio() const { return explained_ratio_; }
    const GridPtr& grid() const { return grid_; }

    /// Weighted projections of a centered curve onto the retained modes.
    Eigen::VectorXd scores(const FunctionalResponse& curve) const {
        check_curve(curve);
        const std::size_t t = grid_->size();
        Eigen::VectorXd centered(static_cast<Eigen::Index>(t));
        for (std::size_t m = 0; m < t; ++m)
            centered(static_cast<Eigen::Index>(m)) = (curve.values[m] - mean_[m]) * grid_->weights()[m];
        return phi_.transpose() * centered;
    }

    FunctionalResponse reconstruct(const Eigen::VectorXd& score_vector) const {
        if (score_vector.size() != phi_.cols())
            throw DimensionError("fpca: score vector length mismatch");
        const Eigen::VectorXd curve = phi_ * score_vector;
        std::vector<double> values(grid_->size());
        for (std::size_t m = 0; m < values.size(); ++m)
            values[m] = mean_[m] + curve(static_cast<Eigen::Index>(m));
        return FunctionalResponse(grid_, std::move(values));
    }

    /// Relative weighted-L2 reconstruction error of one curve; drives refits.
    double relative_reconstruction_error(const FunctionalResponse& curve) const {
        check_curve(curve);
        const FunctionalResponse rec = reconstruct(scores(curve));
        double num = 0.0, den = 0.0;
        for (std::size_t m = 0; m < curve.values.size(); ++m) {
            const double w = grid_->weights()[m];
            const double d = curve.values[m] - rec.values[m];
            num += w * d * d;
            den += w * curve.values[m] * curve.values[m];
        }
        return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    }

private:
    void check_curve(const FunctionalResponse& curve) const {
        if (curve.values.size() != grid_->size() || !(*curve.grid == *grid_))
            throw DimensionError("fpca: curve grid mismatch");
    }

    GridPtr grid_;
    std::vector<double> mean_;
    Eigen::MatrixXd phi_;  // T x M
    std::vector<double> eigenvalues_;
    std::vector<double> residual_variance_;
    double explained_ratio_ = 0.0;
};

struct ScoreTable {
    Eigen::MatrixXd values;  // N x M
    std::vector<std::string> warnings;
};

/// Batch scores for GP training, with an empirical check of the score
/// independence assumption: pairs whose sample correlation exceeds the
/// threshold produce a warning entry.
inline ScoreTable score_table(const FpcaModel& model, const std::vector<FunctionalResponse>& curves,
                              double corr_warn_threshold = 0.3) {
    ScoreTable table;
    const std::size_t n = curves.size();
    const std::size_t m = model.num_modes();
    table.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i)
        table.values.row(static_cast<Eigen::Index>(i)) = model.scores(curves[i]).transpose();

    if (n >= 3 && m >= 2) {
        const Eigen::RowVectorXd mu = table.values.colwise().mean();
        const Eigen::MatrixXd c = table.values.rowwise() - mu;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const double sii = c.col(static_cast<Eigen::Index>(i)).squaredNorm();
                const double sjj = c.col(static_cast<Eigen::Index>(j)).squaredNorm();
                if (sii <= 0.0 || sjj <= 0.0) continue;
                const double corr =
                    c.col(static_cast<Eigen::Index>(i)).dot(c.col(static_cast<Eigen::Index>(j))) / std::sqrt(sii * sjj);
                if (std::abs(corr) > corr_warn_threshold) {
                    table.warnings.push_back("score correlation |r|=" + std::to_string(std::abs(corr)) +
                                             " between modes " + std::to_string(i + 1) + " and " +
                                             std::to_string(j + 1));
                }
            }
        }
    }
    return table;
}

}  // namespace mmfbo
