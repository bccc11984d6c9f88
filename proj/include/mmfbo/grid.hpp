#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "mmfbo/common.hpp"

namespace mmfbo {

/// Discrete index grid lambda_1 < ... < lambda_T with nonnegative quadrature
/// weights. Immutable after construction; refinement builds a new grid.
class FunctionalGrid {
public:
    FunctionalGrid(std::vector<double> points, std::vector<double> weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        if (points_.size() < 2) throw DomainError("grid needs at least 2 points");
        if (points_.size() != weights_.size())
            throw DimensionError("grid points/weights length mismatch");
        if (!all_finite(points_) || !all_finite(weights_))
            throw DomainError("grid values must be finite");
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i] > points_[i - 1]))
                throw DomainError("grid points must be strictly increasing");
        double total = 0.0;
        for (double w : weights_) {
            if (w < 0.0) throw DomainError("grid weights must be nonnegative");
            total += w;
        }
        if (!(total > 0.0)) throw DomainError("grid weights must not all vanish");
        total_weight_ = total;
    }

    // Trapezoid-rule weights on the given points. Exact for piecewise-linear
    // curves; reduces to uniform averaging on equal spacing up to endpoints.
    static FunctionalGrid trapezoid(std::vector<double> points) {
        if (points.size() < 2) throw DomainError("grid needs at least 2 points");
        const std::size_t n = points.size();
        std::vector<double> w(n, 0.0);
        w[0] = 0.5 * (points[1] - points[0]);
        for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (points[i + 1] - points[i - 1]);
        w[n - 1] = 0.5 * (points[n - 1] - points[n - 2]);
        return FunctionalGrid(std::move(points), std::move(w));
    }

    static FunctionalGrid uniform(double lo, double hi, std::size_t count) {
        if (count < 2) throw DomainError("grid needs at least 2 points");
        if (!(hi > lo)) throw DomainError("grid range must be nonempty");
        std::vector<double> pts(count);
        for (std::size_t i = 0; i < count; ++i)
            pts[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        pts.back() = hi;
        return trapezoid(std::move(pts));
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    double total_weight() const { return total_weight_; }

    bool operator==(const FunctionalGrid& o) const {
        return points_ == o.points_ && weights_ == o.weights_;
    }

private:
    std::vector<double> points_;
    std::vector<double> weights_;
    double total_weight_ = 0.0;
};

using GridPtr = std::shared_ptr<const FunctionalGrid>;

inline GridPtr make_grid(FunctionalGrid g) {
    return std::make_shared<const FunctionalGrid>(std::move(g));
}

/// One observed curve f(theta, .) on a shared grid.
struct FunctionalResponse {
    GridPtr grid;
    std::vector<double> values;

    FunctionalResponse(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (!grid) throw DimensionError("response requires a grid");
        if (values.size() != grid->size())
            throw DimensionError("response length does not match grid");
        if (!all_finite(values)) throw DomainError("response values must be finite");
    }
};

/// Desired curve f*(.) sampled on the same grid as the responses it is
/// compared against.
struct Target {
    std::vector<double> values;

    explicit Target(std::vector<double> v) : values(std::move(v)) {
        if (!all_finite(values)) throw DomainError("target values must be finite");
    }
};

/// Axis-aligned box of admissible designs.
struct DesignBox {
    std::vector<double> lower;
    std::vector<double> upper;

    DesignBox(std::vector<double> lo, std::vector<double> hi)
        : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size() || lower.empty())
            throw DimensionError("design box bounds mismatch");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i])) throw DomainError("design box must have lower < upper");
    }

    std::size_t dim() const { return lower.size(); }

    bool contains(const std::vector<double>& x) const {
        if (x.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (x[i] < lower[i] || x[i] > upper[i]) return false;
        return true;
    }

    std::vector<double> to_unit(const std::vector<double>& x) const {
        std::vector<double> u(dim());
        for (std::size_t i = 0; i < dim(); ++i) u[i] = (x[i] - lower[i]) / (upper[i] - lower[i]);
        return u;
    }

    std::vector<double> from_unit(const std::vector<double>& u) const {
        std::vector<double> x(dim());
        for (std::size_t i = 0; i < dim(); ++i) x[i] = lower[i] + u[i] * (upper[i] - lower[i]);
        return x;
    }

    std::vector<double> clip(std::vector<double> x) const {
        for (std::size_t i = 0; i < dim(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
        return x;
    }
};

namespace detail {
inline void check_lengths(const FunctionalResponse& resp, const Target& target) {
    if (resp.values.size() != target.values.size())
        throw DimensionError("response/target length mismatch");
}
}  // namespace detail

/// e_m = (f(lambda_m) - f*(lambda_m))^2 for every grid point.
inline std::vector<double> pointwise_error(const FunctionalResponse& resp, const Target& target) {
    detail::check_lengths(resp, target);
    std::vector<double> e(resp.values.size());
    for (std::size_t m = 0; m < e.size(); ++m) {
        const double d = resp.values[m] - target.values[m];
        e[m] = d * d;
    }
    return e;
}

/// Worst-case squared deviation over the grid.
inline double worst_case(const FunctionalResponse& resp, const Target& target) {
    detail::check_lengths(resp, target);
    double g = 0.0;
    for (std::size_t m = 0; m < resp.values.size(); ++m) {
        const double d = resp.values[m] - target.values[m];
        g = std::max(g, d * d);
    }
    return g;
}

// Weighted-average squared deviation. Utility only; optimization always
// targets the worst case.
inline double integrated_error(const FunctionalResponse& resp, const Target& target) {
    detail::check_lengths(resp, target);
    const auto& w = resp.grid->weights();
    double acc = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) {
        const double d = resp.values[m] - target.values[m];
        acc += w[m] * d * d;
    }
    return acc / resp.grid->total_weight();
}

/// Largest distance from any point of [domain_lo, domain_hi] to the grid.
inline double fill_distance(const FunctionalGrid& grid, double domain_lo, double domain_hi) {
    const auto& p = grid.points();
    if (!(domain_lo <= p.front()) || !(p.back() <= domain_hi))
        throw DomainError("grid points outside the stated domain");
    double h = std::max(p.front() - domain_lo, domain_hi - p.back());
    for (std::size_t i = 1; i < p.size(); ++i) h = std::max(h, 0.5 * (p[i] - p[i - 1]));
    return h;
}

/// Upper bound L * h_T on the continuous-vs-grid worst-case gap for an error
/// curve that is L-Lipschitz in the index.
inline double discretization_gap_bound(double lipschitz_l, double fill_dist) {
    if (lipschitz_l < 0.0 || fill_dist < 0.0)
        throw DomainError("discretization bound inputs must be nonnegative");
    return lipschitz_l * fill_dist;
}

}  // namespace mmfbo
