#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mmfbo/grid.hpp"

namespace mmfbo {

namespace ode_detail {

// Classical RK4 on a fixed-size state.
template <std::size_t S, typename Deriv>
void rk4_step(std::array<double, S>& y, double t, double dt, Deriv&& f) {
    std::array<double, S> k1, k2, k3, k4, tmp;
    f(t, y, k1);
    for (std::size_t i = 0; i < S; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    f(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < S; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    f(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < S; ++i) tmp[i] = y[i] + dt * k3[i];
    f(t + dt, tmp, k4);
    for (std::size_t i = 0; i < S; ++i)
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// Integrates from t=0, sampling the readout at every grid time. Grid points
// are hit exactly by splitting each interval into equal substeps of at most
// dt_max.
template <std::size_t S, typename Deriv, typename Readout>
std::vector<double> integrate_on_grid(std::array<double, S> state, const FunctionalGrid& grid,
                                      double dt_max, Deriv&& f, Readout&& readout) {
    std::vector<double> out;
    out.reserve(grid.size());
    double t = 0.0;
    for (double tg : grid.points()) {
        if (tg < t) throw DomainError("oracle grid times must be nonnegative and increasing");
        const double span = tg - t;
        if (span > 0.0) {
            const auto steps = static_cast<std::size_t>(std::ceil(span / dt_max));
            const double dt = span / static_cast<double>(steps);
            for (std::size_t s = 0; s < steps; ++s) rk4_step(state, t + s * dt, dt, f);
            t = tg;
        }
        out.push_back(readout(state));
    }
    return out;
}

// RK4 for PDE semidiscretizations; workspace reused across steps.
class VectorRk4 {
public:
    explicit VectorRk4(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

    template <typename Deriv>
    void step(std::vector<double>& y, double dt, Deriv&& f) {
        const std::size_t n = y.size();
        f(y, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * dt * k1_[i];
        f(tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * dt * k2_[i];
        f(tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + dt * k3_[i];
        f(tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

inline void check_response(const std::vector<double>& values) {
    for (double v : values)
        if (!std::isfinite(v)) throw OracleError("oracle produced a nonfinite response");
}

}  // namespace ode_detail

/// Step response of y'' + 2 zeta omega_n y' + omega_n^2 y = 1 from rest.
inline FunctionalResponse msd_response(const std::vector<double>& theta, GridPtr grid,
                                       int min_steps = 2000) {
    if (theta.size() != 2) throw DimensionError("msd: theta = (zeta, omega_n)");
    const double zeta = theta[0], omega = theta[1];
    if (!(zeta > 0.0) || !(omega > 0.0)) throw DomainError("msd: parameters must be positive");
    const double horizon = grid->points().back();
    const double dt_max = horizon / static_cast<double>(min_steps);
    auto deriv = [&](double, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        dy[0] = y[1];
        dy[1] = 1.0 - 2.0 * zeta * omega * y[1] - omega * omega * y[0];
    };
    auto values = ode_detail::integrate_on_grid<2>({0.0, 0.0}, *grid, dt_max, deriv,
                                                   [](const std::array<double, 2>& y) { return y[0]; });
    ode_detail::check_response(values);
    return FunctionalResponse(std::move(grid), std::move(values));
}

/// Infection trajectory I(t) of the SIR compartments, S(0) = 1 - I0.
inline FunctionalResponse sir_response(const std::vector<double>& theta, GridPtr grid,
                                       int min_steps = 3000) {
    if (theta.size() != 3) throw DimensionError("sir: theta = (beta, gamma, I0)");
    const double beta = theta[0], gamma = theta[1], i0 = theta[2];
    if (beta < 0.0 || gamma < 0.0) throw DomainError("sir: rates must be nonnegative");
    if (!(i0 > 0.0) || !(i0 < 1.0)) throw DomainError("sir: I0 must lie in (0, 1)");
    const double horizon = grid->points().back();
    const double dt_max = horizon / static_cast<double>(min_steps);
    auto deriv = [&](double, const std::array<double, 3>& y, std::array<double, 3>& dy) {
        const double infection = beta * y[0] * y[1];
        dy[0] = -infection;
        dy[1] = infection - gamma * y[1];
        dy[2] = gamma * y[1];
    };
    auto values = ode_detail::integrate_on_grid<3>({1.0 - i0, i0, 0.0}, *grid, dt_max, deriv,
                                                   [](const std::array<double, 3>& y) { return y[1]; });
    ode_detail::check_response(values);
    return FunctionalResponse(std::move(grid), std::move(values));
}

/// Prey trajectory x(t) of the Lotka-Volterra system from x(0) = y(0) = 1.
/// `initial` overrides the start state (used to probe equilibria).
inline FunctionalResponse lv_response(const std::vector<double>& theta, GridPtr grid,
                                      int min_steps = 4000,
                                      std::array<double, 2> initial = {1.0, 1.0}) {
    if (theta.size() != 4) throw DimensionError("lv: theta = (alpha, beta, delta, gamma)");
    for (double p : theta)
        if (!(p > 0.0)) throw DomainError("lv: parameters must be positive");
    const double a = theta[0], b = theta[1], d = theta[2], g = theta[3];
    const double horizon = grid->points().back();
    const double dt_max = horizon / static_cast<double>(min_steps);
    auto deriv = [&](double, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        dy[0] = a * y[0] - b * y[0] * y[1];
        dy[1] = d * y[0] * y[1] - g * y[1];
    };
    auto values = ode_detail::integrate_on_grid<2>(initial, *grid, dt_max, deriv,
                                                   [](const std::array<double, 2>& y) { return y[0]; });
    ode_detail::check_response(values);
    return FunctionalResponse(std::move(grid), std::move(values));
}

/// Mid-depth temperature of u_t = kappa u_xx + q on [0, L] with Dirichlet
/// ends and u(x,0) = a + b sin(pi x / L). Method of lines on nx interior
/// nodes, explicit RK4 substepped under the parabolic stability bound.
inline FunctionalResponse heat_response(const std::vector<double>& theta, GridPtr grid, int nx = 64,
                                        double safety = 0.4) {
    if (theta.size() != 7) throw DimensionError("heat: theta = (kappa, L, T_L, T_R, q, a, b)");
    const double kappa = theta[0], len = theta[1], t_left = theta[2], t_right = theta[3];
    const double q = theta[4], a = theta[5], b = theta[6];
    if (!(kappa > 0.0) || !(len > 0.0)) throw DomainError("heat: kappa and L must be positive");
    if (nx < 4) throw DomainError("heat: need at least 4 interior nodes");

    const double dx = len / static_cast<double>(nx + 1);
    const double inv_dx2 = 1.0 / (dx * dx);
    const double dt_max = safety * dx * dx / (2.0 * kappa);

    std::vector<double> u(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) {
        const double x = (i + 1) * dx;
        u[static_cast<std::size_t>(i)] = a + b * std::sin(std::numbers::pi * x / len);
    }

    auto deriv = [&](const std::vector<double>& y, std::vector<double>& dy) {
        for (int i = 0; i < nx; ++i) {
            const double left = (i == 0) ? t_left : y[static_cast<std::size_t>(i - 1)];
            const double right = (i == nx - 1) ? t_right : y[static_cast<std::size_t>(i + 1)];
            dy[static_cast<std::size_t>(i)] =
                kappa * (left - 2.0 * y[static_cast<std::size_t>(i)] + right) * inv_dx2 + q;
        }
    };

    // Readout at x = L/2: exact node when nx is odd, else the cubic midpoint
    // of the four central nodes (keeps the readout fourth-order in dx).
    auto readout = [&](const std::vector<double>& y) {
        if (nx % 2 == 1) return y[static_cast<std::size_t>(nx / 2)];
        const std::size_t r = static_cast<std::size_t>(nx / 2);  // first node right of midpoint
        return (-y[r - 2] + 9.0 * y[r - 1] + 9.0 * y[r] - y[r + 1]) / 16.0;
    };

    ode_detail::VectorRk4 rk(static_cast<std::size_t>(nx));
    std::vector<double> values;
    values.reserve(grid->size());
    double t = 0.0;
    for (double tg : grid->points()) {
        if (tg < t) throw DomainError("heat: grid times must be nonnegative");
        const double span = tg - t;
        if (span > 0.0) {
            const auto steps = static_cast<std::size_t>(std::ceil(span / dt_max));
            const double dt = span / static_cast<double>(steps);
            for (std::size_t s = 0; s < steps; ++s) rk.step(u, dt, deriv);
            t = tg;
        }
        values.push_back(readout(u));
    }
    ode_detail::check_response(values);
    return FunctionalResponse(std::move(grid), std::move(values));
}

struct VpiSettings {
    int nx = 64;               // spatial intervals
    double film_thickness = 1.0;
    double c0_polymer = 1.0;   // initial reactive-group concentration
    double safety = 0.4;
    bool product_only = false;  // uptake readout: total infiltrant vs product only
};

struct VpiState {
    std::vector<double> x;        // node positions
    std::vector<double> c_free;
    std::vector<double> c_polymer;
    std::vector<double> c_product;
};

namespace ode_detail {

// Coupled free/product/polymer fields flattened into one state vector.
// The shared reaction term is computed once per node, so polymer + product
// is conserved to roundoff.
class VpiSystem {
public:
    VpiSystem(double d0, double k, double kprime, double c_s, const VpiSettings& s)
        : d0_(d0), k_(k), kprime_(kprime), c_s_(c_s), nx_(s.nx),
          dx_(s.film_thickness / static_cast<double>(s.nx)), inv_dx2_(1.0 / (dx_ * dx_)) {}

    std::size_t nodes() const { return static_cast<std::size_t>(nx_ + 1); }

    std::vector<double> initial_state(const VpiSettings& s) const {
        std::vector<double> y(3 * nodes(), 0.0);
        y[0] = c_s_;  // exposed face held at the surface concentration
        for (std::size_t i = 0; i < nodes(); ++i) y[nodes() + i] = s.c0_polymer;
        return y;
    }

    void operator()(const std::vector<double>& y, std::vector<double>& dy) const {
        const std::size_t n = nodes();
        const double* cf = y.data();
        const double* cp = y.data() + n;
        const double* cr = y.data() + 2 * n;
        double* dcf = dy.data();
        double* dcp = dy.data() + n;
        double* dcr = dy.data() + 2 * n;
        for (std::size_t i = 0; i < n; ++i) {
            const double rate = k_ * cf[i] * cp[i];
            if (i == 0) {
                dcf[i] = 0.0;  // Dirichlet face
            } else {
                const double diff = d0_ * std::exp(-kprime_ * cr[i]);
                const double left = cf[i - 1];
                const double right = (i == n - 1) ? cf[i - 1] : cf[i + 1];  // zero-flux mirror
                dcf[i] = diff * (left - 2.0 * cf[i] + right) * inv_dx2_ - rate;
            }
            dcp[i] = -rate;
            dcr[i] = rate;
        }
    }

    double dt_max(const VpiSettings& s) const {
        const double diffusive = s.safety * dx_ * dx_ / (2.0 * d0_);
        const double scale = std::max(c_s_, s.c0_polymer);
        const double reactive = (k_ > 0.0 && scale > 0.0) ? 0.8 / (k_ * scale) : diffusive;
        return std::min(diffusive, reactive);
    }

    double dx() const { return dx_; }

private:
    double d0_, k_, kprime_, c_s_;
    int nx_;
    double dx_, inv_dx2_;
};

}  // namespace ode_detail

namespace vpi_detail {

inline void validate_theta(const std::vector<double>& theta) {
    if (theta.size() != 4) throw DimensionError("vpi: theta = (D0, k, Kprime, C_s)");
    if (!(theta[0] > 0.0)) throw DomainError("vpi: D0 must be positive");
    if (theta[1] < 0.0 || theta[2] < 0.0) throw DomainError("vpi: k and Kprime must be nonnegative");
    if (!(theta[3] > 0.0)) throw DomainError("vpi: C_s must be positive");
}

template <typename PerGridTime>
void run(const std::vector<double>& theta, const FunctionalGrid& grid, const VpiSettings& settings,
         PerGridTime&& on_grid_time) {
    validate_theta(theta);
    if (settings.nx < 4) throw DomainError("vpi: need at least 4 spatial intervals");
    ode_detail::VpiSystem sys(theta[0], theta[1], theta[2], theta[3], settings);
    auto y = sys.initial_state(settings);
    const double dt_cap = sys.dt_max(settings);
    ode_detail::VectorRk4 rk(y.size());
    const std::size_t n = sys.nodes();
    double t = 0.0;
    for (double tg : grid.points()) {
        if (tg < t) throw DomainError("vpi: grid times must be nonnegative");
        const double span = tg - t;
        if (span > 0.0) {
            const auto steps = static_cast<std::size_t>(std::ceil(span / dt_cap));
            const double dt = span / static_cast<double>(steps);
            for (std::size_t s = 0; s < steps; ++s) {
                rk.step(y, dt, sys);
                for (std::size_t i = 0; i < n; ++i) {  // clamp roundoff undershoot
                    if (y[i] < 0.0) y[i] = 0.0;
                    if (y[n + i] < 0.0) y[n + i] = 0.0;
                }
            }
            t = tg;
        }
        on_grid_time(y, n, sys.dx());
    }
}

inline double uptake(const std::vector<double>& y, std::size_t n, double dx, bool product_only) {
    // Trapezoid integral over the film of the infiltrant concentration.
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = product_only ? y[2 * n + i] : y[i] + y[2 * n + i];
        acc += (i == 0 || i == n - 1) ? 0.5 * c : c;
    }
    return acc * dx;
}

}  // namespace vpi_detail

/// Infiltration uptake H(t) for the reaction-diffusion model
/// C_free_t = D0 exp(-K' C_product) C_free_xx - k C_free C_polymer with the
/// product immobilized and the polymer consumed by the same reaction term.
inline FunctionalResponse vpi_response(const std::vector<double>& theta, GridPtr grid,
                                       const VpiSettings& settings = {}) {
    std::vector<double> values;
    values.reserve(grid->size());
    vpi_detail::run(theta, *grid, settings, [&](const std::vector<double>& y, std::size_t n, double dx) {
        values.push_back(vpi_detail::uptake(y, n, dx, settings.product_only));
    });
    ode_detail::check_response(values);
    return FunctionalResponse(std::move(grid), std::move(values));
}

/// Final concentration fields (inspection hook for front-position and
/// conservation analyses).
inline VpiState vpi_profile(const std::vector<double>& theta, GridPtr grid,
                            const VpiSettings& settings = {}) {
    VpiState state;
    vpi_detail::run(theta, *grid, settings, [&](const std::vector<double>& y, std::size_t n, double dx) {
        state.x.resize(n);
        state.c_free.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        state.c_polymer.assign(y.begin() + static_cast<std::ptrdiff_t>(n),
                               y.begin() + static_cast<std::ptrdiff_t>(2 * n));
        state.c_product.assign(y.begin() + static_cast<std::ptrdiff_t>(2 * n), y.end());
        for (std::size_t i = 0; i < n; ++i) state.x[i] = static_cast<double>(i) * dx;
    });
    return state;
}

/// A named simulator: design box, reference design, time grid and solver
/// settings, plus the response map itself.
struct OracleSpec {
    std::string name;
    std::string description;
    DesignBox box;
    std::vector<double> theta_star;
    GridPtr grid;
    int min_steps = 2000;  // ODE oracles
    int nx = 64;           // PDE oracles
    VpiSettings vpi;
};

class Oracle {
public:
    Oracle(OracleSpec spec, std::function<FunctionalResponse(const std::vector<double>&)> eval)
        : spec_(std::move(spec)), eval_(std::move(eval)) {}

    const OracleSpec& spec() const { return spec_; }

    FunctionalResponse evaluate(const std::vector<double>& theta) const {
        if (!spec_.box.contains(theta)) throw DomainError("oracle: design outside the box");
        return eval_(theta);
    }

    /// Reference curve at theta*; the induced worst-case objective attains 0
    /// there, so the true optimum of every catalog problem is known.
    Target make_target() const { return Target(eval_(spec_.theta_star).values); }

private:
    OracleSpec spec_;
    std::function<FunctionalResponse(const std::vector<double>&)> eval_;
};

inline std::vector<std::string> oracle_names() { return {"msd", "sir", "lv", "heat", "vpi"}; }

inline Oracle make_oracle(const std::string& name) {
    if (name == "msd") {
        OracleSpec spec{
            "msd",
            "mass-spring-damper step response y(t); theta = (zeta, omega_n)",
            DesignBox({0.1, 0.5}, {1.5, 3.0}),
            {0.35, 1.4},
            make_grid(FunctionalGrid::uniform(0.0, 10.0, 100)),
            2000,
            64,
            VpiSettings{},
        };
        auto grid = spec.grid;
        const int steps = spec.min_steps;
        return Oracle(spec, [grid, steps](const std::vector<double>& th) {
            return msd_response(th, grid, steps);
        });
    }
    if (name == "sir") {
        OracleSpec spec{
            "sir",
            "SIR infection trajectory I(t); theta = (beta, gamma, I0)",
            DesignBox({0.5, 0.1, 0.01}, {3.5, 1.5, 0.10}),
            {1.8, 0.45, 0.05},
            make_grid(FunctionalGrid::uniform(0.0, 30.0, 120)),
            3000,
            64,
            VpiSettings{},
        };
        auto grid = spec.grid;
        const int steps = spec.min_steps;
        return Oracle(spec, [grid, steps](const std::vector<double>& th) {
            return sir_response(th, grid, steps);
        });
    }
    if (name == "lv") {
        OracleSpec spec{
            "lv",
            "Lotka-Volterra prey trajectory x(t); theta = (alpha, beta, delta, gamma)",
            DesignBox({0.5, 0.5, 0.5, 0.5}, {1.5, 1.5, 1.5, 1.5}),
            {1.2, 0.9, 0.7, 1.1},
            make_grid(FunctionalGrid::uniform(0.0, 12.0, 120)),
            4000,
            64,
            VpiSettings{},
        };
        auto grid = spec.grid;
        const int steps = spec.min_steps;
        return Oracle(spec, [grid, steps](const std::vector<double>& th) {
            return lv_response(th, grid, steps);
        });
    }
    if (name == "heat") {
        OracleSpec spec{
            "heat",
            "1-D heat diffusion mid-depth temperature u(L/2, t); "
            "theta = (kappa, L, T_L, T_R, q, a, b)",
            DesignBox({0.05, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0}, {1.0, 2.0, 1.0, 1.0, 2.0, 1.0, 1.0}),
            {0.4, 1.2, 0.3, 0.7, 0.8, 0.5, 0.6},
            make_grid(FunctionalGrid::uniform(0.0, 2.0, 100)),
            2000,
            64,
            VpiSettings{},
        };
        auto grid = spec.grid;
        const int nx = spec.nx;
        return Oracle(spec, [grid, nx](const std::vector<double>& th) {
            return heat_response(th, grid, nx);
        });
    }
    if (name == "vpi") {
        OracleSpec spec{
            "vpi",
            "vapor-phase infiltration uptake H(t); theta = (D0, k, Kprime, C_s)",
            DesignBox({0.1, 0.5, 0.0, 0.2}, {2.0, 20.0, 5.0, 2.0}),
            {0.8, 6.0, 1.5, 1.0},
            make_grid(FunctionalGrid::uniform(0.0, 1.0, 80)),
            2000,
            64,
            VpiSettings{},
        };
        auto grid = spec.grid;
        const VpiSettings vs = spec.vpi;
        return Oracle(spec, [grid, vs](const std::vector<double>& th) {
            return vpi_response(th, grid, vs);
        });
    }
    throw ConfigError("unknown oracle '" + name + "'; known: msd, sir, lv, heat, vpi");
}

}  // namespace mmfbo
