#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "mmfbo/error_model.hpp"
#include "mmfbo/fpca.hpp"
#include "mmfbo/gp.hpp"
#include "mmfbo/grid.hpp"
#include "mmfbo/run_record.hpp"
#include "mmfbo/sampling.hpp"

namespace mmfbo {

/// alpha(theta) = max_m mu_e[m] - kappa * sum_m w_m sd_e[m], with the weights
/// normalized to a probability measure so kappa keeps the same meaning on
/// every index domain. Low alpha marks designs whose predicted worst-case
/// error is small once integrated uncertainty has been credited.
inline double acquisition_value(const ErrorMoments& err, const FunctionalGrid& grid, double kappa) {
    if (err.mean.size() != grid.size()) throw DimensionError("acquisition: moment length mismatch");
    if (kappa < 0.0) throw DomainError("acquisition: kappa must be nonnegative");
    double worst = -std::numeric_limits<double>::infinity();
    double spread = 0.0;
    for (std::size_t m = 0; m < err.mean.size(); ++m) {
        worst = std::max(worst, err.mean[m]);
        spread += grid.weights()[m] * err.sd[m];
    }
    return worst - kappa * spread / grid.total_weight();
}

struct KappaSchedule {
    double kappa_min = 0.1;
    double kappa_max = 10.0;
    double decay = 0.9;   // applied on improvement
    double boost = 1.5;   // applied after `patience` stalls
    int patience = 5;
};

struct KappaState {
    double kappa = 2.0;
    int stagnation = 0;
    double best_so_far = std::numeric_limits<double>::infinity();
};

/// Shrinks kappa while the incumbent improves and re-inflates it after a run
/// of stalls, staying inside [kappa_min, kappa_max].
inline KappaState update_kappa(KappaState state, double new_g, const KappaSchedule& sched = {}) {
    if (new_g < 0.0) throw DomainError("update_kappa: objective values are nonnegative");
    if (new_g < state.best_so_far - 1e-12) {
        state.best_so_far = new_g;
        state.kappa = std::max(state.kappa * sched.decay, sched.kappa_min);
        state.stagnation = 0;
    } else {
        ++state.stagnation;
        if (state.stagnation >= sched.patience) {
            state.kappa = std::min(state.kappa * sched.boost, sched.kappa_max);
            state.stagnation = 0;
        }
    }
    state.kappa = std::clamp(state.kappa, sched.kappa_min, sched.kappa_max);
    return state;
}

struct PoolConfig {
    int n_global = 512;
    int n_local = 128;
    double local_frac = 0.05;        // Gaussian scale as a fraction of box width
    double exclusion_radius = 1e-3;  // unit-box Euclidean distance
};

struct CandidatePool {
    std::vector<std::vector<double>> global_candidates;
    std::vector<std::vector<double>> local_candidates;
    double exclusion_radius = 0.0;

    std::size_t size() const { return global_candidates.size() + local_candidates.size(); }

    const std::vector<double>& at(std::size_t i) const {
        return i < global_candidates.size() ? global_candidates[i]
                                            : local_candidates[i - global_candidates.size()];
    }
};

/// Scrambled-Sobol global candidates plus Gaussian perturbations of the
/// incumbent, minus anything within the exclusion radius of an evaluated
/// design. The pool is a pure function of (box, incumbent, evaluated, seed).
inline CandidatePool build_pool(const DesignBox& box, const std::vector<double>& incumbent,
                                const std::vector<std::vector<double>>& evaluated,
                                std::uint64_t seed, const PoolConfig& cfg = {}) {
    if (!box.contains(incumbent)) throw DomainError("build_pool: incumbent outside the box");
    if (cfg.n_global < 1 || cfg.n_local < 0) throw DomainError("build_pool: bad pool sizes");
    if (cfg.exclusion_radius < 0.0) throw DomainError("build_pool: negative exclusion radius");
    const std::size_t d = box.dim();

    std::vector<std::vector<double>> scaled_evaluated;
    scaled_evaluated.reserve(evaluated.size());
    for (const auto& e : evaluated) scaled_evaluated.push_back(box.to_unit(e));

    auto excluded = [&](const std::vector<double>& x) {
        if (cfg.exclusion_radius <= 0.0) return false;
        const auto u = box.to_unit(x);
        const double r2 = cfg.exclusion_radius * cfg.exclusion_radius;
        for (const auto& e : scaled_evaluated) {
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = u[i] - e[i];
                q += diff * diff;
            }
            if (q <= r2) return true;
        }
        return false;
    };

    CandidatePool pool;
    pool.exclusion_radius = cfg.exclusion_radius;

    SobolSequence sobol(d, mix64(seed, 0x676c6f62616cULL));
    for (int i = 0; i < cfg.n_global; ++i) {
        auto x = box.from_unit(sobol.next());
        if (!excluded(x)) pool.global_candidates.push_back(std::move(x));
    }

    Rng rng(mix64(seed, 0x6c6f63616cULL));
    for (int i = 0; i < cfg.n_local; ++i) {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double width = box.upper[j] - box.lower[j];
            x[j] = incumbent[j] + cfg.local_frac * width * rng.normal();
        }
        x = box.clip(std::move(x));
        if (!excluded(x)) pool.local_candidates.push_back(std::move(x));
    }

    if (pool.size() == 0)
        throw PoolExhaustedError("build_pool: all candidates fell inside the exclusion radius");
    return pool;
}

/// Moments of every pool candidate; the ranking and selection both consume
/// this, so it is computed once.
struct CandidateScores {
    std::vector<double> exploitation;  // max_m mu_e
    std::vector<ErrorMoments> moments;
};

inline CandidateScores score_pool(const FpcaModel& fpca, const std::vector<GpModel>& score_models,
                                  const Target& target, const CandidatePool& pool) {
    CandidateScores scores;
    scores.exploitation.reserve(pool.size());
    scores.moments.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto dev = deviation_moments(fpca, score_models, target, pool.at(i));
        auto err = error_moments(dev);
        double worst = 0.0;
        for (double v : err.mean) worst = std::max(worst, v);
        scores.exploitation.push_back(worst);
        scores.moments.push_back(std::move(err));
    }
    return scores;
}

/// Rank-then-select: keep the top_q fraction by predicted worst-case error,
/// then return the acquisition minimizer among them. Ties break on the lower
/// candidate index, so the choice is independent of evaluation order.
inline std::vector<double> select_next(const FpcaModel& fpca, const std::vector<GpModel>& score_models,
                                       const Target& target, const CandidatePool& pool, double kappa,
                                       double top_q = 0.25) {
    if (pool.size() == 0) throw PoolExhaustedError("select_next: empty pool");
    if (!(top_q > 0.0) || top_q > 1.0) throw DomainError("select_next: top_q must be in (0, 1]");
    const auto scores = score_pool(fpca, score_models, target, pool);

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores.exploitation[a] != scores.exploitation[b])
            return scores.exploitation[a] < scores.exploitation[b];
        return a < b;
    });
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(top_q * static_cast<double>(pool.size()))));

    std::size_t best_index = order[0];
    double best_alpha = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < keep; ++r) {
        const std::size_t i = order[r];
        const double a = acquisition_value(scores.moments[i], *fpca.grid(), kappa);
        if (a < best_alpha || (a == best_alpha && i < best_index)) {
            best_alpha = a;
            best_index = i;
        }
    }
    return pool.at(best_index);
}

struct AcquisitionConfig {
    int n0 = 0;  // 0 = max(10, 2d)
    int budget = 30;
    std::uint64_t seed = 1;

    double kappa0 = 2.0;
    KappaSchedule schedule;
    PoolConfig pool;
    double top_q = 0.25;
    int exploit_every = 5;  // pure-exploitation cadence
    int refit_every = 10;   // basis refit cadence (iterations)
    double refit_drift = 0.05;
    double explained_threshold = 0.99;
    double noise_sd = 0.0;  // optional additive observation noise on curves
    GpFitOptions gp;
};

inline int default_seed_count(std::size_t dim) {
    return std::max(10, 2 * static_cast<int>(dim));
}

using OracleFn = std::function<FunctionalResponse(const std::vector<double>&)>;

namespace acq_detail {

inline FunctionalResponse add_noise(const FunctionalResponse& resp, double sd, Rng& rng) {
    if (sd <= 0.0) return resp;
    std::vector<double> noisy = resp.values;
    for (double& v : noisy) v += sd * rng.normal();
    return FunctionalResponse(resp.grid, std::move(noisy));
}

}  // namespace acq_detail

/// The outer loop: space-filling seeding, then iterate basis fit, score
/// surrogates, pooled acquisition minimization, oracle evaluation and kappa
/// adaptation until the budget is spent. Deterministic given (seed, config).
inline RunRecord run_mmfbo(const OracleFn& oracle, const Target& target, const DesignBox& box,
                           GridPtr grid, const AcquisitionConfig& cfg) {
    const std::size_t d = box.dim();
    const int n0 = cfg.n0 > 0 ? cfg.n0 : default_seed_count(d);
    if (n0 < 2) throw DomainError("run: need at least 2 seed designs");
    if (cfg.budget < n0) throw DomainError("run: budget must cover the seed phase");

    RunRecord rec;
    rec.method = "mmfbo";
    rec.seed = cfg.seed;
    rec.n0 = static_cast<std::size_t>(n0);

    std::vector<FunctionalResponse> observed;  // possibly noisy, drives the model
    Rng noise_rng(mix64(cfg.seed, 0x6e6f697365ULL));

    auto evaluate_at = [&](const std::vector<double>& theta, std::size_t slot) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            FunctionalResponse clean = oracle(theta);
            const double g = worst_case(clean, target);
            observed.push_back(acq_detail::add_noise(clean, cfg.noise_sd, noise_rng));
            rec.designs.push_back(theta);
            rec.g_values.push_back(g);
        } catch (const Error& e) {
            rec.skipped_iters.push_back(slot);
            std::cerr << "[mmfbo] oracle failed at evaluation " << slot << ": " << e.what()
                      << " (design skipped, budget consumed)\n";
        }
        rec.iter_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };

    const auto seeds_unit = latin_hypercube(static_cast<std::size_t>(n0), d, mix64(cfg.seed, 0x7365656473ULL));
    for (int i = 0; i < n0; ++i) evaluate_at(box.from_unit(seeds_unit[static_cast<std::size_t>(i)]), static_cast<std::size_t>(i) + 1);
    if (observed.size() < 2) throw InsufficientDataError("run: fewer than 2 successful seed evaluations");

    KappaState kappa{std::clamp(cfg.kappa0, cfg.schedule.kappa_min, cfg.schedule.kappa_max), 0,
                     *std::min_element(rec.g_values.begin(), rec.g_values.end())};

    std::optional<FpcaModel> fpca;
    std::vector<GpModel> gps;
    int iters_since_refit = 0;

    auto refit_models = [&]() {
        const bool drift =
            fpca && !observed.empty() && fpca->relative_reconstruction_error(observed.back()) > cfg.refit_drift;
        if (!fpca || iters_since_refit >= cfg.refit_every || drift) {
            fpca = FpcaModel::fit(observed, grid, cfg.explained_threshold);
            iters_since_refit = 0;
        }
        Eigen::MatrixXd inputs(static_cast<Eigen::Index>(rec.designs.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < rec.designs.size(); ++i)
            for (std::size_t j = 0; j < d; ++j)
                inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rec.designs[i][j];
        const auto table = score_table(*fpca, observed);
        gps = fit_scores(inputs, table.values, box, cfg.gp);
    };

    const int total_slots = cfg.budget;
    for (int slot = n0 + 1; slot <= total_slots; ++slot) {
        const auto t0 = std::chrono::steady_clock::now();
        refit_models();
        ++iters_since_refit;

        const std::size_t best = static_cast<std::size_t>(
            std::min_element(rec.g_values.begin(), rec.g_values.end()) - rec.g_values.begin());
        const auto& incumbent = rec.designs[best];

        PoolConfig pool_cfg = cfg.pool;
        CandidatePool pool;
        for (;;) {
            try {
                pool = build_pool(box, incumbent, rec.designs, mix64(cfg.seed, static_cast<std::uint64_t>(slot)),
                                  pool_cfg);
                break;
            } catch (const PoolExhaustedError&) {
                pool_cfg.exclusion_radius = pool_cfg.exclusion_radius > 1e-12 ? pool_cfg.exclusion_radius * 0.5 : 0.0;
            }
        }

        const int bo_iter = slot - n0;
        const double eff_kappa =
            (cfg.exploit_every > 0 && bo_iter % cfg.exploit_every == 0) ? 0.0 : kappa.kappa;
        const auto theta = select_next(*fpca, gps, target, pool, eff_kappa, cfg.top_q);

        const double model_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        evaluate_at(theta, static_cast<std::size_t>(slot));
        if (!rec.iter_seconds.empty()) rec.iter_seconds.back() += model_seconds;
        if (!rec.g_values.empty()) kappa = update_kappa(kappa, rec.g_values.back(), cfg.schedule);
    }

    // Final refit so the recommendation uses everything observed.
    refit_models();
    rec.regret.resize(rec.g_values.size());
    double run_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rec.g_values.size(); ++i) {
        run_min = std::min(run_min, rec.g_values[i]);
        rec.regret[i] = run_min;
    }
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(rec.g_values.begin(), rec.g_values.end()) - rec.g_values.begin());
    rec.incumbent = rec.designs[best];
    rec.incumbent_g = rec.g_values[best];

    double best_pred = std::numeric_limits<double>::infinity();
    std::size_t best_pred_i = 0;
    for (std::size_t i = 0; i < rec.designs.size(); ++i) {
        const auto err = error_moments(deviation_moments(*fpca, gps, target, rec.designs[i]));
        const double worst = *std::max_element(err.mean.begin(), err.mean.end());
        if (worst < best_pred) {
            best_pred = worst;
            best_pred_i = i;
        }
    }
    rec.recommended = rec.designs[best_pred_i];

    rec.gp_params.reserve(gps.size());
    for (const auto& g : gps) {
        RunRecord::ModeParams mp;
        mp.signal_variance = g.params().signal_variance;
        mp.lengthscales = g.params().lengthscales;
        mp.noise_variance = g.params().noise_variance;
        rec.gp_params.push_back(std::move(mp));
    }
    return rec;
}

/// Synthetic check that the acquisition surface tracks the true worst-case
/// objective once the surrogate error budget shrinks: builds moments from an
/// analytic error surface plus a bounded perturbation, an integrated
/// uncertainty mass, and reports the sup distance together with its bound.
struct ProbeResult {
    double sup_gap = 0.0;
    double bound = 0.0;
    std::size_t alpha_argmin = 0;
    std::size_t g_argmin = 0;
};

template <typename Surface, typename Perturbation>
ProbeResult consistency_probe(Surface&& surface, Perturbation&& perturb,
                              const std::vector<double>& theta_grid, const FunctionalGrid& grid,
                              double delta, double u_mass, double kappa) {
    if (delta < 0.0 || u_mass < 0.0 || kappa < 0.0)
        throw DomainError("consistency_probe: nonnegative scales required");
    if (theta_grid.empty()) throw DomainError("consistency_probe: empty design grid");

    const double sd_level = u_mass / grid.total_weight();
    ProbeResult result;
    result.bound = delta + kappa * u_mass;

    double best_alpha = std::numeric_limits<double>::infinity();
    double best_g = std::numeric_limits<double>::infinity();
    for (std::size_t ti = 0; ti < theta_grid.size(); ++ti) {
        const double theta = theta_grid[ti];
        double worst_mu = -std::numeric_limits<double>::infinity();
        double g = -std::numeric_limits<double>::infinity();
        double spread = 0.0;
        for (std::size_t m = 0; m < grid.size(); ++m) {
            const double lambda = grid.points()[m];
            const double e = surface(theta, lambda);
            const double p = perturb(theta, lambda);
            if (std::abs(p) > 1.0 + 1e-12)
                throw DomainError("consistency_probe: perturbation must be bounded by 1");
            worst_mu = std::max(worst_mu, e + delta * p);
            g = std::max(g, e);
            spread += grid.weights()[m] * sd_level;
        }
        const double alpha = worst_mu - kappa * spread;
        result.sup_gap = std::max(result.sup_gap, std::abs(alpha - g));
        if (alpha < best_alpha) {
            best_alpha = alpha;
            result.alpha_argmin = ti;
        }
        if (g < best_g) {
            best_g = g;
            result.g_argmin = ti;
        }
    }
    return result;
}

}  // namespace mmfbo
