#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mmfbo/acquisition.hpp"
#include "mmfbo/config.hpp"
#include "mmfbo/oracles.hpp"
#include "mmfbo/run_record.hpp"

namespace mmfbo {

/// r_k = (running minimum of g through evaluation k) - g_star.
inline std::vector<double> regret_curve(const std::vector<double>& g_values, double g_star) {
    if (g_values.empty()) throw DimensionError("regret_curve: empty input");
    std::vector<double> r(g_values.size());
    double run_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g_values.size(); ++k) {
        run_min = std::min(run_min, g_values[k]);
        r[k] = run_min - g_star;
    }
    return r;
}

/// Mean of r_k / r_0 over the given curve, r_0 being its first entry. A run
/// that starts already solved (r_0 = 0) scores 0.
inline double auoc(const std::vector<double>& regret) {
    if (regret.empty()) throw DimensionError("auoc: empty input");
    const double r0 = regret.front();
    if (!(r0 > 0.0)) return 0.0;
    double acc = 0.0;
    for (double r : regret) acc += r / r0;
    return acc / static_cast<double>(regret.size());
}

/// First 1-based index with r_k <= epsilon, or absent if never reached.
inline std::optional<int> time_to_threshold(const std::vector<double>& regret, double epsilon) {
    if (!(epsilon > 0.0)) throw DomainError("time_to_threshold: epsilon must be positive");
    for (std::size_t k = 0; k < regret.size(); ++k)
        if (regret[k] <= epsilon) return static_cast<int>(k + 1);
    return std::nullopt;
}

struct TtAggregate {
    double success_fraction = 0.0;
    std::optional<double> median_iteration;  // among successful runs
    int successes = 0;
    int total = 0;
};

inline TtAggregate aggregate_tt(const std::vector<std::optional<int>>& hits) {
    TtAggregate agg;
    agg.total = static_cast<int>(hits.size());
    std::vector<double> ks;
    for (const auto& h : hits)
        if (h) ks.push_back(static_cast<double>(*h));
    agg.successes = static_cast<int>(ks.size());
    agg.success_fraction = hits.empty() ? 0.0 : static_cast<double>(agg.successes) / static_cast<double>(hits.size());
    if (!ks.empty()) {
        std::sort(ks.begin(), ks.end());
        const std::size_t n = ks.size();
        agg.median_iteration = (n % 2 == 1) ? ks[n / 2] : 0.5 * (ks[n / 2 - 1] + ks[n / 2]);
    }
    return agg;
}

namespace bench_detail {

constexpr std::uint64_t kSfdSalt = 0x736664ULL;

inline std::vector<std::vector<double>> shared_seed_designs(const DesignBox& box, int n0,
                                                            std::uint64_t seed) {
    const auto unit = latin_hypercube(static_cast<std::size_t>(n0), box.dim(), mix64(seed, 0x7365656473ULL));
    std::vector<std::vector<double>> designs;
    designs.reserve(unit.size());
    for (const auto& u : unit) designs.push_back(box.from_unit(u));
    return designs;
}

inline void finalize(RunRecord& rec) {
    rec.regret = regret_curve(rec.g_values, 0.0);
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(rec.g_values.begin(), rec.g_values.end()) - rec.g_values.begin());
    rec.incumbent = rec.designs[best];
    rec.incumbent_g = rec.g_values[best];
    rec.recommended = rec.incumbent;
}

}  // namespace bench_detail

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Expected improvement below f_best for a posterior N(mu, sigma^2).
inline double expected_improvement(double mu, double sigma, double f_best) {
    if (sigma <= 0.0) return std::max(f_best - mu, 0.0);
    const double z = (f_best - mu) / sigma;
    return (f_best - mu) * normal_cdf(z) + sigma * normal_pdf(z);
}

/// Non-adaptive baseline: the shared seed designs followed by a scrambled
/// low-discrepancy continuation.
inline RunRecord sfd_baseline(const OracleFn& oracle, const Target& target, const DesignBox& box,
                              const AcquisitionConfig& cfg) {
    const int n0 = cfg.n0 > 0 ? cfg.n0 : default_seed_count(box.dim());
    if (cfg.budget < 1) throw DomainError("sfd: budget must be positive");

    RunRecord rec;
    rec.method = "sfd";
    rec.seed = cfg.seed;
    rec.n0 = static_cast<std::size_t>(n0);

    auto designs = bench_detail::shared_seed_designs(box, std::min(n0, cfg.budget), cfg.seed);
    SobolSequence cont(box.dim(), mix64(cfg.seed, bench_detail::kSfdSalt));
    while (static_cast<int>(designs.size()) < cfg.budget) designs.push_back(box.from_unit(cont.next()));

    for (std::size_t i = 0; i < designs.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto resp = oracle(designs[i]);
            rec.designs.push_back(designs[i]);
            rec.g_values.push_back(worst_case(resp, target));
        } catch (const Error& e) {
            rec.skipped_iters.push_back(i + 1);
            std::cerr << "[sfd] oracle failed at evaluation " << (i + 1) << ": " << e.what() << "\n";
        }
        rec.iter_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    if (rec.g_values.empty()) throw InsufficientDataError("sfd: no successful evaluations");
    bench_detail::finalize(rec);
    return rec;
}

/// Scalar-objective baseline: a GP fit to log(g + 1e-12) with Expected
/// Improvement over the same candidate pools MM-FBO consults. The log
/// transform tames the orders-of-magnitude spread of worst-case errors.
inline RunRecord gp_on_g_baseline(const OracleFn& oracle, const Target& target, const DesignBox& box,
                                  const AcquisitionConfig& cfg) {
    const std::size_t d = box.dim();
    const int n0 = cfg.n0 > 0 ? cfg.n0 : default_seed_count(d);
    if (cfg.budget < n0) throw DomainError("gp_on_g: budget must cover the seed phase");

    RunRecord rec;
    rec.method = "gp_on_g";
    rec.seed = cfg.seed;
    rec.n0 = static_cast<std::size_t>(n0);

    std::vector<double> observed_g;  // possibly noisy, drives the surrogate
    Rng noise_rng(mix64(cfg.seed, 0x6e6f697365ULL));

    auto evaluate_at = [&](const std::vector<double>& theta, std::size_t slot) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto resp = oracle(theta);
            rec.designs.push_back(theta);
            rec.g_values.push_back(worst_case(resp, target));
            observed_g.push_back(
                worst_case(acq_detail::add_noise(resp, cfg.noise_sd, noise_rng), target));
        } catch (const Error& e) {
            rec.skipped_iters.push_back(slot);
            std::cerr << "[gp_on_g] oracle failed at evaluation " << slot << ": " << e.what() << "\n";
        }
        rec.iter_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };

    const auto seeds = bench_detail::shared_seed_designs(box, n0, cfg.seed);
    for (std::size_t i = 0; i < seeds.size(); ++i) evaluate_at(seeds[i], i + 1);
    if (rec.g_values.size() < 2) throw InsufficientDataError("gp_on_g: too few seed evaluations");

    std::optional<GpModel> last_gp;
    for (int slot = n0 + 1; slot <= cfg.budget; ++slot) {
        const auto t0 = std::chrono::steady_clock::now();
        const Eigen::Index n = static_cast<Eigen::Index>(rec.designs.size());
        Eigen::MatrixXd inputs(n, static_cast<Eigen::Index>(d));
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j)
                inputs(i, static_cast<Eigen::Index>(j)) = rec.designs[static_cast<std::size_t>(i)][j];
            y(i) = std::log(observed_g[static_cast<std::size_t>(i)] + 1e-12);
        }
        const auto gp = GpModel::fit(inputs, y, box, cfg.gp);
        const double f_best = y.minCoeff();

        const std::size_t best = static_cast<std::size_t>(
            std::min_element(rec.g_values.begin(), rec.g_values.end()) - rec.g_values.begin());
        PoolConfig pool_cfg = cfg.pool;
        CandidatePool pool;
        for (;;) {
            try {
                pool = build_pool(box, rec.designs[best], rec.designs,
                                  mix64(cfg.seed, static_cast<std::uint64_t>(slot)), pool_cfg);
                break;
            } catch (const PoolExhaustedError&) {
                pool_cfg.exclusion_radius =
                    pool_cfg.exclusion_radius > 1e-12 ? pool_cfg.exclusion_radius * 0.5 : 0.0;
            }
        }

        std::size_t pick = 0;
        double best_ei = -1.0;
        double best_mean = std::numeric_limits<double>::infinity();
        bool any_sigma = false;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const auto p = gp.predict(pool.at(i));
            const double sigma = std::sqrt(std::max(p.variance, 0.0));
            if (sigma > 0.0) any_sigma = true;
            const double ei = expected_improvement(p.mean, sigma, f_best);
            if (ei > best_ei) {
                best_ei = ei;
                pick = i;
            }
            if (p.mean < best_mean) best_mean = p.mean;
        }
        if (!any_sigma) {  // degenerate posterior: fall back to mean minimization
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (gp.predict(pool.at(i)).mean == best_mean) {
                    pick = i;
                    break;
                }
            }
        }

        const double model_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        evaluate_at(pool.at(pick), static_cast<std::size_t>(slot));
        if (!rec.iter_seconds.empty()) rec.iter_seconds.back() += model_seconds;
        last_gp = gp;
    }
    bench_detail::finalize(rec);
    if (last_gp) {
        RunRecord::ModeParams mp;
        mp.signal_variance = last_gp->params().signal_variance;
        mp.lengthscales = last_gp->params().lengthscales;
        mp.noise_variance = last_gp->params().noise_variance;
        rec.gp_params.push_back(std::move(mp));
    }
    return rec;
}

struct MethodSummary {
    std::vector<double> regret_median, regret_q25, regret_q75;        // full curve, length budget
    std::vector<double> nregret_median, nregret_q25, nregret_q75;     // sequential phase, normalized
    std::vector<double> final_regrets;                                // one per replication
    std::vector<double> auocs;                                        // one per replication
    std::map<std::string, TtAggregate> tt;                            // keyed by formatted epsilon
};

struct StudySummary {
    std::string oracle;
    int budget = 0;
    int n0 = 0;
    int replications = 0;
    std::uint64_t seed = 0;
    std::vector<double> epsilons;
    std::vector<std::string> method_order;
    std::map<std::string, MethodSummary> methods;
};

namespace bench_detail {

// Type-7 quantile (linear interpolation), on a sorted copy.
inline double quantile(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    if (xs.size() == 1) return xs[0];
    const double h = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace bench_detail

inline AcquisitionConfig to_acquisition_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    AcquisitionConfig acq;
    acq.n0 = cfg.n0;
    acq.budget = cfg.budget;
    acq.seed = seed;
    acq.kappa0 = cfg.kappa0;
    acq.schedule = KappaSchedule{cfg.kappa_min, cfg.kappa_max, cfg.decay, cfg.boost, cfg.patience};
    acq.pool = PoolConfig{cfg.pool_global, cfg.pool_local, cfg.local_frac, cfg.exclusion_radius};
    acq.top_q = cfg.top_q;
    acq.exploit_every = cfg.exploit_every;
    acq.refit_every = cfg.refit_every;
    acq.explained_threshold = cfg.explained_threshold;
    acq.noise_sd = cfg.noise_sd;
    return acq;
}

inline Oracle make_configured_oracle(const ExperimentConfig& cfg) {
    Oracle oracle = make_oracle(cfg.oracle);
    if (cfg.oracle == "vpi" && cfg.vpi_readout == "product") {
        OracleSpec spec = oracle.spec();
        spec.vpi.product_only = true;
        auto grid = spec.grid;
        const VpiSettings vs = spec.vpi;
        return Oracle(spec, [grid, vs](const std::vector<double>& th) {
            return vpi_response(th, grid, vs);
        });
    }
    if (cfg.oracle == "vpi" && cfg.vpi_readout != "total" && cfg.vpi_readout != "product")
        throw ConfigError("vpi_readout must be 'total' or 'product'");
    return oracle;
}

/// One trajectory of the named method, sharing seeds (and pools, where the
/// method consults pools) with every other method run at the same seed.
inline RunRecord run_method(const std::string& method, const Oracle& oracle, const Target& target,
                            const AcquisitionConfig& acq) {
    const auto& box = oracle.spec().box;
    OracleFn fn = [&oracle](const std::vector<double>& th) { return oracle.evaluate(th); };
    RunRecord rec;
    if (method == "mmfbo") {
        rec = run_mmfbo(fn, target, box, oracle.spec().grid, acq);
    } else if (method == "gp_on_g") {
        rec = gp_on_g_baseline(fn, target, box, acq);
    } else if (method == "sfd") {
        rec = sfd_baseline(fn, target, box, acq);
    } else {
        throw ConfigError("unknown method '" + method + "'; known: mmfbo, gp_on_g, sfd");
    }
    rec.oracle = oracle.spec().name;
    return rec;
}

struct StudyResult {
    StudySummary summary;
    // records[rep][method index in method_order]
    std::vector<std::vector<RunRecord>> records;
    // Nonempty when a replication failed; `records` then holds whatever
    // completed, for a partial-results dump.
    std::string error;
};

/// Paired-replication study: replication r derives one seed that drives all
/// methods, so their seed designs coincide and their pools match at each
/// iteration index. Replications may run in parallel; aggregation order is
/// fixed by (method, replication), never by completion time.
inline StudyResult run_study(const ExperimentConfig& cfg) {
    if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
    if (cfg.methods.empty()) throw ConfigError("no methods selected");
    for (const auto& m : cfg.methods)
        if (m != "mmfbo" && m != "gp_on_g" && m != "sfd")
            throw ConfigError("unknown method '" + m + "'");

    const Oracle oracle = make_configured_oracle(cfg);
    const Target target = oracle.make_target();
    const int n0 = cfg.n0 > 0 ? cfg.n0 : default_seed_count(oracle.spec().box.dim());
    if (cfg.budget <= n0)
        throw ConfigError("budget (" + std::to_string(cfg.budget) + ") must exceed n0 (" +
                          std::to_string(n0) + ")");

    const int reps = cfg.replications;
    std::vector<std::vector<RunRecord>> records(static_cast<std::size_t>(reps));

    auto run_rep = [&](int r) {
        const std::uint64_t seed_r = mix64(cfg.seed, static_cast<std::uint64_t>(r));
        std::vector<RunRecord> out;
        out.reserve(cfg.methods.size());
        for (const auto& method : cfg.methods) {
            auto acq = to_acquisition_config(cfg, seed_r);
            acq.n0 = n0;
            out.push_back(run_method(method, oracle, target, acq));
        }
        return out;
    };

    StudyResult result;
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (int r = 0; r < reps && result.error.empty(); ++r) {
            try {
                records[static_cast<std::size_t>(r)] = run_rep(r);
            } catch (const std::exception& e) {
                result.error = "replication " + std::to_string(r) + " failed: " + e.what();
            }
        }
    } else {
        std::vector<std::future<std::vector<RunRecord>>> futures;
        futures.reserve(static_cast<std::size_t>(reps));
        int launched = 0, collected = 0;
        while (collected < reps) {
            while (launched < reps && launched - collected < jobs) {
                futures.push_back(std::async(std::launch::async, run_rep, launched));
                ++launched;
            }
            try {
                records[static_cast<std::size_t>(collected)] =
                    futures[static_cast<std::size_t>(collected)].get();
            } catch (const std::exception& e) {
                if (result.error.empty())
                    result.error = "replication " + std::to_string(collected) + " failed: " + e.what();
            }
            ++collected;
        }
    }
    if (!result.error.empty()) {
        for (auto& r : records)
            if (!r.empty()) result.records.push_back(std::move(r));
        return result;
    }

    auto& summary = result.summary;
    summary.oracle = cfg.oracle;
    summary.budget = cfg.budget;
    summary.n0 = n0;
    summary.replications = reps;
    summary.seed = cfg.seed;
    summary.epsilons = cfg.epsilons;
    summary.method_order = cfg.methods;

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        MethodSummary ms;
        std::vector<std::vector<double>> curves, ncurves;
        std::vector<std::map<std::string, std::optional<int>>> hits;
        for (int r = 0; r < reps; ++r) {
            const auto& rec = records[static_cast<std::size_t>(r)][mi];
            curves.push_back(rec.regret);
            // Sequential-phase curve, entry 0 = regret entering the phase.
            std::vector<double> seq(rec.regret.begin() + (n0 - 1), rec.regret.end());
            const double r0 = seq.front();
            ms.final_regrets.push_back(rec.regret.back());
            ms.auocs.push_back(auoc(seq));
            std::vector<double> nseq(seq.size());
            for (std::size_t k = 0; k < seq.size(); ++k) nseq[k] = r0 > 0.0 ? seq[k] / r0 : 0.0;
            ncurves.push_back(nseq);
            std::map<std::string, std::optional<int>> h;
            for (double eps : cfg.epsilons) {
                // Normalized threshold over the sequential iterations.
                const std::vector<double> tail(nseq.begin() + 1, nseq.end());
                h[format_double(eps)] = r0 > 0.0 ? time_to_threshold(tail, eps) : std::optional<int>(0);
            }
            hits.push_back(std::move(h));
        }
        const std::size_t curve_len = curves.front().size();
        for (std::size_t k = 0; k < curve_len; ++k) {
            std::vector<double> at;
            at.reserve(curves.size());
            for (const auto& c : curves) at.push_back(c[k]);
            ms.regret_median.push_back(bench_detail::quantile(at, 0.5));
            ms.regret_q25.push_back(bench_detail::quantile(at, 0.25));
            ms.regret_q75.push_back(bench_detail::quantile(at, 0.75));
        }
        for (std::size_t k = 0; k < ncurves.front().size(); ++k) {
            std::vector<double> at;
            at.reserve(ncurves.size());
            for (const auto& c : ncurves) at.push_back(c[k]);
            ms.nregret_median.push_back(bench_detail::quantile(at, 0.5));
            ms.nregret_q25.push_back(bench_detail::quantile(at, 0.25));
            ms.nregret_q75.push_back(bench_detail::quantile(at, 0.75));
        }
        for (double eps : cfg.epsilons) {
            const auto key = format_double(eps);
            std::vector<std::optional<int>> per_rep;
            per_rep.reserve(hits.size());
            for (const auto& h : hits) per_rep.push_back(h.at(key));
            ms.tt[key] = aggregate_tt(per_rep);
        }
        summary.methods[cfg.methods[mi]] = std::move(ms);
    }
    result.records = std::move(records);
    return result;
}

}  // namespace mmfbo
