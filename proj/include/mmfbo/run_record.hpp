#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmfbo {

/// One optimization trajectory. `g_values` are the true worst-case errors of
/// the evaluated designs in evaluation order; `regret` is their running
/// minimum against the known optimum. Wall-clock stays in memory only, so
/// persisted artifacts remain byte-reproducible.
struct RunRecord {
    std::string method;
    std::string oracle;
    std::uint64_t seed = 0;
    std::size_t n0 = 0;

    std::vector<std::vector<double>> designs;
    std::vector<double> g_values;
    std::vector<double> regret;
    std::vector<double> iter_seconds;

    std::vector<double> incumbent;    // argmin of the true worst-case error
    std::vector<double> recommended;  // argmin of the model's predicted worst-case error
    double incumbent_g = 0.0;

    std::vector<std::size_t> skipped_iters;  // budget slots lost to oracle failures

    // Final per-mode kernel hyperparameters, for reproducibility audits.
    struct ModeParams {
        double signal_variance = 0.0;
        std::vector<double> lengthscales;
        double noise_variance = 0.0;
    };
    std::vector<ModeParams> gp_params;
};

}  // namespace mmfbo
