#pragma once

#include <filesystem>
#include <iostream>
#include <string>

#include "mmfbo/bench.hpp"
#include "mmfbo/config.hpp"
#include "mmfbo/io.hpp"
#include "mmfbo/oracles.hpp"
#include "mmfbo/svg.hpp"

namespace mmfbo {

// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline void validate_run_config(const ExperimentConfig& cfg) {
    if (cfg.oracle.empty()) throw ConfigError("config key 'oracle' is required");
    const Oracle oracle = make_oracle(cfg.oracle);  // throws on unknown name
    const int n0 = cfg.n0 > 0 ? cfg.n0 : default_seed_count(oracle.spec().box.dim());
    if (cfg.budget <= 0) throw ConfigError("config key 'budget' is required and must be positive");
    if (cfg.budget <= n0)
        throw ConfigError("budget (" + std::to_string(cfg.budget) + ") must exceed n0 (" +
                          std::to_string(n0) + ")");
    if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
    if (cfg.methods.empty()) throw ConfigError("methods must not be empty");
    for (const auto& m : cfg.methods)
        if (m != "mmfbo" && m != "gp_on_g" && m != "sfd")
            throw ConfigError("unknown method '" + m + "'; known: mmfbo, gp_on_g, sfd");
    for (double eps : cfg.epsilons)
        if (!(eps > 0.0)) throw ConfigError("epsilons must be positive");
    if (!(cfg.top_q > 0.0) || cfg.top_q > 1.0) throw ConfigError("top_q must be in (0, 1]");
    if (!(cfg.explained_threshold > 0.0) || cfg.explained_threshold > 1.0)
        throw ConfigError("explained_threshold must be in (0, 1]");
    if (cfg.kappa_min < 0.0 || cfg.kappa_max < cfg.kappa_min)
        throw ConfigError("kappa bounds must satisfy 0 <= kappa_min <= kappa_max");
}

inline std::string run_basename(const ExperimentConfig& cfg, const std::string& method) {
    return "run_" + cfg.oracle + "_" + method + "_s" + std::to_string(cfg.seed);
}

/// `run`: one trajectory per configured method at the configured seed.
inline int cmd_run(const ExperimentConfig& cfg, bool dry_run, std::ostream& out, std::ostream& err) {
    try {
        validate_run_config(cfg);
        if (dry_run) {
            out << emit_config(cfg);
            return kExitOk;
        }
        const Oracle oracle = make_configured_oracle(cfg);
        const Target target = oracle.make_target();
        const std::filesystem::path dir(cfg.out_dir);

        json summary = json::object();
        summary["config"] = emit_config(cfg);
        summary["runs"] = json::object();
        for (const auto& method : cfg.methods) {
            auto acq = to_acquisition_config(cfg, cfg.seed);
            acq.n0 = cfg.n0 > 0 ? cfg.n0 : default_seed_count(oracle.spec().box.dim());
            const RunRecord rec = run_method(method, oracle, target, acq);
            write_text_file(dir / (run_basename(cfg, method) + ".csv"), run_to_csv(rec));
            summary["runs"][method] = run_to_json(rec);
            out << method << ": best g = " << format_double(rec.incumbent_g) << " after "
                << rec.designs.size() << " evaluations\n";
        }
        write_text_file(dir / ("run_" + cfg.oracle + "_s" + std::to_string(cfg.seed) + ".json"),
                        summary.dump(2) + "\n");
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

/// `study`: paired replications, summary JSON, per-run CSVs and plot data.
inline int cmd_study(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        validate_run_config(cfg);
        const std::filesystem::path dir(cfg.out_dir);
        const StudyResult result = run_study(cfg);
        if (!result.error.empty()) {
            json partial = json::object();
            partial["error"] = result.error;
            partial["completed_replications"] = result.records.size();
            json runs = json::array();
            for (const auto& rep : result.records)
                for (const auto& rec : rep) runs.push_back(run_to_json(rec));
            partial["runs"] = runs;
            write_text_file(dir / ("study_" + cfg.oracle + "_partial.json"), partial.dump(2) + "\n");
            err << "study aborted: " << result.error << " (partial results dumped)\n";
            return kExitRuntime;
        }

        for (std::size_t r = 0; r < result.records.size(); ++r) {
            for (const auto& rec : result.records[r]) {
                const auto name = cfg.oracle + "_" + rec.method + "_r" + std::to_string(r) + ".csv";
                write_text_file(dir / "runs" / name, run_to_csv(rec));
            }
        }
        write_text_file(dir / ("study_" + cfg.oracle + ".json"),
                        summary_to_json(result.summary).dump(2) + "\n");
        for (const auto& method : cfg.methods)
            write_text_file(dir / ("regret_band_" + cfg.oracle + "_" + method + ".csv"),
                            regret_band_csv(result.summary, method));
        write_text_file(dir / ("auoc_box_" + cfg.oracle + ".csv"), box_summary_csv(result.summary, true));
        write_text_file(dir / ("final_box_" + cfg.oracle + ".csv"), box_summary_csv(result.summary, false));
        write_text_file(dir / ("tt_table_" + cfg.oracle + ".csv"), tt_table_csv(result.summary));

        out << "study complete: " << cfg.replications << " replications x " << cfg.methods.size()
            << " methods on '" << cfg.oracle << "'\n";
        for (const auto& method : cfg.methods) {
            const auto& ms = result.summary.methods.at(method);
            out << "  " << method << ": median AUOC " << format_double(bench_detail::quantile(ms.auocs, 0.5))
                << ", median final regret "
                << format_double(bench_detail::quantile(ms.final_regrets, 0.5)) << "\n";
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

/// `plot`: render the four quick-look SVGs from a study summary.
inline int cmd_plot(const std::string& summary_path, const std::string& out_dir, std::ostream& out,
                    std::ostream& err) {
    try {
        json j;
        try {
            j = json::parse(read_text_file(summary_path));
        } catch (const std::exception& e) {
            err << "malformed summary: " << e.what() << "\n";
            return kExitUsage;
        }
        StudySummary summary;
        try {
            summary = summary_from_json(j);
        } catch (const std::exception& e) {
            err << "malformed summary: " << e.what() << "\n";
            return kExitUsage;
        }
        if (summary.method_order.empty()) {
            err << "warning: summary has no methods; nothing to plot\n";
            return kExitOk;
        }
        const std::filesystem::path dir(out_dir);
        write_text_file(dir / ("regret_band_" + summary.oracle + ".svg"),
                        render_regret_band_svg(summary, false));
        write_text_file(dir / ("normalized_regret_" + summary.oracle + ".svg"),
                        render_regret_band_svg(summary, true));
        write_text_file(dir / ("final_regret_box_" + summary.oracle + ".svg"),
                        render_box_svg(summary, false));
        write_text_file(dir / ("auoc_box_" + summary.oracle + ".svg"), render_box_svg(summary, true));
        out << "wrote 4 SVG files to " << dir.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

/// `catalog`: the built-in simulators and their reference problems.
inline int cmd_catalog(std::ostream& out) {
    for (const auto& name : oracle_names()) {
        const Oracle oracle = make_oracle(name);
        const auto& spec = oracle.spec();
        out << spec.name << ": " << spec.description << "\n";
        out << "  dimension: " << spec.box.dim() << "\n";
        out << "  box:";
        for (std::size_t i = 0; i < spec.box.dim(); ++i)
            out << " [" << format_double(spec.box.lower[i]) << ", " << format_double(spec.box.upper[i])
                << "]";
        out << "\n  theta*:";
        for (double v : spec.theta_star) out << " " << format_double(v);
        out << "\n  grid: " << spec.grid->size() << " points on [" << format_double(spec.grid->points().front())
            << ", " << format_double(spec.grid->points().back()) << "]\n";
    }
    return kExitOk;
}

inline int cmd_defaults(std::ostream& out) {
    out << emit_config(ExperimentConfig{});
    return kExitOk;
}

}  // namespace mmfbo
