#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "mmfbo/cli.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string oracle;
    std::vector<std::string> methods;
    int budget = -1;
    int n0 = -1;
    int replications = -1;
    long long seed = -1;
    std::string out_dir;
    int jobs = -1;
};

void add_common(CLI::App* sub, CliOverrides& ov) {
    sub->add_option("--config", ov.config_path, "config file (key = value lines)");
    sub->add_option("--oracle", ov.oracle, "oracle name (see `catalog`)");
    sub->add_option("--method", ov.methods, "method(s): mmfbo, gp_on_g, sfd")->delimiter(',');
    sub->add_option("--budget", ov.budget, "total evaluations incl. seed phase");
    sub->add_option("--n0", ov.n0, "seed design count (0 = auto)");
    sub->add_option("--reps", ov.replications, "replication count (study)");
    sub->add_option("--seed", ov.seed, "base random seed");
    sub->add_option("--out", ov.out_dir, "output directory");
    sub->add_option("--jobs", ov.jobs, "parallel replication workers");
}

mmfbo::ExperimentConfig resolve(const CliOverrides& ov) {
    mmfbo::ExperimentConfig cfg;
    if (!ov.config_path.empty()) cfg = mmfbo::parse_config_file(ov.config_path);
    mmfbo::apply_env_overrides(cfg);
    if (!ov.oracle.empty()) cfg.oracle = ov.oracle;
    if (!ov.methods.empty()) cfg.methods = ov.methods;
    if (ov.budget >= 0) cfg.budget = ov.budget;
    if (ov.n0 >= 0) cfg.n0 = ov.n0;
    if (ov.replications >= 0) cfg.replications = ov.replications;
    if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.jobs >= 0) cfg.jobs = ov.jobs;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Min-max functional Bayesian optimization benchmark"};
    app.require_subcommand(1);

    CliOverrides run_ov, study_ov;
    bool dry_run = false;
    std::string plot_summary, plot_out = ".";

    auto* run = app.add_subcommand("run", "single trajectory per method");
    add_common(run, run_ov);
    run->add_flag("--dry", dry_run, "print the resolved config and exit");

    auto* study = app.add_subcommand("study", "paired replication study");
    add_common(study, study_ov);

    auto* plot = app.add_subcommand("plot", "render SVG charts from a study summary");
    plot->add_option("summary", plot_summary, "study summary JSON")->required();
    plot->add_option("--out", plot_out, "output directory");

    app.add_subcommand("catalog", "list the built-in oracles");
    app.add_subcommand("defaults", "emit the default config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mmfbo::kExitUsage;
    }

    try {
        if (run->parsed()) return mmfbo::cmd_run(resolve(run_ov), dry_run, std::cout, std::cerr);
        if (study->parsed()) return mmfbo::cmd_study(resolve(study_ov), std::cout, std::cerr);
        if (plot->parsed()) return mmfbo::cmd_plot(plot_summary, plot_out, std::cout, std::cerr);
        if (app.get_subcommand("catalog")->parsed()) return mmfbo::cmd_catalog(std::cout);
        if (app.get_subcommand("defaults")->parsed()) return mmfbo::cmd_defaults(std::cout);
    } catch (const mmfbo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return mmfbo::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mmfbo::kExitRuntime;
    }
    return mmfbo::kExitUsage;
}
