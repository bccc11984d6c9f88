#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mmfbo/bench.hpp"
#include "mmfbo/fpca.hpp"
#include "mmfbo/grid.hpp"
#include "mmfbo/run_record.hpp"

namespace mmfbo {

using nlohmann::json;

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- curve and grid CSV (`lambda,value` / `lambda,w`) ----

inline std::string curve_to_csv(const FunctionalGrid& grid, const std::vector<double>& values) {
    if (values.size() != grid.size()) throw DimensionError("curve_to_csv: length mismatch");
    std::string out = "lambda,value\n";
    for (std::size_t m = 0; m < values.size(); ++m)
        out += format_double(grid.points()[m]) + "," + format_double(values[m]) + "\n";
    return out;
}

inline std::string grid_to_csv(const FunctionalGrid& grid) {
    std::string out = "lambda,w\n";
    for (std::size_t m = 0; m < grid.size(); ++m)
        out += format_double(grid.points()[m]) + "," + format_double(grid.weights()[m]) + "\n";
    return out;
}

namespace io_detail {

inline std::vector<std::pair<double, double>> parse_two_column_csv(const std::string& text,
                                                                   const std::string& header) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV");
    if (line != header) throw IoError("expected CSV header '" + header + "', got '" + line + "'");
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError("malformed CSV row: " + line);
        rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    return rows;
}

}  // namespace io_detail

inline FunctionalGrid grid_from_csv(const std::string& text) {
    const auto rows = io_detail::parse_two_column_csv(text, "lambda,w");
    std::vector<double> pts, w;
    for (const auto& [a, b] : rows) {
        pts.push_back(a);
        w.push_back(b);
    }
    return FunctionalGrid(std::move(pts), std::move(w));
}

inline std::pair<std::vector<double>, std::vector<double>> curve_from_csv(const std::string& text) {
    const auto rows = io_detail::parse_two_column_csv(text, "lambda,value");
    std::vector<double> pts, v;
    for (const auto& [a, b] : rows) {
        pts.push_back(a);
        v.push_back(b);
    }
    return {std::move(pts), std::move(v)};
}

// ---- curve datasets and FPCA models as JSON ----

inline json grid_to_json(const FunctionalGrid& grid) {
    return json{{"points", grid.points()}, {"weights", grid.weights()}};
}

inline GridPtr grid_from_json(const json& j) {
    return make_grid(FunctionalGrid(j.at("points").get<std::vector<double>>(),
                                    j.at("weights").get<std::vector<double>>()));
}

inline json curves_to_json(const FunctionalGrid& grid, const std::vector<FunctionalResponse>& curves) {
    json arr = json::array();
    for (const auto& c : curves) arr.push_back(c.values);
    return json{{"grid", grid_to_json(grid)}, {"curves", arr}};
}

inline std::vector<FunctionalResponse> curves_from_json(const json& j) {
    const auto grid = grid_from_json(j.at("grid"));
    std::vector<FunctionalResponse> curves;
    for (const auto& c : j.at("curves")) curves.emplace_back(grid, c.get<std::vector<double>>());
    return curves;
}

inline json fpca_to_json(const FpcaModel& model) {
    json phi = json::array();
    for (Eigen::Index i = 0; i < model.eigenfunctions().rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < model.eigenfunctions().cols(); ++k)
            row.push_back(model.eigenfunctions()(i, k));
        phi.push_back(std::move(row));
    }
    return json{{"grid", grid_to_json(*model.grid())},
                {"mean_curve", model.mean_curve()},
                {"eigenfunctions", phi},
                {"eigenvalues", model.eigenvalues()},
                {"residual_variance", model.residual_variance()},
                {"explained_ratio", model.explained_ratio()}};
}

inline FpcaModel fpca_from_json(const json& j) {
    const auto grid = grid_from_json(j.at("grid"));
    const auto& phi_rows = j.at("eigenfunctions");
    const auto rows = static_cast<Eigen::Index>(phi_rows.size());
    if (rows == 0) throw IoError("fpca_from_json: empty eigenfunction matrix");
    const auto cols = static_cast<Eigen::Index>(phi_rows.at(0).size());
    Eigen::MatrixXd phi(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k)
            phi(i, k) = phi_rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
    return FpcaModel::from_parts(grid, j.at("mean_curve").get<std::vector<double>>(), std::move(phi),
                                 j.at("eigenvalues").get<std::vector<double>>(),
                                 j.at("residual_variance").get<std::vector<double>>(),
                                 j.at("explained_ratio").get<double>());
}

// ---- run records and study summaries ----

/// Per-run CSV: `iter,theta0,...,g,regret`, one row per successful evaluation.
inline std::string run_to_csv(const RunRecord& rec) {
    std::string out = "iter";
    const std::size_t d = rec.designs.empty() ? 0 : rec.designs.front().size();
    for (std::size_t j = 0; j < d; ++j) out += ",theta" + std::to_string(j);
    out += ",g,regret\n";
    for (std::size_t i = 0; i < rec.designs.size(); ++i) {
        out += std::to_string(i + 1);
        for (double x : rec.designs[i]) out += "," + format_double(x);
        out += "," + format_double(rec.g_values[i]) + "," + format_double(rec.regret[i]) + "\n";
    }
    return out;
}

inline json run_to_json(const RunRecord& rec) {
    json gp = json::array();
    for (const auto& mp : rec.gp_params)
        gp.push_back(json{{"signal_variance", mp.signal_variance},
                          {"lengthscales", mp.lengthscales},
                          {"noise_variance", mp.noise_variance}});
    return json{{"method", rec.method},
                {"oracle", rec.oracle},
                {"seed", rec.seed},
                {"n0", rec.n0},
                {"evaluations", rec.designs.size()},
                {"best_g", rec.incumbent_g},
                {"incumbent", rec.incumbent},
                {"recommended", rec.recommended},
                {"final_regret", rec.regret.empty() ? 0.0 : rec.regret.back()},
                {"skipped", rec.skipped_iters},
                {"gp_hyperparameters", gp}};
}

inline json tt_to_json(const TtAggregate& tt) {
    json j{{"success_fraction", tt.success_fraction},
           {"successes", tt.successes},
           {"total", tt.total}};
    if (tt.median_iteration) j["median_iteration"] = *tt.median_iteration;
    else j["median_iteration"] = nullptr;
    return j;
}

inline json summary_to_json(const StudySummary& s) {
    json methods = json::object();
    for (const auto& name : s.method_order) {
        const auto& ms = s.methods.at(name);
        json tt = json::object();
        for (const auto& [eps, agg] : ms.tt) tt[eps] = tt_to_json(agg);
        methods[name] = json{{"regret_median", ms.regret_median},
                             {"regret_q25", ms.regret_q25},
                             {"regret_q75", ms.regret_q75},
                             {"normalized_regret_median", ms.nregret_median},
                             {"normalized_regret_q25", ms.nregret_q25},
                             {"normalized_regret_q75", ms.nregret_q75},
                             {"final_regrets", ms.final_regrets},
                             {"auoc", ms.auocs},
                             {"time_to_threshold", tt}};
    }
    return json{{"oracle", s.oracle},       {"budget", s.budget},
                {"n0", s.n0},               {"replications", s.replications},
                {"seed", s.seed},           {"epsilons", s.epsilons},
                {"method_order", s.method_order}, {"methods", methods}};
}

inline StudySummary summary_from_json(const json& j) {
    StudySummary s;
    s.oracle = j.at("oracle").get<std::string>();
    s.budget = j.at("budget").get<int>();
    s.n0 = j.at("n0").get<int>();
    s.replications = j.at("replications").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.epsilons = j.at("epsilons").get<std::vector<double>>();
    s.method_order = j.at("method_order").get<std::vector<std::string>>();
    for (const auto& name : s.method_order) {
        const auto& mj = j.at("methods").at(name);
        MethodSummary ms;
        ms.regret_median = mj.at("regret_median").get<std::vector<double>>();
        ms.regret_q25 = mj.at("regret_q25").get<std::vector<double>>();
        ms.regret_q75 = mj.at("regret_q75").get<std::vector<double>>();
        ms.nregret_median = mj.at("normalized_regret_median").get<std::vector<double>>();
        ms.nregret_q25 = mj.at("normalized_regret_q25").get<std::vector<double>>();
        ms.nregret_q75 = mj.at("normalized_regret_q75").get<std::vector<double>>();
        ms.final_regrets = mj.at("final_regrets").get<std::vector<double>>();
        ms.auocs = mj.at("auoc").get<std::vector<double>>();
        for (const auto& [eps, tj] : mj.at("time_to_threshold").items()) {
            TtAggregate agg;
            agg.success_fraction = tj.at("success_fraction").get<double>();
            agg.successes = tj.at("successes").get<int>();
            agg.total = tj.at("total").get<int>();
            if (!tj.at("median_iteration").is_null())
                agg.median_iteration = tj.at("median_iteration").get<double>();
            ms.tt[eps] = agg;
        }
        s.methods[name] = std::move(ms);
    }
    return s;
}

/// Plot-ready regret band: one row per evaluation of the full budget.
inline std::string regret_band_csv(const StudySummary& s, const std::string& method) {
    const auto& ms = s.methods.at(method);
    std::string out = "iter,median,q25,q75\n";
    for (std::size_t k = 0; k < ms.regret_median.size(); ++k)
        out += std::to_string(k + 1) + "," + format_double(ms.regret_median[k]) + "," +
               format_double(ms.regret_q25[k]) + "," + format_double(ms.regret_q75[k]) + "\n";
    return out;
}

/// Five-number summaries per method for the boxplot-style metrics.
inline std::string box_summary_csv(const StudySummary& s, bool auoc_metric) {
    std::string out = "method,min,q25,median,q75,max\n";
    for (const auto& name : s.method_order) {
        const auto& ms = s.methods.at(name);
        const auto& xs = auoc_metric ? ms.auocs : ms.final_regrets;
        out += name;
        for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
            out += "," + format_double(bench_detail::quantile(xs, q));
        out += "\n";
    }
    return out;
}

inline std::string tt_table_csv(const StudySummary& s) {
    std::string out = "epsilon,method,success_fraction,median_iteration\n";
    for (double eps : s.epsilons) {
        const auto key = format_double(eps);
        for (const auto& name : s.method_order) {
            const auto& agg = s.methods.at(name).tt.at(key);
            out += key + "," + name + "," + format_double(agg.success_fraction) + ",";
            out += agg.median_iteration ? format_double(*agg.median_iteration) : std::string("-");
            out += "\n";
        }
    }
    return out;
}

}  // namespace mmfbo
