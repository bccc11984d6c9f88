#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "mmfbo/bench.hpp"

namespace mmfbo {

// Quick-look SVG rendering: axes, polylines, interquartile bands and boxes.
// Deliberately primitive; the plot-data CSVs exist for real plotting tools.
namespace svg_detail {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 30.0, kBottom = 50.0;

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
    return palette[i % 5];
}

struct Frame {
    double x0, x1, y0, y1;  // data ranges
    bool log_y = false;

    double sx(double x) const {
        return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
    }
    double sy(double y) const {
        const double a = log_y ? std::log10(y) : y;
        const double lo = log_y ? std::log10(y0) : y0;
        const double hi = log_y ? std::log10(y1) : y1;
        return kHeight - kBottom - (a - lo) / (hi - lo) * (kHeight - kTop - kBottom);
    }
};

inline std::string num(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

inline std::string header(const std::string& title) {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         title + "</text>\n";
    return s;
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    std::string s;
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kHeight - kBottom) + "\" x2=\"" +
         num(kWidth - kRight) + "\" y2=\"" + num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xlabel + "</text>\n";
    s += "<text x=\"16\" y=\"" + num((kTop + kHeight - kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
         num((kTop + kHeight - kBottom) / 2) + ")\">" + ylabel + "</text>\n";
    // Range labels on both axes.
    s += "<text x=\"" + num(kLeft) + "\" y=\"" + num(kHeight - kBottom + 16) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + num(f.x0) + "</text>\n";
    s += "<text x=\"" + num(kWidth - kRight) + "\" y=\"" + num(kHeight - kBottom + 16) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(f.x1) + "</text>\n";
    s += "<text x=\"" + num(kLeft - 4) + "\" y=\"" + num(kHeight - kBottom) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(f.y0) + "</text>\n";
    s += "<text x=\"" + num(kLeft - 4) + "\" y=\"" + num(kTop + 10) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + num(f.y1) + "</text>\n";
    return s;
}

inline std::string legend(const std::vector<std::string>& names) {
    std::string s;
    double y = kTop + 8.0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double x = kWidth - kRight - 130.0;
        s += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 8) + "\" width=\"14\" height=\"4\" fill=\"" +
             color(i) + "\"/>\n";
        s += "<text x=\"" + num(x + 20) + "\" y=\"" + num(y - 2) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + names[i] + "</text>\n";
        y += 16.0;
    }
    return s;
}

}  // namespace svg_detail

/// Median curves with interquartile bands per method; raw regret uses a log
/// axis when every value is positive.
inline std::string render_regret_band_svg(const StudySummary& s, bool normalized) {
    using namespace svg_detail;
    const std::string title = std::string(normalized ? "Normalized regret" : "Regret") +
                              " vs iteration (" + s.oracle + ")";
    std::string out = header(title);
    if (s.method_order.empty()) return out + "</svg>\n";

    double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
    std::size_t len = 0;
    for (const auto& name : s.method_order) {
        const auto& ms = s.methods.at(name);
        const auto& lo = normalized ? ms.nregret_q25 : ms.regret_q25;
        const auto& hi = normalized ? ms.nregret_q75 : ms.regret_q75;
        len = std::max(len, lo.size());
        for (double v : lo) ymin = std::min(ymin, v);
        for (double v : hi) ymax = std::max(ymax, v);
    }
    Frame f{1.0, static_cast<double>(std::max<std::size_t>(len, 2)), 0.0, std::max(ymax, 1e-12), false};
    if (!normalized && ymin > 0.0) {
        f.log_y = true;
        f.y0 = ymin;
    }
    out += axes(f, "evaluation", normalized ? "regret / r0" : "regret");

    for (std::size_t mi = 0; mi < s.method_order.size(); ++mi) {
        const auto& ms = s.methods.at(s.method_order[mi]);
        const auto& med = normalized ? ms.nregret_median : ms.regret_median;
        const auto& lo = normalized ? ms.nregret_q25 : ms.regret_q25;
        const auto& hi = normalized ? ms.nregret_q75 : ms.regret_q75;
        auto clampy = [&](double v) { return f.log_y ? std::max(v, f.y0) : std::max(v, f.y0); };
        std::string band = "<polygon fill=\"" + std::string(color(mi)) + "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t k = 0; k < hi.size(); ++k)
            band += num(f.sx(static_cast<double>(k + 1))) + "," + num(f.sy(clampy(hi[k]))) + " ";
        for (std::size_t k = lo.size(); k > 0; --k)
            band += num(f.sx(static_cast<double>(k))) + "," + num(f.sy(clampy(lo[k - 1]))) + " ";
        band += "\"/>\n";
        out += band;
        std::string line = "<polyline fill=\"none\" stroke=\"" + std::string(color(mi)) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < med.size(); ++k)
            line += num(f.sx(static_cast<double>(k + 1))) + "," + num(f.sy(clampy(med[k]))) + " ";
        line += "\"/>\n";
        out += line;
    }
    out += legend(s.method_order);
    return out + "</svg>\n";
}

/// Box plots (five-number summaries) of final regret or AUOC per method.
inline std::string render_box_svg(const StudySummary& s, bool auoc_metric) {
    using namespace svg_detail;
    const std::string title =
        std::string(auoc_metric ? "AUOC" : "Final regret") + " distribution (" + s.oracle + ")";
    std::string out = header(title);
    if (s.method_order.empty()) return out + "</svg>\n";

    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& name : s.method_order) {
        const auto& xs = auoc_metric ? s.methods.at(name).auocs : s.methods.at(name).final_regrets;
        for (double v : xs) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    Frame f{0.0, static_cast<double>(s.method_order.size()), ymin, ymax, false};
    out += axes(f, "method", auoc_metric ? "AUOC" : "final regret");

    for (std::size_t mi = 0; mi < s.method_order.size(); ++mi) {
        const auto& name = s.method_order[mi];
        const auto& xs = auoc_metric ? s.methods.at(name).auocs : s.methods.at(name).final_regrets;
        const double q0 = bench_detail::quantile(xs, 0.0);
        const double q1 = bench_detail::quantile(xs, 0.25);
        const double q2 = bench_detail::quantile(xs, 0.5);
        const double q3 = bench_detail::quantile(xs, 0.75);
        const double q4 = bench_detail::quantile(xs, 1.0);
        const double cx = f.sx(static_cast<double>(mi) + 0.5);
        const double half = 28.0;
        out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.sy(q0)) + "\" x2=\"" + num(cx) +
               "\" y2=\"" + num(f.sy(q4)) + "\" stroke=\"" + color(mi) + "\"/>\n";
        out += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(f.sy(q3)) + "\" width=\"" + num(2 * half) +
               "\" height=\"" + num(std::max(f.sy(q1) - f.sy(q3), 1.0)) + "\" fill=\"" + color(mi) +
               "\" fill-opacity=\"0.25\" stroke=\"" + color(mi) + "\"/>\n";
        out += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(f.sy(q2)) + "\" x2=\"" + num(cx + half) +
               "\" y2=\"" + num(f.sy(q2)) + "\" stroke=\"" + color(mi) + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(cx) + "\" y=\"" + num(kHeight - kBottom + 16) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + name + "</text>\n";
    }
    return out + "</svg>\n";
}

}  // namespace mmfbo
