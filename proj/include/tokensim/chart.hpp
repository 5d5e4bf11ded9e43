#pragma once

// Minimal SVG line charts for the tracked outcome variables: one polyline
// per scenario, axis ticks on nice round numbers, legend on the right.
// Pure function of the data; rendering never touches the numeric results.

#include "tokensim/csv.hpp"
#include "tokensim/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tokensim {

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

/// Largest 1/2/5 * 10^k step not exceeding the raw interval.
inline double nice_step(double range, int target_ticks) {
    const double raw = range / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (const double m : {5.0, 2.0, 1.0}) {
        if (mag * m <= raw) return mag * m;
    }
    return mag;
}

inline const char* series_color(std::size_t index) {
    static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                               "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return kPalette[index % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

/// Compact amount label for legends: 250000000 -> "250M".
inline std::string amount_label(double v) {
    if (v >= 1e6 && std::fmod(v, 1e6) == 0.0 && v < 1e12) {
        return fmt(v / 1e6, "%.0f") + "M";
    }
    return fmt(v, "%g");
}

}  // namespace detail

/// Renders series as a self-contained SVG document.
inline void render_line_chart(std::span<const ChartSeries> series, std::string_view title,
                              std::string_view x_label, std::string_view y_label,
                              const std::filesystem::path& path) {
    if (series.empty()) throw IoError("render_line_chart: no series");
    for (const ChartSeries& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw IoError("render_line_chart: empty or ragged series: " + s.label);
        }
    }

    constexpr double kWidth = 860.0, kHeight = 480.0;
    constexpr double kLeft = 86.0, kRight = 700.0, kTop = 48.0, kBottom = 426.0;

    double x_min = series[0].x.front(), x_max = x_min;
    double y_min = series[0].y.front(), y_max = y_min;
    for (const ChartSeries& s : series) {
        for (const double v : s.x) {
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }
        for (const double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + (y_min == 0.0 ? 1.0 : std::abs(y_min) * 0.1);
    y_min = std::min(y_min, 0.0);  // anchor token/price axes at zero

    const auto sx = [&](double v) {
        return kLeft + (v - x_min) / (x_max - x_min) * (kRight - kLeft);
    };
    const auto sy = [&](double v) {
        return kBottom - (v - y_min) / (y_max - y_min) * (kBottom - kTop);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(kWidth, "%.0f") +
           "\" height=\"" + detail::fmt(kHeight, "%.0f") + "\" viewBox=\"0 0 " +
           detail::fmt(kWidth, "%.0f") + " " + detail::fmt(kHeight, "%.0f") + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + detail::fmt((kLeft + kRight) / 2) +
           "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">" +
           std::string(title) + "</text>\n";

    // Gridlines and ticks.
    const double x_step = detail::nice_step(x_max - x_min, 6);
    const double y_step = detail::nice_step(y_max - y_min, 5);
    svg += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
    for (double v = std::ceil(x_min / x_step) * x_step; v <= x_max + 1e-9 * x_step; v += x_step) {
        const std::string px = detail::fmt(sx(v));
        svg += "<line x1=\"" + px + "\" y1=\"" + detail::fmt(kTop) + "\" x2=\"" + px + "\" y2=\"" +
               detail::fmt(kBottom) + "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + px + "\" y=\"" + detail::fmt(kBottom + 16) +
               "\" text-anchor=\"middle\">" + detail::fmt(v, "%g") + "</text>\n";
    }
    for (double v = std::ceil(y_min / y_step) * y_step; v <= y_max + 1e-9 * y_step; v += y_step) {
        const std::string py = detail::fmt(sy(v));
        svg += "<line x1=\"" + detail::fmt(kLeft) + "\" y1=\"" + py + "\" x2=\"" +
               detail::fmt(kRight) + "\" y2=\"" + py + "\" stroke=\"#e0e0e0\"/>\n";
        svg += "<text x=\"" + detail::fmt(kLeft - 8) + "\" y=\"" + py +
               "\" text-anchor=\"end\" dominant-baseline=\"middle\">" + detail::fmt(v, "%g") +
               "</text>\n";
    }
    svg += "</g>\n";

    // Axes and labels.
    svg += "<line x1=\"" + detail::fmt(kLeft) + "\" y1=\"" + detail::fmt(kBottom) + "\" x2=\"" +
           detail::fmt(kRight) + "\" y2=\"" + detail::fmt(kBottom) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fmt(kLeft) + "\" y1=\"" + detail::fmt(kTop) + "\" x2=\"" +
           detail::fmt(kLeft) + "\" y2=\"" + detail::fmt(kBottom) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::fmt((kLeft + kRight) / 2) + "\" y=\"" +
           detail::fmt(kBottom + 38) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
           std::string(x_label) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + detail::fmt((kTop + kBottom) / 2) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 20 " +
           detail::fmt((kTop + kBottom) / 2) + ")\">" + std::string(y_label) + "</text>\n";

    // Series.
    for (std::size_t i = 0; i < series.size(); ++i) {
        const ChartSeries& s = series[i];
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += detail::series_color(i);
        svg += "\" stroke-width=\"1.5\" points=\"";
        // Thin dense series: at most ~1200 points are visually distinct.
        const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 1200);
        for (std::size_t j = 0; j < s.x.size(); j += stride) {
            svg += detail::fmt(sx(s.x[j])) + "," + detail::fmt(sy(s.y[j])) + " ";
        }
        if ((s.x.size() - 1) % stride != 0) {
            svg += detail::fmt(sx(s.x.back())) + "," + detail::fmt(sy(s.y.back()));
        }
        svg += "\"/>\n";
    }

    // Legend.
    svg += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double ly = kTop + 10.0 + 20.0 * static_cast<double>(i);
        svg += "<line x1=\"" + detail::fmt(kRight + 16) + "\" y1=\"" + detail::fmt(ly) +
               "\" x2=\"" + detail::fmt(kRight + 40) + "\" y2=\"" + detail::fmt(ly) +
               "\" stroke=\"" + detail::series_color(i) + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + detail::fmt(kRight + 46) + "\" y=\"" + detail::fmt(ly + 4) + "\">" +
               series[i].label + "</text>\n";
    }
    svg += "</g>\n</svg>\n";

    detail::write_file(path, svg);
}

/// Renders one tracked variable across scenario aggregates (mean series),
/// legend labeled by initial pool size.
inline void render_line_chart(std::span<const AggregateResult> aggregates,
                              std::string_view variable, const std::filesystem::path& path) {
    if (aggregates.empty()) throw IoError("render_line_chart: no aggregate results");
    const std::string_view unit = kpi_unit(variable);  // validates the variable name

    std::vector<ChartSeries> series;
    series.reserve(aggregates.size());
    for (const AggregateResult& agg : aggregates) {
        ChartSeries s;
        s.label = agg.initial_pool_xns > 0.0
                      ? "A0 = " + detail::amount_label(agg.initial_pool_xns) + " XNS"
                      : agg.label;
        s.x.reserve(agg.mean.size());
        s.y.reserve(agg.mean.size());
        for (const KpiRecord& rec : agg.mean) {
            s.x.push_back(static_cast<double>(rec.t));
            s.y.push_back(kpi_value(rec, variable));
        }
        series.push_back(std::move(s));
    }

    render_line_chart(series, variable, "day", std::string(variable) + " [" + std::string(unit) + "]",
                      path);
}

}  // namespace tokensim
