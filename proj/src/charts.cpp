#include "treestrat/charts.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace treestrat::charts {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 40.0;

// Fixed two-decimal coordinates keep the SVG byte-deterministic.
std::string coord(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    if (res.ec != std::errc{}) throw std::runtime_error("svg coordinate formatting failed");
    return std::string(buf, res.ptr);
}

std::string axis_label(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 4);
    if (res.ec != std::errc{}) throw std::runtime_error("svg label formatting failed");
    return std::string(buf, res.ptr);
}

std::string svg_header(const std::string& title) {
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(kWidth) +
           "\" height=\"" + coord(kHeight) + "\" viewBox=\"0 0 " + coord(kWidth) + " " +
           coord(kHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + coord(kWidth / 2) +
           "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           title + "</text>\n";
    return out;
}

struct Scale {
    double lo, hi, px0, px1;
    double operator()(double v) const {
        if (hi == lo) return (px0 + px1) / 2.0;
        return px0 + (v - lo) / (hi - lo) * (px1 - px0);
    }
};

}  // namespace

std::string line_chart_svg(const std::string& title, std::span<const Timestamp> index,
                           const std::vector<LineSeries>& series) {
    if (index.empty() || series.empty())
        throw std::runtime_error("line_chart_svg: empty input");
    for (const auto& s : series)
        if (s.values.size() != index.size())
            throw std::runtime_error("line_chart_svg: series length mismatch");

    double lo = series[0].values[0], hi = lo;
    for (const auto& s : series)
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (lo == hi) {
        lo -= 1.0;
        hi += 1.0;
    }

    Scale x{static_cast<double>(index.front().epoch_sec),
            static_cast<double>(index.back().epoch_sec), kMarginLeft, kWidth - kMarginRight};
    Scale y{lo, hi, kHeight - kMarginBottom, kMarginTop};

    std::string out = svg_header(title);
    // frame and horizontal gridlines with value labels
    out += "<rect x=\"" + coord(kMarginLeft) + "\" y=\"" + coord(kMarginTop) + "\" width=\"" +
           coord(kWidth - kMarginLeft - kMarginRight) + "\" height=\"" +
           coord(kHeight - kMarginTop - kMarginBottom) +
           "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    for (int g = 0; g <= 4; ++g) {
        double v = lo + (hi - lo) * g / 4.0;
        double py = y(v);
        out += "<line x1=\"" + coord(kMarginLeft) + "\" y1=\"" + coord(py) + "\" x2=\"" +
               coord(kWidth - kMarginRight) + "\" y2=\"" + coord(py) +
               "\" stroke=\"#eeeeee\"/>\n";
        out += "<text x=\"" + coord(kMarginLeft - 6) + "\" y=\"" + coord(py + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               axis_label(v) + "</text>\n";
    }
    out += "<text x=\"" + coord(kMarginLeft) + "\" y=\"" + coord(kHeight - 10) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + to_iso(index.front()) +
           "</text>\n";
    out += "<text x=\"" + coord(kWidth - kMarginRight) + "\" y=\"" + coord(kHeight - 10) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           to_iso(index.back()) + "</text>\n";

    double legend_x = kMarginLeft + 10.0;
    for (const auto& s : series) {
        std::string points;
        for (std::size_t i = 0; i < index.size(); ++i) {
            points += coord(x(static_cast<double>(index[i].epoch_sec)));
            points += ',';
            points += coord(y(s.values[i]));
            if (i + 1 < index.size()) points += ' ';
        }
        out += "<polyline fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        out += "<text x=\"" + coord(legend_x) + "\" y=\"" + coord(kMarginTop + 14) +
               "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + s.color + "\">" +
               s.name + "</text>\n";
        legend_x += 180.0;
    }
    out += "</svg>\n";
    return out;
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          std::span<const double> values) {
    if (labels.size() != values.size() || labels.empty())
        throw std::runtime_error("bar_chart_svg: labels and values must align and be non-empty");

    double lo = std::min(0.0, *std::min_element(values.begin(), values.end()));
    double hi = std::max(0.0, *std::max_element(values.begin(), values.end()));
    if (lo == hi) hi = lo + 1.0;
    Scale y{lo, hi, kHeight - kMarginBottom, kMarginTop};

    std::string out = svg_header(title);
    double plot_w = kWidth - kMarginLeft - kMarginRight;
    double slot = plot_w / static_cast<double>(values.size());
    double bar_w = slot * 0.7;
    double zero_y = y(0.0);
    out += "<line x1=\"" + coord(kMarginLeft) + "\" y1=\"" + coord(zero_y) + "\" x2=\"" +
           coord(kWidth - kMarginRight) + "\" y2=\"" + coord(zero_y) +
           "\" stroke=\"#999999\"/>\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        double cx = kMarginLeft + slot * (static_cast<double>(i) + 0.5);
        double vy = y(values[i]);
        double top = std::min(vy, zero_y);
        double h = std::abs(vy - zero_y);
        std::string color = values[i] >= 0.0 ? "#2a7e3f" : "#b33a3a";
        out += "<rect x=\"" + coord(cx - bar_w / 2) + "\" y=\"" + coord(top) + "\" width=\"" +
               coord(bar_w) + "\" height=\"" + coord(h) + "\" fill=\"" + color + "\"/>\n";
        out += "<text x=\"" + coord(cx) + "\" y=\"" + coord(kHeight - 10) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
               labels[i] + "</text>\n";
    }
    for (int g = 0; g <= 4; ++g) {
        double v = lo + (hi - lo) * g / 4.0;
        out += "<text x=\"" + coord(kMarginLeft - 6) + "\" y=\"" + coord(y(v) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               axis_label(v) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::pair<std::vector<std::string>, std::vector<double>> monthly_returns(
    std::span<const Timestamp> index, std::span<const double> returns) {
    if (index.size() != returns.size())
        throw std::runtime_error("monthly_returns: index/returns length mismatch");
    std::vector<std::string> labels;
    std::vector<double> values;
    std::string current;
    for (std::size_t i = 0; i < index.size(); ++i) {
        std::string ym = to_string(local_date(index[i])).substr(0, 7);
        if (ym != current) {
            labels.push_back(ym);
            values.push_back(1.0);
            current = ym;
        }
        values.back() *= 1.0 + returns[i];
    }
    for (double& v : values) v -= 1.0;
    return {std::move(labels), std::move(values)};
}

}  // namespace treestrat::charts
