#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treestrat/time.hpp"

namespace treestrat::charts {

struct LineSeries {
    std::string name;
    std::vector<double> values;
    std::string color;
};

// Static SVG line chart of one or more equal-length series over a shared
// timestamp axis.
std::string line_chart_svg(const std::string& title, std::span<const Timestamp> index,
                           const std::vector<LineSeries>& series);

// Static SVG bar chart (e.g. monthly compounded returns).
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          std::span<const double> values);

// Compounds per-bar returns into one value per local calendar month.
std::pair<std::vector<std::string>, std::vector<double>> monthly_returns(
    std::span<const Timestamp> index, std::span<const double> returns);

}  // namespace treestrat::charts
