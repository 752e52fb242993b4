#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treestrat/time.hpp"

namespace treestrat::cart {

struct TrainConfig {
    int max_depth = 4;
    std::size_t min_samples_split = 2;
    double min_gain = 0.0;  // a split is kept only when gain > min_gain
};

// Row-major view over a feature matrix; rows x cols doubles.
struct DataView {
    const double* data{nullptr};
    std::size_t rows{0};
    std::size_t cols{0};

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Internal nodes carry {feature, threshold, left, right}; rows with
// value <= threshold go left. Leaves carry class counts and the majority
// prediction (ties predict 0).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
    std::array<std::int64_t, 2> class_counts{0, 0};
    int prediction = 0;

    bool is_leaf() const { return left == nullptr; }
};

struct DecisionTreeModel {
    std::unique_ptr<TreeNode> root;
    std::vector<std::string> feature_names;
    TrainConfig config;
    TimeRange train_range;
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// 1 - p0^2 - p1^2 over the class proportions. Throws on an empty node.
double gini(std::int64_t count0, std::int64_t count1);

// Maximum-gain candidate over midpoints of consecutive distinct sorted values
// per feature, requiring gain > min_gain. Ties resolve to the lowest feature
// index, then the lowest threshold. Empty optional when no candidate passes.
std::optional<Split> best_split(const DataView& X, std::span<const int> y,
                                std::span<const std::uint32_t> row_ids,
                                const TrainConfig& config);

DecisionTreeModel fit(const DataView& X, std::span<const int> y, const TrainConfig& config,
                      std::vector<std::string> feature_names, const TimeRange& train_range = {});

int predict(const DecisionTreeModel& model, std::span<const double> row);

std::set<std::string> feature_usage(const DecisionTreeModel& model);

// Indented if/else rules with shortest round-trip thresholds and leaf counts.
std::string export_rules(const DecisionTreeModel& model);

// Graphviz DOT, one node per line, edges labeled "<=" / ">".
std::string export_dot(const DecisionTreeModel& model);

// Lossless JSON document (sorted keys, shortest round-trip numbers).
std::string serialize(const DecisionTreeModel& model);
DecisionTreeModel deserialize(const std::string& document);

}  // namespace treestrat::cart
