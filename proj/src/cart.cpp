#include "treestrat/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "treestrat/csv.hpp"

namespace treestrat::cart {

namespace {

using json = nlohmann::json;

std::array<std::int64_t, 2> count_classes(std::span<const int> y,
                                          std::span<const std::uint32_t> row_ids) {
    std::array<std::int64_t, 2> counts{0, 0};
    for (std::uint32_t id : row_ids) ++counts[static_cast<std::size_t>(y[id])];
    return counts;
}

std::unique_ptr<TreeNode> make_leaf(const std::array<std::int64_t, 2>& counts) {
    auto node = std::make_unique<TreeNode>();
    node->class_counts = counts;
    node->prediction = counts[1] > counts[0] ? 1 : 0;
    return node;
}

std::unique_ptr<TreeNode> build_node(const DataView& X, std::span<const int> y,
                                     std::vector<std::uint32_t>& row_ids, int depth,
                                     const TrainConfig& config) {
    auto counts = count_classes(y, row_ids);
    bool pure = counts[0] == 0 || counts[1] == 0;
    if (pure || depth == config.max_depth || row_ids.size() < config.min_samples_split)
        return make_leaf(counts);

    std::optional<Split> split = best_split(X, y, row_ids, config);
    if (!split) return make_leaf(counts);

    auto mid = std::partition(row_ids.begin(), row_ids.end(), [&](std::uint32_t id) {
        return X.at(id, split->feature) <= split->threshold;
    });
    std::vector<std::uint32_t> left_ids(row_ids.begin(), mid);
    std::vector<std::uint32_t> right_ids(mid, row_ids.end());

    auto node = std::make_unique<TreeNode>();
    node->feature = static_cast<int>(split->feature);
    node->threshold = split->threshold;
    node->left = build_node(X, y, left_ids, depth + 1, config);
    node->right = build_node(X, y, right_ids, depth + 1, config);
    return node;
}

int tree_depth(const TreeNode& node) {
    if (node.is_leaf()) return 0;
    return 1 + std::max(tree_depth(*node.left), tree_depth(*node.right));
}

void collect_rules(const TreeNode& node, const std::vector<std::string>& names, int depth,
                   std::string& out) {
    std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    if (node.is_leaf()) {
        out += indent + "leaf: predict " + std::to_string(node.prediction) + " (counts 0=" +
               std::to_string(node.class_counts[0]) + ", 1=" +
               std::to_string(node.class_counts[1]) + ")\n";
        return;
    }
    out += indent + "if " + names[static_cast<std::size_t>(node.feature)] + " <= " +
           csv::format_double(node.threshold) + ":\n";
    collect_rules(*node.left, names, depth + 1, out);
    out += indent + "else:\n";
    collect_rules(*node.right, names, depth + 1, out);
}

int collect_dot(const TreeNode& node, const std::vector<std::string>& names, int& next_id,
                std::string& out) {
    int id = next_id++;
    std::string name = "n" + std::to_string(id);
    if (node.is_leaf()) {
        out += "  " + name + " [label=\"predict " + std::to_string(node.prediction) +
               "\\ncounts [" + std::to_string(node.class_counts[0]) + ", " +
               std::to_string(node.class_counts[1]) + "]\", shape=box];\n";
        return id;
    }
    out += "  " + name + " [label=\"" + names[static_cast<std::size_t>(node.feature)] +
           " <= " + csv::format_double(node.threshold) + "\"];\n";
    int left_id = collect_dot(*node.left, names, next_id, out);
    out += "  " + name + " -> n" + std::to_string(left_id) + " [label=\"<=\"];\n";
    int right_id = collect_dot(*node.right, names, next_id, out);
    out += "  " + name + " -> n" + std::to_string(right_id) + " [label=\">\"];\n";
    return id;
}

json node_to_json(const TreeNode& node, const std::vector<std::string>& names) {
    json j;
    if (node.is_leaf()) {
        j["counts"] = {node.class_counts[0], node.class_counts[1]};
        j["prediction"] = node.prediction;
    } else {
        j["feature"] = names[static_cast<std::size_t>(node.feature)];
        j["threshold"] = node.threshold;
        j["left"] = node_to_json(*node.left, names);
        j["right"] = node_to_json(*node.right, names);
    }
    return j;
}

std::unique_ptr<TreeNode> node_from_json(const json& j,
                                         const std::vector<std::string>& names) {
    if (!j.is_object()) throw std::runtime_error("model document: node must be an object");
    auto node = std::make_unique<TreeNode>();
    if (j.contains("feature")) {
        for (const char* key : {"feature", "threshold", "left", "right"})
            if (!j.contains(key))
                throw std::runtime_error(std::string("model document: internal node missing ") +
                                         key);
        if (j.size() != 4)
            throw std::runtime_error("model document: internal node has extra keys");
        if (!j["feature"].is_string() || !j["threshold"].is_number())
            throw std::runtime_error("model document: bad internal node field types");
        std::string feature = j["feature"].get<std::string>();
        auto it = std::find(names.begin(), names.end(), feature);
        if (it == names.end())
            throw std::runtime_error("model document: unknown feature name '" + feature + "'");
        node->feature = static_cast<int>(it - names.begin());
        node->threshold = j["threshold"].get<double>();
        if (!std::isfinite(node->threshold))
            throw std::runtime_error("model document: non-finite threshold");
        node->left = node_from_json(j["left"], names);
        node->right = node_from_json(j["right"], names);
        return node;
    }
    for (const char* key : {"counts", "prediction"})
        if (!j.contains(key))
            throw std::runtime_error(std::string("model document: leaf missing ") + key);
    if (j.size() != 2) throw std::runtime_error("model document: leaf has extra keys");
    if (!j["counts"].is_array() || j["counts"].size() != 2 ||
        !j["counts"][0].is_number_integer() || !j["counts"][1].is_number_integer())
        throw std::runtime_error("model document: leaf counts must be two integers");
    node->class_counts = {j["counts"][0].get<std::int64_t>(),
                          j["counts"][1].get<std::int64_t>()};
    if (node->class_counts[0] < 0 || node->class_counts[1] < 0 ||
        node->class_counts[0] + node->class_counts[1] == 0)
        throw std::runtime_error("model document: leaf counts must be non-negative and non-empty");
    if (!j["prediction"].is_number_integer())
        throw std::runtime_error("model document: leaf prediction must be an integer");
    node->prediction = j["prediction"].get<int>();
    if (node->prediction != 0 && node->prediction != 1)
        throw std::runtime_error("model document: leaf prediction must be 0 or 1");
    int majority = node->class_counts[1] > node->class_counts[0] ? 1 : 0;
    if (node->prediction != majority)
        throw std::runtime_error("model document: leaf prediction disagrees with counts");
    return node;
}

}  // namespace

double gini(std::int64_t count0, std::int64_t count1) {
    if (count0 < 0 || count1 < 0) throw std::runtime_error("gini: negative class count");
    std::int64_t total = count0 + count1;
    if (total == 0) throw std::runtime_error("gini: empty node");
    double n = static_cast<double>(total);
    double p0 = static_cast<double>(count0) / n;
    double p1 = static_cast<double>(count1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

std::optional<Split> best_split(const DataView& X, std::span<const int> y,
                                std::span<const std::uint32_t> row_ids,
                                const TrainConfig& config) {
    const std::size_t n = row_ids.size();
    if (n < 2) return std::nullopt;
    auto parent = count_classes(y, row_ids);
    const double parent_gini = gini(parent[0], parent[1]);
    const double n_d = static_cast<double>(n);

    std::optional<Split> best;
    std::vector<std::pair<double, int>> ordered(n);
    for (std::size_t f = 0; f < X.cols; ++f) {
        for (std::size_t i = 0; i < n; ++i)
            ordered[i] = {X.at(row_ids[i], f), y[row_ids[i]]};
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::int64_t left0 = 0, left1 = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            ++(ordered[i].second == 0 ? left0 : left1);
            if (ordered[i + 1].first <= ordered[i].first) continue;
            double threshold = (ordered[i].first + ordered[i + 1].first) / 2.0;
            // adjacent doubles can collapse the midpoint onto the right value
            if (!(threshold < ordered[i + 1].first)) continue;
            std::int64_t right0 = parent[0] - left0;
            std::int64_t right1 = parent[1] - left1;
            double n_left = static_cast<double>(left0 + left1);
            double n_right = static_cast<double>(right0 + right1);
            double gain = parent_gini - (n_left / n_d) * gini(left0, left1) -
                          (n_right / n_d) * gini(right0, right1);
            // Strict > keeps the first candidate on exact ties; features and
            // thresholds are visited in increasing order.
            if (gain > config.min_gain && (!best || gain > best->gain))
                best = Split{f, threshold, gain};
        }
    }
    return best;
}

DecisionTreeModel fit(const DataView& X, std::span<const int> y, const TrainConfig& config,
                      std::vector<std::string> feature_names, const TimeRange& train_range) {
    if (X.rows == 0) throw std::runtime_error("fit: empty training set");
    if (X.rows != y.size()) throw std::runtime_error("fit: row/label length mismatch");
    if (X.cols != feature_names.size())
        throw std::runtime_error("fit: feature name count does not match columns");
    if (config.max_depth < 1) throw std::runtime_error("fit: max_depth must be >= 1");
    if (config.min_gain < 0.0) throw std::runtime_error("fit: min_gain must be >= 0");
    for (int label : y)
        if (label != 0 && label != 1) throw std::runtime_error("fit: labels must be 0 or 1");
    for (std::size_t i = 0; i < X.rows * X.cols; ++i)
        if (!std::isfinite(X.data[i]))
            throw std::runtime_error("fit: non-finite feature value");

    std::vector<std::uint32_t> row_ids(X.rows);
    std::iota(row_ids.begin(), row_ids.end(), 0);
    DecisionTreeModel model;
    model.root = build_node(X, y, row_ids, 0, config);
    model.feature_names = std::move(feature_names);
    model.config = config;
    model.train_range = train_range;
    return model;
}

int predict(const DecisionTreeModel& model, std::span<const double> row) {
    if (row.size() != model.feature_names.size())
        throw std::runtime_error("predict: row width does not match model");
    for (double v : row)
        if (!std::isfinite(v)) throw std::runtime_error("predict: non-finite feature value");
    const TreeNode* node = model.root.get();
    while (!node->is_leaf())
        node = row[static_cast<std::size_t>(node->feature)] <= node->threshold
                   ? node->left.get()
                   : node->right.get();
    return node->prediction;
}

std::set<std::string> feature_usage(const DecisionTreeModel& model) {
    std::set<std::string> used;
    auto walk = [&](auto&& self, const TreeNode& node) -> void {
        if (node.is_leaf()) return;
        used.insert(model.feature_names[static_cast<std::size_t>(node.feature)]);
        self(self, *node.left);
        self(self, *node.right);
    };
    walk(walk, *model.root);
    return used;
}

std::string export_rules(const DecisionTreeModel& model) {
    std::string out;
    collect_rules(*model.root, model.feature_names, 0, out);
    return out;
}

std::string export_dot(const DecisionTreeModel& model) {
    std::string out = "digraph decision_tree {\n";
    int next_id = 0;
    collect_dot(*model.root, model.feature_names, next_id, out);
    out += "}\n";
    return out;
}

std::string serialize(const DecisionTreeModel& model) {
    json doc;
    doc["config"] = {{"max_depth", model.config.max_depth},
                     {"min_samples_split", model.config.min_samples_split},
                     {"min_gain", model.config.min_gain}};
    doc["feature_names"] = model.feature_names;
    doc["train_range"] = {{"start", to_iso(model.train_range.start)},
                          {"end", to_iso(model.train_range.end)}};
    doc["tree"] = node_to_json(*model.root, model.feature_names);
    return doc.dump(2) + "\n";
}

DecisionTreeModel deserialize(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model document: invalid JSON: ") + e.what());
    }
    for (const char* key : {"config", "feature_names", "train_range", "tree"})
        if (!doc.contains(key))
            throw std::runtime_error(std::string("model document: missing ") + key);

    DecisionTreeModel model;
    const json& cfg = doc["config"];
    if (!cfg.is_object() || !cfg.contains("max_depth") || !cfg.contains("min_samples_split") ||
        !cfg.contains("min_gain"))
        throw std::runtime_error("model document: malformed config");
    model.config.max_depth = cfg["max_depth"].get<int>();
    model.config.min_samples_split = cfg["min_samples_split"].get<std::size_t>();
    model.config.min_gain = cfg["min_gain"].get<double>();
    if (model.config.max_depth < 1)
        throw std::runtime_error("model document: max_depth must be >= 1");

    if (!doc["feature_names"].is_array())
        throw std::runtime_error("model document: feature_names must be an array");
    for (const json& name : doc["feature_names"]) {
        if (!name.is_string())
            throw std::runtime_error("model document: feature names must be strings");
        model.feature_names.push_back(name.get<std::string>());
    }
    if (model.feature_names.size() != 9)
        throw std::runtime_error("model document: expected exactly 9 feature names, got " +
                                 std::to_string(model.feature_names.size()));

    const json& range = doc["train_range"];
    if (!range.is_object() || !range.contains("start") || !range.contains("end"))
        throw std::runtime_error("model document: malformed train_range");
    model.train_range.start = parse_iso(range["start"].get<std::string>());
    model.train_range.end = parse_iso(range["end"].get<std::string>());

    model.root = node_from_json(doc["tree"], model.feature_names);
    if (tree_depth(*model.root) > model.config.max_depth)
        throw std::runtime_error("model document: tree depth exceeds config max_depth");
    return model;
}

}  // namespace treestrat::cart
