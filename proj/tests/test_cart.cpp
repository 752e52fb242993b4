#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "treestrat/cart.hpp"
#include "treestrat/features.hpp"

#include "oracles.hpp"
#include "testutil.hpp"

using namespace treestrat;
using namespace treestrat::cart;

namespace {

struct Dataset {
    std::vector<double> values;  // row-major
    std::vector<int> labels;
    std::size_t cols;
    DataView view() const { return DataView{values.data(), labels.size(), cols}; }
};

Dataset random_dataset(std::uint32_t seed, std::size_t max_rows, std::size_t cols) {
    testutil::Rng rng(seed);
    std::size_t rows = 5 + static_cast<std::size_t>(rng.integer(0, static_cast<int>(max_rows - 5)));
    Dataset d;
    d.cols = cols;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            // small integer grid makes exact ties common, stressing tie rules
            d.values.push_back(static_cast<double>(rng.integer(0, 9)));
        }
        d.labels.push_back(rng.integer(0, 1));
    }
    return d;
}

std::vector<std::string> names_for(std::size_t cols) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cols; ++i) names.push_back("f" + std::to_string(i));
    return names;
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
    return rows;
}

// structure comparison ignoring thresholds
bool same_shape(const TreeNode& a, const TreeNode& b) {
    if (a.is_leaf() != b.is_leaf()) return false;
    if (a.is_leaf())
        return a.class_counts == b.class_counts && a.prediction == b.prediction;
    return a.feature == b.feature && same_shape(*a.left, *b.left) &&
           same_shape(*a.right, *b.right);
}

int max_leaf_depth(const TreeNode& node) {
    if (node.is_leaf()) return 0;
    return 1 + std::max(max_leaf_depth(*node.left), max_leaf_depth(*node.right));
}

int internal_count(const TreeNode& node) {
    if (node.is_leaf()) return 0;
    return 1 + internal_count(*node.left) + internal_count(*node.right);
}

// Minimal interpreter for the exported rule text, used as an oracle that the
// text faithfully encodes the tree.
struct RuleInterpreter {
    struct Line {
        int indent;
        std::string text;
    };
    std::vector<Line> lines;
    std::vector<std::string> names;
    std::size_t pos = 0;

    explicit RuleInterpreter(const std::string& rules, std::vector<std::string> feature_names)
        : names(std::move(feature_names)) {
        std::istringstream in(rules);
        std::string line;
        while (std::getline(in, line)) {
            int indent = 0;
            while (indent < static_cast<int>(line.size()) && line[indent] == ' ') ++indent;
            lines.push_back({indent / 2, line.substr(indent)});
        }
    }

    int eval(std::span<const double> row) {
        pos = 0;
        return eval_node(row, 0);
    }

    void expect_else(int depth) {
        REQUIRE(pos < lines.size());
        REQUIRE(lines[pos].text == "else:");
        REQUIRE(lines[pos].indent == depth);
        ++pos;
    }

    int eval_node(std::span<const double> row, int depth) {
        REQUIRE(pos < lines.size());
        Line line = lines[pos++];
        REQUIRE(line.indent == depth);
        if (line.text.rfind("leaf: predict ", 0) == 0) return line.text[14] - '0';
        REQUIRE(line.text.rfind("if ", 0) == 0);
        std::size_t le = line.text.find(" <= ");
        REQUIRE(le != std::string::npos);
        std::string feature = line.text.substr(3, le - 3);
        double threshold = std::stod(line.text.substr(le + 4));
        std::size_t f = 0;
        while (f < names.size() && names[f] != feature) ++f;
        REQUIRE(f < names.size());

        if (row[f] <= threshold) {
            int result = eval_node(row, depth + 1);
            expect_else(depth);
            skip_subtree();
            return result;
        }
        skip_subtree();
        expect_else(depth);
        return eval_node(row, depth + 1);
    }

    void skip_subtree() {
        REQUIRE(pos < lines.size());
        Line line = lines[pos++];
        if (line.text.rfind("leaf:", 0) == 0) return;
        skip_subtree();  // left branch
        REQUIRE(pos < lines.size());
        REQUIRE(lines[pos].text == "else:");
        ++pos;
        skip_subtree();  // right branch
    }
};

}  // namespace

TEST_CASE("gini impurity") {
    CHECK(gini(10, 0) == 0.0);
    CHECK(gini(0, 10) == 0.0);
    CHECK(gini(5, 5) == 0.5);
    CHECK(gini(3, 1) == 0.375);
    CHECK_THROWS(gini(0, 0));
}

TEST_CASE("best_split on the canonical four-point dataset") {
    Dataset d{{1.0, 2.0, 3.0, 4.0}, {0, 0, 1, 1}, 1};
    auto rows = all_rows(4);
    auto split = best_split(d.view(), d.labels, rows, TrainConfig{});
    REQUIRE(split.has_value());
    CHECK(split->feature == 0);
    CHECK(split->threshold == 2.5);
    CHECK(split->gain == 0.5);
}

TEST_CASE("xor admits no positive-gain split") {
    Dataset d{{0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0}, {0, 1, 1, 0}, 2};
    auto rows = all_rows(4);
    CHECK(!best_split(d.view(), d.labels, rows, TrainConfig{}).has_value());
}

TEST_CASE("best_split matches exhaustive enumeration on 50 random datasets") {
    for (std::uint32_t seed = 1000; seed < 1050; ++seed) {
        Dataset d = random_dataset(seed, 100, 3);
        auto rows = all_rows(d.labels.size());
        auto got = best_split(d.view(), d.labels, rows, TrainConfig{});
        auto want = oracles::exhaustive_best_split(d.view(), d.labels, rows, 0.0);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            CHECK(got->feature == want->feature);
            CHECK(got->threshold == want->threshold);
            CHECK(got->gain == want->gain);
            CHECK(got->gain > 0.0);
        }
    }
}

TEST_CASE("fit basics") {
    SUBCASE("pure input yields a single leaf") {
        Dataset d{{1.0, 2.0, 3.0}, {1, 1, 1}, 1};
        auto model = fit(d.view(), d.labels, TrainConfig{}, names_for(1));
        CHECK(model.root->is_leaf());
        CHECK(model.root->prediction == 1);
        CHECK(model.root->class_counts == std::array<std::int64_t, 2>{0, 3});
    }
    SUBCASE("depth-1 fit of the canonical dataset") {
        Dataset d{{1.0, 2.0, 3.0, 4.0}, {0, 0, 1, 1}, 1};
        TrainConfig cfg;
        cfg.max_depth = 1;
        auto model = fit(d.view(), d.labels, cfg, names_for(1));
        REQUIRE(!model.root->is_leaf());
        CHECK(model.root->threshold == 2.5);
        CHECK(model.root->left->is_leaf());
        CHECK(model.root->left->prediction == 0);
        CHECK(model.root->right->prediction == 1);
    }
    SUBCASE("leaf ties predict 0") {
        Dataset d{{1.0, 1.0}, {1, 0}, 1};
        auto model = fit(d.view(), d.labels, TrainConfig{}, names_for(1));
        CHECK(model.root->is_leaf());
        CHECK(model.root->prediction == 0);
    }
    SUBCASE("input validation") {
        Dataset d{{1.0}, {1}, 1};
        CHECK_THROWS(fit(DataView{nullptr, 0, 1}, {}, TrainConfig{}, names_for(1)));
        std::vector<int> bad_labels = {2};
        CHECK_THROWS(fit(d.view(), bad_labels, TrainConfig{}, names_for(1)));
        CHECK_THROWS(fit(d.view(), d.labels, TrainConfig{}, names_for(2)));
    }
}

TEST_CASE("fit is byte-identical to the exhaustive greedy oracle") {
    for (std::uint32_t seed = 2000; seed < 2050; ++seed) {
        Dataset d = random_dataset(seed, 100, 3);
        TrainConfig cfg;
        cfg.max_depth = 1 + static_cast<int>(seed % 2);
        auto names = names_for(3);
        auto got = fit(d.view(), d.labels, cfg, names);
        auto want = oracles::exhaustive_fit(d.view(), d.labels, cfg, names);
        CHECK(serialize(got) == serialize(want));
    }
}

TEST_CASE("training rows reproduce their own labels when fully separable") {
    testutil::Rng rng(3141);
    Dataset d;
    d.cols = 2;
    for (int r = 0; r < 60; ++r) {
        double x = rng.integer(0, 20);
        double y = rng.integer(0, 20);
        d.values.push_back(x);
        d.values.push_back(y);
        d.labels.push_back(x + y > 20.0 ? 1 : 0);  // separability via deep tree
    }
    TrainConfig cfg;
    cfg.max_depth = 12;
    auto model = fit(d.view(), d.labels, cfg, names_for(2));
    for (std::size_t r = 0; r < d.labels.size(); ++r) {
        std::array<double, 2> row{d.values[2 * r], d.values[2 * r + 1]};
        CHECK(predict(model, row) == d.labels[r]);
    }
}

TEST_CASE("predict validates input") {
    Dataset d{{1.0, 2.0}, {0, 1}, 1};
    auto model = fit(d.view(), d.labels, TrainConfig{}, names_for(1));
    std::array<double, 1> nan_row{std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS(predict(model, nan_row));
    std::array<double, 2> wide_row{1.0, 2.0};
    CHECK_THROWS(predict(model, wide_row));
}

TEST_CASE("feature usage") {
    Dataset pure{{1.0, 2.0}, {1, 1}, 1};
    auto leaf_model = fit(pure.view(), pure.labels, TrainConfig{}, names_for(1));
    CHECK(feature_usage(leaf_model).empty());

    Dataset d{{1.0, 2.0, 3.0, 4.0}, {0, 0, 1, 1}, 1};
    TrainConfig cfg;
    cfg.max_depth = 1;
    auto depth1 = fit(d.view(), d.labels, cfg, names_for(1));
    CHECK(feature_usage(depth1) == std::set<std::string>{"f0"});

    for (std::uint32_t seed = 3000; seed < 3010; ++seed) {
        Dataset r = random_dataset(seed, 120, 9);
        TrainConfig deep;
        deep.max_depth = 4;
        auto model = fit(r.view(), r.labels, deep, names_for(9));
        auto usage = feature_usage(model);
        CHECK(usage.size() <= 9);
        CHECK(static_cast<int>(usage.size()) <= internal_count(*model.root));
        CHECK(internal_count(*model.root) <= (1 << 4) - 1);
    }
}

TEST_CASE("model document round trip") {
    Dataset d = random_dataset(4242, 200, 9);
    TrainConfig cfg;
    cfg.max_depth = 4;
    auto names = features::feature_name_list();
    auto model = fit(d.view(), d.labels, cfg, names,
                     TimeRange{make_timestamp(2022, 1, 1, 0, 0, 0, 330),
                               make_timestamp(2023, 1, 1, 0, 0, 0, 330)});
    std::string doc = serialize(model);
    DecisionTreeModel loaded = deserialize(doc);
    CHECK(serialize(loaded) == doc);

    testutil::Rng rng(909);
    for (int i = 0; i < 1000; ++i) {
        std::array<double, 9> row;
        for (double& v : row) v = rng.uniform(-1.0, 11.0);
        CHECK(predict(loaded, row) == predict(model, row));
    }
}

TEST_CASE("model document validation") {
    std::string nine =
        R"(["ret_1","ret_15","rsi_14","adx_14","sma_close_ratio","sma_close_corr","vol_14","vol_210","vwap_close_ratio"])";
    std::string base_cfg =
        R"({"max_depth":4,"min_gain":0.0,"min_samples_split":2})";
    std::string range = R"({"start":"2022-01-01T00:00:00+05:30","end":"2023-01-01T00:00:00+05:30"})";

    auto doc = [&](const std::string& feature_names, const std::string& tree) {
        return std::string(R"({"config":)") + base_cfg + R"(,"feature_names":)" + feature_names +
               R"(,"train_range":)" + range + R"(,"tree":)" + tree + "}";
    };

    SUBCASE("hand-written depth-1 document routes per threshold") {
        std::string tree =
            R"({"feature":"rsi_14","threshold":50.0,"left":{"counts":[3,1],"prediction":0},"right":{"counts":[1,7],"prediction":1}})";
        DecisionTreeModel model = deserialize(doc(nine, tree));
        std::array<double, 9> row{};
        row.fill(1.0);
        row[2] = 49.0;
        CHECK(predict(model, row) == 0);
        row[2] = 50.0;  // boundary goes left
        CHECK(predict(model, row) == 0);
        row[2] = 50.5;
        CHECK(predict(model, row) == 1);
    }
    SUBCASE("ten feature names rejected") {
        std::string ten = nine;
        ten.insert(ten.size() - 1, ",\"extra\"");
        CHECK_THROWS(deserialize(doc(ten, R"({"counts":[1,0],"prediction":0})")));
    }
    SUBCASE("unknown feature name rejected") {
        std::string tree =
            R"({"feature":"mystery","threshold":1.0,"left":{"counts":[1,0],"prediction":0},"right":{"counts":[0,1],"prediction":1}})";
        CHECK_THROWS(deserialize(doc(nine, tree)));
    }
    SUBCASE("depth exceeding config rejected") {
        std::string leaf = R"({"counts":[1,0],"prediction":0})";
        std::string tree = leaf;
        for (int depth = 0; depth < 5; ++depth)
            tree = R"({"feature":"ret_1","threshold":0.0,"left":)" + tree + R"(,"right":)" +
                   leaf + "}";
        CHECK_THROWS(deserialize(doc(nine, tree)));
    }
    SUBCASE("prediction must match counts majority with ties to 0") {
        CHECK_THROWS(deserialize(doc(nine, R"({"counts":[1,5],"prediction":0})")));
        CHECK_THROWS(deserialize(doc(nine, R"({"counts":[2,2],"prediction":1})")));
        CHECK_NOTHROW(deserialize(doc(nine, R"({"counts":[2,2],"prediction":0})")));
        CHECK_THROWS(deserialize(doc(nine, R"({"counts":[0,0],"prediction":0})")));
    }
    SUBCASE("malformed json rejected") {
        CHECK_THROWS(deserialize("not json"));
        CHECK_THROWS(deserialize("{}"));
    }
}

TEST_CASE("rule text reproduces predictions through a text interpreter") {
    Dataset d = random_dataset(515, 150, 9);
    TrainConfig cfg;
    cfg.max_depth = 4;
    auto names = names_for(9);
    auto model = fit(d.view(), d.labels, cfg, names);
    RuleInterpreter interp(export_rules(model), names);

    testutil::Rng rng(616);
    for (int i = 0; i < 100; ++i) {
        std::array<double, 9> row;
        for (double& v : row) v = rng.uniform(-2.0, 12.0);
        CHECK(interp.eval(row) == predict(model, row));
    }
}

TEST_CASE("rule text shape for tiny trees") {
    Dataset pure{{1.0, 2.0}, {1, 1}, 1};
    auto leaf_model = fit(pure.view(), pure.labels, TrainConfig{}, names_for(1));
    CHECK(export_rules(leaf_model) == "leaf: predict 1 (counts 0=0, 1=2)\n");

    Dataset d{{1.0, 2.0, 3.0, 4.0}, {0, 0, 1, 1}, 1};
    TrainConfig cfg;
    cfg.max_depth = 1;
    auto depth1 = fit(d.view(), d.labels, cfg, names_for(1));
    std::string rules = export_rules(depth1);
    CHECK(std::count(rules.begin(), rules.end(), '\n') == 4);  // if / leaf / else: / leaf
    CHECK(rules.find("if f0 <= 2.5:\n") == 0);
}

TEST_CASE("dot export shape") {
    Dataset d{{1.0, 2.0, 3.0, 4.0}, {0, 0, 1, 1}, 1};
    TrainConfig cfg;
    cfg.max_depth = 1;
    auto model = fit(d.view(), d.labels, cfg, names_for(1));
    std::string dot = export_dot(model);
    CHECK(dot.rfind("digraph decision_tree {\n", 0) == 0);
    CHECK(dot.find("n0 [label=\"f0 <= 2.5\"]") != std::string::npos);
    CHECK(dot.find("n0 -> n1 [label=\"<=\"]") != std::string::npos);
    CHECK(dot.find("n0 -> n2 [label=\">\"]") != std::string::npos);
    CHECK(dot.back() == '\n');
}

TEST_CASE("monotone transforms keep structure and predictions") {
    for (std::uint32_t seed = 5000; seed < 5010; ++seed) {
        Dataset d = random_dataset(seed, 80, 3);
        TrainConfig cfg;
        cfg.max_depth = 3;
        auto names = names_for(3);
        auto base = fit(d.view(), d.labels, cfg, names);

        // strictly increasing transform on one column
        Dataset t = d;
        std::size_t target = seed % 3;
        for (std::size_t r = 0; r < t.labels.size(); ++r) {
            double& v = t.values[r * 3 + target];
            v = v * v * v + 2.0 * v;
        }
        auto transformed = fit(t.view(), t.labels, cfg, names);
        CHECK(same_shape(*base.root, *transformed.root));
        for (std::size_t r = 0; r < d.labels.size(); ++r) {
            std::span<const double> row_base(d.values.data() + r * 3, 3);
            std::span<const double> row_t(t.values.data() + r * 3, 3);
            CHECK(predict(base, row_base) == predict(transformed, row_t));
        }
    }
}

TEST_CASE("fit is deterministic and depth-bounded") {
    for (std::uint32_t seed = 6000; seed < 6010; ++seed) {
        Dataset d = random_dataset(seed, 150, 5);
        TrainConfig cfg;
        cfg.max_depth = 4;
        auto names = names_for(5);
        auto a = fit(d.view(), d.labels, cfg, names);
        auto b = fit(d.view(), d.labels, cfg, names);
        CHECK(serialize(a) == serialize(b));
        CHECK(max_leaf_depth(*a.root) <= cfg.max_depth);
        CHECK(internal_count(*a.root) <= (1 << cfg.max_depth) - 1);
    }
}

TEST_CASE("min_gain gates weak splits") {
    Dataset d{{1.0, 2.0, 3.0, 4.0}, {0, 1, 0, 1}, 1};
    TrainConfig strict;
    strict.min_gain = 0.4;
    auto model = fit(d.view(), d.labels, strict, names_for(1));
    CHECK(model.root->is_leaf());
}
