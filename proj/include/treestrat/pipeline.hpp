#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "treestrat/cart.hpp"
#include "treestrat/data_pipeline.hpp"
#include "treestrat/features.hpp"
#include "treestrat/kpi.hpp"

namespace treestrat::pipeline {

// Bad configuration or usage (CLI exit code 2), as opposed to data/pipeline
// failures (exit code 1).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    std::string data_dir;
    std::vector<std::string> universe;
    data::SplitRanges split;
    features::FeatureSpec feature_spec;
    cart::TrainConfig train_config;
    kpi::KpiConfig kpi_config;
    std::string out_dir;
    std::size_t jobs = 0;  // 0 = available parallelism
    bool charts = false;
    bool keep_going = false;

    std::string bar_path(const std::string& symbol) const;
    std::string daily_path(const std::string& symbol) const;

    // Structural validation only; missing data files surface as data errors.
    void validate() const;
};

// Ingests one symbol and applies daily adjustment factors when a
// SYMBOL.daily.csv file is present next to the bars.
data::BarSeries load_symbol(const RunConfig& cfg, const std::string& symbol);

// Train data is aligned strictly from train-range bars so that no test-range
// row can influence a training artifact, while test features draw warm-up
// history from the tail of the train range via the full-span panel.
struct PreparedPanels {
    data::AlignedPanel train_panel;  // bars in [train.start, train.end)
    data::AlignedPanel full_panel;   // bars in [train.start, test.end)
};

PreparedPanels prepare_panels(const RunConfig& cfg, const std::vector<data::BarSeries>& bars);

// Per-symbol feature/label bundles shared by run, sweep and the stage
// subcommands.
struct SymbolFeatures {
    features::FeatureMatrix train_features;  // all post-warm-up train rows
    features::FeatureMatrix fit_features;    // train rows that carry a label
    features::LabelVector train_labels;
    features::FeatureMatrix test_features;
    features::LabelVector test_labels;
    std::vector<double> train_close;  // aligned 1:1 with train_features
    std::vector<double> test_close;   // aligned 1:1 with test_features
};

SymbolFeatures build_symbol_features(const PreparedPanels& panels, const std::string& symbol,
                                     const RunConfig& cfg);

kpi::PortfolioReport assemble_portfolio(const std::vector<std::string>& symbols,
                                        const std::vector<backtest::BacktestResult>& results,
                                        const kpi::KpiConfig& cfg);

// Full pipeline: ingest, align, features, per-symbol fit, backtests on both
// slices, model/rule/DOT exports, backtest CSVs, portfolio reports (and
// charts when enabled). Returns per-symbol failure messages; without
// keep_going the first failure throws instead.
std::vector<std::string> run_pipeline(const RunConfig& cfg);

// Refits and re-backtests the test slice per depth and writes
// reports/depth_sweep.csv. Depths must be unique and >= 1.
void sweep_depth(const RunConfig& cfg, const std::vector<int>& depths);

struct TreeExport {
    std::string text;
    std::set<std::string> usage;
};

// format is "rules" or "dot".
TreeExport export_tree(const std::string& model_document_path, const std::string& format);

// Stage subcommands; each consumes the previous stage's artifacts under
// out_dir (ingested/, panels/, features/, models/, backtests/, reports/).
void stage_ingest(const RunConfig& cfg);
void stage_align(const RunConfig& cfg);
void stage_features(const RunConfig& cfg);
void stage_train(const RunConfig& cfg);
void stage_backtest(const RunConfig& cfg);
void stage_report(const RunConfig& cfg);

}  // namespace treestrat::pipeline
