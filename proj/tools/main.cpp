#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treestrat/csv.hpp"
#include "treestrat/pipeline.hpp"
#include "treestrat/time.hpp"

namespace {

using treestrat::pipeline::ConfigError;
using treestrat::pipeline::RunConfig;

struct RawOptions {
    std::string data_dir;
    std::string out_dir = "out";
    std::vector<std::string> universe;
    std::string train_start = "2022-01-01T00:00:00+05:30";
    std::string train_end = "2023-01-01T00:00:00+05:30";
    std::string test_start = "2023-01-01T00:00:00+05:30";
    std::string test_end = "2024-01-01T00:00:00+05:30";
    std::size_t return_lag_short = 1;
    std::size_t return_lag_medium = 15;
    std::size_t rsi_period = 14;
    std::size_t adx_period = 14;
    std::size_t sma_period = 14;
    std::size_t corr_period = 14;
    std::size_t vol_period = 14;
    std::size_t vwap_period = 14;
    int max_depth = 4;
    std::size_t min_samples_split = 2;
    double min_gain = 0.0;
    double periods_per_year = 94500.0;
    double risk_free = 0.072;
    std::size_t jobs = 0;
    bool charts = false;
    bool keep_going = false;
};

RunConfig to_run_config(const RawOptions& raw) {
    RunConfig cfg;
    cfg.data_dir = raw.data_dir;
    cfg.out_dir = raw.out_dir;
    cfg.universe = raw.universe;
    try {
        cfg.split.train = {treestrat::parse_iso(raw.train_start),
                           treestrat::parse_iso(raw.train_end)};
        cfg.split.test = {treestrat::parse_iso(raw.test_start),
                          treestrat::parse_iso(raw.test_end)};
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.feature_spec.return_lag_short = raw.return_lag_short;
    cfg.feature_spec.return_lag_medium = raw.return_lag_medium;
    cfg.feature_spec.rsi_period = raw.rsi_period;
    cfg.feature_spec.adx_period = raw.adx_period;
    cfg.feature_spec.sma_period = raw.sma_period;
    cfg.feature_spec.corr_period = raw.corr_period;
    cfg.feature_spec.vol_period = raw.vol_period;
    cfg.feature_spec.vwap_period = raw.vwap_period;
    cfg.train_config.max_depth = raw.max_depth;
    cfg.train_config.min_samples_split = raw.min_samples_split;
    cfg.train_config.min_gain = raw.min_gain;
    cfg.kpi_config.periods_per_year = raw.periods_per_year;
    cfg.kpi_config.risk_free_annual = raw.risk_free;
    cfg.jobs = raw.jobs;
    cfg.charts = raw.charts;
    cfg.keep_going = raw.keep_going;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treestrat: per-stock decision-tree trading rules on minute bars"};
    app.require_subcommand(1);

    RawOptions raw;
    app.set_config("--config", "", "Flat key=value config file; flags override it");
    app.add_option("--data", raw.data_dir, "Directory with SYMBOL.csv bar files");
    app.add_option("--out", raw.out_dir, "Output directory for artifacts");
    app.add_option("--universe", raw.universe, "Symbols to process")->delimiter(',');
    app.add_option("--train-start", raw.train_start, "Train range start (ISO-8601, inclusive)");
    app.add_option("--train-end", raw.train_end, "Train range end (exclusive)");
    app.add_option("--test-start", raw.test_start, "Test range start (inclusive)");
    app.add_option("--test-end", raw.test_end, "Test range end (exclusive)");
    app.add_option("--return-lag-short", raw.return_lag_short, "Short return lag in bars");
    app.add_option("--return-lag-medium", raw.return_lag_medium, "Medium return lag in bars");
    app.add_option("--rsi-period", raw.rsi_period, "RSI period");
    app.add_option("--adx-period", raw.adx_period, "ADX period");
    app.add_option("--sma-period", raw.sma_period, "SMA period");
    app.add_option("--corr-period", raw.corr_period, "SMA/close correlation period");
    app.add_option("--vol-period", raw.vol_period, "Rolling volatility period");
    app.add_option("--vwap-period", raw.vwap_period, "VWAP period");
    app.add_option("--max-depth", raw.max_depth, "Tree depth limit");
    app.add_option("--min-samples-split", raw.min_samples_split, "Minimum rows to split a node");
    app.add_option("--min-gain", raw.min_gain, "Minimum impurity decrease for a split");
    app.add_option("--periods-per-year", raw.periods_per_year, "Bars per year for annualizing");
    app.add_option("--risk-free", raw.risk_free, "Annual risk-free rate");
    app.add_option("--jobs", raw.jobs, "Worker threads (0 = auto)");
    app.add_flag("--charts", raw.charts, "Also emit SVG equity and monthly-return charts");
    app.add_flag("--keep-going", raw.keep_going,
                 "Skip failing symbols in `run` instead of aborting");

    app.add_subcommand("ingest", "Validate and adjust raw bars into out/ingested");
    app.add_subcommand("align", "Union-align ingested bars into out/panels");
    app.add_subcommand("features", "Compute feature/label CSVs into out/features");
    app.add_subcommand("train", "Fit per-symbol trees into out/models");
    app.add_subcommand("backtest", "Backtest models into out/backtests");
    app.add_subcommand("report", "Build portfolio reports into out/reports");
    app.add_subcommand("run", "Full pipeline: ingest through reports");

    auto* sweep = app.add_subcommand("sweep-depth", "Refit/backtest per tree depth");
    std::vector<int> depths = {3, 4, 5, 6};
    sweep->add_option("--depths", depths, "Depths to sweep")->delimiter(',');

    auto* export_cmd = app.add_subcommand("export-tree", "Export a model document");
    std::string model_path, export_format = "rules", export_out;
    export_cmd->add_option("model", model_path, "Path to a model JSON document")->required();
    export_cmd->add_option("--format", export_format, "rules or dot");
    export_cmd->add_option("--out-file", export_out, "Write the export here (default: stdout)");

    // Global options may follow the subcommand name.
    for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        using namespace treestrat::pipeline;
        if (export_cmd->parsed()) {
            TreeExport result = export_tree(model_path, export_format);
            if (export_out.empty()) {
                std::fputs(result.text.c_str(), stdout);
            } else {
                treestrat::csv::write_file(export_out, result.text);
            }
            std::string usage = "features used:";
            for (const std::string& name : result.usage) usage += " " + name;
            std::fprintf(stdout, "%s\n", usage.c_str());
            return 0;
        }

        RunConfig cfg = to_run_config(raw);
        if (app.got_subcommand("ingest")) {
            stage_ingest(cfg);
        } else if (app.got_subcommand("align")) {
            stage_align(cfg);
        } else if (app.got_subcommand("features")) {
            stage_features(cfg);
        } else if (app.got_subcommand("train")) {
            stage_train(cfg);
        } else if (app.got_subcommand("backtest")) {
            stage_backtest(cfg);
        } else if (app.got_subcommand("report")) {
            stage_report(cfg);
        } else if (app.got_subcommand("run")) {
            std::vector<std::string> failures = run_pipeline(cfg);
            for (const std::string& f : failures)
                std::fprintf(stderr, "error: %s\n", f.c_str());
            if (!failures.empty()) return 1;
        } else if (sweep->parsed()) {
            sweep_depth(cfg, depths);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
