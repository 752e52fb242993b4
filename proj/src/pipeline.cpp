#include "treestrat/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>

#include "treestrat/backtest.hpp"
#include "treestrat/charts.hpp"
#include "treestrat/csv.hpp"
#include "treestrat/parallel.hpp"

namespace treestrat::pipeline {

namespace fs = std::filesystem;

namespace {

template <typename F>
auto with_stage(const std::string& symbol, const char* stage, F&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error("symbol " + symbol + ", stage " + stage + ": " + e.what());
    }
}

std::vector<double> closes_for(const data::AlignedPanel& panel, const std::string& symbol,
                               std::span<const Timestamp> rows) {
    const data::SymbolColumns& cols = panel.at(symbol);
    std::vector<double> out;
    out.reserve(rows.size());
    std::size_t p = 0;
    for (const Timestamp& t : rows) {
        while (p < panel.index.size() && panel.index[p].epoch_sec < t.epoch_sec) ++p;
        if (p >= panel.index.size() || panel.index[p].epoch_sec != t.epoch_sec)
            throw std::runtime_error("row " + to_iso(t) + " not present in panel for " + symbol);
        out.push_back(cols.close[p]);
    }
    return out;
}

features::FeatureMatrix restrict_features(const features::FeatureMatrix& features,
                                          const TimeRange& range) {
    features::FeatureMatrix out;
    out.symbol = features.symbol;
    out.warmup_length = features.warmup_length;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        if (!range.contains(features.index[r])) continue;
        out.index.push_back(features.index[r]);
        for (std::size_t f = 0; f < features::kFeatureCount; ++f)
            out.values.push_back(features.at(r, f));
    }
    return out;
}

struct SymbolArtifacts {
    SymbolFeatures feats;
    cart::DecisionTreeModel model;
    backtest::BacktestResult train_result;
    backtest::BacktestResult test_result;
};

void write_model_artifacts(const RunConfig& cfg, const std::string& symbol,
                           const cart::DecisionTreeModel& model) {
    std::string base = cfg.out_dir + "/models/" + symbol;
    csv::write_file(base + ".json", cart::serialize(model));
    csv::write_file(base + ".rules.txt", cart::export_rules(model));
    csv::write_file(base + ".dot", cart::export_dot(model));
}

void write_backtest_artifacts(const RunConfig& cfg, const std::string& symbol,
                              const char* slice, const backtest::BacktestResult& result) {
    std::string base = cfg.out_dir + "/backtests/" + symbol + "." + slice;
    backtest::save_backtest(result, base + ".csv", base + ".trades.csv");
}

void write_charts(const RunConfig& cfg, const char* slice,
                  std::span<const Timestamp> index, std::span<const double> strategy_returns,
                  std::span<const double> benchmark_returns) {
    std::vector<double> strat_eq = backtest::equity_curve(strategy_returns);
    std::vector<double> bench_eq = backtest::equity_curve(benchmark_returns);
    std::string slice_name(slice);
    std::string equity_svg = charts::line_chart_svg(
        "Average portfolio equity (" + slice_name + ")", index,
        {{"strategy", strat_eq, "#1f5fa8"}, {"benchmark", bench_eq, "#b3691a"}});
    csv::write_file(cfg.out_dir + "/charts/equity_" + slice_name + ".svg", equity_svg);

    auto [labels, monthly] = charts::monthly_returns(index, strategy_returns);
    std::string monthly_svg = charts::bar_chart_svg(
        "Average portfolio monthly strategy returns (" + slice_name + ")", labels, monthly);
    csv::write_file(cfg.out_dir + "/charts/monthly_" + slice_name + ".svg", monthly_svg);
}

void write_portfolio_reports(const RunConfig& cfg, const char* slice,
                             const std::vector<std::string>& symbols,
                             const std::vector<backtest::BacktestResult>& results) {
    kpi::PortfolioReport report = assemble_portfolio(symbols, results, cfg.kpi_config);
    std::string base = cfg.out_dir + "/reports/portfolio_" + slice;
    csv::write_file(base + ".json", kpi::portfolio_report_json(report));
    csv::write_file(base + ".csv", kpi::portfolio_report_csv(report));
    if (cfg.charts) {
        std::vector<std::vector<double>> strat, bench;
        for (const auto& r : results) {
            strat.push_back(r.strategy_returns);
            bench.push_back(r.benchmark_returns);
        }
        write_charts(cfg, slice, results.front().signals.index,
                     kpi::average_portfolio(strat), kpi::average_portfolio(bench));
    }
}

}  // namespace

std::string RunConfig::bar_path(const std::string& symbol) const {
    return data_dir + "/" + symbol + ".csv";
}

std::string RunConfig::daily_path(const std::string& symbol) const {
    return data_dir + "/" + symbol + ".daily.csv";
}

void RunConfig::validate() const {
    if (data_dir.empty()) throw ConfigError("config: data_dir is required");
    if (out_dir.empty()) throw ConfigError("config: out_dir is required");
    if (universe.empty()) throw ConfigError("config: universe must list at least one symbol");
    std::set<std::string> seen;
    for (const std::string& s : universe) {
        if (s.empty()) throw ConfigError("config: empty symbol in universe");
        for (char c : s)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
                throw ConfigError("config: symbol '" + s + "' must be alphanumeric/underscore");
        if (!seen.insert(s).second)
            throw ConfigError("config: duplicate symbol '" + s + "' in universe");
    }
    if (!split.train.valid() || !split.test.valid())
        throw ConfigError("config: train/test ranges must be non-empty intervals");
    if (split.train.end.epoch_sec > split.test.start.epoch_sec)
        throw ConfigError("config: train range must end at or before the test range starts");
    try {
        feature_spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (train_config.max_depth < 1) throw ConfigError("config: max_depth must be >= 1");
    if (train_config.min_gain < 0.0) throw ConfigError("config: min_gain must be >= 0");
    if (train_config.min_samples_split < 2)
        throw ConfigError("config: min_samples_split must be >= 2");
    if (kpi_config.periods_per_year <= 0.0)
        throw ConfigError("config: periods_per_year must be positive");
    if (kpi_config.risk_free_annual <= -1.0)
        throw ConfigError("config: risk_free_annual must exceed -100%");
}

data::BarSeries load_symbol(const RunConfig& cfg, const std::string& symbol) {
    std::string path = cfg.bar_path(symbol);
    if (!fs::exists(path)) throw std::runtime_error("missing data file: " + path);
    data::BarSeries bars = data::ingest_bars(path, symbol);
    std::string daily = cfg.daily_path(symbol);
    if (fs::exists(daily)) {
        auto [close, adjusted] = data::load_daily_closes(daily);
        data::AdjustmentFactorSeries factors =
            data::compute_adjustment_factors(close, adjusted, symbol);
        bars = data::apply_adjustment(bars, factors);
    }
    return bars;
}

PreparedPanels prepare_panels(const RunConfig& cfg, const std::vector<data::BarSeries>& bars) {
    TimeRange full_span{cfg.split.train.start, cfg.split.test.end};
    std::vector<data::BarSeries> train_set, full_set;
    train_set.reserve(bars.size());
    full_set.reserve(bars.size());
    for (const data::BarSeries& s : bars) {
        data::BarSeries train_bars = data::restrict_bars(s, cfg.split.train);
        data::BarSeries full_bars = data::restrict_bars(s, full_span);
        if (train_bars.bars.empty())
            throw std::runtime_error("symbol " + s.symbol + ", stage align: no bars in train range");
        train_set.push_back(std::move(train_bars));
        full_set.push_back(std::move(full_bars));
    }
    return PreparedPanels{data::union_align(train_set), data::union_align(full_set)};
}

SymbolFeatures build_symbol_features(const PreparedPanels& panels, const std::string& symbol,
                                     const RunConfig& cfg) {
    SymbolFeatures out;
    out.train_features = features::build_features(panels.train_panel, symbol, cfg.feature_spec);
    const data::SymbolColumns& train_cols = panels.train_panel.at(symbol);
    out.train_labels = features::build_labels(train_cols.close, panels.train_panel.index,
                                              out.train_features.index, symbol);
    out.fit_features = out.train_features;
    features::align_to_labels(out.fit_features, out.train_labels);
    if (out.fit_features.rows() == 0)
        throw std::runtime_error("no labeled training rows after warm-up for " + symbol);

    features::FeatureMatrix full =
        features::build_features(panels.full_panel, symbol, cfg.feature_spec);
    out.test_features = restrict_features(full, cfg.split.test);
    if (out.test_features.rows() == 0)
        throw std::runtime_error("no test rows after warm-up for " + symbol);

    out.train_close = closes_for(panels.train_panel, symbol, out.train_features.index);
    out.test_close = closes_for(panels.full_panel, symbol, out.test_features.index);

    // Labels for the test slice are diagnostic; they are built from the test
    // slice alone so the final test row stays unlabeled.
    out.test_labels = features::build_labels(out.test_close, out.test_features.index,
                                             out.test_features.index, symbol);
    return out;
}

kpi::PortfolioReport assemble_portfolio(const std::vector<std::string>& symbols,
                                        const std::vector<backtest::BacktestResult>& results,
                                        const kpi::KpiConfig& cfg) {
    if (symbols.size() != results.size())
        throw std::runtime_error("assemble_portfolio: symbol/result count mismatch");
    if (symbols.empty()) throw std::runtime_error("assemble_portfolio: empty universe");

    kpi::PortfolioReport report;
    report.config = cfg;
    std::vector<std::vector<double>> strat_returns, bench_returns;
    std::vector<backtest::TradeRecord> pooled_trades;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        report.per_symbol.emplace_back(symbols[i], kpi::build_report(results[i], cfg));
        strat_returns.push_back(results[i].strategy_returns);
        bench_returns.push_back(results[i].benchmark_returns);
        pooled_trades.insert(pooled_trades.end(), results[i].trades.begin(),
                             results[i].trades.end());
    }

    std::vector<double> avg_strat = kpi::average_portfolio(strat_returns);
    std::vector<double> avg_bench = kpi::average_portfolio(bench_returns);
    report.average_portfolio.strategy =
        kpi::report_from_returns(avg_strat, pooled_trades, true, cfg);
    report.average_portfolio.benchmark = kpi::report_from_returns(avg_bench, {}, false, cfg);

    auto defined = [&](kpi::PsbbMetric metric) {
        for (const auto& [symbol, pair] : report.per_symbol) {
            const kpi::Metric& s = metric == kpi::PsbbMetric::total_return
                                       ? pair.strategy.total_return
                                       : pair.strategy.sharpe;
            const kpi::Metric& b = metric == kpi::PsbbMetric::total_return
                                       ? pair.benchmark.total_return
                                       : pair.benchmark.sharpe;
            if (!s.is_value() || !b.is_value()) return false;
        }
        return true;
    };
    if (defined(kpi::PsbbMetric::total_return))
        report.psbbr = kpi::Metric::value(kpi::psbb(report.per_symbol,
                                                    kpi::PsbbMetric::total_return));
    if (defined(kpi::PsbbMetric::sharpe))
        report.psbbs = kpi::Metric::value(kpi::psbb(report.per_symbol, kpi::PsbbMetric::sharpe));
    return report;
}

std::vector<std::string> run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir + "/models");
    fs::create_directories(cfg.out_dir + "/backtests");
    fs::create_directories(cfg.out_dir + "/reports");
    if (cfg.charts) fs::create_directories(cfg.out_dir + "/charts");

    const std::size_t n = cfg.universe.size();
    std::vector<std::string> failures;

    // ingest + range checks
    std::vector<std::optional<data::BarSeries>> loaded(n);
    auto load_failures = parallel_for(
        n, cfg.jobs,
        [&](std::size_t i) {
            const std::string& symbol = cfg.universe[i];
            data::BarSeries bars =
                with_stage(symbol, "ingest", [&] { return load_symbol(cfg, symbol); });
            with_stage(symbol, "align", [&] {
                if (data::restrict_bars(bars, cfg.split.train).bars.empty())
                    throw std::runtime_error("no bars in train range");
                if (data::restrict_bars(bars, cfg.split.test).bars.empty())
                    throw std::runtime_error("no bars in test range");
            });
            loaded[i] = std::move(bars);
        },
        cfg.keep_going);
    for (const auto& [index, message] : load_failures) {
        failures.push_back(message);
        loaded[index].reset();
    }

    std::vector<std::string> active;
    std::vector<data::BarSeries> active_bars;
    for (std::size_t i = 0; i < n; ++i) {
        if (!loaded[i]) continue;
        active.push_back(cfg.universe[i]);
        active_bars.push_back(std::move(*loaded[i]));
    }
    if (active.empty()) throw std::runtime_error("no symbol survived ingestion");

    PreparedPanels panels = prepare_panels(cfg, active_bars);

    // features + fit + backtest per symbol
    std::vector<std::optional<SymbolArtifacts>> artifacts(active.size());
    auto run_failures = parallel_for(
        active.size(), cfg.jobs,
        [&](std::size_t i) {
            const std::string& symbol = active[i];
            SymbolArtifacts art;
            art.feats = with_stage(symbol, "features",
                                   [&] { return build_symbol_features(panels, symbol, cfg); });
            art.model = with_stage(symbol, "train", [&] {
                cart::DataView X{art.feats.fit_features.values.data(),
                                 art.feats.fit_features.rows(), features::kFeatureCount};
                return cart::fit(X, art.feats.train_labels.values, cfg.train_config,
                                 features::feature_name_list(), cfg.split.train);
            });
            art.train_result = with_stage(symbol, "backtest", [&] {
                return backtest::run_backtest(art.model, art.feats.train_features,
                                              art.feats.train_close);
            });
            art.test_result = with_stage(symbol, "backtest", [&] {
                return backtest::run_backtest(art.model, art.feats.test_features,
                                              art.feats.test_close);
            });
            with_stage(symbol, "export", [&] {
                write_model_artifacts(cfg, symbol, art.model);
                write_backtest_artifacts(cfg, symbol, "train", art.train_result);
                write_backtest_artifacts(cfg, symbol, "test", art.test_result);
            });
            artifacts[i] = std::move(art);
        },
        cfg.keep_going);
    for (const auto& [index, message] : run_failures) {
        failures.push_back(message);
        artifacts[index].reset();
    }

    std::vector<std::string> reported;
    std::vector<backtest::BacktestResult> train_results, test_results;
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (!artifacts[i]) continue;
        reported.push_back(active[i]);
        train_results.push_back(std::move(artifacts[i]->train_result));
        test_results.push_back(std::move(artifacts[i]->test_result));
    }
    if (reported.empty()) throw std::runtime_error("no symbol produced a backtest");

    write_portfolio_reports(cfg, "train", reported, train_results);
    write_portfolio_reports(cfg, "test", reported, test_results);

    if (cfg.keep_going && !failures.empty()) {
        std::string body;
        for (const std::string& f : failures) body += f + "\n";
        csv::write_file(cfg.out_dir + "/reports/failures.txt", body);
    }
    return failures;
}

void sweep_depth(const RunConfig& cfg, const std::vector<int>& depths) {
    cfg.validate();
    if (depths.empty()) throw ConfigError("sweep-depth: depth list is empty");
    std::set<int> unique_depths;
    for (int d : depths) {
        if (d < 1) throw ConfigError("sweep-depth: depths must be >= 1");
        if (!unique_depths.insert(d).second)
            throw ConfigError("sweep-depth: duplicate depth " + std::to_string(d));
    }
    fs::create_directories(cfg.out_dir + "/reports");

    const std::size_t n = cfg.universe.size();
    std::vector<data::BarSeries> bars(n);
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
        bars[i] = with_stage(cfg.universe[i], "ingest",
                             [&] { return load_symbol(cfg, cfg.universe[i]); });
    });
    PreparedPanels panels = prepare_panels(cfg, bars);

    std::vector<SymbolFeatures> feats(n);
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
        feats[i] = with_stage(cfg.universe[i], "features",
                              [&] { return build_symbol_features(panels, cfg.universe[i], cfg); });
    });

    std::string out =
        "depth,sharpe,profit_factor,beat_total_return,beat_sharpe,total_return,cagr,"
        "max_drawdown,win_rate,volatility\n";
    for (int depth : depths) {
        cart::TrainConfig train_config = cfg.train_config;
        train_config.max_depth = depth;
        std::vector<backtest::BacktestResult> results(n);
        parallel_for(n, cfg.jobs, [&](std::size_t i) {
            const std::string& symbol = cfg.universe[i];
            cart::DecisionTreeModel model = with_stage(symbol, "train", [&] {
                cart::DataView X{feats[i].fit_features.values.data(),
                                 feats[i].fit_features.rows(), features::kFeatureCount};
                return cart::fit(X, feats[i].train_labels.values, train_config,
                                 features::feature_name_list(), cfg.split.train);
            });
            results[i] = with_stage(symbol, "backtest", [&] {
                return backtest::run_backtest(model, feats[i].test_features,
                                              feats[i].test_close);
            });
        });
        kpi::PortfolioReport report =
            assemble_portfolio(cfg.universe, results, cfg.kpi_config);

        std::size_t beat_return = 0, beat_sharpe = 0;
        for (const auto& [symbol, pair] : report.per_symbol) {
            if (pair.strategy.total_return.is_value() && pair.benchmark.total_return.is_value() &&
                pair.strategy.total_return.get() > pair.benchmark.total_return.get())
                ++beat_return;
            if (pair.strategy.sharpe.is_value() && pair.benchmark.sharpe.is_value() &&
                pair.strategy.sharpe.get() > pair.benchmark.sharpe.get())
                ++beat_sharpe;
        }
        const kpi::KpiReport& avg = report.average_portfolio.strategy;
        out += std::to_string(depth);
        out += ',' + avg.sharpe.to_string();
        out += ',' + avg.profit_factor.to_string();
        out += ',' + std::to_string(beat_return);
        out += ',' + std::to_string(beat_sharpe);
        out += ',' + avg.total_return.to_string();
        out += ',' + avg.cagr.to_string();
        out += ',' + avg.max_drawdown.to_string();
        out += ',' + avg.win_rate.to_string();
        out += ',' + avg.volatility.to_string();
        out += '\n';
    }
    csv::write_file(cfg.out_dir + "/reports/depth_sweep.csv", out);
}

TreeExport export_tree(const std::string& model_document_path, const std::string& format) {
    if (format != "rules" && format != "dot")
        throw ConfigError("export-tree: format must be 'rules' or 'dot'");
    cart::DecisionTreeModel model = cart::deserialize(csv::read_file(model_document_path));
    TreeExport out;
    out.text = format == "rules" ? cart::export_rules(model) : cart::export_dot(model);
    out.usage = cart::feature_usage(model);
    return out;
}

void stage_ingest(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir + "/ingested");
    parallel_for(cfg.universe.size(), cfg.jobs, [&](std::size_t i) {
        const std::string& symbol = cfg.universe[i];
        data::BarSeries bars =
            with_stage(symbol, "ingest", [&] { return load_symbol(cfg, symbol); });
        data::save_bars(bars, cfg.out_dir + "/ingested/" + symbol + ".csv");
    });
}

void stage_align(const RunConfig& cfg) {
    cfg.validate();
    std::vector<data::BarSeries> bars(cfg.universe.size());
    parallel_for(cfg.universe.size(), cfg.jobs, [&](std::size_t i) {
        const std::string& symbol = cfg.universe[i];
        bars[i] = with_stage(symbol, "align", [&] {
            return data::ingest_bars(cfg.out_dir + "/ingested/" + symbol + ".csv", symbol);
        });
    });
    PreparedPanels panels = prepare_panels(cfg, bars);
    data::save_panel(panels.train_panel, cfg.out_dir + "/panels/train");
    data::save_panel(panels.full_panel, cfg.out_dir + "/panels/full");
}

void stage_features(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir + "/features");
    PreparedPanels panels{data::load_panel(cfg.out_dir + "/panels/train"),
                          data::load_panel(cfg.out_dir + "/panels/full")};
    parallel_for(cfg.universe.size(), cfg.jobs, [&](std::size_t i) {
        const std::string& symbol = cfg.universe[i];
        SymbolFeatures feats = with_stage(
            symbol, "features", [&] { return build_symbol_features(panels, symbol, cfg); });
        features::save_features(feats.train_features, &feats.train_labels,
                                cfg.out_dir + "/features/" + symbol + ".train.csv");
        features::save_features(feats.test_features, &feats.test_labels,
                                cfg.out_dir + "/features/" + symbol + ".test.csv");
    });
}

void stage_train(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir + "/models");
    parallel_for(cfg.universe.size(), cfg.jobs, [&](std::size_t i) {
        const std::string& symbol = cfg.universe[i];
        with_stage(symbol, "train", [&] {
            auto [feats, labels] =
                features::load_features(cfg.out_dir + "/features/" + symbol + ".train.csv",
                                        symbol);
            features::align_to_labels(feats, labels);
            cart::DataView X{feats.values.data(), feats.rows(), features::kFeatureCount};
            cart::DecisionTreeModel model = cart::fit(X, labels.values, cfg.train_config,
                                                      features::feature_name_list(),
                                                      cfg.split.train);
            write_model_artifacts(cfg, symbol, model);
        });
    });
}

void stage_backtest(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir + "/backtests");
    data::AlignedPanel train_panel = data::load_panel(cfg.out_dir + "/panels/train");
    data::AlignedPanel full_panel = data::load_panel(cfg.out_dir + "/panels/full");
    parallel_for(cfg.universe.size(), cfg.jobs, [&](std::size_t i) {
        const std::string& symbol = cfg.universe[i];
        with_stage(symbol, "backtest", [&] {
            cart::DecisionTreeModel model =
                cart::deserialize(csv::read_file(cfg.out_dir + "/models/" + symbol + ".json"));
            auto [train_feats, train_labels] = features::load_features(
                cfg.out_dir + "/features/" + symbol + ".train.csv", symbol);
            auto [test_feats, test_labels] = features::load_features(
                cfg.out_dir + "/features/" + symbol + ".test.csv", symbol);
            backtest::BacktestResult train_result = backtest::run_backtest(
                model, train_feats, closes_for(train_panel, symbol, train_feats.index));
            backtest::BacktestResult test_result = backtest::run_backtest(
                model, test_feats, closes_for(full_panel, symbol, test_feats.index));
            write_backtest_artifacts(cfg, symbol, "train", train_result);
            write_backtest_artifacts(cfg, symbol, "test", test_result);
        });
    });
}

void stage_report(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir + "/reports");
    if (cfg.charts) fs::create_directories(cfg.out_dir + "/charts");
    std::vector<backtest::BacktestResult> train_results(cfg.universe.size());
    std::vector<backtest::BacktestResult> test_results(cfg.universe.size());
    parallel_for(cfg.universe.size(), cfg.jobs, [&](std::size_t i) {
        const std::string& symbol = cfg.universe[i];
        with_stage(symbol, "report", [&] {
            std::string base = cfg.out_dir + "/backtests/" + symbol;
            train_results[i] =
                backtest::load_backtest(base + ".train.csv", base + ".train.trades.csv");
            test_results[i] =
                backtest::load_backtest(base + ".test.csv", base + ".test.trades.csv");
        });
    });
    write_portfolio_reports(cfg, "train", cfg.universe, train_results);
    write_portfolio_reports(cfg, "test", cfg.universe, test_results);
}

}  // namespace treestrat::pipeline
