#include "treestrat/backtest.hpp"

#include <stdexcept>

#include "treestrat/csv.hpp"

namespace treestrat::backtest {

PositionSeries shift_signals(const SignalSeries& signals) {
    if (signals.values.empty()) throw std::runtime_error("shift_signals: empty signal series");
    PositionSeries out;
    out.index = signals.index;
    out.values.resize(signals.values.size());
    out.values[0] = 0;
    for (std::size_t t = 1; t < signals.values.size(); ++t)
        out.values[t] = signals.values[t - 1];
    return out;
}

std::vector<double> strategy_returns(const PositionSeries& positions,
                                     std::span<const double> close) {
    if (positions.values.size() != close.size())
        throw std::runtime_error("strategy_returns: position/close index mismatch");
    std::vector<double> out(close.size(), 0.0);
    for (std::size_t t = 1; t < close.size(); ++t)
        out[t] = positions.values[t] == 1 ? close[t] / close[t - 1] - 1.0 : 0.0;
    return out;
}

std::vector<double> equity_curve(std::span<const double> returns, double initial) {
    if (initial <= 0.0) throw std::runtime_error("equity_curve: initial value must be positive");
    std::vector<double> out(returns.size());
    double equity = initial;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        if (returns[t] <= -1.0)
            throw std::runtime_error("equity_curve: return <= -100% at index " +
                                     std::to_string(t));
        equity *= 1.0 + returns[t];
        out[t] = equity;
    }
    return out;
}

std::vector<TradeRecord> extract_trades(const PositionSeries& positions,
                                        std::span<const double> strategy_returns) {
    if (positions.values.size() != strategy_returns.size())
        throw std::runtime_error("extract_trades: position/return index mismatch");
    std::vector<TradeRecord> trades;
    std::size_t n = positions.values.size();
    std::size_t t = 0;
    while (t < n) {
        if (positions.values[t] != 1) {
            ++t;
            continue;
        }
        std::size_t start = t;
        double growth = 1.0;
        while (t < n && positions.values[t] == 1) {
            growth *= 1.0 + strategy_returns[t];
            ++t;
        }
        // Entered at the close of the bar before the run; the first position
        // bar is never index 0 because pos_0 = 0.
        TradeRecord trade;
        trade.entry_time = positions.index[start - 1];
        trade.exit_time = positions.index[t - 1];
        trade.trade_return = growth - 1.0;
        trades.push_back(trade);
    }
    return trades;
}

BacktestResult run_backtest(const cart::DecisionTreeModel& model,
                            const features::FeatureMatrix& features,
                            std::span<const double> close) {
    if (features.rows() != close.size())
        throw std::runtime_error("run_backtest: features and close series must share an index");
    if (features.rows() == 0) throw std::runtime_error("run_backtest: empty feature matrix");
    std::vector<std::string> expected = features::feature_name_list();
    if (model.feature_names != expected)
        throw std::runtime_error("run_backtest: model feature names do not match the matrix");

    BacktestResult result;
    result.signals.index = features.index;
    result.signals.values.resize(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r)
        result.signals.values[r] = cart::predict(model, features.row(r));

    result.positions = shift_signals(result.signals);
    result.strategy_returns = strategy_returns(result.positions, close);

    result.benchmark_returns.assign(close.size(), 0.0);
    for (std::size_t t = 1; t < close.size(); ++t)
        result.benchmark_returns[t] = close[t] / close[t - 1] - 1.0;

    result.strategy_equity = equity_curve(result.strategy_returns);
    result.benchmark_equity = equity_curve(result.benchmark_returns);
    result.trades = extract_trades(result.positions, result.strategy_returns);
    return result;
}

void save_backtest(const BacktestResult& result, const std::string& path,
                   const std::string& trades_path) {
    std::string body =
        "timestamp,signal,position,strategy_return,benchmark_return,strategy_equity,"
        "benchmark_equity\n";
    for (std::size_t t = 0; t < result.signals.index.size(); ++t) {
        body += to_iso(result.signals.index[t]);
        body += ',';
        body += result.signals.values[t] ? '1' : '0';
        body += ',';
        body += result.positions.values[t] ? '1' : '0';
        body += ',';
        body += csv::format_double(result.strategy_returns[t]);
        body += ',';
        body += csv::format_double(result.benchmark_returns[t]);
        body += ',';
        body += csv::format_double(result.strategy_equity[t]);
        body += ',';
        body += csv::format_double(result.benchmark_equity[t]);
        body += '\n';
    }
    csv::write_file(path, body);

    std::string trades = "entry_time,exit_time,trade_return\n";
    for (const TradeRecord& trade : result.trades) {
        trades += to_iso(trade.entry_time);
        trades += ',';
        trades += to_iso(trade.exit_time);
        trades += ',';
        trades += csv::format_double(trade.trade_return);
        trades += '\n';
    }
    csv::write_file(trades_path, trades);
}

BacktestResult load_backtest(const std::string& path, const std::string& trades_path) {
    std::vector<std::string> lines = csv::read_lines(path);
    if (lines.empty() ||
        lines[0] !=
            "timestamp,signal,position,strategy_return,benchmark_return,strategy_equity,"
            "benchmark_equity")
        throw std::runtime_error(path + ": bad backtest header");
    BacktestResult result;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = csv::split_line(lines[i]);
        if (fields.size() != 7)
            throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": malformed row");
        Timestamp ts = parse_iso(fields[0]);
        result.signals.index.push_back(ts);
        result.signals.values.push_back(static_cast<int>(csv::parse_int(fields[1])));
        result.positions.index.push_back(ts);
        result.positions.values.push_back(static_cast<int>(csv::parse_int(fields[2])));
        result.strategy_returns.push_back(csv::parse_double(fields[3]));
        result.benchmark_returns.push_back(csv::parse_double(fields[4]));
        result.strategy_equity.push_back(csv::parse_double(fields[5]));
        result.benchmark_equity.push_back(csv::parse_double(fields[6]));
    }

    std::vector<std::string> trade_lines = csv::read_lines(trades_path);
    if (trade_lines.empty() || trade_lines[0] != "entry_time,exit_time,trade_return")
        throw std::runtime_error(trades_path + ": bad trades header");
    for (std::size_t i = 1; i < trade_lines.size(); ++i) {
        auto fields = csv::split_line(trade_lines[i]);
        if (fields.size() != 3)
            throw std::runtime_error(trades_path + ":" + std::to_string(i + 1) +
                                     ": malformed row");
        TradeRecord trade;
        trade.entry_time = parse_iso(fields[0]);
        trade.exit_time = parse_iso(fields[1]);
        trade.trade_return = csv::parse_double(fields[2]);
        result.trades.push_back(trade);
    }
    return result;
}

}  // namespace treestrat::backtest
