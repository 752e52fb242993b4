#pragma once

#include <span>
#include <string>
#include <vector>

#include "treestrat/cart.hpp"
#include "treestrat/features.hpp"
#include "treestrat/time.hpp"

namespace treestrat::backtest {

struct SignalSeries {
    std::vector<Timestamp> index;
    std::vector<int> values;  // {0, 1}, one per predicted bar
};

struct PositionSeries {
    std::vector<Timestamp> index;
    std::vector<int> values;  // 1 = long one unit, 0 = flat
};

// One maximal run of consecutive long bars. The position is entered at the
// close of the bar preceding the run, so entry_time < exit_time even for a
// single-bar run.
struct TradeRecord {
    Timestamp entry_time;
    Timestamp exit_time;
    double trade_return{0.0};
};

struct BacktestResult {
    SignalSeries signals;
    PositionSeries positions;
    std::vector<double> strategy_returns;
    std::vector<double> benchmark_returns;
    std::vector<double> strategy_equity;
    std::vector<double> benchmark_equity;
    std::vector<TradeRecord> trades;
};

// pos_0 = 0; pos_t = signal_{t-1}: a bar-t signal trades at bar t+1.
PositionSeries shift_signals(const SignalSeries& signals);

// r_t = pos_t * (close_t / close_{t-1} - 1), r_0 = 0. No cost deductions.
std::vector<double> strategy_returns(const PositionSeries& positions,
                                     std::span<const double> close);

// E_t = initial * prod_{s<=t} (1 + r_s). Throws on any return <= -1.
std::vector<double> equity_curve(std::span<const double> returns, double initial = 1.0);

std::vector<TradeRecord> extract_trades(const PositionSeries& positions,
                                        std::span<const double> strategy_returns);

// Predicts one signal per feature row, applies the one-step delay and compares
// against buy-and-hold over the same index. `close` aligns 1:1 with the
// feature rows.
BacktestResult run_backtest(const cart::DecisionTreeModel& model,
                            const features::FeatureMatrix& features,
                            std::span<const double> close);

// CSV persistence per the documented schemas.
void save_backtest(const BacktestResult& result, const std::string& path,
                   const std::string& trades_path);
BacktestResult load_backtest(const std::string& path, const std::string& trades_path);

}  // namespace treestrat::backtest
