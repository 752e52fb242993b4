#pragma once

#include <array>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "treestrat/backtest.hpp"

namespace treestrat::kpi {

struct KpiConfig {
    double periods_per_year = 94500.0;  // 252 trading days x 375 minute bars
    double risk_free_annual = 0.072;

    // Geometric de-annualization of the risk-free rate.
    double risk_free_per_period() const;
};

// A report cell: a finite number, NA (undefined, e.g. buy-and-hold win rate)
// or +inf (profit factor with no losing trades). Serialized as "NA" / "inf"
// so non-finite doubles never leak silently.
class Metric {
public:
    static Metric value(double v);
    static Metric na() { return Metric(Kind::na, 0.0); }
    static Metric inf() { return Metric(Kind::inf, 0.0); }

    bool is_value() const { return kind_ == Kind::value; }
    bool is_na() const { return kind_ == Kind::na; }
    bool is_inf() const { return kind_ == Kind::inf; }
    double get() const;  // throws unless is_value()

    std::string to_string() const;
    static Metric from_string(const std::string& text);

    friend bool operator==(const Metric&, const Metric&) = default;

private:
    enum class Kind { value, na, inf };
    Metric(Kind k, double v) : kind_(k), v_(v) {}
    Kind kind_;
    double v_;
};

struct KpiReport {
    Metric sharpe = Metric::na();
    Metric total_return = Metric::na();
    Metric cagr = Metric::na();
    Metric max_drawdown = Metric::na();
    Metric win_rate = Metric::na();
    Metric profit_factor = Metric::na();
    Metric volatility = Metric::na();

    const Metric& by_name(const std::string& name) const;
};

inline constexpr std::array<std::string_view, 7> kKpiNames = {
    "sharpe", "total_return", "cagr",      "max_drawdown",
    "win_rate", "profit_factor", "volatility"};

// OVER = strategy outperforms on that metric, UNDER = underperforms. Smaller
// magnitude wins for max_drawdown and volatility; higher wins elsewhere.
enum class Flag { over, under, equal, na };
std::string to_string(Flag f);
Flag compare_metric(const std::string& name, const Metric& strategy, const Metric& benchmark);

struct ReportPair {
    KpiReport strategy;
    KpiReport benchmark;
};

struct PortfolioReport {
    std::vector<std::pair<std::string, ReportPair>> per_symbol;
    ReportPair average_portfolio;
    Metric psbbr = Metric::na();  // % of stocks beating buy-and-hold on total return
    Metric psbbs = Metric::na();  // % of stocks beating buy-and-hold on Sharpe
    KpiConfig config;
};

// Annualized mean excess return over annualized standard deviation, sample
// std (n-1). Throws on fewer than 2 observations or zero variance.
double sharpe(std::span<const double> returns, const KpiConfig& cfg);

double total_return(std::span<const double> equity);

// Geometric annual growth implied by end/start equity over n_periods bars.
double cagr(std::span<const double> equity, std::size_t n_periods, const KpiConfig& cfg);

// min over t of E_t / max_{s<=t} E_s - 1; in [-1, 0].
double max_drawdown(std::span<const double> equity);

Metric win_rate(std::span<const backtest::TradeRecord> trades);

Metric profit_factor(std::span<const backtest::TradeRecord> trades);

double annualized_volatility(std::span<const double> returns, const KpiConfig& cfg);

// Equal-weight, per-bar rebalanced mean of the given return series.
std::vector<double> average_portfolio(const std::vector<std::vector<double>>& per_symbol_returns);

enum class PsbbMetric { total_return, sharpe };
double psbb(const std::vector<std::pair<std::string, ReportPair>>& per_symbol,
            PsbbMetric metric);

// Symbols whose strategy beats buy-and-hold on total return.
std::set<std::string> prune_universe(
    const std::vector<std::pair<std::string, ReportPair>>& per_symbol);

// All seven metrics for strategy and benchmark; benchmark win rate and profit
// factor are NA (buy-and-hold executes no trades); a zero-variance return
// stream reports NA Sharpe.
ReportPair build_report(const backtest::BacktestResult& result, const KpiConfig& cfg);

KpiReport report_from_returns(std::span<const double> returns,
                              std::span<const backtest::TradeRecord> trades, bool has_trades,
                              const KpiConfig& cfg);

// JSON document with per-symbol reports, the average portfolio, PSBBR/PSBBS,
// a Table-1-shaped kpi table and a config echo; plus the flat CSV.
std::string portfolio_report_json(const PortfolioReport& report);
std::string portfolio_report_csv(const PortfolioReport& report);

}  // namespace treestrat::kpi
