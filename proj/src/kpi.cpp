#include "treestrat/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "treestrat/csv.hpp"

namespace treestrat::kpi {

namespace {

using json = nlohmann::json;

double mean_of(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) {
        double d = x - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

json metric_to_json(const Metric& m) {
    if (m.is_value()) return json(m.get());
    return json(m.to_string());
}

json report_to_json(const KpiReport& report) {
    json j;
    for (std::string_view name : kKpiNames)
        j[std::string(name)] = metric_to_json(report.by_name(std::string(name)));
    return j;
}

json pair_to_json(const ReportPair& pair) {
    json flags;
    for (std::string_view name : kKpiNames) {
        std::string n(name);
        flags[n] = to_string(compare_metric(n, pair.strategy.by_name(n), pair.benchmark.by_name(n)));
    }
    return json{{"strategy", report_to_json(pair.strategy)},
                {"benchmark", report_to_json(pair.benchmark)},
                {"flags", flags}};
}

}  // namespace

double KpiConfig::risk_free_per_period() const {
    return std::pow(1.0 + risk_free_annual, 1.0 / periods_per_year) - 1.0;
}

Metric Metric::value(double v) {
    if (!std::isfinite(v)) throw std::runtime_error("Metric::value requires a finite number");
    return Metric(Kind::value, v);
}

double Metric::get() const {
    if (kind_ != Kind::value) throw std::runtime_error("metric is not a finite value");
    return v_;
}

std::string Metric::to_string() const {
    switch (kind_) {
        case Kind::value: return csv::format_double(v_);
        case Kind::na: return "NA";
        case Kind::inf: return "inf";
    }
    throw std::runtime_error("unreachable");
}

Metric Metric::from_string(const std::string& text) {
    if (text == "NA") return na();
    if (text == "inf") return inf();
    return value(csv::parse_double(text));
}

const Metric& KpiReport::by_name(const std::string& name) const {
    if (name == "sharpe") return sharpe;
    if (name == "total_return") return total_return;
    if (name == "cagr") return cagr;
    if (name == "max_drawdown") return max_drawdown;
    if (name == "win_rate") return win_rate;
    if (name == "profit_factor") return profit_factor;
    if (name == "volatility") return volatility;
    throw std::runtime_error("unknown kpi name: " + name);
}

std::string to_string(Flag f) {
    switch (f) {
        case Flag::over: return "OVER";
        case Flag::under: return "UNDER";
        case Flag::equal: return "EQUAL";
        case Flag::na: return "NA";
    }
    throw std::runtime_error("unreachable");
}

Flag compare_metric(const std::string& name, const Metric& strategy, const Metric& benchmark) {
    if (strategy.is_na() || benchmark.is_na()) return Flag::na;
    // +inf profit factor beats any finite one.
    double s = strategy.is_inf() ? std::numeric_limits<double>::infinity() : strategy.get();
    double b = benchmark.is_inf() ? std::numeric_limits<double>::infinity() : benchmark.get();
    bool lower_is_better = name == "volatility";
    bool closer_to_zero_is_better = name == "max_drawdown";
    if (closer_to_zero_is_better) {
        s = -std::abs(s);
        b = -std::abs(b);
        // higher (closer to zero) wins below
    } else if (lower_is_better) {
        s = -s;
        b = -b;
    }
    if (s > b) return Flag::over;
    if (s < b) return Flag::under;
    return Flag::equal;
}

double sharpe(std::span<const double> returns, const KpiConfig& cfg) {
    if (returns.size() < 2) throw std::runtime_error("sharpe: need at least 2 observations");
    double sd = sample_std(returns);
    if (sd == 0.0) throw std::runtime_error("sharpe: zero return variance");
    double excess = mean_of(returns) - cfg.risk_free_per_period();
    return excess / sd * std::sqrt(cfg.periods_per_year);
}

double total_return(std::span<const double> equity) {
    if (equity.empty()) throw std::runtime_error("total_return: empty equity curve");
    return equity.back() / equity.front() - 1.0;
}

double cagr(std::span<const double> equity, std::size_t n_periods, const KpiConfig& cfg) {
    if (equity.empty()) throw std::runtime_error("cagr: empty equity curve");
    if (n_periods < 1) throw std::runtime_error("cagr: need at least 1 period");
    if (equity.front() <= 0.0 || equity.back() <= 0.0)
        throw std::runtime_error("cagr: non-positive equity");
    double growth = equity.back() / equity.front();
    return std::pow(growth, cfg.periods_per_year / static_cast<double>(n_periods)) - 1.0;
}

double max_drawdown(std::span<const double> equity) {
    if (equity.empty()) throw std::runtime_error("max_drawdown: empty equity curve");
    double peak = equity[0];
    double worst = 0.0;
    for (double e : equity) {
        if (e <= 0.0) throw std::runtime_error("max_drawdown: non-positive equity value");
        peak = std::max(peak, e);
        worst = std::min(worst, e / peak - 1.0);
    }
    return worst;
}

Metric win_rate(std::span<const backtest::TradeRecord> trades) {
    if (trades.empty()) return Metric::na();
    std::size_t winners = 0;
    for (const auto& t : trades)
        if (t.trade_return > 0.0) ++winners;
    return Metric::value(static_cast<double>(winners) / static_cast<double>(trades.size()));
}

Metric profit_factor(std::span<const backtest::TradeRecord> trades) {
    if (trades.empty()) return Metric::na();
    double gains = 0.0, losses = 0.0;
    for (const auto& t : trades) {
        if (t.trade_return > 0.0) gains += t.trade_return;
        if (t.trade_return < 0.0) losses += -t.trade_return;
    }
    if (losses == 0.0) return gains > 0.0 ? Metric::inf() : Metric::na();
    return Metric::value(gains / losses);
}

double annualized_volatility(std::span<const double> returns, const KpiConfig& cfg) {
    if (returns.size() < 2)
        throw std::runtime_error("annualized_volatility: need at least 2 observations");
    return sample_std(returns) * std::sqrt(cfg.periods_per_year);
}

std::vector<double> average_portfolio(
    const std::vector<std::vector<double>>& per_symbol_returns) {
    if (per_symbol_returns.empty())
        throw std::runtime_error("average_portfolio: empty symbol map");
    std::size_t n = per_symbol_returns.front().size();
    for (const auto& series : per_symbol_returns)
        if (series.size() != n)
            throw std::runtime_error("average_portfolio: return series index mismatch");
    std::vector<double> out(n, 0.0);
    for (const auto& series : per_symbol_returns)
        for (std::size_t t = 0; t < n; ++t) out[t] += series[t];
    double k = static_cast<double>(per_symbol_returns.size());
    for (double& v : out) v /= k;
    return out;
}

double psbb(const std::vector<std::pair<std::string, ReportPair>>& per_symbol,
            PsbbMetric metric) {
    if (per_symbol.empty()) throw std::runtime_error("psbb: empty symbol map");
    std::size_t beating = 0;
    for (const auto& [symbol, pair] : per_symbol) {
        const Metric& s = metric == PsbbMetric::total_return ? pair.strategy.total_return
                                                             : pair.strategy.sharpe;
        const Metric& b = metric == PsbbMetric::total_return ? pair.benchmark.total_return
                                                             : pair.benchmark.sharpe;
        if (!s.is_value() || !b.is_value())
            throw std::runtime_error("psbb: metric undefined for " + symbol);
        if (s.get() > b.get()) ++beating;
    }
    return 100.0 * static_cast<double>(beating) / static_cast<double>(per_symbol.size());
}

std::set<std::string> prune_universe(
    const std::vector<std::pair<std::string, ReportPair>>& per_symbol) {
    std::set<std::string> kept;
    for (const auto& [symbol, pair] : per_symbol) {
        if (!pair.strategy.total_return.is_value() || !pair.benchmark.total_return.is_value())
            throw std::runtime_error("prune_universe: total return undefined for " + symbol);
        if (pair.strategy.total_return.get() > pair.benchmark.total_return.get())
            kept.insert(symbol);
    }
    return kept;
}

KpiReport report_from_returns(std::span<const double> returns,
                              std::span<const backtest::TradeRecord> trades, bool has_trades,
                              const KpiConfig& cfg) {
    KpiReport report;
    std::vector<double> equity = backtest::equity_curve(returns);
    report.total_return = Metric::value(total_return(equity));
    report.cagr = Metric::value(cagr(equity, equity.size(), cfg));
    report.max_drawdown = Metric::value(max_drawdown(equity));
    if (returns.size() >= 2) {
        double sd = sample_std(returns);
        report.volatility = Metric::value(sd * std::sqrt(cfg.periods_per_year));
        report.sharpe = sd == 0.0 ? Metric::na() : Metric::value(sharpe(returns, cfg));
    }
    if (has_trades) {
        report.win_rate = win_rate(trades);
        report.profit_factor = profit_factor(trades);
    }
    return report;
}

ReportPair build_report(const backtest::BacktestResult& result, const KpiConfig& cfg) {
    ReportPair pair;
    pair.strategy = report_from_returns(result.strategy_returns, result.trades, true, cfg);
    pair.benchmark = report_from_returns(result.benchmark_returns, {}, false, cfg);
    return pair;
}

std::string portfolio_report_json(const PortfolioReport& report) {
    json doc;
    doc["config"] = {{"periods_per_year", report.config.periods_per_year},
                     {"risk_free_annual", report.config.risk_free_annual}};

    json per_symbol = json::object();
    for (const auto& [symbol, pair] : report.per_symbol) per_symbol[symbol] = pair_to_json(pair);
    doc["per_symbol"] = per_symbol;
    doc["average_portfolio"] = pair_to_json(report.average_portfolio);
    doc["psbbr"] = metric_to_json(report.psbbr);
    doc["psbbs"] = metric_to_json(report.psbbs);

    // Symbols a total-return prune of the universe would keep.
    json kept = json::array();
    for (const std::string& symbol : prune_universe(report.per_symbol)) kept.push_back(symbol);
    doc["kept_universe"] = kept;

    // Table-1-shaped summary: nine kpi rows with benchmark/strategy/flag.
    json table = json::array();
    for (std::string_view name : kKpiNames) {
        std::string n(name);
        const Metric& s = report.average_portfolio.strategy.by_name(n);
        const Metric& b = report.average_portfolio.benchmark.by_name(n);
        table.push_back(json{{"kpi", n},
                             {"benchmark", metric_to_json(b)},
                             {"strategy", metric_to_json(s)},
                             {"flag", to_string(compare_metric(n, s, b))}});
    }
    table.push_back(json{{"kpi", "psbbr"},
                         {"benchmark", "NA"},
                         {"strategy", metric_to_json(report.psbbr)},
                         {"flag", "NA"}});
    table.push_back(json{{"kpi", "psbbs"},
                         {"benchmark", "NA"},
                         {"strategy", metric_to_json(report.psbbs)},
                         {"flag", "NA"}});
    doc["table"] = table;
    return doc.dump(2) + "\n";
}

std::string portfolio_report_csv(const PortfolioReport& report) {
    std::string out =
        "symbol,side,sharpe,total_return,cagr,max_drawdown,win_rate,profit_factor,volatility\n";
    auto append = [&out](const std::string& symbol, const std::string& side,
                         const KpiReport& r) {
        out += symbol + "," + side;
        for (std::string_view name : kKpiNames) {
            out += ',';
            out += r.by_name(std::string(name)).to_string();
        }
        out += '\n';
    };
    for (const auto& [symbol, pair] : report.per_symbol) {
        append(symbol, "strategy", pair.strategy);
        append(symbol, "benchmark", pair.benchmark);
    }
    append("PORTFOLIO", "strategy", report.average_portfolio.strategy);
    append("PORTFOLIO", "benchmark", report.average_portfolio.benchmark);
    return out;
}

}  // namespace treestrat::kpi
