#pragma once

// Independent naive reference implementations used only by tests. Each is
// written straight from the defining formula, favoring directness over speed,
// and stays separate from the library code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "treestrat/cart.hpp"

namespace oracles {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::vector<double> returns(std::span<const double> close, std::size_t lag) {
    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = 0; t < close.size(); ++t)
        if (t >= lag) out[t] = close[t] / close[t - lag] - 1.0;
    return out;
}

inline std::vector<double> rsi(std::span<const double> close, std::size_t period) {
    const std::size_t n = close.size();
    std::vector<double> gain(n, 0.0), loss(n, 0.0), out(n, kNaN);
    for (std::size_t t = 1; t < n; ++t) {
        double diff = close[t] - close[t - 1];
        if (diff > 0.0) gain[t] = diff;
        if (diff < 0.0) loss[t] = -diff;
    }
    if (n <= period) return out;
    double ag = 0.0, al = 0.0;
    for (std::size_t t = 1; t <= period; ++t) {
        ag += gain[t] / static_cast<double>(period);
        al += loss[t] / static_cast<double>(period);
    }
    for (std::size_t t = period; t < n; ++t) {
        if (t > period) {
            ag = (ag * static_cast<double>(period - 1) + gain[t]) / static_cast<double>(period);
            al = (al * static_cast<double>(period - 1) + loss[t]) / static_cast<double>(period);
        }
        if (ag == 0.0 && al == 0.0)
            out[t] = 50.0;
        else if (al == 0.0)
            out[t] = 100.0;
        else if (ag == 0.0)
            out[t] = 0.0;
        else
            out[t] = 100.0 - 100.0 / (1.0 + ag / al);
    }
    return out;
}

inline std::vector<double> adx(std::span<const double> high, std::span<const double> low,
                               std::span<const double> close, std::size_t period) {
    const std::size_t n = close.size();
    std::vector<double> out(n, kNaN);
    if (n <= 2 * period) return out;
    std::vector<double> pdm(n, 0.0), ndm(n, 0.0), tr(n, 0.0), dx(n, kNaN);
    for (std::size_t t = 1; t < n; ++t) {
        double up = high[t] - high[t - 1];
        double dn = low[t - 1] - low[t];
        if (up > dn && up > 0.0) pdm[t] = up;
        if (dn > up && dn > 0.0) ndm[t] = dn;
        double a = high[t] - low[t];
        double b = std::abs(high[t] - close[t - 1]);
        double c = std::abs(low[t] - close[t - 1]);
        tr[t] = std::max(a, std::max(b, c));
    }
    double sp = 0.0, sn = 0.0, st = 0.0;
    for (std::size_t t = 1; t <= period; ++t) {
        sp += pdm[t];
        sn += ndm[t];
        st += tr[t];
    }
    sp /= static_cast<double>(period);
    sn /= static_cast<double>(period);
    st /= static_cast<double>(period);
    for (std::size_t t = period; t < n; ++t) {
        if (t > period) {
            sp = (sp * static_cast<double>(period - 1) + pdm[t]) / static_cast<double>(period);
            sn = (sn * static_cast<double>(period - 1) + ndm[t]) / static_cast<double>(period);
            st = (st * static_cast<double>(period - 1) + tr[t]) / static_cast<double>(period);
        }
        double dip = st > 0.0 ? 100.0 * sp / st : 0.0;
        double din = st > 0.0 ? 100.0 * sn / st : 0.0;
        dx[t] = (dip + din) > 0.0 ? 100.0 * std::abs(dip - din) / (dip + din) : 0.0;
    }
    double sum = 0.0;
    for (std::size_t t = period; t <= 2 * period - 1; ++t) sum += dx[t];
    double a = sum / static_cast<double>(period);
    out[2 * period - 1] = a;
    for (std::size_t t = 2 * period; t < n; ++t) {
        a = (a * static_cast<double>(period - 1) + dx[t]) / static_cast<double>(period);
        out[t] = a;
    }
    return out;
}

inline std::vector<double> sma(std::span<const double> close, std::size_t period) {
    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = period - 1; t < close.size(); ++t) {
        double sum = 0.0;
        for (std::size_t k = 0; k < period; ++k) sum += close[t - period + 1 + k];
        out[t] = sum / static_cast<double>(period);
    }
    return out;
}

inline std::vector<double> sma_close_ratio(std::span<const double> close, std::size_t period) {
    std::vector<double> out = sma(close, period);
    for (std::size_t t = 0; t < close.size(); ++t)
        if (!std::isnan(out[t])) out[t] = out[t] / close[t];
    return out;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (xs[i] - mx) * (ys[i] - my);
        vx += (xs[i] - mx) * (xs[i] - mx);
        vy += (ys[i] - my) * (ys[i] - my);
    }
    if (vx == 0.0 || vy == 0.0) return 0.0;
    return cov / std::sqrt(vx * vy);
}

inline std::vector<double> sma_close_corr(std::span<const double> close, std::size_t period) {
    std::vector<double> sma_series = sma(close, period);
    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = 2 * period - 2; t < close.size(); ++t) {
        std::vector<double> xs(sma_series.begin() + static_cast<std::ptrdiff_t>(t - period + 1),
                               sma_series.begin() + static_cast<std::ptrdiff_t>(t + 1));
        std::vector<double> ys(close.begin() + static_cast<std::ptrdiff_t>(t - period + 1),
                               close.begin() + static_cast<std::ptrdiff_t>(t + 1));
        out[t] = pearson(xs, ys);
    }
    return out;
}

inline double sample_std(std::span<const double> xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline std::vector<double> rolling_volatility(std::span<const double> rets, std::size_t period) {
    std::vector<double> out(rets.size(), kNaN);
    for (std::size_t t = period - 1; t < rets.size(); ++t) {
        bool ok = true;
        std::vector<double> window;
        for (std::size_t k = 0; k < period; ++k) {
            double v = rets[t - period + 1 + k];
            if (std::isnan(v)) ok = false;
            window.push_back(v);
        }
        if (ok) out[t] = sample_std(window);
    }
    return out;
}

inline std::vector<double> vwap_close_ratio(std::span<const double> high,
                                            std::span<const double> low,
                                            std::span<const double> close,
                                            std::span<const double> volume,
                                            std::size_t period) {
    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = period - 1; t < close.size(); ++t) {
        double pv = 0.0, v = 0.0, tps = 0.0;
        for (std::size_t k = 0; k < period; ++k) {
            std::size_t i = t - period + 1 + k;
            double tp = (high[i] + low[i] + close[i]) / 3.0;
            pv += tp * volume[i];
            v += volume[i];
            tps += tp;
        }
        double vwap = v > 0.0 ? pv / v : tps / static_cast<double>(period);
        out[t] = vwap / close[t];
    }
    return out;
}

// --- KPI oracles ---

inline double max_drawdown_quadratic(std::span<const double> equity) {
    double worst = 0.0;
    for (std::size_t peak = 0; peak < equity.size(); ++peak)
        for (std::size_t trough = peak; trough < equity.size(); ++trough)
            worst = std::min(worst, equity[trough] / equity[peak] - 1.0);
    return worst;
}

inline double sharpe(std::span<const double> rets, double ppy, double rf_annual) {
    double rf_per = std::pow(1.0 + rf_annual, 1.0 / ppy) - 1.0;
    double mean = 0.0;
    for (double r : rets) mean += r;
    mean /= static_cast<double>(rets.size());
    return (mean - rf_per) / sample_std(rets) * std::sqrt(ppy);
}

inline double annualized_volatility(std::span<const double> rets, double ppy) {
    return sample_std(rets) * std::sqrt(ppy);
}

// --- exhaustive greedy CART oracle ---

struct OracleSplit {
    std::size_t feature;
    double threshold;
    double gain;
};

inline double gini_of(std::int64_t c0, std::int64_t c1) {
    double n = static_cast<double>(c0 + c1);
    double p0 = static_cast<double>(c0) / n;
    double p1 = static_cast<double>(c1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

// Enumerates every (feature, midpoint) candidate by scratch partitioning.
inline std::optional<OracleSplit> exhaustive_best_split(
    const treestrat::cart::DataView& X, std::span<const int> y,
    const std::vector<std::uint32_t>& rows, double min_gain) {
    std::int64_t c0 = 0, c1 = 0;
    for (std::uint32_t r : rows) (y[r] == 0 ? c0 : c1)++;
    if (c0 + c1 < 2) return std::nullopt;
    double parent = gini_of(c0, c1);
    double n = static_cast<double>(rows.size());

    std::optional<OracleSplit> best;
    for (std::size_t f = 0; f < X.cols; ++f) {
        std::vector<double> values;
        for (std::uint32_t r : rows) values.push_back(X.at(r, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            double thr = (values[i] + values[i + 1]) / 2.0;
            std::int64_t l0 = 0, l1 = 0, r0 = 0, r1 = 0;
            for (std::uint32_t r : rows) {
                if (X.at(r, f) <= thr)
                    (y[r] == 0 ? l0 : l1)++;
                else
                    (y[r] == 0 ? r0 : r1)++;
            }
            if (l0 + l1 == 0 || r0 + r1 == 0) continue;
            double nl = static_cast<double>(l0 + l1);
            double nr = static_cast<double>(r0 + r1);
            double gain = parent - (nl / n) * gini_of(l0, l1) - (nr / n) * gini_of(r0, r1);
            if (gain > min_gain && (!best || gain > best->gain))
                best = OracleSplit{f, thr, gain};
        }
    }
    return best;
}

inline std::unique_ptr<treestrat::cart::TreeNode> exhaustive_build(
    const treestrat::cart::DataView& X, std::span<const int> y,
    const std::vector<std::uint32_t>& rows, int depth,
    const treestrat::cart::TrainConfig& config) {
    std::int64_t c0 = 0, c1 = 0;
    for (std::uint32_t r : rows) (y[r] == 0 ? c0 : c1)++;
    auto leaf = [&]() {
        auto node = std::make_unique<treestrat::cart::TreeNode>();
        node->class_counts = {c0, c1};
        node->prediction = c1 > c0 ? 1 : 0;
        return node;
    };
    if (c0 == 0 || c1 == 0 || depth == config.max_depth ||
        rows.size() < config.min_samples_split)
        return leaf();
    auto split = exhaustive_best_split(X, y, rows, config.min_gain);
    if (!split) return leaf();
    std::vector<std::uint32_t> left_rows, right_rows;
    for (std::uint32_t r : rows) {
        if (X.at(r, split->feature) <= split->threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    auto node = std::make_unique<treestrat::cart::TreeNode>();
    node->feature = static_cast<int>(split->feature);
    node->threshold = split->threshold;
    node->left = exhaustive_build(X, y, left_rows, depth + 1, config);
    node->right = exhaustive_build(X, y, right_rows, depth + 1, config);
    return node;
}

inline treestrat::cart::DecisionTreeModel exhaustive_fit(
    const treestrat::cart::DataView& X, std::span<const int> y,
    const treestrat::cart::TrainConfig& config, std::vector<std::string> names,
    const treestrat::TimeRange& range = {}) {
    std::vector<std::uint32_t> rows(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) rows[i] = static_cast<std::uint32_t>(i);
    treestrat::cart::DecisionTreeModel model;
    model.root = exhaustive_build(X, y, rows, 0, config);
    model.feature_names = std::move(names);
    model.config = config;
    model.train_range = range;
    return model;
}

}  // namespace oracles
