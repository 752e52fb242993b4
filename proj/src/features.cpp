#include "treestrat/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "treestrat/csv.hpp"

namespace treestrat::features {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool cond, const char* what) {
    if (!cond) throw std::runtime_error(what);
}

// First index whose trailing window of `period` values is fully defined,
// assuming undefined values form a prefix.
std::size_t first_defined(std::span<const double> series) {
    std::size_t i = 0;
    while (i < series.size() && std::isnan(series[i])) ++i;
    return i;
}

}  // namespace

std::vector<std::string> feature_name_list() {
    std::vector<std::string> names;
    names.reserve(kFeatureCount);
    for (std::string_view n : kFeatureNames) names.emplace_back(n);
    return names;
}

void FeatureSpec::validate() const {
    require(return_lag_short >= 1 && return_lag_medium >= 1, "return lags must be >= 1");
    require(rsi_period >= 2 && adx_period >= 2 && sma_period >= 2 && corr_period >= 2 &&
                vol_period >= 2 && vwap_period >= 2,
            "indicator periods must be >= 2");
}

std::size_t FeatureSpec::warmup_length() const {
    std::size_t w = 0;
    w = std::max(w, return_lag_short);
    w = std::max(w, return_lag_medium);
    w = std::max(w, rsi_period);
    w = std::max(w, 2 * adx_period - 1);
    w = std::max(w, sma_period - 1);
    w = std::max(w, 2 * corr_period - 2);
    w = std::max(w, return_lag_short + vol_period - 1);
    w = std::max(w, return_lag_medium + vol_period - 1);
    w = std::max(w, vwap_period - 1);
    return w;
}

std::vector<double> simple_returns(std::span<const double> close, std::size_t lag) {
    require(lag >= 1, "return lag must be >= 1");
    require(close.size() > lag, "series too short for return lag");
    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = lag; t < close.size(); ++t)
        out[t] = close[t] / close[t - lag] - 1.0;
    return out;
}

std::vector<double> rsi(std::span<const double> close, std::size_t period) {
    require(period >= 2, "rsi period must be >= 2");
    require(close.size() > period, "series too short for rsi");
    std::vector<double> out(close.size(), kNaN);

    auto value_at = [](double avg_gain, double avg_loss) {
        if (avg_loss == 0.0 && avg_gain == 0.0) return 50.0;
        if (avg_loss == 0.0) return 100.0;
        if (avg_gain == 0.0) return 0.0;
        return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss);
    };

    double avg_gain = 0.0, avg_loss = 0.0;
    for (std::size_t t = 1; t <= period; ++t) {
        double d = close[t] - close[t - 1];
        avg_gain += std::max(d, 0.0);
        avg_loss += std::max(-d, 0.0);
    }
    avg_gain /= static_cast<double>(period);
    avg_loss /= static_cast<double>(period);
    out[period] = value_at(avg_gain, avg_loss);

    const double p = static_cast<double>(period);
    for (std::size_t t = period + 1; t < close.size(); ++t) {
        double d = close[t] - close[t - 1];
        avg_gain = (avg_gain * (p - 1.0) + std::max(d, 0.0)) / p;
        avg_loss = (avg_loss * (p - 1.0) + std::max(-d, 0.0)) / p;
        out[t] = value_at(avg_gain, avg_loss);
    }
    return out;
}

std::vector<double> adx(std::span<const double> high, std::span<const double> low,
                        std::span<const double> close, std::size_t period) {
    require(period >= 2, "adx period must be >= 2");
    require(high.size() == low.size() && low.size() == close.size(),
            "adx inputs must have equal length");
    require(close.size() > 2 * period, "series too short for adx");
    const std::size_t n = close.size();
    std::vector<double> out(n, kNaN);

    // Directional movement and true range, defined from t = 1.
    std::vector<double> dm_up(n, 0.0), dm_down(n, 0.0), tr(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) {
        double up = high[t] - high[t - 1];
        double down = low[t - 1] - low[t];
        dm_up[t] = (up > down && up > 0.0) ? up : 0.0;
        dm_down[t] = (down > up && down > 0.0) ? down : 0.0;
        tr[t] = std::max({high[t] - low[t], std::abs(high[t] - close[t - 1]),
                          std::abs(low[t] - close[t - 1])});
    }

    const double p = static_cast<double>(period);
    double sm_up = 0.0, sm_down = 0.0, sm_tr = 0.0;
    for (std::size_t t = 1; t <= period; ++t) {
        sm_up += dm_up[t];
        sm_down += dm_down[t];
        sm_tr += tr[t];
    }
    sm_up /= p;
    sm_down /= p;
    sm_tr /= p;

    auto dx_at = [](double sm_up, double sm_down, double sm_tr) {
        double di_up = sm_tr > 0.0 ? 100.0 * sm_up / sm_tr : 0.0;
        double di_down = sm_tr > 0.0 ? 100.0 * sm_down / sm_tr : 0.0;
        double di_sum = di_up + di_down;
        return di_sum > 0.0 ? 100.0 * std::abs(di_up - di_down) / di_sum : 0.0;
    };

    // DX from t = period; ADX seeded as the mean of the first `period` DX
    // values, so it is first defined at t = 2*period - 1.
    double adx_val = dx_at(sm_up, sm_down, sm_tr);
    for (std::size_t t = period + 1; t < n; ++t) {
        sm_up = (sm_up * (p - 1.0) + dm_up[t]) / p;
        sm_down = (sm_down * (p - 1.0) + dm_down[t]) / p;
        sm_tr = (sm_tr * (p - 1.0) + tr[t]) / p;
        double dx = dx_at(sm_up, sm_down, sm_tr);
        if (t < 2 * period - 1) {
            adx_val += dx;
        } else if (t == 2 * period - 1) {
            adx_val = (adx_val + dx) / p;
            out[t] = adx_val;
        } else {
            adx_val = (adx_val * (p - 1.0) + dx) / p;
            out[t] = adx_val;
        }
    }
    return out;
}

std::vector<double> sma_close_ratio(std::span<const double> close, std::size_t period) {
    require(period >= 2, "sma period must be >= 2");
    require(close.size() >= period, "series too short for sma");
    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = period - 1; t < close.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = t + 1 - period; i <= t; ++i) sum += close[i];
        out[t] = (sum / static_cast<double>(period)) / close[t];
    }
    return out;
}

std::vector<double> sma_close_corr(std::span<const double> close, std::size_t period) {
    require(period >= 2, "correlation period must be >= 2");
    require(close.size() >= 2 * period - 1, "series too short for sma/close correlation");
    const std::size_t n = close.size();

    std::vector<double> sma(n, kNaN);
    for (std::size_t t = period - 1; t < n; ++t) {
        double sum = 0.0;
        for (std::size_t i = t + 1 - period; i <= t; ++i) sum += close[i];
        sma[t] = sum / static_cast<double>(period);
    }

    std::vector<double> out(n, kNaN);
    for (std::size_t t = 2 * period - 2; t < n; ++t) {
        std::size_t begin = t + 1 - period;
        double mean_s = 0.0, mean_c = 0.0;
        for (std::size_t i = begin; i <= t; ++i) {
            mean_s += sma[i];
            mean_c += close[i];
        }
        mean_s /= static_cast<double>(period);
        mean_c /= static_cast<double>(period);
        double cov = 0.0, var_s = 0.0, var_c = 0.0;
        for (std::size_t i = begin; i <= t; ++i) {
            double ds = sma[i] - mean_s;
            double dc = close[i] - mean_c;
            cov += ds * dc;
            var_s += ds * ds;
            var_c += dc * dc;
        }
        if (var_s == 0.0 || var_c == 0.0) {
            out[t] = 0.0;
        } else {
            out[t] = std::clamp(cov / std::sqrt(var_s * var_c), -1.0, 1.0);
        }
    }
    return out;
}

std::vector<double> rolling_volatility(std::span<const double> returns, std::size_t period) {
    require(period >= 2, "volatility period must be >= 2");
    require(returns.size() >= period, "series too short for rolling volatility");
    const std::size_t fd = first_defined(returns);
    std::vector<double> out(returns.size(), kNaN);
    if (fd + period - 1 >= returns.size()) return out;
    for (std::size_t t = fd + period - 1; t < returns.size(); ++t) {
        std::size_t begin = t + 1 - period;
        double mean = 0.0;
        for (std::size_t i = begin; i <= t; ++i) mean += returns[i];
        mean /= static_cast<double>(period);
        double ss = 0.0;
        for (std::size_t i = begin; i <= t; ++i) {
            double d = returns[i] - mean;
            ss += d * d;
        }
        out[t] = std::sqrt(ss / static_cast<double>(period - 1));
    }
    return out;
}

std::vector<double> vwap_close_ratio(std::span<const double> high, std::span<const double> low,
                                     std::span<const double> close,
                                     std::span<const double> volume, std::size_t period) {
    require(period >= 2, "vwap period must be >= 2");
    require(high.size() == low.size() && low.size() == close.size() &&
                close.size() == volume.size(),
            "vwap inputs must have equal length");
    require(close.size() >= period, "series too short for vwap");
    for (double v : volume) require(v >= 0.0, "vwap requires non-negative volumes");

    std::vector<double> out(close.size(), kNaN);
    for (std::size_t t = period - 1; t < close.size(); ++t) {
        std::size_t begin = t + 1 - period;
        double pv = 0.0, vol = 0.0, tp_sum = 0.0;
        for (std::size_t i = begin; i <= t; ++i) {
            double tp = (high[i] + low[i] + close[i]) / 3.0;
            pv += tp * volume[i];
            vol += volume[i];
            tp_sum += tp;
        }
        double vwap = vol > 0.0 ? pv / vol : tp_sum / static_cast<double>(period);
        out[t] = vwap / close[t];
    }
    return out;
}

FeatureMatrix build_features(const data::AlignedPanel& panel, const std::string& symbol,
                             const FeatureSpec& spec) {
    spec.validate();
    const data::SymbolColumns& c = panel.at(symbol);
    const std::size_t n = panel.index.size();
    if (n <= spec.warmup_length())
        throw std::runtime_error("panel shorter than feature warm-up for " + symbol);

    std::vector<double> ret_short = simple_returns(c.close, spec.return_lag_short);
    std::vector<double> ret_medium = simple_returns(c.close, spec.return_lag_medium);
    std::array<std::vector<double>, kFeatureCount> cols = {
        std::move(ret_short),
        std::move(ret_medium),
        rsi(c.close, spec.rsi_period),
        adx(c.high, c.low, c.close, spec.adx_period),
        sma_close_ratio(c.close, spec.sma_period),
        sma_close_corr(c.close, spec.corr_period),
        std::vector<double>(),
        std::vector<double>(),
        vwap_close_ratio(c.high, c.low, c.close, c.volume, spec.vwap_period)};
    cols[6] = rolling_volatility(cols[0], spec.vol_period);
    cols[7] = rolling_volatility(cols[1], spec.vol_period);

    // Warm-up is the first row where every column is defined.
    std::size_t warmup = 0;
    for (const auto& col : cols) warmup = std::max(warmup, first_defined(col));

    FeatureMatrix out;
    out.symbol = symbol;
    out.warmup_length = warmup;
    out.index.assign(panel.index.begin() + static_cast<std::ptrdiff_t>(warmup),
                     panel.index.end());
    out.values.resize(out.index.size() * kFeatureCount);
    for (std::size_t r = 0; r < out.index.size(); ++r) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            double v = cols[f][warmup + r];
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite feature value after warm-up for " + symbol);
            out.values[r * kFeatureCount + f] = v;
        }
    }
    return out;
}

LabelVector build_labels(std::span<const double> close, std::span<const Timestamp> close_index,
                         std::span<const Timestamp> feature_index, const std::string& symbol) {
    require(close.size() == close_index.size(), "close series and index must align");
    LabelVector out;
    out.symbol = symbol;
    std::size_t p = 0;
    for (const Timestamp& t : feature_index) {
        while (p < close_index.size() && close_index[p].epoch_sec < t.epoch_sec) ++p;
        if (p >= close_index.size() || close_index[p].epoch_sec != t.epoch_sec)
            throw std::runtime_error("feature index is not a subsequence of the close index");
        if (p + 1 == close_index.size()) break;  // final price bar has no next return
        double next_ret = close[p + 1] / close[p] - 1.0;
        out.index.push_back(t);
        out.values.push_back(next_ret > 0.0 ? 1 : 0);
    }
    return out;
}

void align_to_labels(FeatureMatrix& features, const LabelVector& labels) {
    require(labels.index.size() <= features.index.size(),
            "labels cannot outnumber feature rows");
    for (std::size_t i = 0; i < labels.index.size(); ++i)
        require(labels.index[i] == features.index[i],
                "labels must align with the leading feature rows");
    features.index.resize(labels.index.size());
    features.values.resize(labels.index.size() * kFeatureCount);
}

void save_features(const FeatureMatrix& features, const LabelVector* labels,
                   const std::string& path) {
    std::string body = "timestamp";
    for (std::string_view n : kFeatureNames) {
        body += ',';
        body += n;
    }
    if (labels) body += ",label";
    body += '\n';
    for (std::size_t r = 0; r < features.rows(); ++r) {
        body += to_iso(features.index[r]);
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            body += ',';
            body += csv::format_double(features.at(r, f));
        }
        if (labels) {
            body += ',';
            if (r < labels->values.size()) body += labels->values[r] ? '1' : '0';
        }
        body += '\n';
    }
    csv::write_file(path, body);
}

std::pair<FeatureMatrix, LabelVector> load_features(const std::string& path,
                                                    const std::string& symbol) {
    std::vector<std::string> lines = csv::read_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty file");

    std::string expected = "timestamp";
    for (std::string_view n : kFeatureNames) {
        expected += ',';
        expected += n;
    }
    bool with_label;
    if (lines[0] == expected)
        with_label = false;
    else if (lines[0] == expected + ",label")
        with_label = true;
    else
        throw std::runtime_error(path + ": bad feature header");

    FeatureMatrix features;
    features.symbol = symbol;
    LabelVector labels;
    labels.symbol = symbol;
    const std::size_t want = 1 + kFeatureCount + (with_label ? 1 : 0);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = csv::split_line(lines[i]);
        if (fields.size() != want)
            throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": malformed row");
        Timestamp ts = parse_iso(fields[0]);
        features.index.push_back(ts);
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            features.values.push_back(csv::parse_double(fields[1 + f]));
        if (with_label && !fields[1 + kFeatureCount].empty()) {
            std::int64_t v = csv::parse_int(fields[1 + kFeatureCount]);
            if (v != 0 && v != 1)
                throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                                         ": label must be 0 or 1");
            labels.index.push_back(ts);
            labels.values.push_back(static_cast<int>(v));
        }
    }
    return {std::move(features), std::move(labels)};
}

}  // namespace treestrat::features
