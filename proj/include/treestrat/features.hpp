#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treestrat/data_pipeline.hpp"
#include "treestrat/time.hpp"

namespace treestrat::features {

inline constexpr std::size_t kFeatureCount = 9;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "ret_1",  "ret_15", "rsi_14", "adx_14", "sma_close_ratio",
    "sma_close_corr", "vol_14", "vol_210", "vwap_close_ratio"};

std::vector<std::string> feature_name_list();

struct FeatureSpec {
    std::size_t return_lag_short = 1;
    std::size_t return_lag_medium = 15;
    std::size_t rsi_period = 14;
    std::size_t adx_period = 14;
    std::size_t sma_period = 14;
    std::size_t corr_period = 14;
    std::size_t vol_period = 14;
    std::size_t vwap_period = 14;

    void validate() const;  // periods >= 2, return lags >= 1
    std::size_t warmup_length() const;
};

// Row-major matrix of the nine feature columns over the retained (post
// warm-up) rows of one symbol.
struct FeatureMatrix {
    std::string symbol;
    std::vector<Timestamp> index;
    std::vector<double> values;  // index.size() x kFeatureCount
    std::size_t warmup_length = 0;

    std::size_t rows() const { return index.size(); }
    double at(std::size_t row, std::size_t col) const {
        return values[row * kFeatureCount + col];
    }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * kFeatureCount, kFeatureCount};
    }
};

struct LabelVector {
    std::string symbol;
    std::vector<Timestamp> index;
    std::vector<int> values;  // {0, 1}
};

// All per-column operations return a series aligned with the input; warm-up
// positions where the value is undefined hold quiet NaN.

// r_t = close_t / close_{t-lag} - 1
std::vector<double> simple_returns(std::span<const double> close, std::size_t lag);

// Wilder's RSI with arithmetic-mean initialization. Conventions: no losses ->
// 100, no gains -> 0, neither -> 50.
std::vector<double> rsi(std::span<const double> close, std::size_t period);

// Wilder's ADX from directional movement and true range; DI defined as 0 when
// smoothed TR is 0, DX as 0 when DI+ + DI- is 0.
std::vector<double> adx(std::span<const double> high, std::span<const double> low,
                        std::span<const double> close, std::size_t period);

// Trailing arithmetic mean of `period` closes including t, divided by close_t.
std::vector<double> sma_close_ratio(std::span<const double> close, std::size_t period);

// Rolling Pearson correlation of the trailing `period` (SMA_t, close_t) pairs;
// 0 when either window has zero variance.
std::vector<double> sma_close_corr(std::span<const double> close, std::size_t period);

// Trailing sample standard deviation (n-1) of the given return series.
std::vector<double> rolling_volatility(std::span<const double> returns, std::size_t period);

// Trailing VWAP on typical price (H+L+C)/3 divided by close; falls back to the
// mean typical price over a zero-volume window.
std::vector<double> vwap_close_ratio(std::span<const double> high, std::span<const double> low,
                                     std::span<const double> close,
                                     std::span<const double> volume, std::size_t period);

// Computes all nine columns for one symbol of the panel and drops warm-up rows
// from the front. Raw feature values, no scaling.
FeatureMatrix build_features(const data::AlignedPanel& panel, const std::string& symbol,
                             const FeatureSpec& spec);

// Binary next-bar label over feature_index: 1 if the next close return is
// strictly positive, else 0. A feature row at the final price bar has no next
// return and is excluded from the output index.
LabelVector build_labels(std::span<const double> close, std::span<const Timestamp> close_index,
                         std::span<const Timestamp> feature_index, const std::string& symbol);

// Drops any trailing feature rows without a label so X and y align 1:1.
void align_to_labels(FeatureMatrix& features, const LabelVector& labels);

// Feature CSV persistence (`timestamp,<nine columns>[,label]`).
void save_features(const FeatureMatrix& features, const LabelVector* labels,
                   const std::string& path);
std::pair<FeatureMatrix, LabelVector> load_features(const std::string& path,
                                                    const std::string& symbol);

}  // namespace treestrat::features
