#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "treestrat/time.hpp"

namespace treestrat::data {

struct Bar {
    Timestamp timestamp;
    double open{0.0};
    double high{0.0};
    double low{0.0};
    double close{0.0};
    double volume{0.0};  // may be fractional after interpolation or adjustment

    friend bool operator==(const Bar&, const Bar&) = default;
};

struct BarSeries {
    std::string symbol;
    std::vector<Bar> bars;  // strictly increasing timestamps, no duplicates
};

struct AdjustmentFactorSeries {
    std::string symbol;
    std::vector<std::pair<Date, double>> entries;  // strictly increasing dates, factor > 0
};

// Universe-wide panel on one shared timestamp index. interpolated[i] is true
// exactly where the raw series lacked index[i] and the cell was filled.
struct SymbolColumns {
    std::vector<double> open, high, low, close, volume;
    std::vector<std::uint8_t> interpolated;
};

struct AlignedPanel {
    std::vector<Timestamp> index;
    std::vector<std::string> symbols;
    std::vector<SymbolColumns> columns;  // parallel to symbols

    const SymbolColumns& at(const std::string& symbol) const;
    bool has(const std::string& symbol) const;
};

struct SplitRanges {
    TimeRange train;
    TimeRange test;
};

// Reads the per-symbol bar CSV (`timestamp,open,high,low,close,volume`).
// Rows are validated, sorted by instant and de-duplicated keeping the last
// record in file order. Errors name the offending line.
BarSeries ingest_bars(const std::string& path, const std::string& symbol);

// factor(d) = adjusted_close(d) / close(d). The two maps must cover the same
// dates and all prices must be positive.
AdjustmentFactorSeries compute_adjustment_factors(const std::map<Date, double>& daily_close,
                                                  const std::map<Date, double>& daily_adjusted_close,
                                                  const std::string& symbol);

// Loads the daily adjustment CSV (`date,close,adjusted_close`) into the two
// maps expected by compute_adjustment_factors.
std::pair<std::map<Date, double>, std::map<Date, double>> load_daily_closes(
    const std::string& path);

// Multiplies O/H/L/C by the bar's trading-day factor and divides volume by it;
// the daily factor is held constant across all of that day's minutes.
BarSeries apply_adjustment(const BarSeries& series, const AdjustmentFactorSeries& factors);

// Index = sorted union of all timestamps. Missing cells are filled by linear
// interpolation in time between the nearest raw neighbors, independently per
// column; at the series edges the nearest raw value is extended.
AlignedPanel union_align(const std::vector<BarSeries>& series_set);

// Restriction of the panel to [range.start, range.end).
AlignedPanel slice_panel(const AlignedPanel& panel, const TimeRange& range);

std::pair<AlignedPanel, AlignedPanel> split_panel(const AlignedPanel& panel,
                                                  const SplitRanges& ranges);

// Recovers the per-symbol raw-equivalent series from a panel (used for
// re-aligning and for alignment idempotence checks).
BarSeries panel_to_series(const AlignedPanel& panel, const std::string& symbol);

// Directory persistence: index.csv plus one SYMBOL.csv per symbol, shortest
// round-trip decimals, bit-exact on reload.
void save_panel(const AlignedPanel& panel, const std::string& dir);
AlignedPanel load_panel(const std::string& dir);

// Writes the bar CSV schema accepted by ingest_bars.
void save_bars(const BarSeries& series, const std::string& path);

// Bars with timestamps in [range.start, range.end).
BarSeries restrict_bars(const BarSeries& series, const TimeRange& range);

}  // namespace treestrat::data
