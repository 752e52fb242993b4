#include "treestrat/data_pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "treestrat/csv.hpp"

namespace treestrat::data {

namespace {

constexpr std::string_view kBarHeader = "timestamp,open,high,low,close,volume";

[[noreturn]] void row_error(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

void check_bar_invariants(const Bar& b, const std::string& path, std::size_t line_no) {
    if (b.open <= 0.0 || b.high <= 0.0 || b.low <= 0.0 || b.close <= 0.0)
        row_error(path, line_no, "non-positive price");
    if (b.volume < 0.0) row_error(path, line_no, "negative volume");
    if (b.low > std::min(b.open, b.close) || b.high < std::max(b.open, b.close))
        row_error(path, line_no, "OHLC ordering violated (low/high do not bracket open/close)");
}

}  // namespace

const SymbolColumns& AlignedPanel::at(const std::string& symbol) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
        if (symbols[i] == symbol) return columns[i];
    throw std::runtime_error("symbol not in panel: " + symbol);
}

bool AlignedPanel::has(const std::string& symbol) const {
    return std::find(symbols.begin(), symbols.end(), symbol) != symbols.end();
}

BarSeries ingest_bars(const std::string& path, const std::string& symbol) {
    std::vector<std::string> lines = csv::read_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty file");
    if (lines[0] != kBarHeader)
        throw std::runtime_error(path + ": bad header, expected '" + std::string(kBarHeader) + "'");

    std::vector<Bar> bars;
    bars.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::size_t line_no = i + 1;
        auto fields = csv::split_line(lines[i]);
        if (fields.size() != 6)
            row_error(path, line_no, "malformed row: expected 6 fields, got " +
                                         std::to_string(fields.size()));
        Bar b;
        try {
            b.timestamp = parse_iso(fields[0]);
            b.open = csv::parse_double(fields[1]);
            b.high = csv::parse_double(fields[2]);
            b.low = csv::parse_double(fields[3]);
            b.close = csv::parse_double(fields[4]);
            b.volume = csv::parse_double(fields[5]);
        } catch (const std::exception& e) {
            row_error(path, line_no, e.what());
        }
        check_bar_invariants(b, path, line_no);
        bars.push_back(b);
    }

    // Sort by instant keeping file order within duplicates, then keep the last
    // record of each duplicate group (vendors resend corrections last).
    std::stable_sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
        return a.timestamp.epoch_sec < b.timestamp.epoch_sec;
    });
    std::vector<Bar> out;
    out.reserve(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (i + 1 < bars.size() &&
            bars[i + 1].timestamp.epoch_sec == bars[i].timestamp.epoch_sec)
            continue;
        out.push_back(bars[i]);
    }
    return BarSeries{symbol, std::move(out)};
}

AdjustmentFactorSeries compute_adjustment_factors(const std::map<Date, double>& daily_close,
                                                  const std::map<Date, double>& daily_adjusted_close,
                                                  const std::string& symbol) {
    if (daily_close.size() != daily_adjusted_close.size())
        throw std::runtime_error("adjustment inputs for " + symbol +
                                 " cover different date sets");
    AdjustmentFactorSeries out;
    out.symbol = symbol;
    out.entries.reserve(daily_close.size());
    for (const auto& [date, close] : daily_close) {
        auto it = daily_adjusted_close.find(date);
        if (it == daily_adjusted_close.end())
            throw std::runtime_error("adjusted close missing for " + symbol + " on " +
                                     to_string(date));
        if (close <= 0.0)
            throw std::runtime_error("non-positive close for " + symbol + " on " +
                                     to_string(date));
        if (it->second <= 0.0)
            throw std::runtime_error("non-positive adjusted close for " + symbol + " on " +
                                     to_string(date));
        out.entries.emplace_back(date, it->second / close);
    }
    return out;
}

std::pair<std::map<Date, double>, std::map<Date, double>> load_daily_closes(
    const std::string& path) {
    std::vector<std::string> lines = csv::read_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty file");
    if (lines[0] != "date,close,adjusted_close")
        throw std::runtime_error(path + ": bad header, expected 'date,close,adjusted_close'");
    std::map<Date, double> close, adjusted;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = csv::split_line(lines[i]);
        if (fields.size() != 3)
            row_error(path, i + 1, "malformed row: expected 3 fields");
        try {
            Date d = parse_date(fields[0]);
            close[d] = csv::parse_double(fields[1]);
            adjusted[d] = csv::parse_double(fields[2]);
        } catch (const std::exception& e) {
            row_error(path, i + 1, e.what());
        }
    }
    return {std::move(close), std::move(adjusted)};
}

BarSeries apply_adjustment(const BarSeries& series, const AdjustmentFactorSeries& factors) {
    std::map<Date, double> by_date(factors.entries.begin(), factors.entries.end());
    BarSeries out;
    out.symbol = series.symbol;
    out.bars.reserve(series.bars.size());
    for (const Bar& b : series.bars) {
        Date d = local_date(b.timestamp);
        auto it = by_date.find(d);
        if (it == by_date.end())
            throw std::runtime_error("no adjustment factor for " + series.symbol + " on " +
                                     to_string(d));
        double f = it->second;
        if (f <= 0.0)
            throw std::runtime_error("non-positive adjustment factor for " + series.symbol +
                                     " on " + to_string(d));
        out.bars.push_back(Bar{b.timestamp, b.open * f, b.high * f, b.low * f, b.close * f,
                               b.volume / f});
    }
    return out;
}

AlignedPanel union_align(const std::vector<BarSeries>& series_set) {
    if (series_set.empty()) throw std::runtime_error("union_align: empty input collection");
    for (const BarSeries& s : series_set)
        if (s.bars.empty())
            throw std::runtime_error("union_align: empty series for " + s.symbol);

    // Union index keyed by instant; the representative offset comes from the
    // first series (input order) that carries the instant.
    std::map<std::int64_t, Timestamp> instants;
    for (const BarSeries& s : series_set)
        for (const Bar& b : s.bars) instants.emplace(b.timestamp.epoch_sec, b.timestamp);

    AlignedPanel panel;
    panel.index.reserve(instants.size());
    for (const auto& [_, ts] : instants) panel.index.push_back(ts);

    const std::size_t n = panel.index.size();
    for (const BarSeries& s : series_set) {
        SymbolColumns cols;
        cols.open.resize(n);
        cols.high.resize(n);
        cols.low.resize(n);
        cols.close.resize(n);
        cols.volume.resize(n);
        cols.interpolated.assign(n, 0);

        // raw[j] is the next raw bar at or after index position i
        std::size_t j = 0;
        const std::vector<Bar>& raw = s.bars;
        for (std::size_t i = 0; i < n; ++i) {
            std::int64_t t = panel.index[i].epoch_sec;
            while (j < raw.size() && raw[j].timestamp.epoch_sec < t) ++j;
            if (j < raw.size() && raw[j].timestamp.epoch_sec == t) {
                cols.open[i] = raw[j].open;
                cols.high[i] = raw[j].high;
                cols.low[i] = raw[j].low;
                cols.close[i] = raw[j].close;
                cols.volume[i] = raw[j].volume;
                continue;
            }
            cols.interpolated[i] = 1;
            const Bar* prev = (j > 0) ? &raw[j - 1] : nullptr;
            const Bar* next = (j < raw.size()) ? &raw[j] : nullptr;
            if (prev && next) {
                double span = static_cast<double>(next->timestamp.epoch_sec -
                                                  prev->timestamp.epoch_sec);
                double w = static_cast<double>(t - prev->timestamp.epoch_sec) / span;
                auto lerp = [w](double a, double b) { return a + (b - a) * w; };
                cols.open[i] = lerp(prev->open, next->open);
                cols.high[i] = lerp(prev->high, next->high);
                cols.low[i] = lerp(prev->low, next->low);
                cols.close[i] = lerp(prev->close, next->close);
                cols.volume[i] = lerp(prev->volume, next->volume);
            } else {
                const Bar* edge = prev ? prev : next;
                cols.open[i] = edge->open;
                cols.high[i] = edge->high;
                cols.low[i] = edge->low;
                cols.close[i] = edge->close;
                cols.volume[i] = edge->volume;
            }
        }
        panel.symbols.push_back(s.symbol);
        panel.columns.push_back(std::move(cols));
    }
    return panel;
}

AlignedPanel slice_panel(const AlignedPanel& panel, const TimeRange& range) {
    auto lo = std::lower_bound(panel.index.begin(), panel.index.end(), range.start,
                               [](const Timestamp& a, const Timestamp& b) {
                                   return a.epoch_sec < b.epoch_sec;
                               });
    auto hi = std::lower_bound(panel.index.begin(), panel.index.end(), range.end,
                               [](const Timestamp& a, const Timestamp& b) {
                                   return a.epoch_sec < b.epoch_sec;
                               });
    std::size_t a = static_cast<std::size_t>(lo - panel.index.begin());
    std::size_t b = static_cast<std::size_t>(hi - panel.index.begin());

    AlignedPanel out;
    out.index.assign(panel.index.begin() + a, panel.index.begin() + b);
    out.symbols = panel.symbols;
    out.columns.reserve(panel.columns.size());
    for (const SymbolColumns& c : panel.columns) {
        SymbolColumns s;
        s.open.assign(c.open.begin() + a, c.open.begin() + b);
        s.high.assign(c.high.begin() + a, c.high.begin() + b);
        s.low.assign(c.low.begin() + a, c.low.begin() + b);
        s.close.assign(c.close.begin() + a, c.close.begin() + b);
        s.volume.assign(c.volume.begin() + a, c.volume.begin() + b);
        s.interpolated.assign(c.interpolated.begin() + a, c.interpolated.begin() + b);
        out.columns.push_back(std::move(s));
    }
    return out;
}

std::pair<AlignedPanel, AlignedPanel> split_panel(const AlignedPanel& panel,
                                                  const SplitRanges& ranges) {
    if (!ranges.train.valid() || !ranges.test.valid())
        throw std::runtime_error("split_panel: empty or inverted range");
    if (ranges.train.end.epoch_sec > ranges.test.start.epoch_sec)
        throw std::runtime_error("split_panel: train range overlaps test range");
    AlignedPanel train = slice_panel(panel, ranges.train);
    AlignedPanel test = slice_panel(panel, ranges.test);
    if (train.index.empty()) throw std::runtime_error("split_panel: train slice is empty");
    if (test.index.empty()) throw std::runtime_error("split_panel: test slice is empty");
    return {std::move(train), std::move(test)};
}

BarSeries panel_to_series(const AlignedPanel& panel, const std::string& symbol) {
    const SymbolColumns& c = panel.at(symbol);
    BarSeries out;
    out.symbol = symbol;
    out.bars.reserve(panel.index.size());
    for (std::size_t i = 0; i < panel.index.size(); ++i)
        out.bars.push_back(Bar{panel.index[i], c.open[i], c.high[i], c.low[i], c.close[i],
                               c.volume[i]});
    return out;
}

void save_panel(const AlignedPanel& panel, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::string index_csv = "timestamp\n";
    for (const Timestamp& t : panel.index) {
        index_csv += to_iso(t);
        index_csv += '\n';
    }
    csv::write_file(dir + "/index.csv", index_csv);

    for (std::size_t s = 0; s < panel.symbols.size(); ++s) {
        const SymbolColumns& c = panel.columns[s];
        std::string body = "open,high,low,close,volume,interpolated\n";
        for (std::size_t i = 0; i < panel.index.size(); ++i) {
            body += csv::format_double(c.open[i]);
            body += ',';
            body += csv::format_double(c.high[i]);
            body += ',';
            body += csv::format_double(c.low[i]);
            body += ',';
            body += csv::format_double(c.close[i]);
            body += ',';
            body += csv::format_double(c.volume[i]);
            body += ',';
            body += c.interpolated[i] ? '1' : '0';
            body += '\n';
        }
        csv::write_file(dir + "/" + panel.symbols[s] + ".csv", body);
    }
}

AlignedPanel load_panel(const std::string& dir) {
    AlignedPanel panel;
    std::vector<std::string> index_lines = csv::read_lines(dir + "/index.csv");
    if (index_lines.empty() || index_lines[0] != "timestamp")
        throw std::runtime_error(dir + "/index.csv: bad header");
    for (std::size_t i = 1; i < index_lines.size(); ++i)
        panel.index.push_back(parse_iso(index_lines[i]));

    std::set<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name == "index.csv" || entry.path().extension() != ".csv") continue;
        names.insert(entry.path().stem().string());
    }
    for (const std::string& symbol : names) {
        std::string path = dir + "/" + symbol + ".csv";
        std::vector<std::string> lines = csv::read_lines(path);
        if (lines.empty() || lines[0] != "open,high,low,close,volume,interpolated")
            throw std::runtime_error(path + ": bad header");
        if (lines.size() - 1 != panel.index.size())
            throw std::runtime_error(path + ": row count does not match index length");
        SymbolColumns c;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            auto fields = csv::split_line(lines[i]);
            if (fields.size() != 6) row_error(path, i + 1, "malformed row: expected 6 fields");
            try {
                c.open.push_back(csv::parse_double(fields[0]));
                c.high.push_back(csv::parse_double(fields[1]));
                c.low.push_back(csv::parse_double(fields[2]));
                c.close.push_back(csv::parse_double(fields[3]));
                c.volume.push_back(csv::parse_double(fields[4]));
                if (fields[5] == "0")
                    c.interpolated.push_back(0);
                else if (fields[5] == "1")
                    c.interpolated.push_back(1);
                else
                    throw std::runtime_error("interpolated flag must be 0 or 1");
            } catch (const std::exception& e) {
                row_error(path, i + 1, e.what());
            }
        }
        panel.symbols.push_back(symbol);
        panel.columns.push_back(std::move(c));
    }
    return panel;
}

void save_bars(const BarSeries& series, const std::string& path) {
    std::string body(kBarHeader);
    body += '\n';
    for (const Bar& b : series.bars) {
        body += to_iso(b.timestamp);
        body += ',';
        body += csv::format_double(b.open);
        body += ',';
        body += csv::format_double(b.high);
        body += ',';
        body += csv::format_double(b.low);
        body += ',';
        body += csv::format_double(b.close);
        body += ',';
        body += csv::format_double(b.volume);
        body += '\n';
    }
    csv::write_file(path, body);
}

BarSeries restrict_bars(const BarSeries& series, const TimeRange& range) {
    BarSeries out;
    out.symbol = series.symbol;
    for (const Bar& b : series.bars)
        if (range.contains(b.timestamp)) out.bars.push_back(b);
    return out;
}

}  // namespace treestrat::data
