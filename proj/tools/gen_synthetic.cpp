// Generates the bundled synthetic minute-bar universe: four symbols over 15
// train days (Jan 2022) and 7 test days (Jan 2023), 375 bars per session.
// BRAVO has deterministic index gaps, CHARLIE has a 2:1 split mid-train with a
// matching daily adjustment file. Prices are rounded to 2 decimals.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "treestrat/csv.hpp"
#include "treestrat/data_pipeline.hpp"
#include "treestrat/time.hpp"

using namespace treestrat;

namespace {

struct Rng {
    std::mt19937 gen;
    explicit Rng(std::uint32_t seed) : gen(seed) {}
    double uniform() { return (static_cast<double>(gen()) + 0.5) / 4294967296.0; }
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct Day {
    int year;
    unsigned month;
    unsigned day;
};

const std::vector<Day> kTrainDays = {
    {2022, 1, 3},  {2022, 1, 4},  {2022, 1, 5},  {2022, 1, 6},  {2022, 1, 7},
    {2022, 1, 10}, {2022, 1, 11}, {2022, 1, 12}, {2022, 1, 13}, {2022, 1, 14},
    {2022, 1, 17}, {2022, 1, 18}, {2022, 1, 19}, {2022, 1, 20}, {2022, 1, 21}};
const std::vector<Day> kTestDays = {{2023, 1, 2}, {2023, 1, 3}, {2023, 1, 4}, {2023, 1, 5},
                                    {2023, 1, 6}, {2023, 1, 9}, {2023, 1, 10}};

struct SymbolSpec {
    const char* name;
    std::uint32_t seed;
    double start_price;
    double drift;
    double vol;
    bool gappy;            // drop ~1% of minutes
    bool mean_reverting;   // pull log-price back toward the start
    bool split;            // 2:1 split on 2022-01-12 with a daily file
};

const SymbolSpec kSymbols[] = {
    {"ALPHA", 101, 100.0, 3.0e-5, 8.0e-4, false, false, false},
    {"BRAVO", 202, 250.0, -1.0e-5, 1.2e-3, true, false, false},
    {"CHARLIE", 303, 120.0, 1.5e-5, 1.0e-3, false, false, true},
    {"DELTA", 404, 80.0, 0.0, 9.0e-4, false, true, false},
};

void generate_symbol(const SymbolSpec& spec, const std::string& dir) {
    Rng rng(spec.seed);
    const Date split_date = make_date(2022, 1, 12);

    std::string bars = "timestamp,open,high,low,close,volume\n";
    std::string daily = "date,close,adjusted_close\n";

    double close = spec.start_price;  // adjusted (continuous) scale
    const double log_anchor = std::log(spec.start_price);
    std::size_t minute_counter = 0;

    std::vector<Day> all_days = kTrainDays;
    all_days.insert(all_days.end(), kTestDays.begin(), kTestDays.end());

    for (const Day& d : all_days) {
        Date date = make_date(d.year, d.month, d.day);
        double factor = (spec.split && date < split_date) ? 0.5 : 1.0;
        double last_raw_close = 0.0;
        for (int i = 0; i < 375; ++i, ++minute_counter) {
            double open = close;
            double step = spec.drift + spec.vol * rng.normal();
            if (spec.mean_reverting) step += -0.02 * (std::log(close) - log_anchor);
            step = std::clamp(step, -0.03, 0.03);
            close = close * (1.0 + step);

            double wick_up = std::abs(rng.normal()) * spec.vol * 0.5;
            double wick_down = std::abs(rng.normal()) * spec.vol * 0.5;
            double high = std::max(open, close) * (1.0 + wick_up);
            double low = std::min(open, close) * (1.0 - wick_down);
            double volume = std::floor(600.0 + 900.0 * rng.uniform());

            bool skip = spec.gappy && (minute_counter % 97 == 13);

            // raw file values: adjusted / factor, rounded to ticks
            double ro = round2(open / factor);
            double rc = round2(close / factor);
            double rh = round2(high / factor);
            double rl = round2(low / factor);
            rh = std::max({rh, ro, rc});
            rl = std::min({rl, ro, rc});
            double rv = std::floor(volume * factor);
            last_raw_close = rc;

            if (skip) continue;
            int minutes = 9 * 60 + 15 + i;
            Timestamp ts = make_timestamp(d.year, d.month, d.day, minutes / 60, minutes % 60, 0,
                                          330);
            bars += to_iso(ts);
            bars += ',' + csv::format_double(ro);
            bars += ',' + csv::format_double(rh);
            bars += ',' + csv::format_double(rl);
            bars += ',' + csv::format_double(rc);
            bars += ',' + csv::format_double(rv);
            bars += '\n';
        }
        if (spec.split) {
            daily += to_string(date);
            daily += ',' + csv::format_double(last_raw_close);
            daily += ',' + csv::format_double(last_raw_close * factor);
            daily += '\n';
        }
    }

    csv::write_file(dir + "/" + spec.name + ".csv", bars);
    if (spec.split) csv::write_file(dir + "/" + spec.name + ".daily.csv", daily);
}

}  // namespace

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "data/synthetic";
    std::filesystem::create_directories(dir);
    for (const SymbolSpec& spec : kSymbols) generate_symbol(spec, dir);
    std::printf("wrote synthetic universe to %s\n", dir.c_str());
    return 0;
}
