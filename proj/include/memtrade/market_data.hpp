#pragma once

#include "memtrade/dates.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace memtrade {

enum class AssetClass { stock, crypto, etf };
enum class Sentiment { positive, negative, neutral };
enum class FilingForm { form_10k, form_10q };
enum class Phase { warmup, test };

const char* to_string(AssetClass value);
const char* to_string(Sentiment value);
const char* to_string(FilingForm value);
const char* to_string(Phase value);
AssetClass asset_class_from_string(const std::string& text);
Sentiment sentiment_from_string(const std::string& text);
FilingForm filing_form_from_string(const std::string& text);

struct PriceBar {
    Date date;
    double open = 0, high = 0, low = 0, close = 0;
    double adjusted_close = 0;
    std::int64_t volume = 0;
};

struct NewsItem {
    std::string id;
    Date date;
    std::string text;
    Sentiment sentiment = Sentiment::neutral;
};

struct FilingSummary {
    std::string id;
    Date date;
    FilingForm form_type = FilingForm::form_10q;
    std::string summary;
};

// What the agent perceives on one trading day. Momentum is the next-day price
// difference (currency) during warm-up and the k-day cumulative log return
// (dimensionless) during the test phase.
struct MarketObservation {
    Date date;
    double adjusted_close = 0;
    double momentum = 0;
    std::vector<NewsItem> news;
    std::vector<FilingSummary> filings;
};

// Date-indexed market data with a leakage-safe warm-up/test split. Immutable
// after construction; safe to read from any number of concurrent episode
// runners. The trading calendar is exactly the set of bar dates.
struct Environment {
    std::string symbol;
    AssetClass asset_class = AssetClass::stock;
    std::vector<PriceBar> bars; // strictly increasing dates
    std::map<Date, std::vector<NewsItem>> news;       // keyed by attached trading day
    std::map<Date, std::vector<FilingSummary>> filings;
    DateRange warmup_range;
    DateRange test_range;

    const DateRange& range_for(Phase phase) const {
        return phase == Phase::warmup ? warmup_range : test_range;
    }

    // Index into `bars`, or -1 when the date is not a trading day.
    std::ptrdiff_t bar_index(Date date) const;
    bool is_trading_day(Date date) const { return bar_index(date) >= 0; }

    // Trading days inside an inclusive range, in order.
    std::vector<Date> trading_days(const DateRange& range) const;
};

struct BuildStats {
    std::size_t news_dropped = 0;
    std::size_t filings_dropped = 0;
};

// CSV with header `date,open,high,low,close,adj_close,volume`, ISO dates,
// dot-decimal. Rows are validated (OHLC ordering, positive adjusted close,
// non-negative volume), sorted ascending, duplicate dates rejected.
std::vector<PriceBar> load_price_series(const std::string& path);

// UTF-8 JSONL, one object per line, fields exactly as typed. Unknown sentiment
// or form strings are rejected; ids must be unique within a feed.
std::vector<NewsItem> load_news_feed(const std::string& path);
std::vector<FilingSummary> load_filings(const std::string& path);

// Assembles the date-indexed environment. Items dated on non-trading days
// attach to the next trading day; items outside [warmup start, test end] are
// dropped and counted in `stats` when given.
Environment build_environment(std::vector<PriceBar> bars, std::vector<NewsItem> news,
                              std::vector<FilingSummary> filings, DateRange warmup_range,
                              DateRange test_range, const std::string& symbol = {},
                              AssetClass asset_class = AssetClass::stock,
                              BuildStats* stats = nullptr);

// The observation for one trading day of the given phase. Warm-up momentum
// looks one day ahead by design; test momentum uses only bars up to `date`.
MarketObservation observation_at(const Environment& env, Date date, Phase phase, int k);

} // namespace memtrade
