#include "memtrade/market_data.hpp"

#include "memtrade/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace memtrade {

const char* to_string(AssetClass value) {
    switch (value) {
        case AssetClass::stock: return "stock";
        case AssetClass::crypto: return "crypto";
        case AssetClass::etf: return "etf";
    }
    return "?";
}

const char* to_string(Sentiment value) {
    switch (value) {
        case Sentiment::positive: return "positive";
        case Sentiment::negative: return "negative";
        case Sentiment::neutral: return "neutral";
    }
    return "?";
}

const char* to_string(FilingForm value) {
    return value == FilingForm::form_10k ? "10-K" : "10-Q";
}

const char* to_string(Phase value) {
    return value == Phase::warmup ? "warmup" : "test";
}

AssetClass asset_class_from_string(const std::string& text) {
    if (text == "stock") return AssetClass::stock;
    if (text == "crypto") return AssetClass::crypto;
    if (text == "etf") return AssetClass::etf;
    throw ValidationError("unknown asset class: '" + text + "'");
}

Sentiment sentiment_from_string(const std::string& text) {
    if (text == "positive") return Sentiment::positive;
    if (text == "negative") return Sentiment::negative;
    if (text == "neutral") return Sentiment::neutral;
    throw ValidationError("unknown sentiment: '" + text + "'");
}

FilingForm filing_form_from_string(const std::string& text) {
    if (text == "10-K") return FilingForm::form_10k;
    if (text == "10-Q") return FilingForm::form_10q;
    throw ValidationError("unknown filing form type: '" + text + "'");
}

std::ptrdiff_t Environment::bar_index(Date date) const {
    auto it = std::lower_bound(bars.begin(), bars.end(), date,
                               [](const PriceBar& bar, Date d) { return bar.date < d; });
    if (it == bars.end() || it->date != date) return -1;
    return it - bars.begin();
}

std::vector<Date> Environment::trading_days(const DateRange& range) const {
    std::vector<Date> days;
    for (const PriceBar& bar : bars) {
        if (range.contains(bar.date)) days.push_back(bar.date);
    }
    return days;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_price(const std::string& text, std::size_t row, const char* what) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(text, &pos);
        if (pos != text.size() || !std::isfinite(value)) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw ParseError("price CSV row " + std::to_string(row) + ": bad " + what + " '" +
                         text + "'");
    }
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

std::vector<PriceBar> load_price_series(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw ConfigError("cannot open price CSV: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("price CSV " + path + ": missing header");
    }
    if (strip_cr(line) != "date,open,high,low,close,adj_close,volume") {
        throw ParseError("price CSV " + path +
                         ": header must be 'date,open,high,low,close,adj_close,volume'");
    }

    std::vector<PriceBar> bars;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_row(line);
        if (fields.size() != 7) {
            throw ParseError("price CSV row " + std::to_string(row) + ": expected 7 fields, got " +
                             std::to_string(fields.size()));
        }
        PriceBar bar;
        try {
            bar.date = Date::parse(fields[0]);
        } catch (const ParseError& ex) {
            throw ParseError("price CSV row " + std::to_string(row) + ": " + ex.what());
        }
        bar.open = parse_price(fields[1], row, "open");
        bar.high = parse_price(fields[2], row, "high");
        bar.low = parse_price(fields[3], row, "low");
        bar.close = parse_price(fields[4], row, "close");
        bar.adjusted_close = parse_price(fields[5], row, "adj_close");
        try {
            std::size_t pos = 0;
            bar.volume = std::stoll(fields[6], &pos);
            if (pos != fields[6].size()) throw std::invalid_argument(fields[6]);
        } catch (const std::exception&) {
            throw ParseError("price CSV row " + std::to_string(row) + ": bad volume '" +
                             fields[6] + "'");
        }

        if (bar.low > std::min(bar.open, bar.close) || std::max(bar.open, bar.close) > bar.high) {
            throw ValidationError("price CSV row " + std::to_string(row) +
                                  ": OHLC ordering violated (low <= open/close <= high)");
        }
        if (bar.adjusted_close <= 0) {
            throw ValidationError("price CSV row " + std::to_string(row) +
                                  ": adjusted close must be positive");
        }
        if (bar.volume < 0) {
            throw ValidationError("price CSV row " + std::to_string(row) +
                                  ": volume must be non-negative");
        }
        bars.push_back(bar);
    }

    std::stable_sort(bars.begin(), bars.end(),
                     [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < bars.size(); ++i) {
        if (bars[i].date == bars[i - 1].date) {
            throw ValidationError("price CSV: duplicate date " + bars[i].date.to_string());
        }
    }
    return bars;
}

namespace {

nlohmann::json parse_jsonl_record(const std::string& line, const std::string& path,
                                  std::size_t line_no) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(path + " line " + std::to_string(line_no) + ": " + ex.what());
    }
}

std::string require_string(const nlohmann::json& record, const char* field,
                           const std::string& path, std::size_t line_no) {
    if (!record.contains(field) || !record[field].is_string()) {
        throw ParseError(path + " line " + std::to_string(line_no) + ": missing field '" +
                         field + "'");
    }
    return record[field].get<std::string>();
}

} // namespace

std::vector<NewsItem> load_news_feed(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw ConfigError("cannot open news feed: " + path);
    }
    std::vector<NewsItem> items;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const nlohmann::json record = parse_jsonl_record(line, path, line_no);
        NewsItem item;
        item.id = require_string(record, "id", path, line_no);
        try {
            item.date = Date::parse(require_string(record, "date", path, line_no));
            item.text = require_string(record, "text", path, line_no);
            item.sentiment = sentiment_from_string(require_string(record, "sentiment", path, line_no));
        } catch (const ValidationError& ex) {
            throw ValidationError(path + " line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const ParseError& ex) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + ex.what());
        }
        if (!seen_ids.insert(item.id).second) {
            throw ValidationError(path + " line " + std::to_string(line_no) +
                                  ": duplicate news id '" + item.id + "'");
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<FilingSummary> load_filings(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw ConfigError("cannot open filings feed: " + path);
    }
    std::vector<FilingSummary> items;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const nlohmann::json record = parse_jsonl_record(line, path, line_no);
        FilingSummary item;
        item.id = require_string(record, "id", path, line_no);
        try {
            item.date = Date::parse(require_string(record, "date", path, line_no));
            item.form_type = filing_form_from_string(require_string(record, "form_type", path, line_no));
            item.summary = require_string(record, "summary", path, line_no);
        } catch (const ValidationError& ex) {
            throw ValidationError(path + " line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const ParseError& ex) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + ex.what());
        }
        if (!seen_ids.insert(item.id).second) {
            throw ValidationError(path + " line " + std::to_string(line_no) +
                                  ": duplicate filing id '" + item.id + "'");
        }
        items.push_back(std::move(item));
    }
    return items;
}

Environment build_environment(std::vector<PriceBar> bars, std::vector<NewsItem> news,
                              std::vector<FilingSummary> filings, DateRange warmup_range,
                              DateRange test_range, const std::string& symbol,
                              AssetClass asset_class, BuildStats* stats) {
    if (warmup_range.empty() || test_range.empty()) {
        throw ConfigError("warm-up and test ranges must be non-empty");
    }
    if (!(warmup_range.end < test_range.start)) {
        throw ConfigError("warm-up range must end strictly before the test range begins (" +
                          warmup_range.end.to_string() + " vs " + test_range.start.to_string() +
                          ")");
    }

    Environment env;
    env.symbol = symbol;
    env.asset_class = asset_class;
    env.bars = std::move(bars);
    env.warmup_range = warmup_range;
    env.test_range = test_range;

    // The loaders guarantee this; programmatic callers must too.
    for (std::size_t i = 1; i < env.bars.size(); ++i) {
        if (!(env.bars[i - 1].date < env.bars[i].date)) {
            throw ValidationError("bars must be strictly increasing in date (" +
                                  env.bars[i].date.to_string() + ")");
        }
    }

    for (const DateRange* range : {&warmup_range, &test_range}) {
        if (env.trading_days(*range).empty()) {
            throw ConfigError("no trading days inside range " + range->start.to_string() + ".." +
                              range->end.to_string());
        }
    }

    // Attach each item to the next trading day at or after its date (weekend
    // news informs Monday's decision); drop anything outside the data window.
    BuildStats local;
    const Date window_start = warmup_range.start;
    const Date window_end = test_range.end;
    auto attach_day = [&](Date date) -> std::ptrdiff_t {
        if (date < window_start || date > window_end) return -1;
        auto it = std::lower_bound(env.bars.begin(), env.bars.end(), date,
                                   [](const PriceBar& bar, Date d) { return bar.date < d; });
        if (it == env.bars.end() || it->date > window_end) return -1;
        return it - env.bars.begin();
    };

    for (NewsItem& item : news) {
        const std::ptrdiff_t idx = attach_day(item.date);
        if (idx < 0) {
            ++local.news_dropped;
            continue;
        }
        env.news[env.bars[static_cast<std::size_t>(idx)].date].push_back(std::move(item));
    }
    for (FilingSummary& item : filings) {
        const std::ptrdiff_t idx = attach_day(item.date);
        if (idx < 0) {
            ++local.filings_dropped;
            continue;
        }
        env.filings[env.bars[static_cast<std::size_t>(idx)].date].push_back(std::move(item));
    }
    if (stats) *stats = local;
    return env;
}

MarketObservation observation_at(const Environment& env, Date date, Phase phase, int k) {
    if (k < 1) {
        throw ArgumentError("observation_at: k must be >= 1");
    }
    if (!env.range_for(phase).contains(date)) {
        throw LookupError("observation_at: " + date.to_string() + " is outside the " +
                          to_string(phase) + " range");
    }
    const std::ptrdiff_t idx = env.bar_index(date);
    if (idx < 0) {
        throw LookupError("observation_at: " + date.to_string() + " is not a trading day");
    }

    MarketObservation obs;
    obs.date = date;
    obs.adjusted_close = env.bars[static_cast<std::size_t>(idx)].adjusted_close;

    if (phase == Phase::warmup) {
        if (static_cast<std::size_t>(idx + 1) >= env.bars.size()) {
            throw WindowError("observation_at: no next trading day after " + date.to_string());
        }
        obs.momentum = env.bars[static_cast<std::size_t>(idx + 1)].adjusted_close -
                       obs.adjusted_close;
    } else {
        if (idx < k) {
            throw WindowError("observation_at: fewer than " + std::to_string(k) +
                              " trading days before " + date.to_string());
        }
        obs.momentum = std::log(obs.adjusted_close /
                                env.bars[static_cast<std::size_t>(idx - k)].adjusted_close);
    }

    if (auto it = env.news.find(date); it != env.news.end()) obs.news = it->second;
    if (auto it = env.filings.find(date); it != env.filings.end()) obs.filings = it->second;
    return obs;
}

} // namespace memtrade
