#include "memtrade/report_io.hpp"

#include "memtrade/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace memtrade {
namespace {

nlohmann::json number_or_null(double value) {
    if (std::isnan(value)) return nullptr;
    return value;
}

double number_from(const nlohmann::json& value) {
    if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return value.get<double>();
}

std::string fixed3(double value) {
    if (std::isnan(value)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", value);
    return buf;
}

std::string csv_number(double value) {
    if (std::isnan(value)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

} // namespace

nlohmann::json report_to_json(const RunReport& report, const nlohmann::json& config_echo,
                              const std::string& selection_note) {
    nlohmann::json records = nlohmann::json::array();
    for (const DailyRecord& record : report.records) {
        records.push_back({
            {"date", record.date.to_string()},
            {"action", to_string(record.action)},
            {"position", record.position},
            {"asset_logret", record.log_return_asset},
            {"strategy_ret", record.strategy_return},
            {"cum_pnl", record.pnl_cumulative},
            {"realized", record.realized},
            {"fallback", record.fallback},
            {"retrieved_ids",
             {record.retrieved_ids[0], record.retrieved_ids[1], record.retrieved_ids[2]}},
            {"rationale", record.rationale},
        });
    }

    nlohmann::json warmup_directions = nlohmann::json::array();
    for (TradeAction action : report.warmup.directions) {
        warmup_directions.push_back(to_string(action));
    }

    return nlohmann::json{
        {"symbol", report.symbol},
        {"asset_class", to_string(report.asset_class)},
        {"epoch", report.epoch},
        {"epoch_seed", report.epoch_seed},
        {"warmup_range",
         {{"start", report.warmup_range.start.to_string()},
          {"end", report.warmup_range.end.to_string()}}},
        {"test_range",
         {{"start", report.test_range.start.to_string()},
          {"end", report.test_range.end.to_string()}}},
        {"warmup",
         {{"days", report.warmup.days},
          {"items_ingested", report.warmup.items_ingested},
          {"reflections_stored", report.warmup.reflections_stored},
          {"pass_through", report.warmup.pass_through},
          {"directions", warmup_directions}}},
        {"records", records},
        {"metrics",
         {{"cr_percent", number_or_null(report.metrics.cr_percent)},
          {"sr", number_or_null(report.metrics.sr)},
          {"av_percent", number_or_null(report.metrics.av_percent)},
          {"mdd_percent", number_or_null(report.metrics.mdd_percent)}}},
        // Basename only: the transcript sits next to report.json, and two runs
        // into different directories must still serialize byte-identically.
        {"transcript", std::filesystem::path(report.transcript_path).filename().string()},
        {"selection_note", selection_note},
        {"config", config_echo},
    };
}

RunReport report_from_json(const nlohmann::json& root) {
    RunReport report;
    report.symbol = root.value("symbol", "");
    report.asset_class = asset_class_from_string(root.value("asset_class", "stock"));
    report.epoch = root.value("epoch", 0);
    report.epoch_seed = root.value("epoch_seed", std::uint64_t{0});
    report.warmup_range = {Date::parse(root.at("warmup_range").at("start").get<std::string>()),
                           Date::parse(root.at("warmup_range").at("end").get<std::string>())};
    report.test_range = {Date::parse(root.at("test_range").at("start").get<std::string>()),
                         Date::parse(root.at("test_range").at("end").get<std::string>())};
    report.transcript_path = root.value("transcript", "");

    for (const auto& entry : root.at("records")) {
        DailyRecord record;
        record.date = Date::parse(entry.at("date").get<std::string>());
        record.action = trade_action_from_string(entry.at("action").get<std::string>());
        record.position = entry.at("position").get<int>();
        record.log_return_asset = entry.at("asset_logret").get<double>();
        record.strategy_return = entry.at("strategy_ret").get<double>();
        record.pnl_cumulative = entry.at("cum_pnl").get<double>();
        record.realized = entry.at("realized").get<bool>();
        record.fallback = entry.value("fallback", false);
        record.rationale = entry.value("rationale", "");
        const auto& ids = entry.at("retrieved_ids");
        for (std::size_t layer = 0; layer < 3; ++layer) {
            record.retrieved_ids[layer] = ids.at(layer).get<std::vector<std::int64_t>>();
        }
        report.records.push_back(std::move(record));
    }

    const auto& metrics = root.at("metrics");
    report.metrics.cr_percent = number_from(metrics.at("cr_percent"));
    report.metrics.sr = number_from(metrics.at("sr"));
    report.metrics.av_percent = number_from(metrics.at("av_percent"));
    report.metrics.mdd_percent = number_from(metrics.at("mdd_percent"));
    return report;
}

std::string daily_records_csv(const RunReport& report) {
    std::ostringstream out;
    out << "date,action,position,asset_logret,strategy_ret,cum_pnl\n";
    for (const DailyRecord& record : report.records) {
        out << record.date.to_string() << ',' << to_string(record.action) << ','
            << record.position << ',' << csv_number(record.log_return_asset) << ','
            << csv_number(record.strategy_return) << ',' << csv_number(record.pnl_cumulative)
            << '\n';
    }
    return out.str();
}

std::string epoch_metrics_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "epoch,selected,cr_percent,sr,av_percent,mdd_percent\n";
    for (std::size_t i = 0; i < result.epochs.size(); ++i) {
        const Metrics& m = result.epochs[i].metrics;
        out << i << ',' << (i == result.selected ? 1 : 0) << ',' << csv_number(m.cr_percent)
            << ',' << csv_number(m.sr) << ',' << csv_number(m.av_percent) << ','
            << csv_number(m.mdd_percent) << '\n';
    }
    return out.str();
}

std::string comparison_table(const Metrics& strategy, const Metrics& baseline) {
    std::ostringstream out;
    char line[160];
    // Each arrow is 3 bytes for 1 glyph, so header fields get 2 extra bytes to
    // line up visually with the numeric rows.
    std::snprintf(line, sizeof(line), "%-14s %12s %12s %12s %12s\n", "strategy",
                  "CR%\xE2\x86\x91", "SR\xE2\x86\x91", "AV%\xE2\x86\x93", "MDD%\xE2\x86\x93");
    out << line;
    auto row = [&](const char* name, const Metrics& m) {
        std::snprintf(line, sizeof(line), "%-14s %10s %10s %10s %10s\n", name,
                      fixed3(m.cr_percent).c_str(), fixed3(m.sr).c_str(),
                      fixed3(m.av_percent).c_str(), fixed3(m.mdd_percent).c_str());
        out << line;
    };
    row("agent", strategy);
    row("buy-and-hold", baseline);
    return out.str();
}

std::string comparison_csv(const Metrics& strategy, const Metrics& baseline) {
    std::ostringstream out;
    out << "strategy,cr_percent,sr,av_percent,mdd_percent\n";
    out << "agent," << csv_number(strategy.cr_percent) << ',' << csv_number(strategy.sr) << ','
        << csv_number(strategy.av_percent) << ',' << csv_number(strategy.mdd_percent) << '\n';
    out << "buy-and-hold," << csv_number(baseline.cr_percent) << ',' << csv_number(baseline.sr)
        << ',' << csv_number(baseline.av_percent) << ',' << csv_number(baseline.mdd_percent)
        << '\n';
    return out.str();
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) {
        throw ConfigError("cannot open file for checksum: " + path);
    }
    std::uint64_t h = 14695981039346656037ull;
    char buffer[8192];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buffer[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

} // namespace memtrade
