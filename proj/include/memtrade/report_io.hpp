#pragma once

#include "memtrade/metrics.hpp"
#include "memtrade/simulation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace memtrade {

// Report serialization is timestamp-free on purpose: two runs with the same
// data, config and seed must produce byte-identical files.
nlohmann::json report_to_json(const RunReport& report, const nlohmann::json& config_echo,
                              const std::string& selection_note);
RunReport report_from_json(const nlohmann::json& root);

// `date,action,position,asset_logret,strategy_ret,cum_pnl`, one row per test day.
std::string daily_records_csv(const RunReport& report);

// `epoch,selected,cr_percent,sr,av_percent,mdd_percent` across all epochs.
std::string epoch_metrics_csv(const ExperimentResult& result);

// Two-row comparison rendered in the leaderboard column order (CR up, SR up,
// AV down, MDD down), as aligned text or CSV.
std::string comparison_table(const Metrics& strategy, const Metrics& baseline);
std::string comparison_csv(const Metrics& strategy, const Metrics& baseline);

// FNV-1a 64 over the file bytes, hex-encoded; recorded next to reports so a
// run directory pins the exact inputs it consumed.
std::string file_checksum(const std::string& path);

} // namespace memtrade
