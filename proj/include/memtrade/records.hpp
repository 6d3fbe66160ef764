#pragma once

#include "memtrade/backbone.hpp"
#include "memtrade/dates.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace memtrade {

// One test-phase trading day. The final day of the range carries a decision but
// no realized trade (there is no next price), so `realized` is false and both
// return fields are zero there.
struct DailyRecord {
    Date date;
    TradeAction action = TradeAction::hold;
    int position = 0;               // Buy:+1, Hold:0, Sell:-1
    double log_return_asset = 0.0;  // ln(p_{t+1} / p_t)
    double strategy_return = 0.0;   // log_return_asset * position
    double pnl_cumulative = 0.0;
    std::array<std::vector<std::int64_t>, 3> retrieved_ids; // per layer
    bool realized = false;
    std::string rationale;
    bool fallback = false; // decision came from the Hold fallback path
};

} // namespace memtrade
