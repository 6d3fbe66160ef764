#pragma once

#include <vector>

namespace memtrade {

struct Environment;

struct MetricsOptions {
    double risk_free_daily = 0.0;
    bool annualize_sharpe = true;       // multiply by sqrt(252)
    double annual_trading_days = 252.0;
};

// The four headline numbers, as percentages where noted. Fields are NaN when
// the metric is undefined for the inputs (e.g. Sharpe with zero variance).
struct Metrics {
    double cr_percent = 0.0;
    double sr = 0.0;
    double av_percent = 0.0;
    double mdd_percent = 0.0;
};

// 100 * sum of daily log returns. Empty input yields 0 (with a stderr warning).
double cumulative_return(const std::vector<double>& strategy_returns);

// (mean - rf) / sample std, annualized by sqrt(252) unless disabled.
// Throws UndefinedMetricError for fewer than 2 observations or zero variance.
double sharpe(const std::vector<double>& strategy_returns, double risk_free_daily,
              const MetricsOptions& options = {});

// 100 * sample std * sqrt(252). Throws UndefinedMetricError for fewer than 2
// observations.
double annualized_volatility(const std::vector<double>& strategy_returns,
                             const MetricsOptions& options = {});

// 100 * max over t <= u of (P_t - P_u) / P_t. Linear running-peak scan.
// Throws UndefinedMetricError on empty input.
double max_drawdown(const std::vector<double>& portfolio_values);

// Portfolio value series implied by daily log returns: 1, e^r1, e^(r1+r2), ...
std::vector<double> portfolio_values_from_returns(const std::vector<double>& strategy_returns);

// All four metrics from one return series. Undefined metrics come back as NaN.
Metrics metrics_from_returns(const std::vector<double>& strategy_returns,
                             const MetricsOptions& options = {});

// Metrics of the always-long policy over the environment's test range.
Metrics buy_and_hold(const Environment& env, const MetricsOptions& options = {});

// Log returns between consecutive test-range trading days (n-1 values for n days).
std::vector<double> test_range_log_returns(const Environment& env);

} // namespace memtrade
