#include "memtrade/metrics.hpp"

#include "memtrade/errors.hpp"
#include "memtrade/market_data.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace memtrade {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sample_std(const std::vector<double>& values) {
    const std::size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

} // namespace

double cumulative_return(const std::vector<double>& strategy_returns) {
    if (strategy_returns.empty()) {
        std::cerr << "warning: cumulative_return over empty series, reporting 0\n";
        return 0.0;
    }
    double sum = 0.0;
    for (double r : strategy_returns) sum += r;
    return 100.0 * sum;
}

double sharpe(const std::vector<double>& strategy_returns, double risk_free_daily,
              const MetricsOptions& options) {
    if (strategy_returns.size() < 2) {
        throw UndefinedMetricError("sharpe: needs at least 2 observations");
    }
    double mean = 0.0;
    for (double r : strategy_returns) mean += r;
    mean /= static_cast<double>(strategy_returns.size());
    const double sd = sample_std(strategy_returns);
    if (sd == 0.0) {
        throw UndefinedMetricError("sharpe: zero return variance");
    }
    double value = (mean - risk_free_daily) / sd;
    if (options.annualize_sharpe) value *= std::sqrt(options.annual_trading_days);
    return value;
}

double annualized_volatility(const std::vector<double>& strategy_returns,
                             const MetricsOptions& options) {
    if (strategy_returns.size() < 2) {
        throw UndefinedMetricError("annualized_volatility: needs at least 2 observations");
    }
    return 100.0 * sample_std(strategy_returns) * std::sqrt(options.annual_trading_days);
}

double max_drawdown(const std::vector<double>& portfolio_values) {
    if (portfolio_values.empty()) {
        throw UndefinedMetricError("max_drawdown: empty value series");
    }
    double peak = portfolio_values.front();
    double worst = 0.0;
    for (double value : portfolio_values) {
        if (value <= 0.0) {
            throw ArgumentError("max_drawdown: portfolio values must be positive");
        }
        peak = std::max(peak, value);
        worst = std::max(worst, (peak - value) / peak);
    }
    return 100.0 * worst;
}

std::vector<double> portfolio_values_from_returns(const std::vector<double>& strategy_returns) {
    std::vector<double> values;
    values.reserve(strategy_returns.size() + 1);
    double cumulative = 0.0;
    values.push_back(1.0);
    for (double r : strategy_returns) {
        cumulative += r;
        values.push_back(std::exp(cumulative));
    }
    return values;
}

Metrics metrics_from_returns(const std::vector<double>& strategy_returns,
                             const MetricsOptions& options) {
    Metrics m;
    m.cr_percent = cumulative_return(strategy_returns);
    try {
        m.sr = sharpe(strategy_returns, options.risk_free_daily, options);
    } catch (const UndefinedMetricError&) {
        m.sr = kNaN;
    }
    try {
        m.av_percent = annualized_volatility(strategy_returns, options);
    } catch (const UndefinedMetricError&) {
        m.av_percent = kNaN;
    }
    try {
        m.mdd_percent = max_drawdown(portfolio_values_from_returns(strategy_returns));
    } catch (const UndefinedMetricError&) {
        m.mdd_percent = kNaN;
    }
    return m;
}

std::vector<double> test_range_log_returns(const Environment& env) {
    const std::vector<Date> days = env.trading_days(env.test_range);
    if (days.size() < 2) {
        throw ConfigError("test range needs at least 2 trading days");
    }
    std::vector<double> returns;
    returns.reserve(days.size() - 1);
    for (std::size_t i = 0; i + 1 < days.size(); ++i) {
        const auto a = env.bars[static_cast<std::size_t>(env.bar_index(days[i]))].adjusted_close;
        const auto b =
            env.bars[static_cast<std::size_t>(env.bar_index(days[i + 1]))].adjusted_close;
        returns.push_back(std::log(b / a));
    }
    return returns;
}

Metrics buy_and_hold(const Environment& env, const MetricsOptions& options) {
    return metrics_from_returns(test_range_log_returns(env), options);
}

} // namespace memtrade
