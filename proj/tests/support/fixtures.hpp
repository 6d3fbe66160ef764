#pragma once

#include "memtrade/backbone.hpp"
#include "memtrade/market_data.hpp"
#include "memtrade/simulation.hpp"

#include <httplib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace memtrade::testing {

// Weekday-only calendar starting at a Monday, so fixtures exercise the
// non-trading-day attachment rule.
inline Date fixture_start() { return Date::parse("2024-01-01"); }

inline std::vector<Date> weekday_series(Date start, std::size_t count) {
    std::vector<Date> days;
    Date d = start;
    while (days.size() < count) {
        const int weekday = ((d.serial() % 7) + 7) % 7; // 1970-01-01 was a Thursday
        if (weekday != 2 && weekday != 3) {             // serial%7: 2=Sat, 3=Sun
            days.push_back(d);
        }
        d = d + 1;
    }
    return days;
}

inline std::vector<PriceBar> make_bars(const std::vector<double>& closes,
                                       Date start = fixture_start(), bool weekdays_only = true) {
    std::vector<Date> days;
    if (weekdays_only) {
        days = weekday_series(start, closes.size());
    } else {
        for (std::size_t i = 0; i < closes.size(); ++i) days.push_back(start + static_cast<int>(i));
    }
    std::vector<PriceBar> bars;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        PriceBar bar;
        bar.date = days[i];
        bar.close = closes[i];
        bar.adjusted_close = closes[i];
        bar.open = closes[i] * 0.995;
        bar.high = closes[i] * 1.01;
        bar.low = closes[i] * 0.99;
        bar.volume = 1000000;
        bars.push_back(bar);
    }
    return bars;
}

// Splits the close series into the first `warmup_days` (warm-up) and the rest
// (test) by date.
inline Environment make_env(const std::vector<double>& closes, std::size_t warmup_days,
                            std::vector<NewsItem> news = {},
                            std::vector<FilingSummary> filings = {},
                            const std::string& symbol = "TEST") {
    auto bars = make_bars(closes);
    const DateRange warmup{bars.front().date, bars[warmup_days - 1].date};
    const DateRange test{bars[warmup_days].date, bars.back().date};
    return build_environment(std::move(bars), std::move(news), std::move(filings), warmup, test,
                             symbol);
}

inline std::vector<double> random_walk(std::mt19937_64& rng, std::size_t length,
                                       double start = 100.0, double scale = 0.02) {
    std::vector<double> closes{start};
    for (std::size_t i = 1; i < length; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        closes.push_back(closes.back() * std::exp((u - 0.5) * 2.0 * scale));
    }
    return closes;
}

// Backbone that always answers the same action regardless of the prompt (the
// policy-equivalence and protocol tests drive episodes with it).
class ForcedPolicyBackbone final : public ChatBackbone {
public:
    explicit ForcedPolicyBackbone(TradeAction action) : action_(action) {}

    std::string complete(const CompletionRequest& request) override {
        (void)request;
        return render_decision({action_, "forced policy", {}});
    }

private:
    TradeAction action_;
};

// Backbone cycling through a fixed action pattern, one step per test-phase
// decision prompt; everything else gets a plain text reply.
class PatternPolicyBackbone final : public ChatBackbone {
public:
    explicit PatternPolicyBackbone(std::vector<TradeAction> pattern)
        : pattern_(std::move(pattern)) {}

    std::string complete(const CompletionRequest& request) override {
        if (request.user_prompt.find("Task: decide-test") == std::string::npos) {
            return "noted";
        }
        const TradeAction action = pattern_[index_ % pattern_.size()];
        ++index_;
        return render_decision({action, "pattern policy", {}});
    }

private:
    std::vector<TradeAction> pattern_;
    std::size_t index_ = 0;
};

inline ExperimentSetup basic_setup(const EmbeddingProvider& embedder, BackboneFactory factory,
                                   const std::string& transcript_dir = {}) {
    ExperimentSetup setup;
    setup.profile.symbol = "TEST";
    setup.embedder = &embedder;
    setup.backbone_factory = std::move(factory);
    setup.transcript_dir = transcript_dir;
    return setup;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("memtrade_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string str() const { return path_.string(); }

private:
    static int& counter() {
        static int value = 0;
        return value;
    }
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

// Local HTTP stub for exercising the remote wire protocol offline.
class StubHttpServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    StubHttpServer(const std::string& path, Handler handler) {
        server_.Post(path, std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubHttpServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string endpoint(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace memtrade::testing
