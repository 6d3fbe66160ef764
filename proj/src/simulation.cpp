#include "memtrade/simulation.hpp"

#include "memtrade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

namespace memtrade {

double discounted_return(const RunReport& report, double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) {
        throw ArgumentError("discounted_return: alpha must be in (0, 1]");
    }
    double total = 0.0;
    double weight = 1.0;
    for (const DailyRecord& record : report.records) {
        if (!record.realized) continue;
        total += weight * record.strategy_return;
        weight *= alpha;
    }
    return total;
}

namespace {

AgentConfig effective_agent_config(const ExperimentSetup& setup, const SimulationConfig& config) {
    AgentConfig agent = setup.agent;
    agent.k_top = config.k_top;
    agent.temperature = config.temperature;
    return agent;
}

int position_for(TradeAction action, int previous, bool hold_keeps_position) {
    switch (action) {
        case TradeAction::buy: return 1;
        case TradeAction::sell: return -1;
        case TradeAction::hold: return hold_keeps_position ? previous : 0;
    }
    return 0;
}

const EmbeddingProvider& require_embedder(const ExperimentSetup& setup) {
    if (!setup.embedder) {
        throw ConfigError("experiment setup needs an embedding provider");
    }
    return *setup.embedder;
}

} // namespace

EpisodeRunner::EpisodeRunner(const Environment& env, const ExperimentSetup& setup,
                             const SimulationConfig& config, std::uint64_t episode_seed,
                             const std::string& transcript_path,
                             const std::string& snapshot_path)
    : env_(&env),
      setup_(&setup),
      config_(config),
      episode_seed_(episode_seed),
      rng_(episode_seed),
      backbone_(setup.backbone_factory(episode_seed)),
      store_(setup.memory, require_embedder(setup)),
      agent_(setup.profile, effective_agent_config(setup, config), setup.templates, store_,
             *backbone_) {
    if (config_.reflect_every_days < 1) {
        throw ConfigError("reflect_every_days must be >= 1");
    }
    agent_.set_momentum_window(config_.k_momentum);
    snapshot_path_ = snapshot_path;
    if (!transcript_path.empty()) {
        transcript_ = std::make_unique<TranscriptWriter>(transcript_path);
        backbone_->set_transcript(transcript_->sink());
    }
}

void EpisodeRunner::ingest_day(Date day, WarmupSummary* summary) {
    if (auto it = env_->news.find(day); it != env_->news.end()) {
        for (const NewsItem& item : it->second) {
            const IngestResult result = agent_.summarize_and_store(item, day, rng_);
            if (summary) {
                ++summary->items_ingested;
                if (result.pass_through) ++summary->pass_through;
            }
        }
    }
    if (auto it = env_->filings.find(day); it != env_->filings.end()) {
        for (const FilingSummary& item : it->second) {
            const IngestResult result = agent_.summarize_and_store(item, day, rng_);
            if (summary) {
                ++summary->items_ingested;
                if (result.pass_through) ++summary->pass_through;
            }
        }
    }
}

WarmupSummary EpisodeRunner::run_warmup() {
    const std::vector<Date> days = env_->trading_days(env_->warmup_range);
    if (days.size() < 2) {
        throw ConfigError("warm-up needs at least 2 trading days, found " +
                          std::to_string(days.size()));
    }

    WarmupSummary summary;
    summary.days = static_cast<int>(days.size());
    const TranscriptSink sink = transcript_ ? transcript_->sink() : TranscriptSink{};

    for (Date day : days) {
        ingest_day(day, &summary);
        const MarketObservation obs =
            observation_at(*env_, day, Phase::warmup, config_.k_momentum);
        const DecisionOutcome outcome = agent_.decide(obs, Phase::warmup, 0.0, rng_, sink);
        summary.directions.push_back(outcome.decision.action);
        store_.purge(day);
    }
    summary.reflections_stored = static_cast<int>(
        std::count_if(store_.events().begin(), store_.events().end(),
                      [](const MemoryEvent& e) { return e.source == MemorySource::reflection; }));

    if (!snapshot_path_.empty()) {
        std::ofstream out(snapshot_path_);
        if (!out.is_open()) {
            throw ConfigError("cannot write memory snapshot: " + snapshot_path_);
        }
        store_.save_snapshot(out);
    }

    warmup_summary_ = summary;
    warmup_done_ = true;
    return summary;
}

void EpisodeRunner::assert_no_leakage(const MarketObservation& obs, Date day) const {
    // Recompute the observation against a copy truncated strictly after `day`;
    // any difference means a test-phase value depended on future data.
    Environment truncated;
    truncated.symbol = env_->symbol;
    truncated.asset_class = env_->asset_class;
    truncated.warmup_range = env_->warmup_range;
    truncated.test_range = {env_->test_range.start, day};
    for (const PriceBar& bar : env_->bars) {
        if (bar.date <= day) truncated.bars.push_back(bar);
    }
    for (const auto& [date, items] : env_->news) {
        if (date <= day) truncated.news[date] = items;
    }
    for (const auto& [date, items] : env_->filings) {
        if (date <= day) truncated.filings[date] = items;
    }

    const MarketObservation replay = observation_at(truncated, day, Phase::test, config_.k_momentum);
    if (replay.momentum != obs.momentum || replay.adjusted_close != obs.adjusted_close ||
        replay.news.size() != obs.news.size() || replay.filings.size() != obs.filings.size()) {
        throw InternalError("no-leakage assertion failed for " + day.to_string());
    }
}

RunReport EpisodeRunner::run_test() {
    if (!warmup_done_) {
        throw ConfigError("run_test requires run_warmup on the same store first");
    }
    const std::vector<Date> days = env_->trading_days(env_->test_range);
    if (days.empty()) {
        throw ConfigError("test range has no trading days");
    }

    RunReport report;
    report.symbol = env_->symbol;
    report.asset_class = env_->asset_class;
    report.config = config_;
    report.warmup_range = env_->warmup_range;
    report.test_range = env_->test_range;
    report.epoch_seed = episode_seed_;
    report.warmup = warmup_summary_;
    if (transcript_) report.transcript_path = transcript_->path();

    const TranscriptSink sink = transcript_ ? transcript_->sink() : TranscriptSink{};
    double pnl = 0.0;
    int previous_position = 0;

    for (std::size_t i = 0; i < days.size(); ++i) {
        const Date day = days[i];
        ingest_day(day, nullptr);

        const MarketObservation obs = observation_at(*env_, day, Phase::test, config_.k_momentum);
        assert_no_leakage(obs, day);

        const DecisionOutcome outcome = agent_.decide(obs, Phase::test, pnl, rng_, sink);

        DailyRecord record;
        record.date = day;
        record.action = outcome.decision.action;
        record.position = position_for(record.action, previous_position, config_.hold_keeps_position);
        record.retrieved_ids = outcome.presented_ids;
        record.rationale = outcome.immediate.text;
        record.fallback = outcome.fallback;
        record.realized = i + 1 < days.size();
        if (record.realized) {
            const auto here = env_->bars[static_cast<std::size_t>(env_->bar_index(day))];
            const auto next = env_->bars[static_cast<std::size_t>(env_->bar_index(days[i + 1]))];
            record.log_return_asset = std::log(next.adjusted_close / here.adjusted_close);
            record.strategy_return = record.log_return_asset * record.position;
            pnl += record.strategy_return;
        }
        record.pnl_cumulative = pnl;
        previous_position = record.position;
        report.records.push_back(std::move(record));

        const bool cadence_hit = (i + 1) % static_cast<std::size_t>(config_.reflect_every_days) == 0;
        const bool pnl_hit = report.records.back().realized &&
                             std::abs(report.records.back().strategy_return) >
                                 config_.reflect_pnl_threshold;
        if (cadence_hit || pnl_hit) {
            const std::size_t window = std::min<std::size_t>(
                report.records.size(), static_cast<std::size_t>(config_.reflect_every_days));
            agent_.extended_reflect(
                std::span<const DailyRecord>(report.records.data() + report.records.size() - window,
                                             window),
                day, rng_, sink);
        }

        store_.purge(day);
    }

    std::vector<double> realized_returns;
    for (const DailyRecord& record : report.records) {
        if (record.realized) realized_returns.push_back(record.strategy_return);
    }
    report.metrics = metrics_from_returns(realized_returns, setup_->metrics);
    return report;
}

namespace {

bool nan_equal(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

// Lower-middle median; NaNs sort last so defined values win the median slot.
double median_of(std::vector<double> values) {
    std::stable_sort(values.begin(), values.end(), [](double a, double b) {
        if (std::isnan(a)) return false;
        if (std::isnan(b)) return true;
        return a < b;
    });
    return values[(values.size() - 1) / 2];
}

} // namespace

ExperimentResult run_experiment(const Environment& env, const SimulationConfig& config,
                                const ExperimentSetup& setup) {
    if (config.epochs < 1) {
        throw ConfigError("epochs must be >= 1");
    }
    if (config.alpha_discount <= 0.0 || config.alpha_discount > 1.0) {
        throw ConfigError("discount alpha must be in (0, 1]");
    }

    if (!setup.transcript_dir.empty()) {
        std::filesystem::create_directories(setup.transcript_dir);
    }
    if (!setup.snapshot_dir.empty()) {
        std::filesystem::create_directories(setup.snapshot_dir);
    }

    ExperimentResult result;
    result.epochs.resize(static_cast<std::size_t>(config.epochs));

    auto run_epoch = [&](int epoch) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(epoch);
        std::string transcript_path;
        if (!setup.transcript_dir.empty()) {
            transcript_path =
                setup.transcript_dir + "/transcript_epoch" + std::to_string(epoch) + ".jsonl";
        }
        std::string snapshot_path;
        if (!setup.snapshot_dir.empty()) {
            snapshot_path =
                setup.snapshot_dir + "/memory_epoch" + std::to_string(epoch) + ".jsonl";
        }
        try {
            EpisodeRunner runner(env, setup, config, seed, transcript_path, snapshot_path);
            runner.run_warmup();
            RunReport report = runner.run_test();
            report.epoch = epoch;
            result.epochs[static_cast<std::size_t>(epoch)] = std::move(report);
        } catch (const Error& ex) {
            throw Error("epoch " + std::to_string(epoch) + " aborted: " + ex.what());
        }
    };

    const int jobs = std::max(1, setup.jobs);
    if (jobs == 1) {
        for (int epoch = 0; epoch < config.epochs; ++epoch) run_epoch(epoch);
    } else {
        // Epochs share only the immutable environment, so batches are safe.
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.epochs));
        for (int base = 0; base < config.epochs; base += jobs) {
            std::vector<std::thread> workers;
            for (int epoch = base; epoch < std::min(base + jobs, config.epochs); ++epoch) {
                workers.emplace_back([&, epoch] {
                    try {
                        run_epoch(epoch);
                    } catch (...) {
                        failures[static_cast<std::size_t>(epoch)] = std::current_exception();
                    }
                });
            }
            for (std::thread& worker : workers) worker.join();
        }
        for (const std::exception_ptr& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    const std::size_t n = result.epochs.size();
    std::vector<double> cr(n), sr(n), av(n), mdd(n);
    for (std::size_t i = 0; i < n; ++i) {
        cr[i] = result.epochs[i].metrics.cr_percent;
        sr[i] = result.epochs[i].metrics.sr;
        av[i] = result.epochs[i].metrics.av_percent;
        mdd[i] = result.epochs[i].metrics.mdd_percent;
    }
    const double cr_med = median_of(cr), sr_med = median_of(sr), av_med = median_of(av),
                 mdd_med = median_of(mdd);

    std::size_t selected = n; // sentinel
    for (std::size_t i = 0; i < n; ++i) {
        if (nan_equal(cr[i], cr_med) && nan_equal(sr[i], sr_med) && nan_equal(av[i], av_med) &&
            nan_equal(mdd[i], mdd_med)) {
            selected = i;
            break;
        }
    }
    if (selected < n) {
        result.selected = selected;
        result.selection_note =
            "all four metric medians coincide in epoch " + std::to_string(selected);
    } else {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (std::isnan(sr[a])) return false;
            if (std::isnan(sr[b])) return true;
            return sr[a] < sr[b];
        });
        result.selected = order[(n - 1) / 2];
        result.selection_note =
            "metric medians split across epochs; selected the median-SR epoch " +
            std::to_string(result.selected);
    }
    return result;
}

} // namespace memtrade
