#pragma once

#include "memtrade/agent.hpp"
#include "memtrade/market_data.hpp"
#include "memtrade/memory.hpp"
#include "memtrade/metrics.hpp"
#include "memtrade/records.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace memtrade {

struct SimulationConfig {
    int k_momentum = 3;   // test-phase momentum window
    int k_top = 5;        // memories retrieved per layer
    int epochs = 5;
    double alpha_discount = 1.0; // in (0, 1]
    std::uint64_t seed = 42;
    double temperature = 0.6;
    int reflect_every_days = 5;          // extended-reflection cadence
    double reflect_pnl_threshold = 0.05; // |daily strategy return| that also triggers one
    bool hold_keeps_position = false;    // alternative position model; the default maps
                                         // the day's action directly to the day's exposure
};

struct WarmupSummary {
    int days = 0;
    int items_ingested = 0;
    int reflections_stored = 0;
    int pass_through = 0;
    std::vector<TradeAction> directions;
};

struct RunReport {
    std::string symbol;
    AssetClass asset_class = AssetClass::stock;
    SimulationConfig config;
    DateRange warmup_range;
    DateRange test_range;
    int epoch = 0;
    std::uint64_t epoch_seed = 0;
    WarmupSummary warmup;
    std::vector<DailyRecord> records; // exactly the test range's trading days
    Metrics metrics;                  // over realized days
    std::string transcript_path;
};

// Sum of alpha^t * strategy_return_t over realized days, t indexed from 0.
double discounted_return(const RunReport& report, double alpha);

using BackboneFactory = std::function<std::unique_ptr<ChatBackbone>(std::uint64_t epoch_seed)>;

// Everything an episode needs besides the environment and the simulation knobs.
struct ExperimentSetup {
    AgentProfile profile;
    AgentConfig agent;
    MemoryParams memory;
    MetricsOptions metrics;
    PromptTemplates templates = PromptTemplates::defaults();
    const EmbeddingProvider* embedder = nullptr;
    BackboneFactory backbone_factory;
    std::string transcript_dir; // empty: no transcripts written
    std::string snapshot_dir;   // empty: no post-warm-up memory snapshots
    int jobs = 1;               // epoch-level parallelism
};

// One POMDP episode: a warm-up pass that populates memory from predetermined
// directions, then the test pass producing daily actions and PnL.
class EpisodeRunner {
public:
    EpisodeRunner(const Environment& env, const ExperimentSetup& setup,
                  const SimulationConfig& config, std::uint64_t episode_seed,
                  const std::string& transcript_path = {},
                  const std::string& snapshot_path = {});

    // For each warm-up day: ingest that day's items, observe the next-day price
    // difference, run the predetermined-direction reflection, purge.
    WarmupSummary run_warmup();

    // For each test day: observe (k-day momentum), decide, realize the position
    // against the next day's price, reflect on cadence, purge. The final day is
    // decided but produces no trade. Must run after run_warmup on this runner.
    RunReport run_test();

    MemoryStore& store() { return store_; }
    Agent& agent() { return agent_; }

private:
    void ingest_day(Date day, WarmupSummary* summary);
    void assert_no_leakage(const MarketObservation& obs, Date day) const;

    const Environment* env_;
    const ExperimentSetup* setup_;
    SimulationConfig config_;
    std::uint64_t episode_seed_;
    std::mt19937_64 rng_;
    std::unique_ptr<ChatBackbone> backbone_;
    MemoryStore store_;
    Agent agent_;
    std::unique_ptr<TranscriptWriter> transcript_;
    std::string snapshot_path_;
    WarmupSummary warmup_summary_;
    bool warmup_done_ = false;
};

struct ExperimentResult {
    std::vector<RunReport> epochs;
    std::size_t selected = 0;
    std::string selection_note;
};

// Runs `config.epochs` independent episodes with seeds seed, seed+1, ... and
// selects the reported trajectory: the epoch holding the medians of all four
// metrics when one does, otherwise the epoch with the median Sharpe ratio
// (lower-middle for even counts; ties break toward the smaller epoch index).
ExperimentResult run_experiment(const Environment& env, const SimulationConfig& config,
                                const ExperimentSetup& setup);

} // namespace memtrade
