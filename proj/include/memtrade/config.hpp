#pragma once

#include "memtrade/agent.hpp"
#include "memtrade/market_data.hpp"
#include "memtrade/memory.hpp"
#include "memtrade/metrics.hpp"
#include "memtrade/simulation.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>

namespace memtrade {

enum class BackboneKind { mock, remote };
enum class EmbeddingKind { local, remote };

// The experiment file: a flat, human-editable `key = value` format with dotted
// keys and '#' comments. Unknown keys are hard errors so a typo in a decay
// constant cannot silently fall back to a default. API keys never appear here;
// they come from MEMTRADE_API_KEY / MEMTRADE_EMBED_API_KEY.
struct ExperimentConfig {
    // asset.*
    std::string symbol;
    AssetClass asset_class = AssetClass::stock;
    std::string price_path;
    std::string news_path;    // optional
    std::string filings_path; // optional

    // dates.*
    DateRange warmup_range;
    DateRange test_range;

    // memory.*
    MemoryParams memory;

    // backbone.*
    BackboneKind backbone_kind = BackboneKind::mock;
    std::string backbone_endpoint;
    std::string backbone_model;
    int backbone_retries = 3;
    int backbone_max_tokens = 1024;
    int backbone_max_in_flight = 4;

    // embedding.*
    EmbeddingKind embedding_kind = EmbeddingKind::local;
    std::size_t embedding_dimension = 64;
    std::string embedding_endpoint;
    std::string embedding_model;
    std::uint64_t embedding_seed = 12345;

    // agent.*
    std::string templates_dir;
    std::size_t summarize_threshold = 1200;
    std::string background;

    // sim.*
    SimulationConfig sim;

    // metrics.*
    MetricsOptions metrics;

    // Loads and validates the file; relative paths resolve against its
    // directory. Referenced data files must exist.
    static ExperimentConfig load(const std::string& path);

    // Loads price/news/filings and assembles the environment.
    Environment load_environment(BuildStats* stats = nullptr) const;

    std::unique_ptr<EmbeddingProvider> make_embedder() const;

    // Per-epoch backbone constructor. Remote configs require the API key
    // environment variable up front.
    BackboneFactory make_backbone_factory() const;

    AgentProfile make_profile() const;
    AgentConfig make_agent_config() const;
    PromptTemplates load_templates() const;

    nlohmann::json echo() const; // config echo embedded in reports
};

} // namespace memtrade
