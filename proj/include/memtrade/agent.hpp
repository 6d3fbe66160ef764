#pragma once

#include "memtrade/backbone.hpp"
#include "memtrade/market_data.hpp"
#include "memtrade/memory.hpp"
#include "memtrade/records.hpp"

#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>

namespace memtrade {

enum class RiskDisposition { seeking, averse };
enum class ReflectionKind { immediate, extended };

const char* to_string(RiskDisposition value);
const char* to_string(ReflectionKind value);

struct AgentProfile {
    std::string role_text;
    std::string background_text;
    RiskDisposition risk_disposition = RiskDisposition::seeking;
    std::string symbol;
};

struct ReflectionEvent {
    Date date;
    std::string text;
    ReflectionKind kind = ReflectionKind::immediate;
};

// Seeking above zero momentum, averse below, unchanged at exactly zero.
AgentProfile update_risk_disposition(AgentProfile profile, double momentum);

// The five prompt boxes. Defaults are built in; any of them can be replaced by
// a plain-text file in a template directory ({name} placeholders).
struct PromptTemplates {
    std::string profile;
    std::string summarize;
    std::string observe;
    std::string reflect_train;
    std::string reflect_test;

    static PromptTemplates defaults();

    // Overrides each template for which "<dir>/<name>.txt" exists.
    static PromptTemplates from_directory(const std::string& dir);
};

// "{name}" substitution; unknown placeholders are left untouched.
std::string render_template(const std::string& text,
                            const std::vector<std::pair<std::string, std::string>>& values);

struct AgentConfig {
    int k_top = 5;
    std::size_t summarize_threshold = 1200; // news shorter than this stores verbatim
    int summarize_max_words = 1000;
    double temperature = 0.6;
    int max_tokens = 1024;
    std::optional<std::uint64_t> seed;
};

struct IngestResult {
    std::int64_t memory_id = 0;
    MemoryLayer layer = MemoryLayer::shallow;
    bool pass_through = false; // backbone failed; truncated original stored
};

struct DecisionOutcome {
    TradeDecision decision;
    ReflectionEvent immediate;
    std::array<std::vector<std::int64_t>, 3> presented_ids;
    std::string query_text;
    bool fallback = false;
};

// Orchestrates profile, perception, working memory and action into the per-day
// decision procedure. One agent per episode; the day loop is inherently
// sequential because each day depends on the previous day's memory mutations.
class Agent {
public:
    Agent(AgentProfile profile, AgentConfig config, PromptTemplates templates,
          MemoryStore& store, ChatBackbone& backbone);

    const AgentProfile& profile() const { return profile_; }

    // Stores one raw item into layered memory: short news verbatim with its
    // sentiment tag appended, longer news and all filings summarized through
    // the backbone first. Backbone failure falls back to storing the truncated
    // original, flagged in the result.
    IngestResult summarize_and_store(const NewsItem& item, Date date, std::mt19937_64& rng);
    IngestResult summarize_and_store(const FilingSummary& item, Date date, std::mt19937_64& rng);

    // The per-day decision. Warm-up: the direction is predetermined by the sign
    // of the next-day price difference and the backbone only explains it (the
    // explanation is stored as a deep-layer reflection). Test: the backbone
    // chooses. Either way the supporting ids get an access boost and the
    // immediate reflection text is recorded.
    DecisionOutcome decide(const MarketObservation& observation, Phase phase,
                           double running_pnl, std::mt19937_64& rng,
                           const TranscriptSink& transcript = {});

    // Periodic retrospective over a trailing window of completed days, inserted
    // into the deep layer. Backbone failure skips with a warning (the
    // reflection is additive). Throws ArgumentError on an empty window.
    std::optional<ReflectionEvent> extended_reflect(std::span<const DailyRecord> window,
                                                    Date date, std::mt19937_64& rng,
                                                    const TranscriptSink& transcript = {});

    const std::string& latest_extended_reflection() const { return latest_extended_; }

private:
    std::string summarize_text(const std::string& document);
    std::string render_system_prompt() const;
    std::string momentum_sentence(const MarketObservation& obs, Phase phase, int k) const;

    AgentProfile profile_;
    AgentConfig config_;
    PromptTemplates templates_;
    MemoryStore* store_;
    ChatBackbone* backbone_;
    std::string latest_extended_;
    int momentum_window_k_ = 3; // echoed in the observe text
public:
    void set_momentum_window(int k) { momentum_window_k_ = k; }
};

} // namespace memtrade
