#pragma once

#include "memtrade/dates.hpp"
#include "memtrade/embedding.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace memtrade {

enum class MemoryLayer { shallow, intermediate, deep };
enum class MemorySource { news, filing_10q, filing_10k, reflection };

const char* to_string(MemoryLayer layer);
const char* to_string(MemorySource source);
MemoryLayer memory_layer_from_string(const std::string& text);
MemorySource memory_source_from_string(const std::string& text);

// Per-layer constants: stability Q (days) for the recency curve, the decay base
// for the importance ratio, and the sampling probabilities over the importance
// values {40, 60, 80}.
struct LayerParams {
    MemoryLayer layer = MemoryLayer::shallow;
    double stability_days = 14.0;
    double decay_base = 0.9;
    std::array<double, 3> value_probs{0.8, 0.15, 0.05};
};

struct MemoryParams {
    LayerParams shallow{MemoryLayer::shallow, 14.0, 0.9, {0.8, 0.15, 0.05}};
    LayerParams intermediate{MemoryLayer::intermediate, 90.0, 0.967, {0.05, 0.8, 0.15}};
    LayerParams deep{MemoryLayer::deep, 365.0, 0.988, {0.05, 0.15, 0.8}};
    int promotion_threshold = 3;   // accesses before an event moves one layer deeper
    double boost_per_access = 5.0;
    double purge_recency_floor = 0.05;
    double purge_importance_floor = 5.0; // pre-scaling

    const LayerParams& for_layer(MemoryLayer layer) const;
    void validate() const; // probability triples must sum to 1
};

struct MemoryEvent {
    std::int64_t id = 0;
    MemoryLayer layer = MemoryLayer::shallow;
    std::string text;
    Embedding embedding;
    Date event_date;            // reset to the access date on promotion
    double importance_value = 0; // 40/60/80 at insertion, plus access boosts
    int access_count = 0;
    MemorySource source = MemorySource::news;
};

struct RetrievalScore {
    double recency = 0;           // e^(-delta/Q), in (0, 1]
    double relevancy = 0;         // cosine clamped to [0, 1]
    double importance_raw = 0;    // v * base^delta
    double importance_scaled = 0; // min(raw / 100, 1)
    double gamma = 0;             // recency + relevancy + importance_scaled
};

struct ScoredEvent {
    const MemoryEvent* event;
    RetrievalScore score;
};

struct PromotionRecord {
    std::int64_t id;
    MemoryLayer from;
    MemoryLayer to;
};

struct AccessReport {
    std::vector<std::int64_t> boosted;
    std::vector<PromotionRecord> promotions;
};

// The layered long-term memory: insertion with sampled importance, composite
// scoring (recency + relevancy + importance), per-layer top-K retrieval,
// threshold purging, and access-driven promotion.
//
// Single-writer: one store per episode runner. Concurrent episodes must use
// independent stores.
class MemoryStore {
public:
    MemoryStore(MemoryParams params, const EmbeddingProvider& provider);

    // Routes the source to its layer (news -> shallow, 10-Q -> intermediate,
    // 10-K and reflections -> deep), samples the importance value from the
    // layer's probability triple, and embeds the text. Returns a copy; the
    // stored event may move when the store grows.
    MemoryEvent insert(const std::string& text, MemorySource source, Date date,
                       std::mt19937_64& rng);

    // Inserts a fully specified event (snapshot load, tests). Keeps `next_id`
    // ahead of the given id.
    MemoryEvent insert_event(MemoryEvent event);

    double recency_score(const MemoryEvent& event, Date now) const;

    // Returns {raw, scaled}.
    std::pair<double, double> importance_score(const MemoryEvent& event, Date now) const;

    RetrievalScore score(const MemoryEvent& event, const Embedding& query, Date now) const;

    // For each layer independently: the k highest-gamma live events, descending
    // by gamma, ties broken by smaller id. Events already past a purge threshold
    // at `now` are not live and never returned. Does not touch access counters.
    std::array<std::vector<ScoredEvent>, 3> retrieve_top_k(const Embedding& query, Date now,
                                                           std::size_t k) const;

    // Boosts importance by 5 per event and bumps access counters; at the
    // promotion threshold the event moves one layer deeper, its event date
    // resets to `now` (recency back to 1.0) and its counter restarts.
    AccessReport register_access(const std::vector<std::int64_t>& ids, Date now);

    // Removes every event whose recency has fallen below 0.05 or whose raw
    // importance is under 5. Returns the removed ids.
    std::vector<std::int64_t> purge(Date now);

    const MemoryEvent* find(std::int64_t id) const;
    const EmbeddingProvider& provider() const { return *provider_; }
    std::size_t size() const { return events_.size(); }
    std::size_t layer_size(MemoryLayer layer) const;
    const std::vector<MemoryEvent>& events() const { return events_; }

    static MemoryLayer route(MemorySource source);
    static std::optional<MemoryLayer> deeper(MemoryLayer layer);

    // Importance value sampled from the layer's (p1, p2, p3) over (40, 60, 80).
    static double sample_importance(const LayerParams& layer, std::mt19937_64& rng);

    // Snapshot as versioned JSONL: a header line, then one event per line with
    // the embedding inline.
    void save_snapshot(std::ostream& out) const;
    static MemoryStore load_snapshot(std::istream& in, MemoryParams params,
                                     const EmbeddingProvider& provider);

private:
    bool expired(const MemoryEvent& event, Date now) const;

    MemoryParams params_;
    const EmbeddingProvider* provider_;
    std::vector<MemoryEvent> events_;
    std::int64_t next_id_ = 1;
};

} // namespace memtrade
