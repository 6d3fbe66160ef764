#include "memtrade/memory.hpp"

#include "memtrade/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace memtrade {

const char* to_string(MemoryLayer layer) {
    switch (layer) {
        case MemoryLayer::shallow: return "shallow";
        case MemoryLayer::intermediate: return "intermediate";
        case MemoryLayer::deep: return "deep";
    }
    return "?";
}

const char* to_string(MemorySource source) {
    switch (source) {
        case MemorySource::news: return "news";
        case MemorySource::filing_10q: return "filing_10q";
        case MemorySource::filing_10k: return "filing_10k";
        case MemorySource::reflection: return "reflection";
    }
    return "?";
}

MemoryLayer memory_layer_from_string(const std::string& text) {
    if (text == "shallow") return MemoryLayer::shallow;
    if (text == "intermediate") return MemoryLayer::intermediate;
    if (text == "deep") return MemoryLayer::deep;
    throw ParseError("unknown memory layer: " + text);
}

MemorySource memory_source_from_string(const std::string& text) {
    if (text == "news") return MemorySource::news;
    if (text == "filing_10q") return MemorySource::filing_10q;
    if (text == "filing_10k") return MemorySource::filing_10k;
    if (text == "reflection") return MemorySource::reflection;
    throw ParseError("unknown memory source: " + text);
}

const LayerParams& MemoryParams::for_layer(MemoryLayer layer) const {
    switch (layer) {
        case MemoryLayer::shallow: return shallow;
        case MemoryLayer::intermediate: return intermediate;
        case MemoryLayer::deep: return deep;
    }
    throw ArgumentError("invalid layer");
}

void MemoryParams::validate() const {
    for (const LayerParams* lp : {&shallow, &intermediate, &deep}) {
        const double sum = lp->value_probs[0] + lp->value_probs[1] + lp->value_probs[2];
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError(std::string("value probabilities for layer ") +
                              to_string(lp->layer) + " sum to " + std::to_string(sum) +
                              ", expected 1");
        }
        if (lp->stability_days <= 0 || lp->decay_base <= 0 || lp->decay_base >= 1) {
            throw ConfigError(std::string("layer ") + to_string(lp->layer) +
                              ": stability must be > 0 and decay base in (0,1)");
        }
    }
    if (promotion_threshold < 1) {
        throw ConfigError("promotion threshold must be >= 1");
    }
}

MemoryLayer MemoryStore::route(MemorySource source) {
    switch (source) {
        case MemorySource::news: return MemoryLayer::shallow;
        case MemorySource::filing_10q: return MemoryLayer::intermediate;
        case MemorySource::filing_10k: return MemoryLayer::deep;
        case MemorySource::reflection: return MemoryLayer::deep;
    }
    throw ArgumentError("invalid source");
}

std::optional<MemoryLayer> MemoryStore::deeper(MemoryLayer layer) {
    switch (layer) {
        case MemoryLayer::shallow: return MemoryLayer::intermediate;
        case MemoryLayer::intermediate: return MemoryLayer::deep;
        case MemoryLayer::deep: return std::nullopt;
    }
    return std::nullopt;
}

double MemoryStore::sample_importance(const LayerParams& layer, std::mt19937_64& rng) {
    // Explicit cumulative-bucket draw; std::discrete_distribution is
    // implementation-defined and would break cross-platform replay.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < layer.value_probs[0]) return 40.0;
    if (u < layer.value_probs[0] + layer.value_probs[1]) return 60.0;
    return 80.0;
}

MemoryStore::MemoryStore(MemoryParams params, const EmbeddingProvider& provider)
    : params_(std::move(params)), provider_(&provider) {
    params_.validate();
}

MemoryEvent MemoryStore::insert(const std::string& text, MemorySource source, Date date,
                                std::mt19937_64& rng) {
    MemoryEvent event;
    event.id = next_id_++;
    event.layer = route(source);
    event.text = text;
    event.embedding = provider_->embed(text);
    event.event_date = date;
    event.importance_value = sample_importance(params_.for_layer(event.layer), rng);
    event.access_count = 0;
    event.source = source;
    events_.push_back(std::move(event));
    return events_.back();
}

MemoryEvent MemoryStore::insert_event(MemoryEvent event) {
    if (find(event.id) != nullptr) {
        throw ValidationError("duplicate memory id: " + std::to_string(event.id));
    }
    next_id_ = std::max(next_id_, event.id + 1);
    events_.push_back(std::move(event));
    return events_.back();
}

double MemoryStore::recency_score(const MemoryEvent& event, Date now) const {
    if (now < event.event_date) {
        throw TemporalError("recency: now " + now.to_string() + " precedes event date " +
                            event.event_date.to_string());
    }
    const double delta = now - event.event_date;
    return std::exp(-delta / params_.for_layer(event.layer).stability_days);
}

std::pair<double, double> MemoryStore::importance_score(const MemoryEvent& event, Date now) const {
    if (now < event.event_date) {
        throw TemporalError("importance: now " + now.to_string() + " precedes event date " +
                            event.event_date.to_string());
    }
    const double delta = now - event.event_date;
    const double ratio = std::pow(params_.for_layer(event.layer).decay_base, delta);
    const double raw = event.importance_value * ratio;
    return {raw, std::min(raw / 100.0, 1.0)};
}

RetrievalScore MemoryStore::score(const MemoryEvent& event, const Embedding& query,
                                  Date now) const {
    RetrievalScore s;
    s.recency = recency_score(event, now);
    s.relevancy = std::max(cosine(event.embedding, query), 0.0);
    std::tie(s.importance_raw, s.importance_scaled) = importance_score(event, now);
    s.gamma = s.recency + s.relevancy + s.importance_scaled;
    return s;
}

bool MemoryStore::expired(const MemoryEvent& event, Date now) const {
    return recency_score(event, now) < params_.purge_recency_floor ||
           importance_score(event, now).first < params_.purge_importance_floor;
}

std::array<std::vector<ScoredEvent>, 3> MemoryStore::retrieve_top_k(const Embedding& query,
                                                                    Date now,
                                                                    std::size_t k) const {
    if (k < 1) {
        throw ArgumentError("retrieve_top_k: k must be >= 1");
    }
    std::array<std::vector<ScoredEvent>, 3> result;
    for (const MemoryEvent& event : events_) {
        if (expired(event, now)) continue;
        result[static_cast<std::size_t>(event.layer)].push_back({&event, score(event, query, now)});
    }
    for (auto& layer_events : result) {
        std::sort(layer_events.begin(), layer_events.end(),
                  [](const ScoredEvent& a, const ScoredEvent& b) {
                      if (a.score.gamma != b.score.gamma) return a.score.gamma > b.score.gamma;
                      return a.event->id < b.event->id;
                  });
        if (layer_events.size() > k) layer_events.resize(k);
    }
    return result;
}

AccessReport MemoryStore::register_access(const std::vector<std::int64_t>& ids, Date now) {
    AccessReport report;
    for (std::int64_t id : ids) {
        auto it = std::find_if(events_.begin(), events_.end(),
                               [id](const MemoryEvent& e) { return e.id == id; });
        if (it == events_.end()) {
            throw LookupError("register_access: unknown memory id " + std::to_string(id));
        }
        it->importance_value += params_.boost_per_access;
        it->access_count += 1;
        report.boosted.push_back(id);
        if (it->access_count >= params_.promotion_threshold) {
            if (auto next = deeper(it->layer)) {
                report.promotions.push_back({id, it->layer, *next});
                it->layer = *next;
                it->event_date = now; // recency restarts at 1.0
                it->access_count = 0;
            }
        }
    }
    return report;
}

std::vector<std::int64_t> MemoryStore::purge(Date now) {
    std::vector<std::int64_t> removed;
    auto it = std::remove_if(events_.begin(), events_.end(), [&](const MemoryEvent& event) {
        if (expired(event, now)) {
            removed.push_back(event.id);
            return true;
        }
        return false;
    });
    events_.erase(it, events_.end());
    return removed;
}

const MemoryEvent* MemoryStore::find(std::int64_t id) const {
    auto it = std::find_if(events_.begin(), events_.end(),
                           [id](const MemoryEvent& e) { return e.id == id; });
    return it == events_.end() ? nullptr : &*it;
}

std::size_t MemoryStore::layer_size(MemoryLayer layer) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(),
                      [layer](const MemoryEvent& e) { return e.layer == layer; }));
}

void MemoryStore::save_snapshot(std::ostream& out) const {
    nlohmann::json header = {
        {"format", "memtrade.memory"},
        {"version", 1},
        {"dimension", provider_->dimension()},
    };
    out << header.dump() << '\n';
    for (const MemoryEvent& event : events_) {
        nlohmann::json line = {
            {"id", event.id},
            {"layer", to_string(event.layer)},
            {"text", event.text},
            {"embedding", event.embedding},
            {"date", event.event_date.to_string()},
            {"value", event.importance_value},
            {"access_count", event.access_count},
            {"source", to_string(event.source)},
        };
        out << line.dump() << '\n';
    }
}

MemoryStore MemoryStore::load_snapshot(std::istream& in, MemoryParams params,
                                       const EmbeddingProvider& provider) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("memory snapshot: empty stream");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("memory snapshot: bad header: ") + ex.what());
    }
    if (header.value("format", "") != "memtrade.memory" || header.value("version", 0) != 1) {
        throw ValidationError("memory snapshot: unsupported format/version");
    }
    if (header.value("dimension", std::size_t{0}) != provider.dimension()) {
        throw ValidationError("memory snapshot: dimension " +
                              std::to_string(header.value("dimension", std::size_t{0})) +
                              " does not match the provider's " +
                              std::to_string(provider.dimension()));
    }

    MemoryStore store(std::move(params), provider);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError("memory snapshot line " + std::to_string(line_no) + ": " + ex.what());
        }
        MemoryEvent event;
        event.id = record.at("id").get<std::int64_t>();
        event.layer = memory_layer_from_string(record.at("layer").get<std::string>());
        event.text = record.at("text").get<std::string>();
        event.embedding = record.at("embedding").get<Embedding>();
        event.event_date = Date::parse(record.at("date").get<std::string>());
        event.importance_value = record.at("value").get<double>();
        event.access_count = record.at("access_count").get<int>();
        event.source = memory_source_from_string(record.at("source").get<std::string>());
        store.insert_event(std::move(event));
    }
    return store;
}

} // namespace memtrade
