#include "memtrade/config.hpp"

#include "memtrade/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace memtrade {
namespace {

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + " line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + " line " + std::to_string(line_no) + ": empty key");
        }
        if (!values.emplace(key, value).second) {
            throw ConfigError(path + " line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        }
    }
    return values;
}

class KeyReader {
public:
    KeyReader(std::map<std::string, std::string> values, std::string path)
        : values_(std::move(values)), path_(std::move(path)) {}

    bool has(const std::string& key) {
        consumed_.insert(key);
        return values_.count(key) > 0;
    }

    std::string get(const std::string& key) {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw ConfigError(path_ + ": missing required key '" + key + "'");
        }
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) {
        consumed_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return parse_double(key, get(key));
    }

    long long get_int(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        const std::string text = get(key);
        try {
            std::size_t pos = 0;
            const long long value = std::stoll(text, &pos);
            if (pos != text.size()) throw std::invalid_argument(text);
            return value;
        } catch (const std::exception&) {
            throw ConfigError(path_ + ": key '" + key + "' is not an integer: '" + text + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const std::string text = get(key);
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw ConfigError(path_ + ": key '" + key + "' must be true or false, got '" + text + "'");
    }

    std::array<double, 3> get_triple(const std::string& key, std::array<double, 3> fallback) {
        if (!has(key)) return fallback;
        const std::string text = get(key);
        std::array<double, 3> out{};
        std::stringstream ss(text);
        std::string part;
        std::size_t i = 0;
        while (std::getline(ss, part, ',')) {
            if (i >= 3) throw ConfigError(path_ + ": key '" + key + "' needs exactly 3 values");
            out[i++] = parse_double(key, trim(part));
        }
        if (i != 3) throw ConfigError(path_ + ": key '" + key + "' needs exactly 3 values");
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            if (!consumed_.count(key)) {
                throw ConfigError(path_ + ": unknown key '" + key + "'");
            }
        }
    }

private:
    double parse_double(const std::string& key, const std::string& text) {
        try {
            std::size_t pos = 0;
            const double value = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument(text);
            return value;
        } catch (const std::exception&) {
            throw ConfigError(path_ + ": key '" + key + "' is not a number: '" + text + "'");
        }
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
    std::string path_;
};

std::string resolve_path(const std::string& config_path, const std::string& value) {
    if (value.empty()) return value;
    const std::filesystem::path p(value);
    if (p.is_absolute()) return value;
    return (std::filesystem::path(config_path).parent_path() / p).string();
}

std::string require_file(const std::string& config_path, const std::string& key,
                         const std::string& value) {
    const std::string resolved = resolve_path(config_path, value);
    if (!std::filesystem::exists(resolved)) {
        throw ConfigError(config_path + ": " + key + " refers to a missing file: " + resolved);
    }
    return resolved;
}

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? value : "";
}

} // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    KeyReader keys(read_key_values(path), path);
    ExperimentConfig config;

    config.symbol = keys.get("asset.symbol");
    config.asset_class = asset_class_from_string(keys.get_or("asset.class", "stock"));
    config.price_path = require_file(path, "asset.price_path", keys.get("asset.price_path"));
    if (keys.has("asset.news_path")) {
        config.news_path = require_file(path, "asset.news_path", keys.get("asset.news_path"));
    }
    if (keys.has("asset.filings_path")) {
        config.filings_path =
            require_file(path, "asset.filings_path", keys.get("asset.filings_path"));
    }

    config.warmup_range = {Date::parse(keys.get("dates.warmup_start")),
                           Date::parse(keys.get("dates.warmup_end"))};
    config.test_range = {Date::parse(keys.get("dates.test_start")),
                         Date::parse(keys.get("dates.test_end"))};

    auto layer = [&](const std::string& prefix, LayerParams& params) {
        params.stability_days = keys.get_double(prefix + ".q", params.stability_days);
        params.decay_base = keys.get_double(prefix + ".alpha", params.decay_base);
        params.value_probs = keys.get_triple(prefix + ".value_probs", params.value_probs);
    };
    layer("memory.shallow", config.memory.shallow);
    layer("memory.intermediate", config.memory.intermediate);
    layer("memory.deep", config.memory.deep);
    config.memory.promotion_threshold =
        static_cast<int>(keys.get_int("memory.promotion_threshold", 3));
    config.sim.k_top = static_cast<int>(keys.get_int("memory.k_top", 5));
    config.memory.validate();

    const std::string backbone_kind = keys.get_or("backbone.kind", "mock");
    if (backbone_kind == "mock") {
        config.backbone_kind = BackboneKind::mock;
    } else if (backbone_kind == "remote") {
        config.backbone_kind = BackboneKind::remote;
    } else {
        throw ConfigError(path + ": backbone.kind must be mock or remote");
    }
    config.backbone_endpoint = keys.get_or("backbone.endpoint", "");
    config.backbone_model = keys.get_or("backbone.model", "");
    config.backbone_retries = static_cast<int>(keys.get_int("backbone.retries", 3));
    config.backbone_max_tokens = static_cast<int>(keys.get_int("backbone.max_tokens", 1024));
    config.backbone_max_in_flight = static_cast<int>(keys.get_int("backbone.max_in_flight", 4));
    config.sim.temperature = keys.get_double("backbone.temperature", 0.6);

    const std::string embedding_kind = keys.get_or("embedding.kind", "local");
    if (embedding_kind == "local") {
        config.embedding_kind = EmbeddingKind::local;
    } else if (embedding_kind == "remote") {
        config.embedding_kind = EmbeddingKind::remote;
    } else {
        throw ConfigError(path + ": embedding.kind must be local or remote");
    }
    config.embedding_dimension =
        static_cast<std::size_t>(keys.get_int("embedding.dimension", 64));
    config.embedding_endpoint = keys.get_or("embedding.endpoint", "");
    config.embedding_model = keys.get_or("embedding.model", "");
    config.embedding_seed = static_cast<std::uint64_t>(keys.get_int("embedding.seed", 12345));

    if (keys.has("agent.templates_dir")) {
        config.templates_dir = resolve_path(path, keys.get("agent.templates_dir"));
        if (!std::filesystem::is_directory(config.templates_dir)) {
            throw ConfigError(path + ": agent.templates_dir is not a directory: " +
                              config.templates_dir);
        }
    }
    config.summarize_threshold =
        static_cast<std::size_t>(keys.get_int("agent.summarize_threshold", 1200));
    config.background = keys.get_or("agent.background", "");

    config.sim.k_momentum = static_cast<int>(keys.get_int("sim.k_momentum", 3));
    config.sim.epochs = static_cast<int>(keys.get_int("sim.epochs", 5));
    config.sim.alpha_discount = keys.get_double("sim.alpha_discount", 1.0);
    config.sim.seed = static_cast<std::uint64_t>(keys.get_int("sim.seed", 42));
    config.sim.reflect_every_days = static_cast<int>(keys.get_int("sim.reflect_every_days", 5));
    config.sim.reflect_pnl_threshold = keys.get_double("sim.reflect_pnl_threshold", 0.05);
    config.sim.hold_keeps_position = keys.get_bool("sim.hold_keeps_position", false);

    config.metrics.annualize_sharpe = keys.get_bool("metrics.annualize_sr", true);
    config.metrics.risk_free_daily = keys.get_double("metrics.risk_free_daily", 0.0);

    keys.reject_unknown();

    if (config.sim.epochs < 1) throw ConfigError(path + ": sim.epochs must be >= 1");
    if (config.sim.alpha_discount <= 0 || config.sim.alpha_discount > 1) {
        throw ConfigError(path + ": sim.alpha_discount must be in (0, 1]");
    }
    if (config.sim.k_momentum < 1) throw ConfigError(path + ": sim.k_momentum must be >= 1");
    if (config.sim.k_top < 1) throw ConfigError(path + ": memory.k_top must be >= 1");
    if (config.sim.reflect_every_days < 1) {
        throw ConfigError(path + ": sim.reflect_every_days must be >= 1");
    }
    if (config.backbone_kind == BackboneKind::remote && config.backbone_endpoint.empty()) {
        throw ConfigError(path + ": backbone.kind = remote requires backbone.endpoint");
    }
    if (config.embedding_kind == EmbeddingKind::remote && config.embedding_endpoint.empty()) {
        throw ConfigError(path + ": embedding.kind = remote requires embedding.endpoint");
    }
    return config;
}

Environment ExperimentConfig::load_environment(BuildStats* stats) const {
    std::vector<PriceBar> bars = load_price_series(price_path);
    std::vector<NewsItem> news;
    std::vector<FilingSummary> filings;
    if (!news_path.empty()) news = load_news_feed(news_path);
    if (!filings_path.empty()) filings = load_filings(filings_path);
    return build_environment(std::move(bars), std::move(news), std::move(filings), warmup_range,
                             test_range, symbol, asset_class, stats);
}

std::unique_ptr<EmbeddingProvider> ExperimentConfig::make_embedder() const {
    if (embedding_kind == EmbeddingKind::local) {
        return std::make_unique<LocalHashEmbedding>(embedding_seed, embedding_dimension);
    }
    RemoteEmbeddingOptions options;
    options.endpoint = embedding_endpoint;
    options.model = embedding_model;
    options.dimension = embedding_dimension;
    options.api_key = env_or_empty("MEMTRADE_EMBED_API_KEY");
    if (options.api_key.empty()) options.api_key = env_or_empty("MEMTRADE_API_KEY");
    return std::make_unique<RemoteEmbeddingClient>(options);
}

BackboneFactory ExperimentConfig::make_backbone_factory() const {
    if (backbone_kind == BackboneKind::mock) {
        return [](std::uint64_t seed) { return std::make_unique<MockBackbone>(seed); };
    }
    const std::string api_key = env_or_empty("MEMTRADE_API_KEY");
    if (api_key.empty()) {
        throw ConfigError("backbone.kind = remote requires the MEMTRADE_API_KEY "
                          "environment variable");
    }
    RemoteBackboneOptions options;
    options.endpoint = backbone_endpoint;
    options.model = backbone_model;
    options.api_key = api_key;
    options.max_attempts = backbone_retries;
    options.max_in_flight = backbone_max_in_flight;
    return [options](std::uint64_t) { return std::make_unique<RemoteChatClient>(options); };
}

AgentProfile ExperimentConfig::make_profile() const {
    AgentProfile profile;
    profile.symbol = symbol;
    profile.background_text = background;
    return profile;
}

AgentConfig ExperimentConfig::make_agent_config() const {
    AgentConfig agent;
    agent.k_top = sim.k_top;
    agent.summarize_threshold = summarize_threshold;
    agent.temperature = sim.temperature;
    agent.max_tokens = backbone_max_tokens;
    return agent;
}

PromptTemplates ExperimentConfig::load_templates() const {
    if (templates_dir.empty()) return PromptTemplates::defaults();
    return PromptTemplates::from_directory(templates_dir);
}

nlohmann::json ExperimentConfig::echo() const {
    auto layer_echo = [](const LayerParams& layer) {
        return nlohmann::json{{"q", layer.stability_days},
                              {"alpha", layer.decay_base},
                              {"value_probs", layer.value_probs}};
    };
    return nlohmann::json{
        {"asset",
         {{"symbol", symbol},
          {"class", to_string(asset_class)},
          {"price_path", price_path},
          {"news_path", news_path},
          {"filings_path", filings_path}}},
        {"dates",
         {{"warmup_start", warmup_range.start.to_string()},
          {"warmup_end", warmup_range.end.to_string()},
          {"test_start", test_range.start.to_string()},
          {"test_end", test_range.end.to_string()}}},
        {"memory",
         {{"shallow", layer_echo(memory.shallow)},
          {"intermediate", layer_echo(memory.intermediate)},
          {"deep", layer_echo(memory.deep)},
          {"promotion_threshold", memory.promotion_threshold},
          {"k_top", sim.k_top}}},
        {"backbone",
         {{"kind", backbone_kind == BackboneKind::mock ? "mock" : "remote"},
          {"endpoint", backbone_endpoint},
          {"model", backbone_model},
          {"temperature", sim.temperature},
          {"retries", backbone_retries},
          {"max_tokens", backbone_max_tokens},
          {"max_in_flight", backbone_max_in_flight}}},
        {"embedding",
         {{"kind", embedding_kind == EmbeddingKind::local ? "local" : "remote"},
          {"dimension", embedding_dimension},
          {"endpoint", embedding_endpoint},
          {"model", embedding_model},
          {"seed", embedding_seed}}},
        {"agent",
         {{"templates_dir", templates_dir},
          {"summarize_threshold", summarize_threshold},
          {"background", background}}},
        {"sim",
         {{"k_momentum", sim.k_momentum},
          {"epochs", sim.epochs},
          {"alpha_discount", sim.alpha_discount},
          {"seed", sim.seed},
          {"reflect_every_days", sim.reflect_every_days},
          {"reflect_pnl_threshold", sim.reflect_pnl_threshold},
          {"hold_keeps_position", sim.hold_keeps_position}}},
        {"metrics",
         {{"annualize_sr", metrics.annualize_sharpe},
          {"risk_free_daily", metrics.risk_free_daily}}},
    };
}

} // namespace memtrade
