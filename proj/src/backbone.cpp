#include "memtrade/backbone.hpp"

#include "memtrade/errors.hpp"
#include "memtrade/http_util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>
#include <condition_variable>
#include <sstream>

namespace memtrade {

const char* to_string(TradeAction action) {
    switch (action) {
        case TradeAction::buy: return "Buy";
        case TradeAction::sell: return "Sell";
        case TradeAction::hold: return "Hold";
    }
    return "?";
}

TradeAction trade_action_from_string(const std::string& text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (char c : text) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lowered == "buy") return TradeAction::buy;
    if (lowered == "sell") return TradeAction::sell;
    if (lowered == "hold") return TradeAction::hold;
    throw FormatError("unknown trade action: '" + text + "'");
}

// ---------------------------------------------------------------------------
// Remote client

struct RemoteChatClient::Gate {
    std::mutex mutex;
    std::condition_variable cv;
    int available;

    explicit Gate(int slots) : available(slots) {}

    void acquire() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [this] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard lock(mutex);
            ++available;
        }
        cv.notify_one();
    }
};

RemoteChatClient::RemoteChatClient(RemoteBackboneOptions options)
    : options_(std::move(options)), gate_(std::make_unique<Gate>(options_.max_in_flight)) {
    if (options_.endpoint.empty()) {
        throw ConfigError("remote backbone requires an endpoint");
    }
}

RemoteChatClient::~RemoteChatClient() = default;

std::string RemoteChatClient::complete(const CompletionRequest& request) {
    nlohmann::json payload = {
        {"model", options_.model},
        {"messages",
         {{{"role", "system"}, {"content", request.system_prompt}},
          {{"role", "user"}, {"content", request.user_prompt}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    if (request.seed) payload["seed"] = *request.seed;
    log({{"kind", "request"}, {"backbone", "remote"}, {"payload", payload}});

    gate_->acquire();
    std::string body;
    try {
        HttpRetryOptions retry;
        retry.max_attempts = options_.max_attempts;
        retry.backoff_initial_ms = options_.backoff_initial_ms;
        retry.timeout_seconds = options_.timeout_seconds;
        body = http_post_json(options_.endpoint, payload.dump(), options_.api_key, retry);
    } catch (...) {
        gate_->release();
        throw;
    }
    gate_->release();

    nlohmann::json response;
    try {
        response = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& ex) {
        throw ProviderError(std::string("chat response is not JSON: ") + ex.what(), 0, body);
    }
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].empty() || !response["choices"][0].contains("message") ||
        !response["choices"][0]["message"].contains("content")) {
        throw ProviderError("chat response missing choices[0].message.content", 0, body);
    }
    std::string content = response["choices"][0]["message"]["content"].get<std::string>();
    log({{"kind", "response"}, {"backbone", "remote"}, {"content", content}});
    return content;
}

// ---------------------------------------------------------------------------
// Mock backbone

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::optional<double> find_number_line(const std::vector<std::string>& lines,
                                       const std::string& prefix) {
    for (const std::string& line : lines) {
        if (line.rfind(prefix, 0) == 0) {
            try {
                return std::stod(line.substr(prefix.size()));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

std::optional<std::string> find_text_line(const std::vector<std::string>& lines,
                                          const std::string& prefix) {
    for (const std::string& line : lines) {
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    }
    return std::nullopt;
}

struct NewsMemoryLine {
    std::int64_t id;
    std::string text;
};

// Memory lines look like "[ID 12 | shallow | news] ...". Only news-source
// lines count toward the sentiment majority.
std::vector<NewsMemoryLine> parse_news_memory_lines(const std::vector<std::string>& lines) {
    std::vector<NewsMemoryLine> result;
    for (const std::string& line : lines) {
        if (line.rfind("[ID ", 0) != 0) continue;
        const auto close = line.find(']');
        if (close == std::string::npos) continue;
        const std::string tag = line.substr(1, close - 1); // "ID 12 | shallow | news"
        if (tag.find("| news") == std::string::npos) continue;
        try {
            result.push_back({std::stoll(tag.substr(3)), line.substr(close + 1)});
        } catch (const std::exception&) {
            continue;
        }
    }
    return result;
}

int count_substring(const std::string& haystack, const std::string& needle) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string one_line(std::string text, std::size_t limit) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    if (text.size() > limit) text.resize(limit);
    return text;
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

} // namespace

std::string MockBackbone::complete(const CompletionRequest& request) {
    nlohmann::json payload = {
        {"model", "mock"},
        {"messages",
         {{{"role", "system"}, {"content", request.system_prompt}},
          {{"role", "user"}, {"content", request.user_prompt}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"seed", seed_},
    };
    log({{"kind", "request"}, {"backbone", "mock"}, {"payload", payload}});

    const auto lines = split_lines(request.user_prompt);
    const std::string task = find_text_line(lines, "Task: ").value_or("");
    std::string content;

    if (task == "summarize") {
        const auto doc_pos = request.user_prompt.find("Document:");
        const std::string doc = doc_pos == std::string::npos
                                    ? request.user_prompt
                                    : request.user_prompt.substr(doc_pos + 9);
        content = "Summary: " + one_line(doc, 200);
    } else if (task == "reflect-extended") {
        const double window_cr = find_number_line(lines, "WindowCR: ").value_or(0.0);
        content = "Over the trailing window the strategy's cumulative return was {" +
                  format_number(window_cr) +
                  "%}. Sentiment-aligned positions drove the result; the plan is to keep "
                  "following the sentiment majority while momentum confirms it.";
    } else if (task == "decide-warmup" || task == "decide-test") {
        const double momentum = find_number_line(lines, "Momentum: ").value_or(0.0);
        const auto news_lines = parse_news_memory_lines(lines);
        int positive = 0, negative = 0;
        std::vector<std::int64_t> ids;
        for (const auto& news : news_lines) {
            positive += count_substring(news.text, "sentiment is {positive}");
            negative += count_substring(news.text, "sentiment is {negative}");
            ids.push_back(news.id);
        }

        TradeDecision decision;
        if (task == "decide-warmup") {
            // The direction is predetermined upstream; explain it from the sign.
            decision.action = momentum > 0   ? TradeAction::buy
                              : momentum < 0 ? TradeAction::sell
                                             : TradeAction::hold;
            decision.rationale = std::string("The recommended trading action is '") +
                                 to_string(decision.action) +
                                 "'. The next-day price difference of " + format_number(momentum) +
                                 " together with the prevailing news sentiment explains the move.";
        } else {
            if (positive - negative > 0 && momentum >= 0) {
                decision.action = TradeAction::buy;
            } else if (negative - positive > 0 && momentum < 0) {
                decision.action = TradeAction::sell;
            } else {
                decision.action = TradeAction::hold;
            }
            decision.rationale = "Sentiment majority " + std::to_string(positive) + " positive vs " +
                                 std::to_string(negative) + " negative with momentum " +
                                 format_number(momentum) + " supports '" +
                                 to_string(decision.action) + "'.";
        }
        decision.supporting_ids = std::move(ids);
        content = render_decision(decision);
    } else {
        TradeDecision decision;
        decision.rationale = "No recognizable task marker; holding.";
        content = render_decision(decision);
    }

    log({{"kind", "response"}, {"backbone", "mock"}, {"content", content}});
    return content;
}

// ---------------------------------------------------------------------------
// Structured output

namespace {

// Inside of the first ``` fence when present, otherwise the outermost braces.
std::string extract_json_blob(const std::string& raw) {
    std::size_t fence = raw.find("```");
    if (fence != std::string::npos) {
        std::size_t start = raw.find('\n', fence);
        if (start != std::string::npos) {
            const std::size_t end = raw.find("```", start);
            if (end != std::string::npos) return raw.substr(start + 1, end - start - 1);
        }
    }
    const std::size_t open = raw.find('{');
    const std::size_t close = raw.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw FormatError("no JSON object found in model output");
    }
    return raw.substr(open, close - open + 1);
}

} // namespace

TradeDecision parse_decision(const std::string& raw, const std::vector<std::int64_t>& presented_ids,
                             std::vector<std::int64_t>* dropped) {
    nlohmann::json object;
    try {
        object = nlohmann::json::parse(extract_json_blob(raw));
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("model output is not valid JSON: ") + ex.what());
    }
    if (!object.is_object() || !object.contains("action") || !object["action"].is_string()) {
        throw FormatError("decision object must carry a string 'action'");
    }

    TradeDecision decision;
    decision.action = trade_action_from_string(object["action"].get<std::string>());
    decision.rationale = object.value("rationale", "");
    if (object.contains("supporting_ids")) {
        if (!object["supporting_ids"].is_array()) {
            throw FormatError("'supporting_ids' must be an array");
        }
        for (const auto& entry : object["supporting_ids"]) {
            if (!entry.is_number_integer()) {
                throw FormatError("'supporting_ids' entries must be integers");
            }
            const auto id = entry.get<std::int64_t>();
            if (std::find(presented_ids.begin(), presented_ids.end(), id) != presented_ids.end()) {
                decision.supporting_ids.push_back(id);
            } else if (dropped) {
                dropped->push_back(id);
            }
        }
    }
    return decision;
}

std::string render_decision(const TradeDecision& decision) {
    nlohmann::json object = {
        {"action", to_string(decision.action)},
        {"rationale", decision.rationale},
        {"supporting_ids", decision.supporting_ids},
    };
    return "```json\n" + object.dump() + "\n```";
}

} // namespace memtrade
