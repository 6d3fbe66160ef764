#pragma once

#include "memtrade/transcript.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace memtrade {

struct CompletionRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.6;
    int max_tokens = 1024;
    std::optional<std::uint64_t> seed;
};

enum class TradeAction { buy, sell, hold };

const char* to_string(TradeAction action);
TradeAction trade_action_from_string(const std::string& text); // case-insensitive

struct TradeDecision {
    TradeAction action = TradeAction::hold;
    std::string rationale;
    std::vector<std::int64_t> supporting_ids;
};

// The reasoning core: a remote chat-completion endpoint or the deterministic
// mock. Implementations are safe for concurrent use.
class ChatBackbone {
public:
    virtual ~ChatBackbone() = default;

    virtual std::string complete(const CompletionRequest& request) = 0;

    // Optional JSONL logging of request payloads and raw responses.
    void set_transcript(TranscriptSink sink) { transcript_ = std::move(sink); }

protected:
    void log(const nlohmann::json& record) const {
        if (transcript_) transcript_(record);
    }

private:
    TranscriptSink transcript_;
};

struct RemoteBackboneOptions {
    std::string endpoint; // e.g. "http://host:port/v1/chat/completions"
    std::string model;
    std::string api_key;
    int max_attempts = 3;
    int backoff_initial_ms = 250;
    int timeout_seconds = 60;
    int max_in_flight = 4;
};

// Chat-completion HTTP JSON wire protocol: request {model, messages, temperature,
// max_tokens}, response {choices:[{message:{content}}]}. Transport failures and
// 5xx responses retry with exponential backoff, then surface as ProviderError.
class RemoteChatClient final : public ChatBackbone {
public:
    explicit RemoteChatClient(RemoteBackboneOptions options);
    ~RemoteChatClient() override;

    std::string complete(const CompletionRequest& request) override;

private:
    struct Gate;
    RemoteBackboneOptions options_;
    std::unique_ptr<Gate> gate_; // caps in-flight requests
};

// Deterministic offline backbone: a pure function of (prompt text, seed).
//
// The prompt grammar it reacts to (written by the agent, independent of the
// editable templates):
//   "Task: decide-test" / "Task: decide-warmup" / "Task: summarize" /
//   "Task: reflect-extended" as a prompt line;
//   "Momentum: <float>" and "WindowCR: <float>" lines;
//   memory lines "[ID <n> | <layer> | news] ..." whose text carries
//   "sentiment is {positive|negative|neutral}".
//
// Published decision rule (sentiment majority gated by momentum):
//   Buy  if (#positive - #negative) > 0 and momentum >= 0;
//   Sell if (#negative - #positive) > 0 and momentum <  0;
//   Hold otherwise. supporting_ids = all presented news memory ids.
class MockBackbone final : public ChatBackbone {
public:
    explicit MockBackbone(std::uint64_t seed = 0) : seed_(seed) {}

    std::string complete(const CompletionRequest& request) override;

private:
    std::uint64_t seed_;
};

// Extracts a fenced JSON object {action, rationale, supporting_ids} from raw
// model output (a bare JSON object also parses). The action is matched
// case-insensitively against the three-value enum; supporting ids outside
// `presented_ids` are dropped (returned through `dropped` when given).
// Throws FormatError when no decision can be extracted.
TradeDecision parse_decision(const std::string& raw, const std::vector<std::int64_t>& presented_ids,
                             std::vector<std::int64_t>* dropped = nullptr);

// Canonical fenced-JSON rendering; parse_decision(render_decision(d)) is the
// identity on (action, supporting_ids).
std::string render_decision(const TradeDecision& decision);

} // namespace memtrade
