#include "memtrade/agent.hpp"

#include "memtrade/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace memtrade {

const char* to_string(RiskDisposition value) {
    return value == RiskDisposition::seeking ? "seeking" : "averse";
}

const char* to_string(ReflectionKind value) {
    return value == ReflectionKind::immediate ? "immediate" : "extended";
}

AgentProfile update_risk_disposition(AgentProfile profile, double momentum) {
    if (!std::isfinite(momentum)) {
        throw ArgumentError("update_risk_disposition: momentum must be finite");
    }
    if (momentum > 0) {
        profile.risk_disposition = RiskDisposition::seeking;
    } else if (momentum < 0) {
        profile.risk_disposition = RiskDisposition::averse;
    }
    return profile;
}

namespace {

constexpr const char* kDefaultProfile =
    "You are an experienced trading manager at an investment firm. Your task is to make\n"
    "informed decisions on {symbol} based on the provided information.\n"
    "{risk_sentence}\n"
    "{background}\n";

constexpr const char* kDefaultSummarize =
    "Summarize the following documents into {max_words} words, keeping every detail that\n"
    "matters for an investment decision. The positive, neutral and negative labels\n"
    "describe the investment sentiment carried by a document: positive news about a\n"
    "company can lift investor sentiment and encourage buying activity, while negative\n"
    "news can depress it.\n";

constexpr const char* kDefaultObserve =
    "The information below summarizes the recent price fluctuations of {symbol}, its\n"
    "\"momentum\". Momentum is based on the idea that securities that have performed\n"
    "well in the past will continue to perform well, and securities that have performed\n"
    "poorly will continue to perform poorly.\n"
    "The daily adjusted closing price of {symbol} on {date} is {price}.\n"
    "{momentum_sentence}\n";

constexpr const char* kDefaultReflectTrain =
    "Given the information above, can you explain why the market fluctuation of\n"
    "{symbol} from the current day to the next day behaves like this? Summarize the\n"
    "reason for the change concisely and include the IDs of the memory items that\n"
    "support your summary.\n";

constexpr const char* kDefaultReflectTest =
    "Given the information above, can you make an investment decision on {symbol}?\n"
    "Consider the available short-term, mid-term, long-term and reflection-term\n"
    "information, the momentum of the historical price, and the current position.\n"
    "Provide exactly one of the following investment decisions: buy or sell. Choose\n"
    "hold only if necessary. Also provide the IDs of the memory items that support\n"
    "your decision.\n";

constexpr const char* kJsonInstruction =
    "Respond with a fenced JSON object exactly of the form\n"
    "```json\n"
    "{\"action\": \"Buy\"|\"Sell\"|\"Hold\", \"rationale\": \"...\", \"supporting_ids\": [/* integer memory ids */]}\n"
    "```\n";

std::string format_fixed(double value, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

std::string single_line(std::string text) {
    for (char& c : text) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

std::optional<std::string> read_file_if_exists(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

PromptTemplates PromptTemplates::defaults() {
    return {kDefaultProfile, kDefaultSummarize, kDefaultObserve, kDefaultReflectTrain,
            kDefaultReflectTest};
}

PromptTemplates PromptTemplates::from_directory(const std::string& dir) {
    PromptTemplates t = defaults();
    const std::filesystem::path base(dir);
    if (auto text = read_file_if_exists(base / "profile.txt")) t.profile = *text;
    if (auto text = read_file_if_exists(base / "summarize.txt")) t.summarize = *text;
    if (auto text = read_file_if_exists(base / "observe.txt")) t.observe = *text;
    if (auto text = read_file_if_exists(base / "reflect_train.txt")) t.reflect_train = *text;
    if (auto text = read_file_if_exists(base / "reflect_test.txt")) t.reflect_test = *text;
    return t;
}

std::string render_template(const std::string& text,
                            const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out = text;
    for (const auto& [name, value] : values) {
        const std::string needle = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

Agent::Agent(AgentProfile profile, AgentConfig config, PromptTemplates templates,
             MemoryStore& store, ChatBackbone& backbone)
    : profile_(std::move(profile)),
      config_(config),
      templates_(std::move(templates)),
      store_(&store),
      backbone_(&backbone) {}

std::string Agent::render_system_prompt() const {
    const std::string risk_sentence =
        std::string("When historical momentum is positive, you are a risk-seeking investor. "
                    "But when historical momentum is negative, you are a risk-averse investor. "
                    "Today you are a risk-") +
        to_string(profile_.risk_disposition) + " investor.";
    return render_template(templates_.profile, {{"symbol", profile_.symbol},
                                                {"risk_sentence", risk_sentence},
                                                {"background", profile_.background_text},
                                                {"role", profile_.role_text}});
}

std::string Agent::momentum_sentence(const MarketObservation& obs, Phase phase, int k) const {
    if (phase == Phase::warmup) {
        return "On " + obs.date.to_string() + ", the momentum of " + profile_.symbol +
               ", indicated by the price difference between the current and the next trading "
               "day, is " +
               format_fixed(obs.momentum, 2) + ".";
    }
    return "On " + obs.date.to_string() + ", the historical momentum of " + profile_.symbol +
           ", as measured by its cumulative logarithmic returns in the past " +
           std::to_string(k) + " days, was " + format_fixed(obs.momentum * 100.0, 2) + "%.";
}

std::string Agent::summarize_text(const std::string& document) {
    CompletionRequest request;
    request.system_prompt = render_system_prompt();
    request.user_prompt =
        "Task: summarize\n\n" +
        render_template(templates_.summarize,
                        {{"max_words", std::to_string(config_.summarize_max_words)}}) +
        "\nDocument:\n" + document;
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_tokens;
    request.seed = config_.seed;
    return backbone_->complete(request);
}

IngestResult Agent::summarize_and_store(const NewsItem& item, Date date, std::mt19937_64& rng) {
    if (item.text.empty()) {
        throw ArgumentError("summarize_and_store: empty news text");
    }
    const std::string tag = std::string(" The sentiment is {") + to_string(item.sentiment) + "}.";
    IngestResult result;
    std::string stored;
    if (item.text.size() < config_.summarize_threshold) {
        stored = item.text + tag;
    } else {
        try {
            stored = summarize_text(item.text) + tag;
        } catch (const ProviderError& ex) {
            std::cerr << "warning: summarization failed (" << ex.what()
                      << "); storing truncated original\n";
            stored = item.text.substr(0, config_.summarize_threshold) + tag;
            result.pass_through = true;
        }
    }
    const MemoryEvent& event = store_->insert(stored, MemorySource::news, date, rng);
    result.memory_id = event.id;
    result.layer = event.layer;
    return result;
}

IngestResult Agent::summarize_and_store(const FilingSummary& item, Date date,
                                        std::mt19937_64& rng) {
    if (item.summary.empty()) {
        throw ArgumentError("summarize_and_store: empty filing summary");
    }
    IngestResult result;
    std::string stored;
    try {
        stored = summarize_text(item.summary);
    } catch (const ProviderError& ex) {
        std::cerr << "warning: summarization failed (" << ex.what()
                  << "); storing truncated original\n";
        stored = item.summary.substr(0, config_.summarize_threshold);
        result.pass_through = true;
    }
    const MemorySource source = item.form_type == FilingForm::form_10q ? MemorySource::filing_10q
                                                                       : MemorySource::filing_10k;
    const MemoryEvent& event = store_->insert(stored, source, date, rng);
    result.memory_id = event.id;
    result.layer = event.layer;
    return result;
}

DecisionOutcome Agent::decide(const MarketObservation& observation, Phase phase,
                              double running_pnl, std::mt19937_64& rng,
                              const TranscriptSink& transcript) {
    profile_ = update_risk_disposition(std::move(profile_), observation.momentum);

    const std::string task = phase == Phase::warmup ? "decide-warmup" : "decide-test";
    const std::string inquiry = render_template(
        phase == Phase::warmup ? templates_.reflect_train : templates_.reflect_test,
        {{"symbol", profile_.symbol}});
    const std::string observe_text = render_template(
        templates_.observe,
        {{"symbol", profile_.symbol},
         {"date", observation.date.to_string()},
         {"price", format_fixed(observation.adjusted_close, 2)},
         {"momentum_sentence", momentum_sentence(observation, phase, momentum_window_k_)}});

    // The relevancy query: the day's inquiry plus the agent's character setting.
    DecisionOutcome outcome;
    outcome.query_text = render_system_prompt() + "\n" + observe_text + "\n" + inquiry;
    const Embedding query = store_->provider().embed(outcome.query_text);

    const auto retrieved = store_->retrieve_top_k(query, observation.date,
                                                  static_cast<std::size_t>(config_.k_top));
    std::vector<std::int64_t> presented_flat;
    for (std::size_t layer = 0; layer < 3; ++layer) {
        for (const ScoredEvent& scored : retrieved[layer]) {
            outcome.presented_ids[layer].push_back(scored.event->id);
            presented_flat.push_back(scored.event->id);
        }
    }

    std::ostringstream user;
    user << "Task: " << task << '\n';
    user << "Symbol: " << profile_.symbol << '\n';
    user << "Date: " << observation.date.to_string() << '\n';
    user << "Momentum: " << format_fixed(observation.momentum) << '\n';
    user << "PnL: " << format_fixed(running_pnl) << '\n';
    user << '\n' << observe_text << '\n';
    static constexpr const char* kLayerTitles[3] = {"Short-term (shallow) memories:",
                                                    "Mid-term (intermediate) memories:",
                                                    "Long-term (deep) memories:"};
    for (std::size_t layer = 0; layer < 3; ++layer) {
        user << kLayerTitles[layer] << '\n';
        if (retrieved[layer].empty()) user << "(none)\n";
        for (const ScoredEvent& scored : retrieved[layer]) {
            user << "[ID " << scored.event->id << " | " << to_string(scored.event->layer) << " | "
                 << to_string(scored.event->source) << "] " << single_line(scored.event->text)
                 << '\n';
        }
    }
    user << "Latest extended reflection: "
         << (latest_extended_.empty() ? "(none)" : single_line(latest_extended_)) << '\n';
    user << '\n' << inquiry << '\n' << kJsonInstruction;

    CompletionRequest request;
    request.system_prompt = render_system_prompt();
    request.user_prompt = user.str();
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_tokens;
    request.seed = config_.seed;

    if (transcript) {
        transcript({{"kind", "manifest"},
                    {"date", observation.date.to_string()},
                    {"task", task},
                    {"presented_ids",
                     {outcome.presented_ids[0], outcome.presented_ids[1], outcome.presented_ids[2]}},
                    {"query", outcome.query_text}});
    }

    // One format retry with a reminder, then the Hold fallback; an episode
    // never aborts because a single turn came back malformed.
    TradeDecision decision;
    bool parsed = false;
    try {
        std::string raw = backbone_->complete(request);
        for (int attempt = 0;; ++attempt) {
            try {
                decision = parse_decision(raw, presented_flat);
                parsed = true;
                break;
            } catch (const FormatError&) {
                if (attempt >= 1) break;
                CompletionRequest retry = request;
                retry.user_prompt += "\nYour previous reply was not valid. " +
                                     std::string(kJsonInstruction);
                raw = backbone_->complete(retry);
            }
        }
    } catch (const ProviderError& ex) {
        std::cerr << "warning: backbone failure on " << observation.date.to_string() << ": "
                  << ex.what() << '\n';
    }
    if (!parsed) {
        decision = TradeDecision{TradeAction::hold, "format-fallback", {}};
        outcome.fallback = true;
    }

    if (phase == Phase::warmup) {
        // Predetermined direction: the backbone only explains it.
        decision.action = observation.momentum > 0   ? TradeAction::buy
                          : observation.momentum < 0 ? TradeAction::sell
                                                     : TradeAction::hold;
    }

    if (!decision.supporting_ids.empty()) {
        store_->register_access(decision.supporting_ids, observation.date);
    }

    if (phase == Phase::warmup && parsed && !decision.rationale.empty()) {
        store_->insert(decision.rationale, MemorySource::reflection, observation.date, rng);
    }

    if (transcript) {
        transcript({{"kind", "decision"},
                    {"date", observation.date.to_string()},
                    {"action", to_string(decision.action)},
                    {"supporting_ids", decision.supporting_ids},
                    {"fallback", outcome.fallback}});
    }

    outcome.immediate = ReflectionEvent{observation.date, decision.rationale,
                                        ReflectionKind::immediate};
    outcome.decision = std::move(decision);
    return outcome;
}

std::optional<ReflectionEvent> Agent::extended_reflect(std::span<const DailyRecord> window,
                                                       Date date, std::mt19937_64& rng,
                                                       const TranscriptSink& transcript) {
    if (window.empty()) {
        throw ArgumentError("extended_reflect: needs at least one completed day");
    }
    double window_cr = 0.0;
    int buys = 0, sells = 0, holds = 0;
    for (const DailyRecord& record : window) {
        window_cr += record.strategy_return;
        switch (record.action) {
            case TradeAction::buy: ++buys; break;
            case TradeAction::sell: ++sells; break;
            case TradeAction::hold: ++holds; break;
        }
    }
    window_cr *= 100.0;

    std::ostringstream user;
    user << "Task: reflect-extended\n";
    user << "Symbol: " << profile_.symbol << '\n';
    user << "Date: " << date.to_string() << '\n';
    user << "WindowCR: " << format_fixed(window_cr, 4) << '\n';
    user << "Actions: Buy=" << buys << " Sell=" << sells << " Hold=" << holds << '\n';
    user << "Recent days:\n";
    for (const DailyRecord& record : window) {
        user << "  " << record.date.to_string() << ' ' << to_string(record.action) << ' '
             << format_fixed(record.strategy_return) << '\n';
    }
    user << "\nReflect on the trailing window's profit and loss and the decisions that "
            "produced it. State what worked, what did not, and what to emphasize next.\n";

    CompletionRequest request;
    request.system_prompt = render_system_prompt();
    request.user_prompt = user.str();
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_tokens;
    request.seed = config_.seed;

    std::string text;
    try {
        text = backbone_->complete(request);
    } catch (const ProviderError& ex) {
        std::cerr << "warning: extended reflection skipped on " << date.to_string() << ": "
                  << ex.what() << '\n';
        return std::nullopt;
    }

    const MemoryEvent event = store_->insert(text, MemorySource::reflection, date, rng);
    latest_extended_ = text;
    if (transcript) {
        transcript({{"kind", "reflection"},
                    {"date", date.to_string()},
                    {"memory_id", event.id},
                    {"window_cr_percent", window_cr}});
    }
    return ReflectionEvent{date, text, ReflectionKind::extended};
}

} // namespace memtrade
