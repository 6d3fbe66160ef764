#include "memtrade/embedding.hpp"

#include "memtrade/errors.hpp"
#include "memtrade/http_util.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

namespace memtrade {
namespace {

constexpr double kPi = 3.14159265358979323846;

// [0,1) with 53 bits of the generator's output; avoids the
// implementation-defined behavior of std::uniform/normal_distribution.
double canonical(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

std::uint64_t seeded_text_hash(std::uint64_t seed, const std::string& text) {
    std::uint64_t h = 14695981039346656037ull ^ seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size()) {
        throw ArgumentError("cosine: dimension mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw ArgumentError("cosine: zero vector");
    }
    const double value = dot / (std::sqrt(na) * std::sqrt(nb));
    if (value > 1.0) return 1.0;
    if (value < -1.0) return -1.0;
    return value;
}

Embedding LocalHashEmbedding::embed(const std::string& text) const {
    if (text.empty()) {
        throw ArgumentError("embed: empty text");
    }
    std::mt19937_64 rng(seeded_text_hash(seed_, text));
    Embedding values(dimension_);
    // Box-Muller pairs; hand-rolled so the output is identical across standard
    // library implementations.
    for (std::size_t i = 0; i < dimension_; i += 2) {
        const double u1 = 1.0 - canonical(rng); // (0, 1]
        const double u2 = canonical(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        values[i] = r * std::cos(2.0 * kPi * u2);
        if (i + 1 < dimension_) {
            values[i + 1] = r * std::sin(2.0 * kPi * u2);
        }
    }
    double norm_sq = 0.0;
    for (double v : values) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    for (double& v : values) v /= norm;
    return values;
}

RemoteEmbeddingClient::RemoteEmbeddingClient(RemoteEmbeddingOptions options)
    : options_(std::move(options)) {
    if (options_.endpoint.empty()) {
        throw ConfigError("remote embedding provider requires an endpoint");
    }
}

Embedding RemoteEmbeddingClient::embed(const std::string& text) const {
    if (text.empty()) {
        throw ArgumentError("embed: empty text");
    }
    nlohmann::json payload = {
        {"model", options_.model},
        {"input", nlohmann::json::array({text})},
    };

    HttpRetryOptions retry;
    retry.max_attempts = options_.max_attempts;
    retry.backoff_initial_ms = options_.backoff_initial_ms;
    retry.timeout_seconds = options_.timeout_seconds;
    const std::string body =
        http_post_json(options_.endpoint, payload.dump(), options_.api_key, retry);

    nlohmann::json response;
    try {
        response = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& ex) {
        throw ProviderError(std::string("embedding response is not JSON: ") + ex.what());
    }
    if (!response.contains("data") || !response["data"].is_array() || response["data"].empty() ||
        !response["data"][0].contains("embedding")) {
        throw ProviderError("embedding response missing data[0].embedding", 0, body);
    }
    Embedding values;
    for (const auto& item : response["data"][0]["embedding"]) {
        values.push_back(item.get<double>());
    }
    if (values.size() != options_.dimension) {
        throw ProviderError("embedding dimension mismatch: expected " +
                            std::to_string(options_.dimension) + ", got " +
                            std::to_string(values.size()));
    }
    return values;
}

} // namespace memtrade
