#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace memtrade {

using Embedding = std::vector<double>;

// Cosine similarity of two non-zero vectors of equal dimension, clamped to
// [-1, 1] on output. Throws ArgumentError on dimension mismatch or zero vectors.
double cosine(const Embedding& a, const Embedding& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // Maps text to a vector of `dimension()` finite reals. Must be safe for
    // concurrent calls. Throws ArgumentError on empty text.
    virtual Embedding embed(const std::string& text) const = 0;

    virtual std::size_t dimension() const = 0;
};

// Offline provider: a seeded 64-bit hash of the text feeds a PRNG that draws D
// unit-normal components, normalized to unit length. Deterministic for a given
// (seed, text) pair, so whole runs replay bit-identically without network access.
class LocalHashEmbedding final : public EmbeddingProvider {
public:
    explicit LocalHashEmbedding(std::uint64_t seed = 0, std::size_t dimension = 64)
        : seed_(seed), dimension_(dimension) {}

    Embedding embed(const std::string& text) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::uint64_t seed_;
    std::size_t dimension_;
};

struct RemoteEmbeddingOptions {
    std::string endpoint;        // e.g. "http://host:port/v1/embeddings"
    std::string model;
    std::string api_key;         // sent as "Authorization: Bearer <key>" when non-empty
    std::size_t dimension = 1536;
    int max_attempts = 3;
    int backoff_initial_ms = 250;
    int timeout_seconds = 30;
};

// HTTP JSON embedding endpoint: request {model, input:[text]}, response
// {data:[{embedding:[...]}]}. Retries transport failures and 5xx with
// exponential backoff; throws ProviderError once the budget is exhausted.
class RemoteEmbeddingClient final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingClient(RemoteEmbeddingOptions options);

    Embedding embed(const std::string& text) const override;
    std::size_t dimension() const override { return options_.dimension; }

private:
    RemoteEmbeddingOptions options_;
};

// Seeded FNV-1a over the text bytes. Shared with the mock backbone so seeded
// behavior stays consistent across the library.
std::uint64_t seeded_text_hash(std::uint64_t seed, const std::string& text);

} // namespace memtrade
