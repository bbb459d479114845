#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codetopics/http_client.hpp"

namespace codetopics::embedder {

struct Embedding {
    std::string id;
    std::vector<float> vector;
};

struct TextItem {
    std::string id;
    std::string text;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // One vector per text, in order. Throws on failure.
    virtual std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) = 0;
    virtual std::size_t batch_size() const { return 64; }
    virtual std::size_t max_in_flight() const { return 1; }
    // Recorded in artifact metadata.
    virtual nlohmann::json describe() const = 0;
};

// Bag-of-words random projection: every token hashes to a pseudo-random unit
// vector, the document is the normalized sum. Texts without tokens map to
// the first basis vector.
std::vector<float> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class HashEmbedder final : public EmbeddingProvider {
public:
    explicit HashEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);

    std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override;
    nlohmann::json describe() const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

struct HttpEmbedderConfig {
    std::string base_url = "http://localhost:8000/v1";
    std::string model = "text-embedding";
    std::string api_key;
    std::chrono::milliseconds request_timeout{60'000};
    int retries = 3;
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;
    std::size_t batch_size = 32;
    std::size_t max_in_flight = 4;
};

// Speaks the de-facto `POST {base_url}/embeddings` JSON protocol.
class HttpEmbedder final : public EmbeddingProvider {
public:
    explicit HttpEmbedder(HttpEmbedderConfig config);

    std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override;
    std::size_t batch_size() const override { return config_.batch_size; }
    std::size_t max_in_flight() const override { return config_.max_in_flight; }
    nlohmann::json describe() const override;

private:
    HttpEmbedderConfig config_;
    net::BaseUrl base_;
};

struct EmbedFailure {
    std::string id;
    std::string error;
};

struct EmbedResult {
    std::vector<Embedding> embeddings;  // successful items, input order
    std::vector<EmbedFailure> failures;
    std::size_t dim = 0;
};

// Throws std::invalid_argument on empty input and std::runtime_error when the
// provider returns vectors of differing dimension.
EmbedResult embed(std::span<const TextItem> texts, EmbeddingProvider& provider);

// Binary cache: JSON header {dim, count, ids, ...extra} + float32 rows.
void write_cache(const std::filesystem::path& path, std::span<const Embedding> embeddings,
                 const nlohmann::json& extra = nlohmann::json::object());
std::vector<Embedding> read_cache(const std::filesystem::path& path, nlohmann::json* header = nullptr);

}  // namespace codetopics::embedder
