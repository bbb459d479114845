#include "codetopics/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "codetopics/binary_matrix.hpp"
#include "codetopics/corpus.hpp"
#include "codetopics/parallel.hpp"
#include "codetopics/rng.hpp"

namespace codetopics::embedder {

std::vector<float> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("hash_embed: dim must be >= 2");
    const auto doc = corpus::preprocess_text(text, {});
    std::vector<double> acc(dim, 0.0);
    std::vector<double> v(dim);
    const std::uint64_t salt = splitmix64(seed);
    for (const auto& token : doc.tokens) {
        Rng rng(splitmix64(fnv1a64(token) ^ salt));
        double sq = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            sq += x * x;
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i] * inv;
    }
    double sq = 0.0;
    for (double x : acc) sq += x * x;
    std::vector<float> out(dim, 0.0f);
    if (sq == 0.0) {
        out[0] = 1.0f;
        return out;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
    return out;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ < 2) throw std::invalid_argument("HashEmbedder: dim must be >= 2");
}

std::vector<std::vector<float>> HashEmbedder::embed_batch(std::span<const std::string> texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hash_embed(t, dim_, seed_));
    return out;
}

nlohmann::json HashEmbedder::describe() const {
    return {{"provider", "hash"}, {"dim", dim_}, {"seed", seed_}};
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config)
    : config_(std::move(config)), base_(net::parse_base_url(config_.base_url)) {
    if (config_.batch_size == 0) throw std::invalid_argument("HttpEmbedder: batch_size must be >= 1");
    if (config_.max_in_flight == 0) throw std::invalid_argument("HttpEmbedder: max_in_flight must be >= 1");
}

std::vector<std::vector<float>> HttpEmbedder::embed_batch(std::span<const std::string> texts) {
    const nlohmann::json body = {{"model", config_.model},
                                 {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto res = net::post_json(base_, "/embeddings", body.dump(), config_.api_key, config_.request_timeout,
                                    {config_.retries, config_.backoff_base, config_.backoff_factor});
    if (!res.ok()) {
        throw std::runtime_error("embeddings request failed: " + res.error + " after " +
                                 std::to_string(res.attempts) + " attempt(s)");
    }
    const auto reply = nlohmann::json::parse(res.body);
    const auto& data = reply.at("data");
    if (data.size() != texts.size()) {
        throw std::runtime_error("embeddings response holds " + std::to_string(data.size()) +
                                 " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    std::vector<std::vector<float>> out(texts.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t slot = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
        if (slot >= out.size()) throw std::runtime_error("embeddings response index out of range");
        out[slot] = data[i].at("embedding").get<std::vector<float>>();
    }
    return out;
}

nlohmann::json HttpEmbedder::describe() const {
    return {{"provider", "http"}, {"model", config_.model}};
}

EmbedResult embed(std::span<const TextItem> texts, EmbeddingProvider& provider) {
    if (texts.empty()) throw std::invalid_argument("embed: no texts given");
    const std::size_t bs = std::max<std::size_t>(1, provider.batch_size());
    const std::size_t n_batches = (texts.size() + bs - 1) / bs;

    std::vector<std::vector<float>> vectors(texts.size());
    std::vector<std::string> errors(texts.size());
    parallel_for(n_batches, provider.max_in_flight(), [&](std::size_t b) {
        const std::size_t lo = b * bs;
        const std::size_t hi = std::min(texts.size(), lo + bs);
        std::vector<std::string> batch;
        for (std::size_t i = lo; i < hi; ++i) batch.push_back(texts[i].text);
        try {
            auto out = provider.embed_batch(batch);
            if (out.size() != batch.size()) throw std::runtime_error("provider returned wrong number of vectors");
            for (std::size_t i = lo; i < hi; ++i) vectors[i] = std::move(out[i - lo]);
        } catch (const std::exception& e) {
            for (std::size_t i = lo; i < hi; ++i) errors[i] = e.what();
        }
    });

    EmbedResult result;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (errors[i].empty()) {
            for (float x : vectors[i]) {
                if (!std::isfinite(x)) {
                    errors[i] = "embedding contains non-finite values";
                    break;
                }
            }
            if (errors[i].empty() && vectors[i].empty()) errors[i] = "empty embedding";
        }
        if (!errors[i].empty()) {
            result.failures.push_back({texts[i].id, errors[i]});
            continue;
        }
        if (result.dim == 0) {
            result.dim = vectors[i].size();
        } else if (vectors[i].size() != result.dim) {
            throw std::runtime_error("embedding dimension mismatch: " + std::to_string(vectors[i].size()) +
                                     " vs " + std::to_string(result.dim) + " (id " + texts[i].id + ")");
        }
        result.embeddings.push_back({texts[i].id, std::move(vectors[i])});
    }
    return result;
}

void write_cache(const std::filesystem::path& path, std::span<const Embedding> embeddings,
                 const nlohmann::json& extra) {
    const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().vector.size();
    nlohmann::json header = extra;
    header["dim"] = dim;
    header["count"] = embeddings.size();
    auto ids = nlohmann::json::array();
    std::vector<float> values;
    values.reserve(dim * embeddings.size());
    for (const auto& e : embeddings) {
        if (e.vector.size() != dim) throw std::invalid_argument("write_cache: ragged embeddings");
        ids.push_back(e.id);
        values.insert(values.end(), e.vector.begin(), e.vector.end());
    }
    header["ids"] = std::move(ids);
    io::write_f32_blob(path, header, values);
}

std::vector<Embedding> read_cache(const std::filesystem::path& path, nlohmann::json* header) {
    auto blob = io::read_f32_blob(path);
    const auto dim = blob.header.at("dim").get<std::size_t>();
    const auto count = blob.header.at("count").get<std::size_t>();
    const auto& ids = blob.header.at("ids");
    if (ids.size() != count || blob.values.size() != dim * count) {
        throw std::runtime_error(path.string() + ": header does not match payload");
    }
    std::vector<Embedding> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i].id = ids[i].get<std::string>();
        out[i].vector.assign(blob.values.begin() + static_cast<std::ptrdiff_t>(i * dim),
                             blob.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    }
    if (header) *header = std::move(blob.header);
    return out;
}

}  // namespace codetopics::embedder
