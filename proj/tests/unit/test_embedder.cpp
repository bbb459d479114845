#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "codetopics/embedder.hpp"
#include "codetopics/matrix.hpp"
#include "codetopics/rng.hpp"
#include "mock_llm.hpp"
#include "synthetic.hpp"

using namespace codetopics;
using namespace codetopics::embedder;

namespace {

double cos_f(const std::vector<float>& a, const std::vector<float>& b) {
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    return cosine_similarity(x, y);
}

}  // namespace

TEST_SUITE("embedder") {

TEST_CASE("hash embedding is deterministic and unit length") {
    const auto a = hash_embed("parse the url", 256, 3);
    const auto b = hash_embed("parse the url", 256, 3);
    CHECK(a == b);
    double sq = 0;
    for (float x : a) sq += double(x) * x;
    CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(hash_embed("parse the url", 256, 4) != a);
}

TEST_CASE("empty text maps to the first basis vector") {
    const auto e = hash_embed("", 8, 0);
    CHECK(e == std::vector<float>{1, 0, 0, 0, 0, 0, 0, 0});
    CHECK(hash_embed("42 !!", 8, 0) == e);
    CHECK_THROWS_AS(hash_embed("x", 1, 0), std::invalid_argument);
}

TEST_CASE("repetition and order do not change the direction") {
    CHECK(cos_f(hash_embed("apple apple", 64, 0), hash_embed("apple", 64, 0)) == doctest::Approx(1.0));
    CHECK(cos_f(hash_embed("pear apple plum", 64, 0), hash_embed("plum pear apple", 64, 0)) == doctest::Approx(1.0));
}

TEST_CASE("disjoint token sets are nearly orthogonal at dim 256") {
    Rng rng(11);
    double worst = 0;
    for (int pair = 0; pair < 100; ++pair) {
        std::string a, b;
        for (int t = 0; t < 10; ++t) {
            a += testsupport::vocab_word(2 * pair, rng.below(50)) + " ";
            b += testsupport::vocab_word(2 * pair + 1, rng.below(50)) + " ";
        }
        worst = std::max(worst, std::abs(cos_f(hash_embed(a, 256, 0), hash_embed(b, 256, 0))));
    }
    CHECK(worst < 0.2);
}

TEST_CASE("embed keeps ids and order, batches included") {
    HashEmbedder provider(32, 1);
    std::vector<TextItem> items;
    for (int i = 0; i < 150; ++i) items.push_back({"t" + std::to_string(i), "word" + std::string(1, char('a' + i % 26))});
    items.push_back({"empty", ""});
    const auto r = embed(items, provider);
    REQUIRE(r.embeddings.size() == items.size());
    CHECK(r.failures.empty());
    CHECK(r.dim == 32);
    for (std::size_t i = 0; i < items.size(); ++i) CHECK(r.embeddings[i].id == items[i].id);
    CHECK(r.embeddings[0].vector == r.embeddings[26].vector);
    CHECK_THROWS_AS(embed(std::vector<TextItem>{}, provider), std::invalid_argument);
}

namespace {

class FlakyProvider final : public EmbeddingProvider {
public:
    std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override {
        std::vector<std::vector<float>> out;
        for (const auto& t : texts) {
            if (t == "boom") throw std::runtime_error("provider down");
            if (t == "nan") out.push_back({NAN, 1.0f});
            else if (t == "wide") out.push_back({1.0f, 0.0f, 0.0f});
            else out.push_back({1.0f, 0.0f});
        }
        return out;
    }
    std::size_t batch_size() const override { return 2; }
    nlohmann::json describe() const override { return {{"provider", "flaky"}}; }
};

}  // namespace

TEST_CASE("provider failures are per item; dimension mismatch is fatal") {
    FlakyProvider p;
    const std::vector<TextItem> items = {{"a", "ok"}, {"b", "boom"}, {"c", "ok"}, {"d", "nan"}};
    const auto r = embed(items, p);
    CHECK(r.embeddings.size() == 1);
    CHECK(r.embeddings[0].id == "c");
    REQUIRE(r.failures.size() == 3);
    CHECK(r.failures[0].id == "a");
    CHECK(r.failures[2].error.find("non-finite") != std::string::npos);
    const std::vector<TextItem> mixed = {{"a", "ok"}, {"b", "wide"}};
    CHECK_THROWS(embed(mixed, p));
}

TEST_CASE("HTTP embedder reorders by index") {
    testsupport::MockLlm server;
    HttpEmbedderConfig cfg;
    cfg.base_url = server.base_url();
    cfg.batch_size = 3;
    cfg.max_in_flight = 2;
    cfg.backoff_base = std::chrono::milliseconds(1);
    HttpEmbedder provider(cfg);
    const std::vector<TextItem> items = {{"a", "alpha beta"}, {"b", "gamma"}, {"c", "delta"}, {"d", "alpha beta"}};
    const auto r = embed(items, provider);
    REQUIRE(r.embeddings.size() == 4);
    CHECK(r.embeddings[0].vector == hash_embed("alpha beta", 64, 7));
    CHECK(r.embeddings[1].vector == hash_embed("gamma", 64, 7));
    CHECK(r.embeddings[3].vector == r.embeddings[0].vector);
    CHECK(server.embedding_requests() == 2);
}

TEST_CASE("cache round trip") {
    const auto path = std::filesystem::temp_directory_path() / "codetopics_cache_test.bin";
    const std::vector<Embedding> e = {{"x", {0.5f, -1.25f}}, {"y", {3.0f, 0.0f}}};
    write_cache(path, e, {{"provider", "test"}});
    nlohmann::json header;
    const auto back = read_cache(path, &header);
    REQUIRE(back.size() == 2);
    CHECK(back[1].id == "y");
    CHECK(back[0].vector == e[0].vector);
    CHECK(header["provider"] == "test");
    CHECK(header["dim"] == 2);
    std::filesystem::remove(path);
}

}
