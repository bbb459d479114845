#include <doctest.h>

#include <cmath>

#include "codetopics/evaluation.hpp"
#include "codetopics/rng.hpp"
#include "oracles/oracles.hpp"

using namespace codetopics;
using namespace codetopics::eval;

namespace {

std::vector<double> random_dist(Rng& rng, std::size_t n) {
    std::vector<double> p(n);
    double s = 0;
    for (double& x : p) s += (x = rng.uniform());
    for (double& x : p) x /= s;
    return p;
}

std::vector<corpus::Document> docs_of(const std::vector<std::vector<std::string>>& tokens) {
    std::vector<corpus::Document> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) out.push_back({std::to_string(i), "", tokens[i]});
    return out;
}

std::vector<std::vector<double>> rows(const Matrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("d_mse examples") {
    CHECK(d_mse({{0.4, 0.3, 0.2, 0.1}}, {{0.4, 0.3, 0.2, 0.1}}) == 0.0);
    CHECK(d_mse({{1.0, 0.0}}, {{0.0, 1.0}}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(d_mse({{0.4, 0.3, 0.2, 0.1}}, {{0.1, 0.2, 0.3, 0.4}}) - 0.05) <= 1e-12);
    CHECK_THROWS_AS(d_mse({{0.5, 0.5}}, {{1.0}}), std::invalid_argument);
}

TEST_CASE("d_top examples") {
    std::vector<double> p(20, 0.0), q(20, 0.0);
    for (std::size_t i = 0; i < 10; ++i) p[i] = 1.0 - 0.01 * static_cast<double>(i);
    for (std::size_t i = 5; i < 15; ++i) q[i] = 1.0 - 0.01 * static_cast<double>(i);
    CHECK(d_top({p}, {p}) == 10);
    CHECK(d_top({p}, {q}) == 5);
    CHECK(d_top({{0.6, 0.4, 0.0, 0.0}}, {{0.0, 0.0, 0.4, 0.6}}, 2) == 0);
    CHECK(top_k_indices(std::vector<double>{0.2, 0.3, 0.3, 0.2}, 3) == std::vector<std::size_t>{1, 2, 0});
    CHECK_THROWS_AS(d_top({{0.5, 0.5}}, {{0.5, 0.5}}, 3), std::invalid_argument);
}

TEST_CASE("d_topw examples") {
    // Rows 0 and 1 are identical; row 2 has cosine 0.5 with row 3.
    const Matrix w(4, 3, std::vector<double>{1, 0, 0, 1, 0, 0, 1, std::sqrt(3.0), 0, 1, 0, 0});
    CHECK(std::abs(d_topw({{0.4, 0.1, 0.3, 0.2}}, {{0.4, 0.1, 0.3, 0.2}}, w, 4) - 1.0) <= 1e-12);
    // p ranks (0, 2), q ranks (1, 3): cosines 1.0 and 0.5.
    CHECK(std::abs(d_topw({{0.5, 0.1, 0.3, 0.1}}, {{0.1, 0.5, 0.1, 0.3}}, w, 2) - 0.75) <= 1e-12);
    const Matrix id(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(d_topw({{0.5, 0.3, 0.2}}, {{0.3, 0.2, 0.5}}, id, 3) == 0.0);
    CHECK_THROWS_AS(d_topw({{0.5, 0.5}}, {{0.5, 0.5}}, Matrix(2, 2, 1.0), 3), std::invalid_argument);
}

TEST_CASE("d_cap examples") {
    const std::vector<std::string> a = {"request", "url", "response", "api", "http"};
    const std::vector<std::string> b = {"request", "api", "http", "server", "get"};
    const std::vector<std::string> c = {"file", "path", "dir", "open", "read"};
    CHECK(d_cap(a, a) == 5);
    CHECK(d_cap(a, b) == 3);
    CHECK(d_cap(b, a) == 3);
    CHECK(d_cap(a, c) == 0);
}

TEST_CASE("metrics agree with oracles on small instances") {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(5);
        const std::size_t k = 1 + rng.below(n);
        const std::size_t cols = 1 + rng.below(8);
        auto p = random_dist(rng, n), q = random_dist(rng, n);
        if (trial % 7 == 0) q = p;
        Matrix w(n, cols);
        for (double& x : w.data()) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        for (std::size_t r = 0; r < n; ++r) w(r, 0) += 0.01;
        CHECK(std::abs(d_mse({p}, {q}) - oracle::mse(p, q)) <= 1e-12);
        CHECK(d_mse({p}, {q}) <= 2.0 / static_cast<double>(n));
        CHECK(d_mse({p}, {q}) == d_mse({q}, {p}));
        CHECK(d_top({p}, {q}, k) == oracle::top_overlap(p, q, k));
        CHECK(d_top({p}, {q}, k) == d_top({q}, {p}, k));
        CHECK(std::abs(d_topw({p}, {q}, w, k) - oracle::topw(p, q, rows(w), k, false)) <= 1e-12);
        CHECK(std::abs(d_topw({p}, {q}, w, k, Pairing::all_pairs) - oracle::topw(p, q, rows(w), k, true)) <= 1e-12);
        CHECK(std::abs(d_topw({p}, {p}, w, k) - 1.0) <= 1e-12);
    }
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> a, b;
        for (int i = 0; i < 6; ++i) {
            a.push_back(std::string(1, static_cast<char>('a' + rng.below(8))));
            b.push_back(std::string(1, static_cast<char>('a' + rng.below(8))));
        }
        CHECK(d_cap(a, b) == oracle::word_overlap(a, b, 5));
    }
}

TEST_CASE("disjoint unit masses reach the d_mse bound") {
    CHECK(std::abs(d_mse({{1, 0, 0, 0}}, {{0, 0, 1, 0}}) - 0.5) <= 1e-12);
}

TEST_CASE("coherence matches the brute-force oracle") {
    Rng rng(4242);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t vocab = 3 + rng.below(6);
        std::vector<std::vector<std::string>> tokens(1 + rng.below(10));
        for (auto& d : tokens) {
            const std::size_t len = rng.below(9);
            for (std::size_t t = 0; t < len; ++t) d.push_back("w" + std::to_string(rng.below(vocab)));
        }
        tokens[0].push_back("w0");
        std::vector<std::string> top;
        for (std::size_t j = 0; j < std::min<std::size_t>(vocab, 2 + rng.below(4)); ++j)
            top.push_back("w" + std::to_string(j));
        CoherenceConfig cfg;
        cfg.window_size = 2 + rng.below(4);
        const auto docs = docs_of(tokens);
        const auto r = coherence_cv(top, docs, cfg);
        CHECK(std::abs(r.score - oracle::coherence_cv(top, tokens, cfg.window_size, cfg.epsilon)) <= 1e-9);
    }
}

TEST_CASE("coherence of perfectly co-occurring words is one") {
    const auto docs = docs_of({{"a", "b", "c"}, {"c", "b", "a"}, {"b", "a", "c"}});
    CoherenceConfig cfg;
    cfg.window_size = 3;
    const std::vector<std::string> top = {"a", "b", "c"};
    CHECK(coherence_cv(top, docs, cfg).score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("coherence is unchanged by duplicating the corpus and flags missing words") {
    const std::vector<std::vector<std::string>> t = {{"a", "b", "x"}, {"b", "c"}, {"a", "c", "c", "d"}, {}};
    auto doubled = t;
    doubled.insert(doubled.end(), t.begin(), t.end());
    CoherenceConfig cfg;
    cfg.window_size = 2;
    const std::vector<std::string> top = {"a", "b", "c", "zzz"};
    const auto r1 = coherence_cv(top, docs_of(t), cfg);
    const auto r2 = coherence_cv(top, docs_of(doubled), cfg);
    CHECK(std::abs(r1.score - r2.score) <= 1e-12);
    CHECK(r1.missing_words == std::vector<std::string>{"zzz"});
    CHECK_THROWS(coherence_cv(std::vector<std::string>{}, docs_of(t), cfg));
    CHECK_THROWS(coherence_cv(top, docs_of({{}}), cfg));
}

TEST_CASE("self-comparison gives the identity values") {
    topics::TopicModel m;
    m.n_topics = 12;
    m.centroids = Matrix(12, 12, 0.0);
    for (std::size_t i = 0; i < 12; ++i) m.centroids(i, i) = 1.0;
    m.vocabulary.words = {"a", "b", "c", "d", "e", "f", "g"};
    m.vocabulary.doc_freq.assign(7, 0.1);
    m.topic_terms = Matrix(12, 7);
    Rng rng(3);
    for (double& x : m.topic_terms.data()) x = 0.1 + rng.uniform();
    std::vector<InferenceRecord> ref;
    for (int i = 0; i < 30; ++i) {
        std::vector<float> e(12);
        for (float& x : e) x = static_cast<float>(rng.uniform());
        e[static_cast<std::size_t>(i % 12)] += 3.0f;
        ref.push_back(infer(m, "d" + std::to_string(i), e));
    }
    const auto row = compare_distributions("M_doc", "docstrings", m, ref, ref);
    CHECK(row.n_pairs == 30);
    CHECK(row.n_cap_pairs == 30);
    for (const auto& d : row.per_document) {
        CHECK(*d.mse == 0.0);
        CHECK(*d.top == 10.0);
        CHECK(std::abs(*d.topw - 1.0) <= 1e-12);
        CHECK(*d.cap == 5.0);
    }
    const std::vector<InferenceRecord> partial(ref.begin(), ref.begin() + 10);
    CHECK(compare_distributions("M_doc", "names", m, ref, partial).n_skipped == 20);
}

TEST_CASE("compensated mean") {
    CHECK_FALSE(mean(std::vector<double>{}).has_value());
    const std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
    CHECK(*mean(v) == 0.5);
}

}
