// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit when any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli_harness.hpp"
#include "codetopics/evaluation.hpp"
#include "codetopics/rng.hpp"
#include "codetopics/topic_engine.hpp"
#include "codetopics/umap.hpp"
#include "mock_llm.hpp"
#include "oracles/oracles.hpp"
#include "synthetic.hpp"

using namespace codetopics;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

int failures = 0;

void criterion(int number, const std::string& name, double limit_seconds, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_seconds > 0) o.require(secs < limit_seconds, "runtime " + std::to_string(secs) + " s over limit");
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s) [%.2f s] %s\n", o.pass ? "PASS" : "FAIL", number, name.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
}

std::vector<std::vector<double>> rows(const Matrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

std::vector<double> random_dist(Rng& rng, std::size_t n) {
    std::vector<double> p(n);
    double s = 0;
    for (double& x : p) s += (x = rng.uniform());
    for (double& x : p) x /= s;
    return p;
}

void metric_exactness(Outcome& o) {
    using namespace eval;
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
    o.require(d_mse({{0.4, 0.3, 0.2, 0.1}}, {{0.4, 0.3, 0.2, 0.1}}) == 0.0, "d_mse identity");
    o.require(close(d_mse({{1.0, 0.0}}, {{0.0, 1.0}}), 1.0), "d_mse unit masses");
    o.require(close(d_mse({{0.4, 0.3, 0.2, 0.1}}, {{0.1, 0.2, 0.3, 0.4}}), 0.05), "d_mse 0.05 example");

    std::vector<double> p(20, 0.0), q(20, 0.0), r(20, 0.0);
    for (std::size_t i = 0; i < 10; ++i) p[i] = 1.0 - 0.01 * static_cast<double>(i);
    for (std::size_t i = 5; i < 15; ++i) q[i] = 1.0 - 0.01 * static_cast<double>(i);
    for (std::size_t i = 10; i < 20; ++i) r[i] = 1.0 - 0.01 * static_cast<double>(i);
    o.require(d_top({p}, {p}) == 10, "d_top identity");
    o.require(d_top({p}, {q}) == 5, "d_top overlap 5");
    o.require(d_top({p}, {r}) == 0, "d_top disjoint");

    const Matrix w(4, 3, std::vector<double>{1, 0, 0, 1, 0, 0, 1, std::sqrt(3.0), 0, 1, 0, 0});
    o.require(close(d_topw({{0.4, 0.1, 0.3, 0.2}}, {{0.4, 0.1, 0.3, 0.2}}, w, 4), 1.0), "d_topw identity");
    o.require(close(d_topw({{0.5, 0.1, 0.3, 0.1}}, {{0.1, 0.5, 0.1, 0.3}}, w, 2), 0.75), "d_topw 0.75 example");
    const Matrix id(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
    o.require(d_topw({{0.5, 0.3, 0.2}}, {{0.3, 0.2, 0.5}}, id, 3) == 0.0, "d_topw orthogonal");

    const std::vector<std::string> a = {"request", "url", "response", "api", "http"};
    const std::vector<std::string> b = {"request", "api", "http", "server", "get"};
    const std::vector<std::string> c = {"file", "path", "dir", "open", "read"};
    o.require(d_cap(a, a) == 5, "d_cap identity");
    o.require(d_cap(a, b) == 3, "d_cap example 3");
    o.require(d_cap(a, c) == 0, "d_cap disjoint");

    Rng rng(1);
    std::size_t checked = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.below(5), k = 1 + rng.below(n), cols = 1 + rng.below(8);
        const auto x = random_dist(rng, n), y = random_dist(rng, n);
        Matrix m(n, cols);
        for (double& v : m.data()) v = 0.01 + rng.uniform();
        o.require(close(d_mse({x}, {y}), oracle::mse(x, y)), "d_mse oracle");
        o.require(d_top({x}, {y}, k) == oracle::top_overlap(x, y, k), "d_top oracle");
        o.require(close(d_topw({x}, {y}, m, k), oracle::topw(x, y, rows(m), k, false)), "d_topw oracle");
        ++checked;
    }
    o.detail << "examples exact; " << checked << " oracle instances";
}

void coherence_oracle(Outcome& o) {
    Rng rng(2024);
    double worst = 0;
    const int n_corpora = 50;
    for (int t = 0; t < n_corpora; ++t) {
        const std::size_t vocab = 2 + rng.below(7);
        std::vector<std::vector<std::string>> tokens(1 + rng.below(10));
        for (auto& d : tokens) {
            const std::size_t len = rng.below(10);
            for (std::size_t i = 0; i < len; ++i) d.push_back("w" + std::to_string(rng.below(vocab)));
        }
        tokens[0].push_back("w0");
        std::vector<corpus::Document> docs;
        for (std::size_t i = 0; i < tokens.size(); ++i) docs.push_back({std::to_string(i), "", tokens[i]});
        std::vector<std::string> top;
        const std::size_t m = 2 + rng.below(vocab - 1);
        for (std::size_t j = 0; j < m; ++j) top.push_back("w" + std::to_string(j));
        eval::CoherenceConfig cfg;
        cfg.window_size = 2 + rng.below(4);
        const double got = eval::coherence_cv(top, docs, cfg).score;
        const double want = oracle::coherence_cv(top, tokens, cfg.window_size, cfg.epsilon);
        worst = std::max(worst, std::abs(got - want));
    }
    o.require(worst <= 1e-9, "max deviation " + std::to_string(worst));
    o.detail << n_corpora << " corpora, max |diff| " << worst;
}

void ctfidf_oracle(Outcome& o) {
    Rng rng(77);
    double worst = 0;
    const int n = 200;
    for (int t = 0; t < n; ++t) {
        const std::size_t v = 1 + rng.below(10);
        corpus::Vocabulary vocab;
        for (std::size_t j = 0; j < v; ++j) vocab.words.push_back(testsupport::vocab_word(3, j));
        vocab.doc_freq.assign(v, 0.5);
        std::vector<std::vector<std::string>> clusters(1 + rng.below(5));
        for (auto& cl : clusters) {
            const std::size_t len = rng.below(25);
            for (std::size_t i = 0; i < len; ++i) cl.push_back(testsupport::vocab_word(3, rng.below(v + 2)));
        }
        const auto got = topics::ctfidf(clusters, vocab);
        const auto want = oracle::ctfidf(clusters, vocab.words);
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t k = 0; k < v; ++k) worst = std::max(worst, std::abs(got(i, k) - want[i][k]));
    }
    o.require(worst <= 1e-12, "max deviation " + std::to_string(worst));
    o.detail << n << " instances, max |diff| " << worst;
}

void topic_recovery(Outcome& o) {
    const auto corpus = testsupport::topic_corpus(4, 100, 30, 4);
    std::vector<corpus::Document> docs;
    for (const auto& d : corpus) docs.push_back(d.doc);
    const auto emb = testsupport::hash_embeddings(corpus, 256, 0);
    topics::FitParams p;
    p.min_topic_size = 25;
    const auto model = topics::fit(docs, emb, p);

    std::map<std::string, std::size_t> owner;
    for (std::size_t g = 0; g < 4; ++g)
        for (const auto& w : testsupport::vocabulary(g)) owner[w] = g;

    std::vector<std::array<std::size_t, 4>> counts(model.n_topics, {0, 0, 0, 0});
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const int t = model.train_assignments[i];
        if (t < 0) continue;
        ++counts[static_cast<std::size_t>(t)][corpus[i].group];
        ++assigned;
    }
    std::size_t majority = 0;
    for (const auto& c : counts) majority += *std::max_element(c.begin(), c.end());
    const double purity = assigned == 0 ? 0.0 : static_cast<double>(majority) / static_cast<double>(assigned);

    bool words_pure = true;
    for (std::size_t t = 0; t < model.n_topics; ++t) {
        std::set<std::size_t> groups;
        for (const auto& w : topics::top_words(model, static_cast<int>(t), 5)) groups.insert(owner.at(w));
        words_pure = words_pure && groups.size() == 1;
    }
    o.require(model.n_topics >= 4, "only " + std::to_string(model.n_topics) + " topics");
    o.require(purity >= 0.9, "purity " + std::to_string(purity));
    o.require(words_pure, "a topic's top-5 words span vocabularies");
    o.detail << model.n_topics << " topics, purity " << purity << " over " << assigned << " assigned docs, "
             << (corpus.size() - assigned) << " outliers";
}

void neighbor_preservation(Outcome& o) {
    const auto blobs = testsupport::gaussian_blobs(3, 20, 50, 0.1, 10.0, 1);
    topics::FitParams p;
    const auto low5 = topics::reduce_dim(blobs.points, p);
    const auto low2 = topics::reduce_dim(blobs.points, p, 2);
    const double t5 = umap::trustworthiness(blobs.points, low5, 10, p.metric);
    const double t2 = umap::trustworthiness(blobs.points, low2, 10, p.metric);
    std::size_t cross = 0;
    for (std::size_t i = 0; i < low2.rows(); ++i) {
        std::size_t best = i == 0 ? 1 : 0;
        for (std::size_t j = 0; j < low2.rows(); ++j) {
            if (j != i && squared_euclidean(low2.row(i), low2.row(j)) < squared_euclidean(low2.row(i), low2.row(best)))
                best = j;
        }
        if (blobs.labels[best] != blobs.labels[i]) ++cross;
    }
    o.require(t5 >= 0.8, "5-D trustworthiness " + std::to_string(t5));
    o.require(t2 >= 0.8, "2-D trustworthiness " + std::to_string(t2));
    o.require(cross == 0, std::to_string(cross) + " points with a cross-blob 2-D neighbor");
    o.detail << "trustworthiness(k=10) 5-D " << t5 << ", 2-D " << t2 << "; cross-blob 2-D neighbors " << cross;
}

json pipeline_config(const fs::path& dir, const fs::path& corpus, const std::string& base_url) {
    return {{"corpus", corpus.string()},
            {"workdir", (dir / "work").string()},
            {"split", {{"train", 360}, {"eval", 60}}},
            {"llm", {{"base_url", base_url}, {"backoff_base_ms", 1}}},
            {"fit", {{"min_topic_size", 10}}}};
}

struct PipelineRuns {
    fs::path first;
    fs::path second;
    bool ok = false;
    std::string error;
};

PipelineRuns run_twice() {
    PipelineRuns runs;
    testsupport::MockLlm server;
    const auto root = testsupport::scratch_dir("acceptance");
    const auto corpus = root / "corpus.jsonl";
    testsupport::write_file(corpus, testsupport::code_corpus_jsonl(12, 35, 11));
    runs.first = root / "a";
    runs.second = root / "b";
    for (const auto& dir : {runs.first, runs.second}) {
        testsupport::write_file(dir / "config.json", pipeline_config(dir, corpus, server.base_url()).dump(2));
        const auto r = testsupport::run_pipeline(dir / "config.json");
        if (r.code != 0) {
            runs.error = "pipeline exit " + std::to_string(r.code) + ": " + r.err;
            return runs;
        }
    }
    runs.ok = true;
    return runs;
}

void determinism(Outcome& o, const PipelineRuns& runs) {
    o.require(runs.ok, runs.error);
    if (!runs.ok) return;
    const auto a = testsupport::snapshot(runs.first / "work");
    const auto b = testsupport::snapshot(runs.second / "work");
    std::size_t differing = 0;
    for (const auto& [path, content] : a) {
        const auto it = b.find(path);
        if (it == b.end() || it->second != content) {
            ++differing;
            o.require(false, "differs: " + path);
        }
    }
    o.require(a.size() == b.size(), "file sets differ");
    std::size_t models = 0, reports = 0;
    for (const auto& [path, content] : a) {
        models += path.rfind("models/", 0) == 0 ? 1 : 0;
        reports += path.rfind("report/", 0) == 0 ? 1 : 0;
    }
    o.require(models >= 10 && reports >= 7, "model or report artifacts missing");
    o.detail << a.size() << " files byte-identical (" << models << " model, " << reports << " report)";
}

void self_comparison(Outcome& o) {
    const auto corpus = testsupport::topic_corpus(12, 40, 30, 8);
    std::vector<corpus::Document> docs;
    for (const auto& d : corpus) docs.push_back(d.doc);
    const auto emb = testsupport::hash_embeddings(corpus, 256, 0);
    topics::FitParams p;
    p.min_topic_size = 15;
    const auto model = topics::fit(docs, emb, p);
    o.require(model.n_topics >= 10, "model has only " + std::to_string(model.n_topics) + " topics");

    std::vector<eval::EvalItem> items;
    for (const auto& e : emb) items.push_back({e.id, e.vector, e.vector, e.vector});
    const auto table = eval::compare_settings(model, model, items);
    std::size_t checked = 0, cap_checked = 0;
    for (const auto& row : table) {
        for (const auto& d : row.per_document) {
            if (d.mse) o.require(*d.mse == 0.0, "d_mse " + std::to_string(*d.mse) + " for " + d.id);
            if (d.top) o.require(*d.top == 10.0, "d_top " + std::to_string(*d.top) + " for " + d.id);
            if (d.topw) o.require(std::abs(*d.topw - 1.0) <= 1e-12, "d_topw for " + d.id);
            if (d.cap) {
                o.require(*d.cap == 5.0, "d_cap for " + d.id);
                ++cap_checked;
            }
            ++checked;
        }
    }
    o.require(table.size() == 3 && table[0].n_pairs == items.size(), "row layout");
    o.detail << model.n_topics << " topics; " << checked << " per-document rows, " << cap_checked
             << " with d_cap (outliers have no topic word list)";
}

void published_numbers(Outcome& o, const PipelineRuns& runs) {
    o.require(runs.ok, runs.error);
    if (!runs.ok) return;
    const auto rows = testsupport::read_csv(runs.first / "work/evaluate/comparison.csv");
    o.require(rows.size() == 4, "comparison table has " + std::to_string(rows.size()) + " lines");
    if (rows.size() != 4) return;
    const std::vector<std::string> header = {"model", "input", "d_mse", "d_top", "d_topw", "d_cap"};
    o.require(std::equal(header.begin(), header.end(), rows[0].begin()), "header");
    auto num = [&](const std::string& cell, double lo, double hi, const std::string& what) {
        double v = NAN;
        try {
            v = std::stod(cell);
        } catch (const std::exception&) {
        }
        o.require(std::isfinite(v) && v >= lo && v <= hi, what + " = '" + cell + "'");
        return v;
    };
    for (std::size_t r = 1; r <= 2; ++r) {
        num(rows[r][2], 0.0, 1.0, rows[r][1] + " d_mse");
        num(rows[r][3], 0.0, 10.0, rows[r][1] + " d_top");
        num(rows[r][4], -1.0, 1.0, rows[r][1] + " d_topw");
        num(rows[r][5], 0.0, 5.0, rows[r][1] + " d_cap");
    }
    o.require(rows[3][0] == "M_summ" && rows[3][2] == "N/A" && rows[3][3] == "N/A" && rows[3][4] == "N/A",
              "N/A placement in M_summ row");
    num(rows[3][5], 0.0, 5.0, "M_summ d_cap");
    const double cap_summaries = num(rows[1][5], 0.0, 5.0, "summaries d_cap");
    const double cap_names = num(rows[2][5], 0.0, 5.0, "names d_cap");
    o.require(cap_summaries >= cap_names, "summaries d_cap below names d_cap");
    o.detail << "structure ok; d_cap summaries " << cap_summaries << " >= names " << cap_names
             << "; published values not reproducible at desk scale";
}

}  // namespace

int main() {
    criterion(1, "metric exactness", 1.0, metric_exactness);
    criterion(2, "coherence oracle equivalence", 10.0, coherence_oracle);
    criterion(3, "c-TF-IDF oracle equivalence", 0.0, ctfidf_oracle);
    criterion(4, "synthetic topic recovery", 60.0, topic_recovery);
    criterion(5, "neighbor preservation", 0.0, neighbor_preservation);
    const auto t0 = std::chrono::steady_clock::now();
    const auto runs = run_twice();
    std::printf("info: two pipeline runs took %.2f s\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    criterion(6, "determinism", 0.0, [&](Outcome& o) { determinism(o, runs); });
    criterion(7, "self-comparison sanity", 0.0, self_comparison);
    criterion(8, "published-number status", 0.0, [&](Outcome& o) { published_numbers(o, runs); });
    std::printf("%s: %d of 8 criteria failed\n", failures == 0 ? "OK" : "NOT OK", failures);
    return failures == 0 ? 0 : 1;
}
