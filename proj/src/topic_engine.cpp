#include "codetopics/topic_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "codetopics/hdbscan.hpp"
#include "codetopics/umap.hpp"

namespace codetopics::topics {

namespace {

const char* metric_name(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

Metric metric_from_name(const std::string& s) {
    if (s == "cosine") return Metric::cosine;
    if (s == "euclidean") return Metric::euclidean;
    throw std::invalid_argument("unknown metric '" + s + "'");
}

// Per-topic in-vocabulary term counts, one dense row per topic.
Matrix term_counts(std::span<const int> labels, std::span<const corpus::Document> docs,
                   const corpus::Vocabulary& vocabulary, std::size_t n_topics) {
    Matrix counts(n_topics, vocabulary.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (labels[d] < 0) continue;
        auto row = counts.row(static_cast<std::size_t>(labels[d]));
        for (const auto& tok : docs[d].tokens) {
            if (auto k = vocabulary.index_of(tok)) row[*k] += 1.0;
        }
    }
    return counts;
}

Matrix weights_from_counts(const Matrix& counts) {
    const std::size_t n = counts.rows();
    const std::size_t v = counts.cols();
    std::vector<double> f(v, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < v; ++k) {
            f[k] += counts(i, k);
            total += counts(i, k);
        }
    }
    const double avg = n == 0 ? 0.0 : total / static_cast<double>(n);
    Matrix w(n, v);
    for (std::size_t k = 0; k < v; ++k) {
        if (f[k] == 0.0) continue;
        const double idf = std::log(1.0 + avg / f[k]);
        for (std::size_t i = 0; i < n; ++i) w(i, k) = counts(i, k) * idf;
    }
    return w;
}

void round_to_float(Matrix& m) {
    for (double& x : m.data()) x = static_cast<double>(static_cast<float>(x));
}

std::size_t label_count(std::span<const int> labels) {
    int hi = -1;
    for (int l : labels) {
        if (l < -1) throw std::invalid_argument("labels must be -1 or non-negative");
        hi = std::max(hi, l);
    }
    return static_cast<std::size_t>(hi + 1);
}

Matrix unit_centroids(std::span<const int> labels, const Matrix& x, std::size_t n_topics) {
    Matrix c(n_topics, x.cols());
    for (std::size_t d = 0; d < labels.size(); ++d) {
        if (labels[d] < 0) continue;
        auto row = c.row(static_cast<std::size_t>(labels[d]));
        auto src = x.row(d);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += src[j];
    }
    for (std::size_t i = 0; i < n_topics; ++i) {
        auto row = c.row(i);
        const double nr = norm(row);
        if (nr > 0.0) {
            for (double& v : row) v /= nr;
        }
    }
    return c;
}

// Relabels so that topics are numbered by decreasing size, ties by old id.
std::vector<int> renumber_by_size(std::span<const int> labels, std::size_t n_topics) {
    std::vector<std::size_t> sizes(n_topics, 0);
    for (int l : labels) {
        if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    }
    std::vector<std::size_t> order(n_topics);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
    std::vector<int> new_id(n_topics);
    for (std::size_t r = 0; r < n_topics; ++r) new_id[order[r]] = static_cast<int>(r);
    std::vector<int> out(labels.begin(), labels.end());
    for (int& l : out) {
        if (l >= 0) l = new_id[static_cast<std::size_t>(l)];
    }
    return out;
}

// Drops ids with no members and closes the gaps, keeping relative order.
std::vector<int> compact(std::span<const int> labels, std::size_t n_topics) {
    std::vector<int> remap(n_topics, -1);
    for (int l : labels) {
        if (l >= 0) remap[static_cast<std::size_t>(l)] = 0;
    }
    int next = 0;
    for (auto& r : remap) {
        if (r == 0) r = next++;
    }
    std::vector<int> out(labels.begin(), labels.end());
    for (int& l : out) {
        if (l >= 0) l = remap[static_cast<std::size_t>(l)];
    }
    return out;
}

}  // namespace

void FitParams::validate() const {
    if (nr_topics < 2) throw std::invalid_argument("nr_topics must be >= 2");
    if (min_topic_size < 2) throw std::invalid_argument("min_topic_size must be >= 2");
    if (n_neighbors < 2) throw std::invalid_argument("n_neighbors must be >= 2");
    if (!(min_distance > 0.0 && min_distance < 1.0)) throw std::invalid_argument("min_distance must lie in (0, 1)");
    if (reduced_dim < 1) throw std::invalid_argument("reduced_dim must be >= 1");
    if (!(assign_kappa > 0.0)) throw std::invalid_argument("assign_kappa must be > 0");
    if (!(softmax_temperature > 0.0)) throw std::invalid_argument("softmax_temperature must be > 0");
    if (!(max_df > 0.0 && max_df <= 1.0)) throw std::invalid_argument("max_df must lie in (0, 1]");
    if (n_epochs < 1) throw std::invalid_argument("n_epochs must be >= 1");
}

nlohmann::json to_json(const FitParams& p) {
    return {{"nr_topics", p.nr_topics},
            {"min_topic_size", p.min_topic_size},
            {"n_neighbors", p.n_neighbors},
            {"min_distance", p.min_distance},
            {"reduced_dim", p.reduced_dim},
            {"metric", metric_name(p.metric)},
            {"seed", p.seed},
            {"assign_kappa", p.assign_kappa},
            {"softmax_temperature", p.softmax_temperature},
            {"max_df", p.max_df},
            {"n_epochs", p.n_epochs},
            {"negative_sample_rate", p.negative_sample_rate}};
}

FitParams fit_params_from_json(const nlohmann::json& j) {
    FitParams p;
    p.nr_topics = j.value("nr_topics", p.nr_topics);
    p.min_topic_size = j.value("min_topic_size", p.min_topic_size);
    p.n_neighbors = j.value("n_neighbors", p.n_neighbors);
    p.min_distance = j.value("min_distance", p.min_distance);
    p.reduced_dim = j.value("reduced_dim", p.reduced_dim);
    p.metric = metric_from_name(j.value("metric", std::string(metric_name(p.metric))));
    p.seed = j.value("seed", p.seed);
    p.assign_kappa = j.value("assign_kappa", p.assign_kappa);
    p.softmax_temperature = j.value("softmax_temperature", p.softmax_temperature);
    p.max_df = j.value("max_df", p.max_df);
    p.n_epochs = j.value("n_epochs", p.n_epochs);
    p.negative_sample_rate = j.value("negative_sample_rate", p.negative_sample_rate);
    return p;
}

Matrix to_matrix(std::span<const embedder::Embedding> embeddings) {
    if (embeddings.empty()) return {};
    const std::size_t dim = embeddings.front().vector.size();
    Matrix m(embeddings.size(), dim);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        const auto& v = embeddings[i].vector;
        if (v.size() != dim) throw std::invalid_argument("embedding dimension mismatch at id " + embeddings[i].id);
        for (std::size_t j = 0; j < dim; ++j) m(i, j) = v[j];
    }
    return m;
}

Matrix reduce_dim(const Matrix& embeddings, const FitParams& params, std::size_t n_components) {
    umap::Params up;
    up.n_neighbors = params.n_neighbors;
    up.min_dist = params.min_distance;
    up.n_components = n_components == 0 ? params.reduced_dim : n_components;
    up.n_epochs = params.n_epochs;
    up.negative_sample_rate = params.negative_sample_rate;
    up.metric = params.metric;
    up.seed = params.seed;
    return umap::embed(embeddings, up);
}

std::vector<int> cluster(const Matrix& points, std::size_t min_cluster_size) {
    hdbscan::Params hp;
    hp.min_cluster_size = min_cluster_size;
    return hdbscan::cluster(points, hp);
}

Matrix ctfidf(std::span<const std::vector<std::string>> cluster_tokens, const corpus::Vocabulary& vocabulary) {
    Matrix counts(cluster_tokens.size(), vocabulary.size());
    for (std::size_t i = 0; i < cluster_tokens.size(); ++i) {
        for (const auto& tok : cluster_tokens[i]) {
            if (auto k = vocabulary.index_of(tok)) counts(i, *k) += 1.0;
        }
    }
    return weights_from_counts(counts);
}

std::vector<int> reduce_topics(std::span<const int> labels, std::span<const corpus::Document> docs,
                               const corpus::Vocabulary& vocabulary, std::size_t target) {
    if (target < 2) throw std::invalid_argument("reduce_topics: target must be >= 2");
    if (labels.size() != docs.size()) throw std::invalid_argument("reduce_topics: labels and docs differ in length");
    const std::size_t n_topics = label_count(labels);
    std::vector<int> out(labels.begin(), labels.end());
    if (n_topics <= target) return out;

    Matrix counts = term_counts(labels, docs, vocabulary, n_topics);
    std::vector<std::size_t> sizes(n_topics, 0);
    for (int l : labels) {
        if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    }
    std::vector<std::size_t> alive(n_topics);
    std::iota(alive.begin(), alive.end(), std::size_t{0});

    while (alive.size() > target) {
        // Weights over the surviving topics only; A depends on their number.
        Matrix live_counts(alive.size(), counts.cols());
        for (std::size_t r = 0; r < alive.size(); ++r) {
            std::copy(counts.row(alive[r]).begin(), counts.row(alive[r]).end(), live_counts.row(r).begin());
        }
        const Matrix w = weights_from_counts(live_counts);

        std::size_t s = 0;
        for (std::size_t r = 1; r < alive.size(); ++r) {
            if (sizes[alive[r]] < sizes[alive[s]]) s = r;
        }
        std::size_t t = alive.size();
        double best = -2.0;
        for (std::size_t r = 0; r < alive.size(); ++r) {
            if (r == s) continue;
            const double c = cosine_similarity(w.row(s), w.row(r));
            if (c > best) {
                best = c;
                t = r;
            }
        }
        const std::size_t from = alive[s];
        const std::size_t into = alive[t];
        auto dst = counts.row(into);
        auto src = counts.row(from);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        sizes[into] += sizes[from];
        for (int& l : out) {
            if (l == static_cast<int>(from)) l = static_cast<int>(into);
        }
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(s));
    }
    return compact(out, n_topics);
}

TopicModel reduce_topics(const TopicModel& model, std::span<const corpus::Document> docs,
                         std::span<const embedder::Embedding> embeddings, std::size_t target) {
    if (docs.size() != model.train_assignments.size() || embeddings.size() != docs.size()) {
        throw std::invalid_argument("reduce_topics: docs, embeddings and assignments must align");
    }
    TopicModel out = model;
    out.train_assignments = reduce_topics(model.train_assignments, docs, model.vocabulary, target);
    out.n_topics = label_count(out.train_assignments);
    out.topic_terms = weights_from_counts(term_counts(out.train_assignments, docs, out.vocabulary, out.n_topics));
    out.centroids = unit_centroids(out.train_assignments, to_matrix(embeddings), out.n_topics);
    round_to_float(out.topic_terms);
    round_to_float(out.centroids);
    out.topic_sizes.assign(out.n_topics, 0);
    for (int l : out.train_assignments) {
        if (l >= 0) ++out.topic_sizes[static_cast<std::size_t>(l)];
    }
    out.train_max_prob.clear();
    for (const auto& e : embeddings) {
        const auto dist = infer_distribution(out, std::span<const float>(e.vector));
        out.train_max_prob.push_back(*std::max_element(dist.probs.begin(), dist.probs.end()));
    }
    return out;
}

TopicModel fit(std::span<const corpus::Document> documents, std::span<const embedder::Embedding> embeddings,
               const FitParams& params) {
    params.validate();
    if (documents.size() != embeddings.size()) {
        throw std::invalid_argument("fit: " + std::to_string(documents.size()) + " documents but " +
                                    std::to_string(embeddings.size()) + " embeddings");
    }
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (documents[i].id != embeddings[i].id) {
            throw std::invalid_argument("fit: document and embedding ids differ at position " + std::to_string(i) +
                                        " (" + documents[i].id + " vs " + embeddings[i].id + ")");
        }
    }
    if (params.min_topic_size > documents.size()) {
        throw FitError("min_topic_size " + std::to_string(params.min_topic_size) + " exceeds the " +
                       std::to_string(documents.size()) + " documents available");
    }

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (!documents[i].tokens.empty()) active.push_back(i);
    }
    std::vector<corpus::Document> docs;
    std::vector<embedder::Embedding> embs;
    docs.reserve(active.size());
    embs.reserve(active.size());
    for (std::size_t i : active) {
        docs.push_back(documents[i]);
        embs.push_back(embeddings[i]);
    }
    if (docs.size() < params.min_topic_size) {
        throw FitError("only " + std::to_string(docs.size()) + " documents have tokens; min_topic_size is " +
                       std::to_string(params.min_topic_size));
    }

    const corpus::Vocabulary vocab = corpus::build_vocabulary(docs, params.max_df);
    const Matrix x = to_matrix(embs);
    const Matrix low = reduce_dim(x, params);
    std::vector<int> labels = cluster(low, params.min_topic_size);
    std::size_t n_topics = label_count(labels);
    if (n_topics == 0) {
        throw FitError("clustering found no topics; try a smaller min_topic_size");
    }
    const std::size_t initial_clusters = n_topics;

    // A cluster whose words all fell outside the vocabulary has an all-zero
    // c-TF-IDF row; fold it into the cluster with the closest centroid.
    {
        const Matrix counts = term_counts(labels, docs, vocab, n_topics);
        const Matrix cent = unit_centroids(labels, x, n_topics);
        std::vector<bool> empty_row(n_topics, false);
        std::size_t n_empty = 0;
        for (std::size_t i = 0; i < n_topics; ++i) {
            const auto r = counts.row(i);
            empty_row[i] = std::all_of(r.begin(), r.end(), [](double c) { return c == 0.0; });
            n_empty += empty_row[i] ? 1 : 0;
        }
        if (n_empty == n_topics) {
            throw FitError("no topic has any vocabulary word; check max_df and the input documents");
        }
        if (n_empty > 0) {
            std::vector<int> target(n_topics);
            for (std::size_t i = 0; i < n_topics; ++i) {
                target[i] = static_cast<int>(i);
                if (!empty_row[i]) continue;
                double best = -2.0;
                for (std::size_t j = 0; j < n_topics; ++j) {
                    if (empty_row[j]) continue;
                    const double c = cosine_similarity(cent.row(i), cent.row(j));
                    if (c > best) {
                        best = c;
                        target[i] = static_cast<int>(j);
                    }
                }
            }
            for (int& l : labels) {
                if (l >= 0) l = target[static_cast<std::size_t>(l)];
            }
            labels = compact(labels, n_topics);
            n_topics = label_count(labels);
        }
    }

    labels = reduce_topics(labels, docs, vocab, params.nr_topics);
    n_topics = label_count(labels);
    labels = renumber_by_size(labels, n_topics);

    TopicModel model;
    model.n_topics = n_topics;
    model.vocabulary = vocab;
    model.params = params;
    model.topic_terms = weights_from_counts(term_counts(labels, docs, vocab, n_topics));
    model.centroids = unit_centroids(labels, x, n_topics);
    round_to_float(model.topic_terms);
    round_to_float(model.centroids);
    model.topic_sizes.assign(n_topics, 0);
    for (int l : labels) {
        if (l >= 0) ++model.topic_sizes[static_cast<std::size_t>(l)];
    }

    model.train_assignments.assign(documents.size(), -1);
    for (std::size_t r = 0; r < active.size(); ++r) model.train_assignments[active[r]] = labels[r];
    for (std::size_t i = 0; i < documents.size(); ++i) {
        model.train_ids.push_back(documents[i].id);
        const auto dist = infer_distribution(model, std::span<const float>(embeddings[i].vector));
        model.train_max_prob.push_back(*std::max_element(dist.probs.begin(), dist.probs.end()));
    }

    const auto kernel = umap::fit_kernel(1.0, params.min_distance);
    std::size_t n_outliers = 0;
    for (int l : model.train_assignments) n_outliers += l < 0 ? 1 : 0;
    model.metadata = {{"n_documents", documents.size()},
                      {"n_documents_without_tokens", documents.size() - active.size()},
                      {"n_outliers", n_outliers},
                      {"initial_clusters", initial_clusters},
                      {"embedding_dim", x.cols()},
                      {"umap_kernel", {{"a", kernel.a}, {"b", kernel.b}}}};
    return model;
}

TopicDistribution infer_distribution(const TopicModel& model, std::span<const double> embedding) {
    if (model.n_topics == 0) throw std::invalid_argument("infer_distribution: model has no topics");
    if (embedding.size() != model.centroids.cols()) {
        throw std::invalid_argument("infer_distribution: embedding dimension " + std::to_string(embedding.size()) +
                                    " does not match model dimension " + std::to_string(model.centroids.cols()));
    }
    if (norm(embedding) == 0.0) throw std::invalid_argument("infer_distribution: zero embedding vector");
    const double t = model.params.softmax_temperature;
    std::vector<double> s(model.n_topics);
    for (std::size_t i = 0; i < model.n_topics; ++i) s[i] = cosine_similarity(embedding, model.centroids.row(i)) / t;
    const double hi = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double& v : s) {
        v = std::exp(v - hi);
        z += v;
    }
    for (double& v : s) v /= z;
    return {std::move(s)};
}

TopicDistribution infer_distribution(const TopicModel& model, std::span<const float> embedding) {
    std::vector<double> v(embedding.begin(), embedding.end());
    return infer_distribution(model, std::span<const double>(v));
}

int assign_topic(const TopicDistribution& dist, const FitParams& params) {
    if (dist.probs.empty()) throw std::invalid_argument("assign_topic: empty distribution");
    const auto it = std::max_element(dist.probs.begin(), dist.probs.end());
    const double threshold = std::min(params.assign_kappa / static_cast<double>(dist.probs.size()), 1.0);
    if (*it < threshold) return -1;
    return static_cast<int>(it - dist.probs.begin());
}

std::vector<std::string> top_words(const TopicModel& model, int topic, std::size_t k) {
    if (topic < 0 || static_cast<std::size_t>(topic) >= model.n_topics) {
        throw std::out_of_range("top_words: topic " + std::to_string(topic) + " out of range [0, " +
                                std::to_string(model.n_topics) + ")");
    }
    const auto row = model.topic_terms.row(static_cast<std::size_t>(topic));
    const auto& words = model.vocabulary.words;
    std::vector<std::size_t> idx(words.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t m = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (row[a] != row[b]) return row[a] > row[b];
                          return words[a] < words[b];
                      });
    std::vector<std::string> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back(words[idx[i]]);
    return out;
}

}  // namespace codetopics::topics
