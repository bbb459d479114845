#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codetopics/corpus.hpp"
#include "codetopics/embedder.hpp"
#include "codetopics/matrix.hpp"

namespace codetopics::topics {

struct FitParams {
    std::size_t nr_topics = 40;  // real topics; the outlier label is not counted
    std::size_t min_topic_size = 25;
    std::size_t n_neighbors = 10;
    double min_distance = 0.01;
    std::size_t reduced_dim = 5;
    Metric metric = Metric::cosine;
    std::uint64_t seed = 42;
    double assign_kappa = 2.0;
    double softmax_temperature = 0.1;
    double max_df = 0.75;
    std::size_t n_epochs = 200;
    std::size_t negative_sample_rate = 5;

    // Throws std::invalid_argument.
    void validate() const;
};

nlohmann::json to_json(const FitParams& p);
FitParams fit_params_from_json(const nlohmann::json& j);

struct TopicModel {
    std::size_t n_topics = 0;
    corpus::Vocabulary vocabulary;
    Matrix topic_terms;  // n_topics x |vocabulary|
    Matrix centroids;    // n_topics x embedding dim, unit rows
    FitParams params;
    std::vector<std::string> train_ids;
    std::vector<int> train_assignments;  // -1 for outliers
    std::vector<double> train_max_prob;
    std::vector<std::size_t> topic_sizes;
    nlohmann::json metadata = nlohmann::json::object();
};

struct TopicDistribution {
    std::vector<double> probs;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Matrix to_matrix(std::span<const embedder::Embedding> embeddings);

// UMAP projection to params.reduced_dim (or n_components when non-zero).
Matrix reduce_dim(const Matrix& embeddings, const FitParams& params, std::size_t n_components = 0);

// HDBSCAN labels, -1 for noise.
std::vector<int> cluster(const Matrix& points, std::size_t min_cluster_size);

// Class-based TF-IDF over per-cluster token bags. Words outside the
// vocabulary are ignored.
Matrix ctfidf(std::span<const std::vector<std::string>> cluster_tokens, const corpus::Vocabulary& vocabulary);

// Merges the smallest topic into its most similar one (cosine of c-TF-IDF
// rows) until at most `target` topics remain. Labels must be -1 or in
// [0, n_topics); the result is renumbered to 0..k-1 keeping relative order.
std::vector<int> reduce_topics(std::span<const int> labels, std::span<const corpus::Document> docs,
                               const corpus::Vocabulary& vocabulary, std::size_t target);

// Model-level variant: rebuilds W, centroids and sizes from the merged labels.
TopicModel reduce_topics(const TopicModel& model, std::span<const corpus::Document> docs,
                         std::span<const embedder::Embedding> embeddings, std::size_t target);

// reduce_dim, cluster, c-TF-IDF, topic reduction. Documents with no tokens
// are kept as outliers and take no part in the projection. Topics are
// numbered by size, largest first.
TopicModel fit(std::span<const corpus::Document> documents, std::span<const embedder::Embedding> embeddings,
               const FitParams& params);

TopicDistribution infer_distribution(const TopicModel& model, std::span<const float> embedding);
TopicDistribution infer_distribution(const TopicModel& model, std::span<const double> embedding);

// Argmax (lowest index on ties) when the top probability reaches
// min(kappa / n, 1); otherwise -1.
int assign_topic(const TopicDistribution& dist, const FitParams& params);

// Highest-weighted words of a topic, ties in lexicographic order.
std::vector<std::string> top_words(const TopicModel& model, int topic, std::size_t k);

}  // namespace codetopics::topics
