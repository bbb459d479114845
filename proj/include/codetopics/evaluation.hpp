#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codetopics/corpus.hpp"
#include "codetopics/matrix.hpp"
#include "codetopics/topic_engine.hpp"

namespace codetopics::eval {

using topics::TopicDistribution;

double d_mse(const TopicDistribution& p, const TopicDistribution& q);

// Indices of the k largest probabilities, descending, ties by lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> probs, std::size_t k);

std::size_t d_top(const TopicDistribution& p, const TopicDistribution& q, std::size_t k = 10);

// rank: i-th most probable topic of p against i-th of q.
// all_pairs: mean over every pair of the two top-k lists.
enum class Pairing { rank, all_pairs };

double d_topw(const TopicDistribution& p, const TopicDistribution& q, const Matrix& topic_terms,
              std::size_t k = 10, Pairing pairing = Pairing::rank);

std::size_t d_cap(std::span<const std::string> words_a, std::span<const std::string> words_b, std::size_t k = 5);

struct CoherenceConfig {
    std::size_t top_n = 10;
    std::size_t window_size = 110;
    double epsilon = 1e-12;

    void validate() const;
};

struct CoherenceResult {
    double score = 0.0;
    // Top words that never occur in the reference corpus.
    std::vector<std::string> missing_words;
};

// C_v: boolean sliding windows, NPMI context vectors over the top words,
// one-set cosine segmentation, arithmetic mean. Only the first top_n words
// are used.
CoherenceResult coherence_cv(std::span<const std::string> top_words, std::span<const corpus::Document> reference_docs,
                             const CoherenceConfig& config = {});

// Topic inference for one document under one model.
struct InferenceRecord {
    std::string id;
    std::vector<double> probs;
    int topic = -1;
};

InferenceRecord infer(const topics::TopicModel& model, const std::string& id, std::span<const float> embedding);

struct PairMetrics {
    std::string id;
    std::optional<double> mse;
    std::optional<double> top;
    std::optional<double> topw;
    std::optional<double> cap;  // absent when either side is an outlier
};

struct ComparisonRow {
    std::string model;           // "M_doc" or "M_summ"
    std::string representation;  // "summaries", "names", "docstrings"
    std::optional<double> d_mse;
    std::optional<double> d_top;
    std::optional<double> d_topw;
    std::optional<double> d_cap;
    std::size_t n_pairs = 0;      // documents present on both sides
    std::size_t n_cap_pairs = 0;  // of those, both assigned a real topic
    std::size_t n_skipped = 0;    // reference documents with no counterpart
    std::vector<PairMetrics> per_document;
};

struct CompareOptions {
    std::size_t top_k = 10;
    std::size_t cap_k = 5;
    Pairing pairing = Pairing::rank;
};

// All four metrics; both record sets were inferred on `model`. Records are
// matched by id; k is capped at the model's topic count.
ComparisonRow compare_distributions(const std::string& model_label, const std::string& representation,
                                    const topics::TopicModel& model, std::span<const InferenceRecord> reference,
                                    std::span<const InferenceRecord> candidate, const CompareOptions& options = {});

// d_cap only: the candidate comes from a different model, so only the word
// lists of the assigned topics are comparable.
ComparisonRow compare_word_overlap(const std::string& model_label, const std::string& representation,
                                   const topics::TopicModel& reference_model, std::span<const InferenceRecord> reference,
                                   const topics::TopicModel& candidate_model, std::span<const InferenceRecord> candidate,
                                   const CompareOptions& options = {});

// One evaluation document; any representation may be missing.
struct EvalItem {
    std::string id;
    std::optional<std::vector<float>> summary;
    std::optional<std::vector<float>> name;
    std::optional<std::vector<float>> docstring;
};

// Rows in the order (M_doc, summaries), (M_doc, names), (M_summ, summaries),
// each measured against (M_doc, docstrings). Items lacking a representation
// are skipped for that row and counted.
std::vector<ComparisonRow> compare_settings(const topics::TopicModel& model_doc, const topics::TopicModel& model_summ,
                                            std::span<const EvalItem> items, const CompareOptions& options = {});

// Compensated (Neumaier) mean; nullopt for no values.
std::optional<double> mean(std::span<const double> values);

}  // namespace codetopics::eval
