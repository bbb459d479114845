#include "codetopics/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace codetopics::eval {

namespace {

void require_same_length(const TopicDistribution& p, const TopicDistribution& q, const char* what) {
    if (p.probs.size() != q.probs.size()) {
        throw std::invalid_argument(std::string(what) + ": distributions differ in length (" +
                                    std::to_string(p.probs.size()) + " vs " + std::to_string(q.probs.size()) + ")");
    }
}

void require_k(std::size_t k, std::size_t n, const char* what) {
    if (k > n) {
        throw std::invalid_argument(std::string(what) + ": k = " + std::to_string(k) + " exceeds " +
                                    std::to_string(n) + " topics");
    }
}

}  // namespace

std::optional<double> mean(std::span<const double> values) {
    if (values.empty()) return std::nullopt;
    double sum = 0.0;
    double c = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) c += (sum - t) + v;
        else c += (v - t) + sum;
        sum = t;
    }
    return (sum + c) / static_cast<double>(values.size());
}

double d_mse(const TopicDistribution& p, const TopicDistribution& q) {
    require_same_length(p, q, "d_mse");
    if (p.probs.empty()) throw std::invalid_argument("d_mse: empty distributions");
    double s = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        const double d = p.probs[i] - q.probs[i];
        s += d * d;
    }
    return s / static_cast<double>(p.probs.size());
}

std::vector<std::size_t> top_k_indices(std::span<const double> probs, std::size_t k) {
    std::vector<std::size_t> idx(probs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t m = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (probs[a] != probs[b]) return probs[a] > probs[b];
                          return a < b;
                      });
    idx.resize(m);
    return idx;
}

std::size_t d_top(const TopicDistribution& p, const TopicDistribution& q, std::size_t k) {
    require_same_length(p, q, "d_top");
    require_k(k, p.probs.size(), "d_top");
    auto a = top_k_indices(p.probs, k);
    auto b = top_k_indices(q.probs, k);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::size_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return common.size();
}

double d_topw(const TopicDistribution& p, const TopicDistribution& q, const Matrix& topic_terms, std::size_t k,
              Pairing pairing) {
    require_same_length(p, q, "d_topw");
    require_k(k, p.probs.size(), "d_topw");
    if (topic_terms.rows() != p.probs.size()) {
        throw std::invalid_argument("d_topw: topic-term matrix has " + std::to_string(topic_terms.rows()) +
                                    " rows for " + std::to_string(p.probs.size()) + " topics");
    }
    if (k == 0) throw std::invalid_argument("d_topw: k must be >= 1");
    const auto a = top_k_indices(p.probs, k);
    const auto b = top_k_indices(q.probs, k);
    double s = 0.0;
    if (pairing == Pairing::rank) {
        for (std::size_t i = 0; i < k; ++i) s += cosine_similarity(topic_terms.row(a[i]), topic_terms.row(b[i]));
        return s / static_cast<double>(k);
    }
    for (std::size_t i : a) {
        for (std::size_t j : b) s += cosine_similarity(topic_terms.row(i), topic_terms.row(j));
    }
    return s / static_cast<double>(k * k);
}

std::size_t d_cap(std::span<const std::string> words_a, std::span<const std::string> words_b, std::size_t k) {
    std::vector<std::string> a(words_a.begin(), words_a.begin() + static_cast<std::ptrdiff_t>(std::min(k, words_a.size())));
    std::vector<std::string> b(words_b.begin(), words_b.begin() + static_cast<std::ptrdiff_t>(std::min(k, words_b.size())));
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<std::string> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return common.size();
}

InferenceRecord infer(const topics::TopicModel& model, const std::string& id, std::span<const float> embedding) {
    auto dist = topics::infer_distribution(model, embedding);
    const int topic = topics::assign_topic(dist, model.params);
    return {id, std::move(dist.probs), topic};
}

ComparisonRow compare_distributions(const std::string& model_label, const std::string& representation,
                                    const topics::TopicModel& model, std::span<const InferenceRecord> reference,
                                    std::span<const InferenceRecord> candidate, const CompareOptions& options) {
    ComparisonRow row;
    row.model = model_label;
    row.representation = representation;
    std::unordered_map<std::string, const InferenceRecord*> by_id;
    for (const auto& c : candidate) by_id.emplace(c.id, &c);
    const std::size_t top_k = std::min(options.top_k, model.n_topics);

    std::vector<double> mse, top, topw, cap;
    for (const auto& r : reference) {
        const auto it = by_id.find(r.id);
        if (it == by_id.end()) {
            ++row.n_skipped;
            continue;
        }
        const InferenceRecord& c = *it->second;
        const TopicDistribution p{r.probs};
        const TopicDistribution q{c.probs};
        PairMetrics m;
        m.id = r.id;
        m.mse = d_mse(p, q);
        m.top = static_cast<double>(d_top(p, q, top_k));
        m.topw = d_topw(p, q, model.topic_terms, top_k, options.pairing);
        mse.push_back(*m.mse);
        top.push_back(*m.top);
        topw.push_back(*m.topw);
        if (r.topic >= 0 && c.topic >= 0) {
            const auto wa = topics::top_words(model, r.topic, options.cap_k);
            const auto wb = topics::top_words(model, c.topic, options.cap_k);
            m.cap = static_cast<double>(d_cap(wa, wb, options.cap_k));
            cap.push_back(*m.cap);
        }
        row.per_document.push_back(std::move(m));
    }
    row.n_pairs = mse.size();
    row.n_cap_pairs = cap.size();
    row.d_mse = mean(mse);
    row.d_top = mean(top);
    row.d_topw = mean(topw);
    row.d_cap = mean(cap);
    return row;
}

ComparisonRow compare_word_overlap(const std::string& model_label, const std::string& representation,
                                   const topics::TopicModel& reference_model, std::span<const InferenceRecord> reference,
                                   const topics::TopicModel& candidate_model, std::span<const InferenceRecord> candidate,
                                   const CompareOptions& options) {
    ComparisonRow row;
    row.model = model_label;
    row.representation = representation;
    std::unordered_map<std::string, const InferenceRecord*> by_id;
    for (const auto& c : candidate) by_id.emplace(c.id, &c);
    std::vector<double> cap;
    for (const auto& r : reference) {
        const auto it = by_id.find(r.id);
        if (it == by_id.end()) {
            ++row.n_skipped;
            continue;
        }
        ++row.n_pairs;
        const InferenceRecord& c = *it->second;
        PairMetrics m;
        m.id = r.id;
        if (r.topic >= 0 && c.topic >= 0) {
            const auto wa = topics::top_words(reference_model, r.topic, options.cap_k);
            const auto wb = topics::top_words(candidate_model, c.topic, options.cap_k);
            m.cap = static_cast<double>(d_cap(wa, wb, options.cap_k));
            cap.push_back(*m.cap);
        }
        row.per_document.push_back(std::move(m));
    }
    row.n_cap_pairs = cap.size();
    row.d_cap = mean(cap);
    return row;
}

std::vector<ComparisonRow> compare_settings(const topics::TopicModel& model_doc, const topics::TopicModel& model_summ,
                                            std::span<const EvalItem> items, const CompareOptions& options) {
    std::vector<InferenceRecord> reference;
    std::vector<InferenceRecord> doc_summ;
    std::vector<InferenceRecord> doc_names;
    std::vector<InferenceRecord> summ_summ;
    for (const auto& it : items) {
        if (it.docstring) reference.push_back(infer(model_doc, it.id, *it.docstring));
        if (it.summary) {
            doc_summ.push_back(infer(model_doc, it.id, *it.summary));
            summ_summ.push_back(infer(model_summ, it.id, *it.summary));
        }
        if (it.name) doc_names.push_back(infer(model_doc, it.id, *it.name));
    }
    std::vector<ComparisonRow> rows;
    rows.push_back(compare_distributions("M_doc", "summaries", model_doc, reference, doc_summ, options));
    rows.push_back(compare_distributions("M_doc", "names", model_doc, reference, doc_names, options));
    rows.push_back(compare_word_overlap("M_summ", "summaries", model_doc, reference, model_summ, summ_summ, options));
    for (auto& r : rows) r.n_skipped = items.size() - r.n_pairs;
    return rows;
}

}  // namespace codetopics::eval
