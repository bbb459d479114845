#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "codetopics/evaluation.hpp"

namespace codetopics::eval {

void CoherenceConfig::validate() const {
    if (top_n < 2) throw std::invalid_argument("coherence: top_n must be >= 2");
    if (window_size < 2) throw std::invalid_argument("coherence: window_size must be >= 2");
    if (!(epsilon > 0.0)) throw std::invalid_argument("coherence: epsilon must be > 0");
}

CoherenceResult coherence_cv(std::span<const std::string> top_words, std::span<const corpus::Document> reference_docs,
                             const CoherenceConfig& config) {
    config.validate();
    if (top_words.empty()) throw std::invalid_argument("coherence: no top words");
    const std::size_t m = std::min(config.top_n, top_words.size());
    std::unordered_map<std::string, std::vector<std::size_t>> slots;
    for (std::size_t i = 0; i < m; ++i) slots[top_words[i]].push_back(i);

    // Boolean window counts, restricted to the top words.
    std::vector<double> single(m, 0.0);
    std::vector<double> joint(m * m, 0.0);
    double n_windows = 0.0;
    std::vector<std::size_t> present_count(m, 0);
    std::vector<std::size_t> in_window;
    for (const auto& doc : reference_docs) {
        const auto& toks = doc.tokens;
        if (toks.empty()) continue;
        // Top-word slots hit by each position.
        std::vector<std::vector<std::size_t>> hits(toks.size());
        for (std::size_t p = 0; p < toks.size(); ++p) {
            if (auto it = slots.find(toks[p]); it != slots.end()) hits[p] = it->second;
        }
        const std::size_t w = std::min(config.window_size, toks.size());
        std::fill(present_count.begin(), present_count.end(), 0);
        auto add = [&](std::size_t p, int delta) {
            for (std::size_t s : hits[p]) present_count[s] = static_cast<std::size_t>(static_cast<long>(present_count[s]) + delta);
        };
        auto record = [&] {
            in_window.clear();
            for (std::size_t s = 0; s < m; ++s) {
                if (present_count[s] > 0) in_window.push_back(s);
            }
            for (std::size_t a : in_window) {
                single[a] += 1.0;
                for (std::size_t b : in_window) joint[a * m + b] += 1.0;
            }
            n_windows += 1.0;
        };
        for (std::size_t p = 0; p < w; ++p) add(p, +1);
        record();
        for (std::size_t start = 1; start + w <= toks.size(); ++start) {
            add(start - 1, -1);
            add(start + w - 1, +1);
            record();
        }
    }
    if (n_windows == 0.0) throw std::invalid_argument("coherence: reference corpus has no tokens");

    CoherenceResult result;
    for (std::size_t i = 0; i < m; ++i) {
        if (single[i] == 0.0) result.missing_words.push_back(top_words[i]);
    }

    Matrix npmi(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double cij = joint[i * m + j];
            if (cij == 0.0) {
                npmi(i, j) = -1.0;
                continue;
            }
            const double pij = cij / n_windows + config.epsilon;
            const double pi = single[i] / n_windows;
            const double pj = single[j] / n_windows;
            npmi(i, j) = std::log(pij / (pi * pj)) / -std::log(pij);
        }
    }
    std::vector<double> total(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) total[j] += npmi(i, j);
    }
    std::vector<double> sims(m);
    for (std::size_t i = 0; i < m; ++i) sims[i] = cosine_similarity(npmi.row(i), total);
    result.score = *mean(sims);
    return result;
}

}  // namespace codetopics::eval
