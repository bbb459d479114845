#include "codetopics/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "codetopics/rng.hpp"

namespace codetopics::corpus {

namespace {

bool is_ascii_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char to_lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

std::string optional_string(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' is not a string");
    return it->get<std::string>();
}

}  // namespace

std::string Document::token_text() const {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view word) const {
    auto it = std::lower_bound(words.begin(), words.end(), word,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == words.end() || *it != word) return std::nullopt;
    return static_cast<std::size_t>(it - words.begin());
}

LoadResult parse_records(std::string_view jsonl) {
    LoadResult result;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= jsonl.size()) {
        const std::size_t end = std::min(jsonl.find('\n', pos), jsonl.size());
        std::string_view line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return is_space(c); })) {
            if (end == jsonl.size()) break;
            continue;
        }

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line_no, "record is not a JSON object");

        CodeRecord rec;
        try {
            if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
                rec.id = it->is_string() ? it->get<std::string>() : it->dump();
            } else {
                rec.id = "line-" + std::to_string(line_no);
            }
            rec.func_name = optional_string(obj, "func_name");
            rec.docstring = optional_string(obj, "func_documentation_string");
            if (!obj.contains("whole_func_string") || obj["whole_func_string"].is_null()) {
                result.rejected.push_back({line_no, rec.id, "missing whole_func_string"});
                continue;
            }
            rec.code = optional_string(obj, "whole_func_string");
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
        if (rec.code.empty()) {
            result.rejected.push_back({line_no, rec.id, "empty whole_func_string"});
            continue;
        }
        if (!seen.insert(rec.id).second) throw ParseError(line_no, "duplicate record id '" + rec.id + "'");
        result.records.push_back(std::move(rec));
        if (end == jsonl.size()) break;
    }
    return result;
}

LoadResult load_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_records(buf.str());
}

Split split(std::span<const CodeRecord> records, std::size_t train_n, std::size_t eval_n,
            std::uint64_t seed) {
    if (train_n + eval_n > records.size()) {
        throw std::invalid_argument("split requires " + std::to_string(train_n + eval_n) +
                                    " records but only " + std::to_string(records.size()) +
                                    " are available");
    }
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    Split out;
    out.train.reserve(train_n);
    out.eval.reserve(eval_n);
    for (std::size_t i = 0; i < train_n; ++i) out.train.push_back(records[order[i]]);
    for (std::size_t i = train_n; i < train_n + eval_n; ++i) out.eval.push_back(records[order[i]]);
    return out;
}

Document preprocess_text(std::string id, std::string_view raw, const StopwordSet& stopwords) {
    Document doc;
    doc.id = std::move(id);
    doc.raw_text = std::string(raw);
    std::string token;
    auto flush = [&] {
        if (!token.empty() && !stopwords.contains(token)) doc.tokens.push_back(token);
        token.clear();
    };
    for (unsigned char c : raw) {
        if (is_space(c)) {
            flush();
        } else if (is_ascii_letter(c)) {
            token += to_lower(c);
        }
    }
    flush();
    return doc;
}

Document preprocess_text(std::string_view raw, const StopwordSet& stopwords) {
    return preprocess_text(std::string{}, raw, stopwords);
}

Vocabulary build_vocabulary(std::span<const Document> docs, double max_df) {
    if (!(max_df > 0.0 && max_df <= 1.0)) {
        throw std::invalid_argument("max_df must lie in (0, 1]");
    }
    Vocabulary vocab;
    if (docs.empty()) return vocab;

    std::map<std::string, std::size_t> counts;
    for (const auto& doc : docs) {
        std::set<std::string_view> unique(doc.tokens.begin(), doc.tokens.end());
        for (auto w : unique) ++counts[std::string(w)];
    }
    const double n = static_cast<double>(docs.size());
    for (const auto& [word, count] : counts) {
        const double df = static_cast<double>(count) / n;
        if (df < max_df) {
            vocab.words.push_back(word);
            vocab.doc_freq.push_back(df);
        }
    }
    return vocab;
}

std::vector<std::string> tokenize_identifier(std::string_view name) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
    };
    unsigned char prev = 0;
    for (unsigned char c : name) {
        const bool alnum = is_ascii_letter(c) || (c >= '0' && c <= '9');
        if (!alnum) {
            flush();
            prev = 0;
            continue;
        }
        if (c >= 'A' && c <= 'Z' && prev >= 'a' && prev <= 'z') flush();
        current += to_lower(c);
        prev = c;
    }
    flush();
    return out;
}

}  // namespace codetopics::corpus
