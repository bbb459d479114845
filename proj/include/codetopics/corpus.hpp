#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace codetopics::corpus {

// One function from a CodeSearchNet-style dump.
struct CodeRecord {
    std::string id;
    std::string func_name;
    std::string code;       // whole_func_string
    std::string docstring;  // func_documentation_string

    friend bool operator==(const CodeRecord&, const CodeRecord&) = default;
};

// Unit of topic modeling: the raw text plus its preprocessed tokens.
struct Document {
    std::string id;
    std::string raw_text;
    std::vector<std::string> tokens;

    // Tokens joined by single spaces.
    std::string token_text() const;
};

// Lexicographically ordered word list with per-word document frequency.
struct Vocabulary {
    std::vector<std::string> words;
    std::vector<double> doc_freq;

    std::size_t size() const noexcept { return words.size(); }
    std::optional<std::size_t> index_of(std::string_view word) const;
};

using StopwordSet = std::unordered_set<std::string>;

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct Rejection {
    std::size_t line = 0;
    std::string id;
    std::string reason;
};

struct LoadResult {
    std::vector<CodeRecord> records;
    std::vector<Rejection> rejected;
};

// Reads line-delimited JSON. Each object needs `whole_func_string`;
// `func_name` and `func_documentation_string` default to "". The id is the
// record's `id` field when present, otherwise "line-<n>" (1-based).
// Throws ParseError for malformed JSON or duplicate ids; records without
// code are collected in `rejected`.
LoadResult load_records(const std::filesystem::path& path);
LoadResult parse_records(std::string_view jsonl);

struct Split {
    std::vector<CodeRecord> train;
    std::vector<CodeRecord> eval;
};

// Seeded shuffle, then the first train_n records form the training set and
// the next eval_n the evaluation set.
Split split(std::span<const CodeRecord> records, std::size_t train_n, std::size_t eval_n,
            std::uint64_t seed);

// Lowercase, split on whitespace, keep only ASCII letters inside each token,
// drop empty tokens and stopwords.
Document preprocess_text(std::string_view raw, const StopwordSet& stopwords);
Document preprocess_text(std::string id, std::string_view raw, const StopwordSet& stopwords);

// Keeps words whose document frequency is strictly below max_df.
Vocabulary build_vocabulary(std::span<const Document> docs, double max_df);

// Splits on '_', '.', any other non-alphanumeric byte, and lower->upper
// camel-case boundaries. Output is lowercase with empty segments dropped.
std::vector<std::string> tokenize_identifier(std::string_view name);

// The bundled English stopword list (NLTK's 179-word default), normalized by
// the same letter filter as preprocess_text so contractions match their
// stripped form ("don't" -> "dont").
const StopwordSet& default_stopwords();
// Raw bundled list, one word per entry, in file order.
std::span<const std::string_view> bundled_stopword_list();
StopwordSet load_stopwords(const std::filesystem::path& path);
StopwordSet make_stopwords(std::span<const std::string_view> words);

}  // namespace codetopics::corpus
