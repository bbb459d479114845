#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codetopics/corpus.hpp"

namespace codetopics::codeprep {

inline constexpr std::string_view kDefaultPlaceholder = "obfq_function";

struct SanitizedFunction {
    std::string id;
    std::string code;
    std::string placeholder;
};

class CodeprepError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Byte classification produced by the Python-style lexer.
enum class ByteClass : unsigned char { code, string, comment };

struct LexedSource {
    std::vector<ByteClass> classes;  // one entry per input byte
    // Line indices (0-based) holding a single-quoted string that is never
    // closed. Comment stripping leaves these lines untouched.
    std::vector<std::size_t> unterminated_lines;
    std::vector<std::string> warnings;
};

LexedSource lex(std::string_view code);

// Removes '#' comments outside string literals together with the whitespace
// that precedes them. Newlines are kept.
std::string strip_comments(std::string_view code);
std::string strip_comments(std::string_view code, std::vector<std::string>& warnings);

// Removes a string-literal statement that opens the body of a `def` or
// `class`. A body left empty receives `pass` so the code stays valid.
std::string strip_docstrings(std::string_view code);

// Replaces the name on every `def <name>(` line. Call sites are untouched.
// Throws CodeprepError naming `id` when no definition line exists.
SanitizedFunction obfuscate_name(std::string_view id, std::string_view code,
                                 std::string_view placeholder = kDefaultPlaceholder);

struct SanitizeResult {
    SanitizedFunction function;
    std::vector<std::string> warnings;
};

// strip_comments, then strip_docstrings, then obfuscate_name.
SanitizeResult sanitize(const corpus::CodeRecord& record,
                        std::string_view placeholder = kDefaultPlaceholder);

bool is_identifier(std::string_view s);

}  // namespace codetopics::codeprep
