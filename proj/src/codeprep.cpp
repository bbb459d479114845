#include "codetopics/codeprep.hpp"

#include <algorithm>
#include <regex>
#include <set>

namespace codetopics::codeprep {

namespace {

struct Line {
    std::size_t start;  // first byte
    std::size_t end;    // one past the last byte before '\n' (or EOF)
    bool has_newline;
};

std::vector<Line> split_lines(std::string_view code) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    while (pos < code.size()) {
        const std::size_t nl = code.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back({pos, code.size(), false});
            break;
        }
        lines.push_back({pos, nl, true});
        pos = nl + 1;
    }
    return lines;
}

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f'; }

bool starts_inside_string(const LexedSource& lx, const Line& line) {
    return line.start < lx.classes.size() && line.start < line.end &&
           lx.classes[line.start] == ByteClass::string &&
           // a line may legitimately open with a quote
           (line.start == 0 || lx.classes[line.start - 1] == ByteClass::string);
}

// Column of the first non-blank byte, tabs advancing to the next multiple of 8.
std::size_t indentation(std::string_view code, const Line& line) {
    std::size_t col = 0;
    for (std::size_t i = line.start; i < line.end; ++i) {
        if (code[i] == ' ') ++col;
        else if (code[i] == '\t') col = (col / 8 + 1) * 8;
        else break;
    }
    return col;
}

bool blank_or_comment(std::string_view code, const LexedSource& lx, const Line& line) {
    for (std::size_t i = line.start; i < line.end; ++i) {
        if (lx.classes[i] == ByteClass::comment) continue;
        if (!is_blank(code[i])) return false;
    }
    return true;
}

std::size_t line_of(const std::vector<Line>& lines, std::size_t pos) {
    auto it = std::upper_bound(lines.begin(), lines.end(), pos,
                               [](std::size_t p, const Line& l) { return p < l.start; });
    return static_cast<std::size_t>(it - lines.begin()) - 1;
}

bool is_string_prefix(char c) {
    switch (c) {
        case 'r': case 'R': case 'u': case 'U': case 'b': case 'B': case 'f': case 'F':
            return true;
        default:
            return false;
    }
}

}  // namespace

LexedSource lex(std::string_view code) {
    LexedSource out;
    const std::size_t n = code.size();
    out.classes.assign(n, ByteClass::code);
    std::size_t i = 0;
    std::size_t line = 0;
    while (i < n) {
        const char c = code[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < n && code[i] != '\n' && code[i] != '\r') out.classes[i++] = ByteClass::comment;
            continue;
        }
        if (c != '\'' && c != '"') {
            ++i;
            continue;
        }

        const std::size_t start_line = line;
        const bool triple = i + 2 < n && code[i + 1] == c && code[i + 2] == c;
        const std::size_t qlen = triple ? 3 : 1;
        for (std::size_t k = 0; k < qlen; ++k) out.classes[i + k] = ByteClass::string;
        i += qlen;
        bool closed = false;
        while (i < n) {
            const char d = code[i];
            if (d == '\\') {
                out.classes[i] = ByteClass::string;
                if (i + 1 < n) {
                    if (code[i + 1] == '\n') ++line;
                    out.classes[i + 1] = ByteClass::string;
                }
                i += 2;
                continue;
            }
            if (d == '\n') {
                if (!triple) break;
                ++line;
            }
            if (d == c && (!triple || (i + 2 < n && code[i + 1] == c && code[i + 2] == c))) {
                for (std::size_t k = 0; k < qlen; ++k) out.classes[i + k] = ByteClass::string;
                i += qlen;
                closed = true;
                break;
            }
            out.classes[i++] = ByteClass::string;
        }
        if (i > n) i = n;
        if (!closed) {
            if (triple) {
                out.warnings.push_back("unterminated triple-quoted string starting on line " +
                                       std::to_string(start_line + 1));
            } else {
                for (std::size_t l = start_line; l <= line; ++l) out.unterminated_lines.push_back(l);
                out.warnings.push_back("unterminated string literal on line " +
                                       std::to_string(start_line + 1) + "; line left unchanged");
            }
        }
    }
    return out;
}

std::string strip_comments(std::string_view code, std::vector<std::string>& warnings) {
    const LexedSource lx = lex(code);
    warnings.insert(warnings.end(), lx.warnings.begin(), lx.warnings.end());
    const std::set<std::size_t> raw(lx.unterminated_lines.begin(), lx.unterminated_lines.end());

    std::string out;
    out.reserve(code.size());
    const auto lines = split_lines(code);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const Line& line = lines[li];
        std::size_t p = line.start;
        if (!raw.contains(li)) {
            while (p < line.end && lx.classes[p] != ByteClass::comment) ++p;
        } else {
            p = line.end;
        }
        if (p == line.end) {
            out.append(code.substr(line.start, line.end - line.start));
        } else {
            std::size_t keep_end = p;
            while (keep_end > line.start && (code[keep_end - 1] == ' ' || code[keep_end - 1] == '\t')) {
                --keep_end;
            }
            std::size_t after = p;
            while (after < line.end && lx.classes[after] == ByteClass::comment) ++after;
            out.append(code.substr(line.start, keep_end - line.start));
            out.append(code.substr(after, line.end - after));  // a '\r' survives
        }
        if (line.has_newline) out += '\n';
    }
    return out;
}

std::string strip_comments(std::string_view code) {
    std::vector<std::string> ignored;
    return strip_comments(code, ignored);
}

std::string strip_docstrings(std::string_view code) {
    const LexedSource lx = lex(code);
    const auto lines = split_lines(code);
    static const std::regex def_re(R"(^[ \t]*(?:async[ \t]+)?(?:def|class)[ \t]+[A-Za-z_])");

    struct Edit {
        std::size_t first;
        std::size_t last;
        bool insert_pass;
    };
    std::vector<Edit> edits;

    for (std::size_t l = 0; l < lines.size(); ++l) {
        const Line& header = lines[l];
        if (starts_inside_string(lx, header)) continue;
        const std::string text(code.substr(header.start, header.end - header.start));
        std::smatch m;
        if (!std::regex_search(text, m, def_re)) continue;

        // Locate the ':' that closes the header, possibly several lines down.
        int depth = 0;
        std::size_t colon = std::string_view::npos;
        for (std::size_t p = header.start + static_cast<std::size_t>(m.length(0)); p < code.size(); ++p) {
            if (lx.classes[p] != ByteClass::code) continue;
            const char ch = code[p];
            if (ch == '(' || ch == '[' || ch == '{') ++depth;
            else if (ch == ')' || ch == ']' || ch == '}') --depth;
            else if (ch == ':' && depth == 0) {
                colon = p;
                break;
            } else if (ch == '\n' && depth == 0 && !(p > 0 && code[p - 1] == '\\')) {
                break;
            }
        }
        if (colon == std::string_view::npos) continue;

        const std::size_t h = line_of(lines, colon);
        bool inline_body = false;
        for (std::size_t p = colon + 1; p < lines[h].end; ++p) {
            if (lx.classes[p] == ByteClass::comment) break;
            if (!is_blank(code[p])) {
                inline_body = true;
                break;
            }
        }
        if (inline_body) continue;

        std::size_t j = h + 1;
        while (j < lines.size() && blank_or_comment(code, lx, lines[j])) ++j;
        if (j == lines.size()) continue;
        const std::size_t def_indent = indentation(code, header);
        if (indentation(code, lines[j]) <= def_indent) continue;

        std::size_t q = lines[j].start;
        while (q < lines[j].end && is_blank(code[q])) ++q;
        for (int k = 0; k < 2 && q < lines[j].end && is_string_prefix(code[q]) &&
                        lx.classes[q] == ByteClass::code;
             ++k) {
            ++q;
        }
        if (q >= lines[j].end || (code[q] != '"' && code[q] != '\'') || lx.classes[q] != ByteClass::string) {
            continue;
        }
        std::size_t e = q;
        while (e < code.size() && lx.classes[e] == ByteClass::string) ++e;
        if (code[e - 1] != code[q] || e - q < 2) continue;  // unterminated
        const std::size_t k = line_of(lines, e - 1);
        bool trailing_code = false;
        for (std::size_t p = e; p < lines[k].end; ++p) {
            if (lx.classes[p] == ByteClass::comment) break;
            if (!is_blank(code[p])) {
                trailing_code = true;
                break;
            }
        }
        if (trailing_code) continue;

        std::size_t next = k + 1;
        while (next < lines.size() && blank_or_comment(code, lx, lines[next])) ++next;
        const bool empty_body = next == lines.size() || indentation(code, lines[next]) <= def_indent;
        edits.push_back({j, k, empty_body});
    }

    if (edits.empty()) return std::string(code);

    std::string out;
    out.reserve(code.size());
    std::size_t e = 0;
    for (std::size_t l = 0; l < lines.size(); ++l) {
        while (e < edits.size() && edits[e].last < l) ++e;
        if (e < edits.size() && l >= edits[e].first && l <= edits[e].last) {
            if (l == edits[e].first && edits[e].insert_pass) {
                const Line& first = lines[edits[e].first];
                std::size_t p = first.start;
                while (p < first.end && (code[p] == ' ' || code[p] == '\t')) ++p;
                out.append(code.substr(first.start, p - first.start));
                out += "pass";
                if (lines[edits[e].last].has_newline) out += '\n';
            }
            continue;
        }
        out.append(code.substr(lines[l].start, lines[l].end - lines[l].start));
        if (lines[l].has_newline) out += '\n';
    }
    return out;
}

bool is_identifier(std::string_view s) {
    static const std::regex re(R"(^[A-Za-z_][A-Za-z0-9_]*$)");
    return std::regex_match(s.begin(), s.end(), re);
}

SanitizedFunction obfuscate_name(std::string_view id, std::string_view code, std::string_view placeholder) {
    if (!is_identifier(placeholder)) {
        throw std::invalid_argument("placeholder '" + std::string(placeholder) + "' is not a valid identifier");
    }
    static const std::regex def_re(R"(^([ \t]*(?:async[ \t]+)?def[ \t]+)([A-Za-z_][A-Za-z0-9_]*)([ \t]*\())");
    const LexedSource lx = lex(code);
    const auto lines = split_lines(code);

    SanitizedFunction out{std::string(id), {}, std::string(placeholder)};
    out.code.reserve(code.size());
    bool found = false;
    for (const Line& line : lines) {
        const std::string text(code.substr(line.start, line.end - line.start));
        std::smatch m;
        if (!starts_inside_string(lx, line) && std::regex_search(text, m, def_re)) {
            found = true;
            out.code += m.str(1);
            out.code += placeholder;
            out.code += m.str(3);
            out.code += m.suffix().str();
        } else {
            out.code += text;
        }
        if (line.has_newline) out.code += '\n';
    }
    if (!found) {
        throw CodeprepError("record " + std::string(id) + ": no function definition line found");
    }
    return out;
}

SanitizeResult sanitize(const corpus::CodeRecord& record, std::string_view placeholder) {
    SanitizeResult result;
    const std::string no_comments = strip_comments(record.code, result.warnings);
    const std::string no_docs = strip_docstrings(no_comments);
    result.function = obfuscate_name(record.id, no_docs, placeholder);
    return result;
}

}  // namespace codetopics::codeprep
