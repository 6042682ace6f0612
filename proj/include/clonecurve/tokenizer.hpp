#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clonecurve/blocks.hpp"
#include "clonecurve/error.hpp"

namespace clonecurve {

// Raised when a file cannot be turned into blocks at all (the file is
// skipped by corpus loaders, with a warning record).
class extraction_error : public error {
public:
    using error::error;
};

struct LexWarning {
    std::string file;
    std::uint32_t line = 0;
    std::string message;
};

enum class Granularity { method, braced_block };

namespace lexer {

enum class Kind { ident, number, string_lit, char_lit, punct };

struct Lexeme {
    Kind kind;
    std::string text;
    std::uint32_t line;
};

inline bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

inline bool is_ident_part(unsigned char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Lexes Java-like source into identifiers (keywords included), numeric
// literals, string/char literals (kept verbatim, quotes included) and
// single-character punctuation. Comments and whitespace vanish here.
// Unterminated strings and comments consume to end of input and are
// recorded as warnings rather than failing the file.
inline std::vector<Lexeme> lex(std::string_view text, std::vector<LexWarning>* warnings = nullptr,
                               std::string_view warn_path = "") {
    std::vector<Lexeme> out;
    std::uint32_t line = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto warn = [&](std::uint32_t at, std::string msg) {
        if (warnings)
            warnings->push_back({std::string(warn_path), at, std::move(msg)});
    };

    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '/') {
            while (i < n && text[i] != '\n')
                ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && text[i + 1] == '*') {
            std::uint32_t start_line = line;
            i += 2;
            bool closed = false;
            while (i < n) {
                if (text[i] == '\n')
                    ++line;
                if (text[i] == '*' && i + 1 < n && text[i + 1] == '/') {
                    i += 2;
                    closed = true;
                    break;
                }
                ++i;
            }
            if (!closed)
                warn(start_line, "unterminated block comment");
            continue;
        }
        if (c == '"' || c == '\'') {
            char quote = static_cast<char>(c);
            std::uint32_t start_line = line;
            std::size_t start = i;
            ++i;
            bool closed = false;
            while (i < n) {
                if (text[i] == '\\' && i + 1 < n) {
                    i += 2;
                    continue;
                }
                if (text[i] == '\n')
                    ++line;
                if (text[i] == quote) {
                    ++i;
                    closed = true;
                    break;
                }
                ++i;
            }
            if (!closed)
                warn(start_line, quote == '"' ? "unterminated string literal"
                                              : "unterminated char literal");
            out.push_back({quote == '"' ? Kind::string_lit : Kind::char_lit,
                           std::string(text.substr(start, i - start)), start_line});
            continue;
        }
        if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t start = i;
            ++i;
            while (i < n) {
                unsigned char d = static_cast<unsigned char>(text[i]);
                if (is_ident_part(d) || d == '.') {
                    ++i;
                    continue;
                }
                // exponent sign: 1e-3, 0x1p+2
                if ((d == '+' || d == '-') && i > start) {
                    char prev = text[i - 1];
                    if (prev == 'e' || prev == 'E' || prev == 'p' || prev == 'P') {
                        ++i;
                        continue;
                    }
                }
                break;
            }
            out.push_back({Kind::number, std::string(text.substr(start, i - start)), line});
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t start = i;
            ++i;
            while (i < n && is_ident_part(static_cast<unsigned char>(text[i])))
                ++i;
            out.push_back({Kind::ident, std::string(text.substr(start, i - start)), line});
            continue;
        }
        out.push_back({Kind::punct, std::string(1, static_cast<char>(c)), line});
        ++i;
    }
    return out;
}

inline bool retained(Kind k) {
    return k == Kind::ident || k == Kind::number || k == Kind::string_lit || k == Kind::char_lit;
}

} // namespace lexer

// Multiset of the retained lexemes of a piece of text: identifiers, keywords
// and literals, everything else discarded. Tokenizing the same text twice
// yields identical bags; statement order never matters.
inline TokenBag tokenize(std::string_view block_text, std::vector<LexWarning>* warnings = nullptr,
                         std::string_view warn_path = "") {
    TokenBag bag;
    for (const lexer::Lexeme& lx : lexer::lex(block_text, warnings, warn_path))
        if (lexer::retained(lx.kind))
            bag.add(lx.text);
    return bag;
}

namespace detail {

enum class BraceKind { type_body, method_body, block };

inline bool is_type_keyword(const lexer::Lexeme& lx) {
    return lx.kind == lexer::Kind::ident &&
           (lx.text == "class" || lx.text == "interface" || lx.text == "enum" || lx.text == "record");
}

// Token sets the backward scans are allowed to walk through: identifier-ish
// material that appears in type headers, throws clauses and generic argument
// lists.
inline bool header_filler(const lexer::Lexeme& lx) {
    if (lx.kind == lexer::Kind::ident)
        return true;
    if (lx.kind != lexer::Kind::punct)
        return false;
    char c = lx.text[0];
    return c == ',' || c == '.' || c == '<' || c == '>' || c == '&' || c == '?' || c == '[' || c == ']';
}

// Classifies the '{' at index b by looking backwards at what introduced it.
// paren_match maps the index of every ')' to its '(' (or npos).
inline BraceKind classify_brace(const std::vector<lexer::Lexeme>& toks,
                                const std::vector<std::size_t>& paren_match, std::size_t b,
                                bool parent_is_type) {
    using lexer::Kind;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    if (b == 0)
        return BraceKind::block;
    std::size_t p = b - 1;

    // lambda body or switch arrow: ... -> {
    if (toks[p].kind == Kind::punct && toks[p].text[0] == '>' && p > 0 &&
        toks[p - 1].kind == Kind::punct && toks[p - 1].text[0] == '-')
        return BraceKind::block;

    // Identifier-ish run right before '{': either a type header
    // (class Foo extends Bar {), a throws clause, or a bare keyword
    // (try {, do {, static {, ...).
    if (header_filler(toks[p])) {
        bool saw_throws = false;
        std::size_t q = p;
        while (true) {
            if (is_type_keyword(toks[q]))
                return BraceKind::type_body;
            if (toks[q].kind == Kind::ident && toks[q].text == "throws")
                saw_throws = true;
            if (q == 0)
                return BraceKind::block;
            if (!header_filler(toks[q - 1]))
                break;
            --q;
        }
        std::size_t before = q - 1;
        if (saw_throws && toks[before].kind == Kind::punct && toks[before].text[0] == ')')
            p = before; // fall through to the parameter-list case
        else
            return BraceKind::block;
    }

    // Parameter list right before '{': a method/constructor body, an
    // anonymous class body (new Foo(...) {) or a record body.
    if (toks[p].kind == Kind::punct && toks[p].text[0] == ')') {
        std::size_t open = paren_match[p];
        if (open == npos || open == 0)
            return BraceKind::block;
        std::size_t r = open - 1;
        if (!header_filler(toks[r]))
            return BraceKind::block;
        std::size_t s = r;
        while (true) {
            if (toks[s].kind == Kind::ident && toks[s].text == "new")
                return BraceKind::type_body; // anonymous class
            if (is_type_keyword(toks[s]))
                return BraceKind::type_body; // record header
            if (s == 0 || !header_filler(toks[s - 1]))
                break;
            --s;
        }
        if (toks[r].kind == Kind::ident)
            return parent_is_type ? BraceKind::method_body : BraceKind::block;
        return BraceKind::block;
    }

    return BraceKind::block;
}

} // namespace detail

// Splits a source file into block-granularity CodeBlocks by brace matching
// over the lexed stream; no grammar is involved. `method` emits one block
// per method/constructor body; `braced_block` emits every braced block that
// sits directly inside a type body (methods, initializers, field-level
// blocks) but never the type bodies themselves. A block's bag contains every
// retained token between its braces, nested regions included; blocks that
// end up empty are dropped. Ids are assigned in document order within the
// file (corpus loaders reassign them corpus-wide).
//
// Throws extraction_error on binary content or unbalanced braces; the file
// is then unusable and callers are expected to skip it.
inline std::vector<CodeBlock> extract_blocks(const SourceFile& file, Granularity granularity,
                                             std::vector<LexWarning>* warnings = nullptr) {
    using lexer::Kind;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    if (file.content.find('\0') != std::string::npos)
        throw extraction_error("BinaryFile(" + file.path + ")");

    std::vector<lexer::Lexeme> toks = lexer::lex(file.content, warnings, file.path);

    std::vector<std::size_t> paren_match(toks.size(), npos);
    {
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (toks[i].kind != Kind::punct)
                continue;
            char c = toks[i].text[0];
            if (c == '(')
                stack.push_back(i);
            else if (c == ')' && !stack.empty()) {
                paren_match[i] = stack.back();
                stack.pop_back();
            }
        }
    }

    struct Open {
        std::size_t idx;
        detail::BraceKind kind;
        bool parent_is_type;
    };
    struct Region {
        std::size_t open;
        std::size_t close;
        detail::BraceKind kind;
        bool parent_is_type;
    };
    std::vector<Open> stack;
    std::vector<Region> regions;

    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind != Kind::punct)
            continue;
        char c = toks[i].text[0];
        if (c == '{') {
            bool parent_is_type = !stack.empty() && stack.back().kind == detail::BraceKind::type_body;
            stack.push_back({i, detail::classify_brace(toks, paren_match, i, parent_is_type), parent_is_type});
        } else if (c == '}') {
            if (stack.empty())
                throw extraction_error("UnbalancedBraces(" + file.path + ", " +
                                       std::to_string(toks[i].line) + ")");
            regions.push_back({stack.back().idx, i, stack.back().kind, stack.back().parent_is_type});
            stack.pop_back();
        }
    }
    if (!stack.empty())
        throw extraction_error("UnbalancedBraces(" + file.path + ", " +
                               std::to_string(toks[stack.back().idx].line) + ")");

    std::sort(regions.begin(), regions.end(),
              [](const Region& a, const Region& b) { return a.open < b.open; });

    std::vector<CodeBlock> blocks;
    for (const Region& r : regions) {
        bool emit = granularity == Granularity::method
                        ? r.kind == detail::BraceKind::method_body
                        : r.parent_is_type && r.kind != detail::BraceKind::type_body;
        if (!emit)
            continue;
        CodeBlock blk;
        blk.file_path = file.path;
        blk.start_line = toks[r.open].line;
        blk.end_line = toks[r.close].line;
        for (std::size_t i = r.open + 1; i < r.close; ++i)
            if (lexer::retained(toks[i].kind))
                blk.bag.add(toks[i].text);
        blk.size = blk.bag.total();
        if (blk.size < 1)
            continue;
        blocks.push_back(std::move(blk));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i)
        blocks[i].id = i;
    return blocks;
}

} // namespace clonecurve
