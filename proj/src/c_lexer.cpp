#include "c_lexer.hpp"

#include <array>
#include <cctype>

namespace deltaspec::clex {

namespace {

bool ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

bool ident_char(char c)
{
    return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

constexpr std::array<std::string_view, 23> kPunct = {
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "*=",  "/=", "%=", "+=", "-=", "&=", "^=", "|=", "##"};

}  // namespace

Lexed lex(std::string_view src)
{
    Lexed out;
    const std::size_t n = src.size();
    std::size_t i = 0;
    bool line_start = true;  // only whitespace seen since the last newline
    while (i < n) {
        const char c = src[i];
        if (c == '\n') {
            line_start = true;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (c == '\\' && i + 1 < n && src[i + 1] == '\n') {
            i += 2;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            std::size_t j = i + 2;
            while (j < n && src[j] != '\n') {
                ++j;
            }
            out.comments.push_back({i, j, true});
            i = j;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            const auto close = src.find("*/", i + 2);
            const std::size_t j = close == std::string_view::npos ? n : close + 2;
            out.comments.push_back({i, j, false});
            i = j;
            continue;
        }
        if (c == '#' && line_start) {
            Directive d;
            d.begin = i;
            std::size_t j = i;
            while (j < n) {
                if (src[j] == '\\' && j + 1 < n && src[j + 1] == '\n') {
                    d.text.push_back(' ');
                    j += 2;
                    continue;
                }
                if (src[j] == '\n') {
                    break;
                }
                // Comments are recorded but kept out of the directive text.
                if (src[j] == '/' && j + 1 < n && src[j + 1] == '*') {
                    const auto close = src.find("*/", j + 2);
                    const std::size_t k = close == std::string_view::npos ? n : close + 2;
                    out.comments.push_back({j, k, false});
                    d.text.push_back(' ');
                    j = k;
                    continue;
                }
                if (src[j] == '/' && j + 1 < n && src[j + 1] == '/') {
                    std::size_t k = j;
                    while (k < n && src[k] != '\n') {
                        ++k;
                    }
                    out.comments.push_back({j, k, true});
                    j = k;
                    continue;
                }
                d.text.push_back(src[j]);
                ++j;
            }
            d.end = j;
            out.directives.push_back(std::move(d));
            i = j;
            continue;
        }
        line_start = false;
        CToken t;
        t.begin = i;
        // String/char literal prefixes (L"", u8"", ...) stay glued to the literal.
        std::size_t quote = i;
        for (std::string_view prefix : {"u8", "L", "u", "U"}) {
            if (src.substr(i, prefix.size()) == prefix && i + prefix.size() < n &&
                (src[i + prefix.size()] == '"' || src[i + prefix.size()] == '\'')) {
                quote = i + prefix.size();
                break;
            }
        }
        if (quote == i && ident_start(c)) {
            std::size_t j = i + 1;
            while (j < n && ident_char(src[j])) {
                ++j;
            }
            t.kind = Kind::identifier;
            t.end = j;
            out.tokens.push_back(t);
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i + 1;
            while (j < n) {
                const char d = src[j];
                if (ident_char(d) || d == '.') {
                    ++j;
                } else if ((d == '+' || d == '-') &&
                           (src[j - 1] == 'e' || src[j - 1] == 'E' || src[j - 1] == 'p' || src[j - 1] == 'P')) {
                    ++j;
                } else {
                    break;
                }
            }
            t.kind = Kind::number;
            t.end = j;
            out.tokens.push_back(t);
            i = j;
            continue;
        }
        if (src[quote] == '"' || src[quote] == '\'') {
            const char q = src[quote];
            std::size_t j = quote + 1;
            while (j < n && src[j] != q && src[j] != '\n') {
                if (src[j] == '\\' && j + 1 < n) {
                    ++j;
                }
                ++j;
            }
            if (j < n && src[j] == q) {
                ++j;
            }
            t.kind = q == '"' ? Kind::string : Kind::character;
            t.end = j;
            out.tokens.push_back(t);
            i = j;
            continue;
        }
        std::size_t len = 1;
        for (std::string_view p : kPunct) {
            if (src.substr(i, p.size()) == p) {
                len = p.size();
                break;
            }
        }
        t.kind = Kind::punct;
        t.end = i + len;
        out.tokens.push_back(t);
        i += len;
    }
    return out;
}

}  // namespace deltaspec::clex
