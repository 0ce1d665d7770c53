#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace deltaspec {

// A token is a byte range into the text it was cut from.
//
// The rule is shared by every module: whitespace separates tokens, a maximal
// run of word characters (ASCII alphanumerics, '_' and any byte >= 0x80) is one
// token, and a maximal run of any other non-space characters is one token.
// "SYN ACK" -> 2, "a->b" -> 3, "+-+-+" -> 1.
struct Token {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const Token&, const Token&) = default;
};

enum class CharClass { space, word, punct };

constexpr CharClass classify(char c) noexcept
{
    const auto u = static_cast<unsigned char>(c);
    if (u == ' ' || u == '\t' || u == '\n' || u == '\r' || u == '\f' || u == '\v') {
        return CharClass::space;
    }
    if ((u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_' || u >= 0x80) {
        return CharClass::word;
    }
    return CharClass::punct;
}

std::vector<Token> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

inline std::string_view token_text(std::string_view text, const Token& t)
{
    return text.substr(t.begin, t.size());
}

inline bool is_word_token(std::string_view text, const Token& t)
{
    return t.size() > 0 && classify(text[t.begin]) == CharClass::word;
}

/// Lowercased word tokens only; punctuation runs are dropped. Used for lexical
/// matching (BM25, title overlap, name normalization).
std::vector<std::string> lexical_terms(std::string_view text);

/// Casefold + trim + collapse inner whitespace runs to one space.
std::string normalize_name(std::string_view name);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace deltaspec
