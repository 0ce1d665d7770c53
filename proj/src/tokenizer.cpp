#include "deltaspec/tokenizer.hpp"

#include <cctype>

namespace deltaspec {

std::vector<Token> tokenize(std::string_view text)
{
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const CharClass cls = classify(text[i]);
        if (cls == CharClass::space) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n && classify(text[j]) == cls) {
            ++j;
        }
        out.push_back({i, j});
        i = j;
    }
    return out;
}

std::size_t count_tokens(std::string_view text)
{
    std::size_t count = 0;
    CharClass prev = CharClass::space;
    for (char c : text) {
        const CharClass cls = classify(c);
        if (cls != CharClass::space && cls != prev) {
            ++count;
        }
        prev = cls;
    }
    return count;
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && classify(s[b]) == CharClass::space) {
        ++b;
    }
    while (e > b && classify(s[e - 1]) == CharClass::space) {
        --e;
    }
    return s.substr(b, e - b);
}

std::vector<std::string> lexical_terms(std::string_view text)
{
    std::vector<std::string> out;
    for (const Token& t : tokenize(text)) {
        if (is_word_token(text, t)) {
            out.push_back(to_lower(token_text(text, t)));
        }
    }
    return out;
}

std::string normalize_name(std::string_view name)
{
    std::string out;
    bool pending_space = false;
    for (char c : trim(name)) {
        if (classify(c) == CharClass::space) {
            pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace deltaspec
