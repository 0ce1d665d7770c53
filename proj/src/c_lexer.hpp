#pragma once

// Minimal C lexer for function extraction. Comments and preprocessor lines
// are kept apart from the token stream; nothing is expanded.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace deltaspec::clex {

enum class Kind { identifier, number, string, character, punct };

struct CToken {
    Kind kind = Kind::punct;
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct Comment {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool line_comment = false;
};

struct Directive {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;  // continuation lines joined
};

struct Lexed {
    std::vector<CToken> tokens;
    std::vector<Comment> comments;
    std::vector<Directive> directives;
};

Lexed lex(std::string_view src);

}  // namespace deltaspec::clex
