// ============================================================================
// amasv/lexer.hpp: tokenizer shared by guard expressions and formulas
// ============================================================================
#pragma once

#include "amasv/common.hpp"

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace amasv::detail {

enum class Tok {
    Ident, Int, LParen, RParen, Comma, Not, And, Or, Implies,
    Eq, Ne, Lt, Le, Gt, Ge, LCoal, RCoal, End
};

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline std::vector<Token> tokenize(std::string_view s, std::size_t line = 0) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto push = [&](Tok k, std::size_t len) {
        out.push_back({k, std::string(s.substr(i, len)), i});
        i += len;
    };
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        auto next = [&](std::size_t k) { return i + k < s.size() ? s[i + k] : '\0'; };
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < s.size() && is_ident_char(s[j])) ++j;
            std::string word(s.substr(i, j - i));
            Tok k = Tok::Ident;
            if (word == "and") k = Tok::And;
            else if (word == "or") k = Tok::Or;
            else if (word == "not") k = Tok::Not;
            out.push_back({k, word, i});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && std::isdigit(static_cast<unsigned char>(next(1))))) {
            std::size_t j = i + 1;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            push(Tok::Int, j - i);
        } else if (c == '(') push(Tok::LParen, 1);
        else if (c == ')') push(Tok::RParen, 1);
        else if (c == ',') push(Tok::Comma, 1);
        else if (c == '-' && next(1) == '>') push(Tok::Implies, 2);
        else if (c == '=' && next(1) == '=') push(Tok::Eq, 2);
        else if (c == '=') push(Tok::Eq, 1);
        else if (c == '!' && next(1) == '=') push(Tok::Ne, 2);
        else if (c == '!') push(Tok::Not, 1);
        else if (c == '&' && next(1) == '&') push(Tok::And, 2);
        else if (c == '&') push(Tok::And, 1);
        else if (c == '|' && next(1) == '|') push(Tok::Or, 2);
        else if (c == '|') push(Tok::Or, 1);
        else if (c == '<' && next(1) == '<') push(Tok::LCoal, 2);
        else if (c == '<' && next(1) == '=') push(Tok::Le, 2);
        else if (c == '<') push(Tok::Lt, 1);
        else if (c == '>' && next(1) == '>') push(Tok::RCoal, 2);
        else if (c == '>' && next(1) == '=') push(Tok::Ge, 2);
        else if (c == '>') push(Tok::Gt, 1);
        else throw ParseError(line, "unexpected character '" + std::string(1, c) + "' at column " + std::to_string(i + 1));
    }
    out.push_back({Tok::End, "", s.size()});
    return out;
}

}  // namespace amasv::detail
