#pragma once

#include "psp/error.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace psp::lang {

enum class TokenKind {
    Ident,
    IntLit,
    RealLit,
    // keywords
    KwBool, KwDouble, KwInt, KwFor, KwReturn, KwTrue, KwFalse,
    KwGaussian, KwGamma, KwBeta, KwBernoulli,
    // recognized only to produce targeted rejection messages
    KwWhile, KwIf, KwElse,
    // punctuation / operators
    LParen, RParen, LBrace, RBrace, LBracket, RBracket,
    Comma, Semicolon, Dot,
    Assign, Tilde,
    Lt, Le, Gt, Ge, EqEq, Ne,
    AndAnd, OrOr, Bang,
    Plus, Minus, Star, Slash, PlusPlus,
    End,
};

struct Token {
    TokenKind kind;
    std::string text;
    SourceLoc loc;
    long long int_value = 0;
    double real_value = 0.0;
};

const char* token_kind_name(TokenKind kind);

// Lexes the C-like PSP surface syntax: identifiers, numeric literals,
// '//' comments, boolean/comparison operators, array brackets.
// Throws Error{Lex} with line/column on an unknown character.
std::vector<Token> tokenize(std::string_view source);

} // namespace psp::lang
