#include "psp/token.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

namespace psp::lang {

const char* token_kind_name(TokenKind kind) {
    switch (kind) {
        case TokenKind::Ident: return "identifier";
        case TokenKind::IntLit: return "integer literal";
        case TokenKind::RealLit: return "real literal";
        case TokenKind::KwBool: return "'bool'";
        case TokenKind::KwDouble: return "'double'";
        case TokenKind::KwInt: return "'int'";
        case TokenKind::KwFor: return "'for'";
        case TokenKind::KwReturn: return "'return'";
        case TokenKind::KwTrue: return "'true'";
        case TokenKind::KwFalse: return "'false'";
        case TokenKind::KwGaussian: return "'Gaussian'";
        case TokenKind::KwGamma: return "'Gamma'";
        case TokenKind::KwBeta: return "'Beta'";
        case TokenKind::KwBernoulli: return "'Bernoulli'";
        case TokenKind::KwWhile: return "'while'";
        case TokenKind::KwIf: return "'if'";
        case TokenKind::KwElse: return "'else'";
        case TokenKind::LParen: return "'('";
        case TokenKind::RParen: return "')'";
        case TokenKind::LBrace: return "'{'";
        case TokenKind::RBrace: return "'}'";
        case TokenKind::LBracket: return "'['";
        case TokenKind::RBracket: return "']'";
        case TokenKind::Comma: return "','";
        case TokenKind::Semicolon: return "';'";
        case TokenKind::Dot: return "'.'";
        case TokenKind::Assign: return "'='";
        case TokenKind::Tilde: return "'~'";
        case TokenKind::Lt: return "'<'";
        case TokenKind::Le: return "'<='";
        case TokenKind::Gt: return "'>'";
        case TokenKind::Ge: return "'>='";
        case TokenKind::EqEq: return "'=='";
        case TokenKind::Ne: return "'!='";
        case TokenKind::AndAnd: return "'&&'";
        case TokenKind::OrOr: return "'||'";
        case TokenKind::Bang: return "'!'";
        case TokenKind::Plus: return "'+'";
        case TokenKind::Minus: return "'-'";
        case TokenKind::Star: return "'*'";
        case TokenKind::Slash: return "'/'";
        case TokenKind::PlusPlus: return "'++'";
        case TokenKind::End: return "end of input";
    }
    return "token";
}

namespace {

const std::unordered_map<std::string_view, TokenKind>& keyword_table() {
    static const std::unordered_map<std::string_view, TokenKind> table = {
        {"bool", TokenKind::KwBool},
        {"double", TokenKind::KwDouble},
        {"int", TokenKind::KwInt},
        {"for", TokenKind::KwFor},
        {"return", TokenKind::KwReturn},
        {"true", TokenKind::KwTrue},
        {"True", TokenKind::KwTrue},
        {"false", TokenKind::KwFalse},
        {"False", TokenKind::KwFalse},
        {"Gaussian", TokenKind::KwGaussian},
        {"Gamma", TokenKind::KwGamma},
        {"Beta", TokenKind::KwBeta},
        {"Bernoulli", TokenKind::KwBernoulli},
        {"while", TokenKind::KwWhile},
        {"if", TokenKind::KwIf},
        {"else", TokenKind::KwElse},
    };
    return table;
}

struct Lexer {
    std::string_view src;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    bool done() const { return pos >= src.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos + ahead < src.size() ? src[pos + ahead] : '\0';
    }

    char advance() {
        char c = src[pos++];
        if (c == '\n') {
            line++;
            col = 1;
        } else {
            col++;
        }
        return c;
    }

    void skip_trivia() {
        for (;;) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                while (!done() && peek() != '\n') advance();
            } else {
                return;
            }
        }
    }

    Token make(TokenKind kind, SourceLoc loc, std::string text) {
        return Token{kind, std::move(text), loc, 0, 0.0};
    }

    Token lex_number(SourceLoc loc) {
        std::size_t start = pos;
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        bool is_real = false;
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            is_real = true;
            advance();
            while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        }
        if (peek() == 'e' || peek() == 'E') {
            std::size_t mark = pos;
            char sign = peek(1);
            std::size_t digits_at = (sign == '+' || sign == '-') ? 2 : 1;
            if (std::isdigit(static_cast<unsigned char>(peek(digits_at)))) {
                is_real = true;
                advance();
                if (sign == '+' || sign == '-') advance();
                while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
            } else {
                pos = mark;
            }
        }
        std::string text(src.substr(start, pos - start));
        Token tok = make(is_real ? TokenKind::RealLit : TokenKind::IntLit, loc, text);
        if (is_real) {
            tok.real_value = std::strtod(text.c_str(), nullptr);
        } else {
            auto res = std::from_chars(text.data(), text.data() + text.size(), tok.int_value);
            if (res.ec != std::errc()) {
                fail(Error::Kind::Lex, "integer literal out of range: " + text, loc);
            }
            tok.real_value = static_cast<double>(tok.int_value);
        }
        return tok;
    }

    Token lex_ident(SourceLoc loc) {
        std::size_t start = pos;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
        std::string text(src.substr(start, pos - start));
        auto it = keyword_table().find(text);
        TokenKind kind = it != keyword_table().end() ? it->second : TokenKind::Ident;
        return make(kind, loc, std::move(text));
    }

    Token next() {
        skip_trivia();
        SourceLoc loc{line, col};
        if (done()) return make(TokenKind::End, loc, "");
        char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c))) return lex_number(loc);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident(loc);

        auto two = [&](char second, TokenKind yes, TokenKind no) {
            advance();
            if (peek() == second) {
                advance();
                return make(yes, loc, std::string{c, second});
            }
            return make(no, loc, std::string{c});
        };

        switch (c) {
            case '(': advance(); return make(TokenKind::LParen, loc, "(");
            case ')': advance(); return make(TokenKind::RParen, loc, ")");
            case '{': advance(); return make(TokenKind::LBrace, loc, "{");
            case '}': advance(); return make(TokenKind::RBrace, loc, "}");
            case '[': advance(); return make(TokenKind::LBracket, loc, "[");
            case ']': advance(); return make(TokenKind::RBracket, loc, "]");
            case ',': advance(); return make(TokenKind::Comma, loc, ",");
            case ';': advance(); return make(TokenKind::Semicolon, loc, ";");
            case '.': advance(); return make(TokenKind::Dot, loc, ".");
            case '~': advance(); return make(TokenKind::Tilde, loc, "~");
            case '*': advance(); return make(TokenKind::Star, loc, "*");
            case '/': advance(); return make(TokenKind::Slash, loc, "/");
            case '+': return two('+', TokenKind::PlusPlus, TokenKind::Plus);
            case '-': advance(); return make(TokenKind::Minus, loc, "-");
            case '<': return two('=', TokenKind::Le, TokenKind::Lt);
            case '>': return two('=', TokenKind::Ge, TokenKind::Gt);
            case '=': return two('=', TokenKind::EqEq, TokenKind::Assign);
            case '!': return two('=', TokenKind::Ne, TokenKind::Bang);
            case '&': {
                advance();
                if (peek() == '&') {
                    advance();
                    return make(TokenKind::AndAnd, loc, "&&");
                }
                fail(Error::Kind::Lex, "unexpected character '&' (did you mean '&&'?)", loc);
            }
            case '|': {
                advance();
                if (peek() == '|') {
                    advance();
                    return make(TokenKind::OrOr, loc, "||");
                }
                fail(Error::Kind::Lex, "unexpected character '|' (did you mean '||'?)", loc);
            }
            default:
                fail(Error::Kind::Lex,
                     std::string("unknown character '") + c + "'", loc);
        }
    }
};

} // namespace

std::vector<Token> tokenize(std::string_view source) {
    Lexer lexer{source};
    std::vector<Token> tokens;
    for (;;) {
        Token tok = lexer.next();
        bool end = tok.kind == TokenKind::End;
        tokens.push_back(std::move(tok));
        if (end) break;
    }
    return tokens;
}

} // namespace psp::lang
