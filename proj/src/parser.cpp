#include "psp/parser.hpp"

namespace psp::lang {

ExprPtr make_expr(Expr::Node node, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->node = std::move(node);
    e->loc = loc;
    return e;
}

namespace {

struct Parser {
    const std::vector<Token>& tokens;
    std::size_t pos = 0;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos + ahead;
        if (i >= tokens.size()) i = tokens.size() - 1;
        return tokens[i];
    }

    const Token& advance() { return tokens[pos < tokens.size() - 1 ? pos++ : pos]; }

    bool check(TokenKind kind) const { return peek().kind == kind; }

    bool accept(TokenKind kind) {
        if (check(kind)) {
            advance();
            return true;
        }
        return false;
    }

    const Token& expect(TokenKind kind, const char* context) {
        if (!check(kind)) {
            fail(Error::Kind::Parse,
                 std::string("expected ") + token_kind_name(kind) + " " + context +
                     ", found " + token_kind_name(peek().kind),
                 peek().loc);
        }
        return advance();
    }

    [[noreturn]] void reject_banned(const Token& tok) {
        if (tok.kind == TokenKind::KwWhile) {
            fail(Error::Kind::Parse,
                 "'while' is not part of the language: loops must be 'for' loops whose "
                 "iteration count is known at compile time",
                 tok.loc);
        }
        fail(Error::Kind::Parse,
             "'if'/'else' is not part of the language: the sequence of evaluations must "
             "be fixed at compile time (use boolean operators instead)",
             tok.loc);
    }

    bool at_banned() const {
        return check(TokenKind::KwWhile) || check(TokenKind::KwIf) || check(TokenKind::KwElse);
    }

    static bool is_dist_keyword(TokenKind kind) {
        return kind == TokenKind::KwGaussian || kind == TokenKind::KwGamma ||
               kind == TokenKind::KwBeta || kind == TokenKind::KwBernoulli;
    }

    static DistFamily dist_family(TokenKind kind) {
        switch (kind) {
            case TokenKind::KwGaussian: return DistFamily::Gaussian;
            case TokenKind::KwGamma: return DistFamily::Gamma;
            case TokenKind::KwBeta: return DistFamily::Beta;
            default: return DistFamily::Bernoulli;
        }
    }

    Program parse_program() {
        Program prog;
        prog.loc = peek().loc;
        expect(TokenKind::KwBool, "as the program return type");
        prog.name = expect(TokenKind::Ident, "as the program name").text;
        expect(TokenKind::LParen, "to open the parameter list");
        if (!check(TokenKind::RParen)) {
            do {
                prog.params.push_back(parse_param());
            } while (accept(TokenKind::Comma));
        }
        expect(TokenKind::RParen, "to close the parameter list");
        expect(TokenKind::LBrace, "to open the program body");
        while (!check(TokenKind::KwReturn)) {
            if (check(TokenKind::RBrace) || check(TokenKind::End)) {
                fail(Error::Kind::Parse, "program must end with a return statement", peek().loc);
            }
            prog.body.push_back(parse_stmt());
        }
        expect(TokenKind::KwReturn, "");
        prog.return_expr = parse_expr();
        expect(TokenKind::Semicolon, "after the return expression");
        expect(TokenKind::RBrace, "to close the program body");
        expect(TokenKind::End, "after the program");
        return prog;
    }

    ParamDecl parse_param() {
        ParamDecl param;
        param.loc = peek().loc;
        if (accept(TokenKind::KwBool)) {
            param.is_bool = true;
            if (check(TokenKind::LBracket)) {
                fail(Error::Kind::Parse, "boolean array parameters are not supported", peek().loc);
            }
        } else {
            expect(TokenKind::KwDouble, "as the parameter type");
            if (accept(TokenKind::LBracket)) {
                // [] / [,] unsized, [10] / [10, 2] sized
                if (accept(TokenKind::RBracket)) {
                    param.dims.push_back(std::nullopt);
                } else {
                    do {
                        if (check(TokenKind::IntLit)) {
                            param.dims.push_back(advance().int_value);
                        } else {
                            param.dims.push_back(std::nullopt);
                        }
                    } while (accept(TokenKind::Comma));
                    expect(TokenKind::RBracket, "to close the array dimensions");
                }
            }
        }
        param.name = expect(TokenKind::Ident, "as the parameter name").text;
        return param;
    }

    StmtPtr parse_stmt() {
        if (at_banned()) reject_banned(peek());
        if (check(TokenKind::KwFor)) return parse_for();

        SourceLoc loc = peek().loc;
        DeclType decl = DeclType::None;
        if (accept(TokenKind::KwBool)) {
            decl = DeclType::Bool;
        } else if (accept(TokenKind::KwDouble)) {
            decl = DeclType::Double;
        } else if (check(TokenKind::KwInt)) {
            fail(Error::Kind::Parse,
                 "'int' variables are only allowed as for-loop counters", peek().loc);
        }

        std::string name = expect(TokenKind::Ident, "as the assignment target").text;
        if (check(TokenKind::LBracket)) {
            fail(Error::Kind::Parse, "array elements cannot be assigned (arrays are read-only inputs)",
                 peek().loc);
        }

        bool tilde = false;
        if (accept(TokenKind::Tilde)) {
            tilde = true;
        } else {
            expect(TokenKind::Assign, "in the assignment");
        }

        auto stmt = std::make_unique<Stmt>();
        stmt->loc = loc;
        if (is_dist_keyword(peek().kind)) {
            Stmt::Draw draw;
            draw.decl = decl;
            draw.name = std::move(name);
            draw.dist = parse_dist_call();
            stmt->node = std::move(draw);
        } else {
            if (tilde) {
                fail(Error::Kind::Parse,
                     "'~' must be followed by a distribution (Gaussian, Gamma, Beta, Bernoulli)",
                     peek().loc);
            }
            Stmt::Assign assign;
            assign.decl = decl;
            assign.name = std::move(name);
            assign.value = parse_expr();
            stmt->node = std::move(assign);
        }
        expect(TokenKind::Semicolon, "at the end of the statement");
        return stmt;
    }

    DistCall parse_dist_call() {
        DistCall call;
        call.loc = peek().loc;
        call.family = dist_family(advance().kind);
        expect(TokenKind::LParen, "to open the distribution arguments");
        do {
            call.args.push_back(parse_expr());
        } while (accept(TokenKind::Comma));
        expect(TokenKind::RParen, "to close the distribution arguments");
        return call;
    }

    StmtPtr parse_for() {
        SourceLoc loc = peek().loc;
        expect(TokenKind::KwFor, "");
        expect(TokenKind::LParen, "after 'for'");
        expect(TokenKind::KwInt, "to declare the loop counter");
        std::string var = expect(TokenKind::Ident, "as the loop counter").text;
        expect(TokenKind::Assign, "in the loop initializer");
        ExprPtr init = parse_expr();
        expect(TokenKind::Semicolon, "after the loop initializer");

        const Token& cond_var = expect(TokenKind::Ident, "as the loop condition variable");
        if (cond_var.text != var) {
            fail(Error::Kind::Parse,
                 "loop condition must test the loop counter '" + var + "'", cond_var.loc);
        }
        bool inclusive;
        if (accept(TokenKind::Lt)) {
            inclusive = false;
        } else if (accept(TokenKind::Le)) {
            inclusive = true;
        } else {
            fail(Error::Kind::Parse, "loop condition must be '<' or '<='", peek().loc);
        }
        ExprPtr bound = parse_expr();
        expect(TokenKind::Semicolon, "after the loop condition");

        const Token& inc_var = expect(TokenKind::Ident, "in the loop increment");
        if (inc_var.text != var) {
            fail(Error::Kind::Parse,
                 "loop increment must step the loop counter '" + var + "'", inc_var.loc);
        }
        expect(TokenKind::PlusPlus, "in the loop increment");
        expect(TokenKind::RParen, "to close the for header");

        Stmt::For loop;
        loop.var = std::move(var);
        loop.init = std::move(init);
        loop.bound = std::move(bound);
        loop.inclusive = inclusive;
        if (accept(TokenKind::LBrace)) {
            while (!accept(TokenKind::RBrace)) {
                if (check(TokenKind::End)) {
                    fail(Error::Kind::Parse, "unterminated loop body", peek().loc);
                }
                loop.body.push_back(parse_stmt());
            }
        } else {
            loop.body.push_back(parse_stmt());
        }

        auto stmt = std::make_unique<Stmt>();
        stmt->loc = loc;
        stmt->node = std::move(loop);
        return stmt;
    }

    // precedence: ||  <  &&  <  comparisons  <  + -  <  * /  <  unary
    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (check(TokenKind::OrOr)) {
            SourceLoc loc = advance().loc;
            ExprPtr rhs = parse_and();
            lhs = make_expr(Expr::Binary{BinOp::Or, std::move(lhs), std::move(rhs)}, loc);
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_cmp();
        while (check(TokenKind::AndAnd)) {
            SourceLoc loc = advance().loc;
            ExprPtr rhs = parse_cmp();
            lhs = make_expr(Expr::Binary{BinOp::And, std::move(lhs), std::move(rhs)}, loc);
        }
        return lhs;
    }

    ExprPtr parse_cmp() {
        ExprPtr lhs = parse_additive();
        BinOp op;
        switch (peek().kind) {
            case TokenKind::Lt: op = BinOp::Lt; break;
            case TokenKind::Le: op = BinOp::Le; break;
            case TokenKind::Gt: op = BinOp::Gt; break;
            case TokenKind::Ge: op = BinOp::Ge; break;
            case TokenKind::EqEq: op = BinOp::Eq; break;
            case TokenKind::Ne: op = BinOp::Ne; break;
            default: return lhs;
        }
        SourceLoc loc = advance().loc;
        ExprPtr rhs = parse_additive();
        return make_expr(Expr::Binary{op, std::move(lhs), std::move(rhs)}, loc);
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        for (;;) {
            BinOp op;
            if (check(TokenKind::Plus)) {
                op = BinOp::Add;
            } else if (check(TokenKind::Minus)) {
                op = BinOp::Sub;
            } else {
                return lhs;
            }
            SourceLoc loc = advance().loc;
            ExprPtr rhs = parse_multiplicative();
            lhs = make_expr(Expr::Binary{op, std::move(lhs), std::move(rhs)}, loc);
        }
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            BinOp op;
            if (check(TokenKind::Star)) {
                op = BinOp::Mul;
            } else if (check(TokenKind::Slash)) {
                op = BinOp::Div;
            } else {
                return lhs;
            }
            SourceLoc loc = advance().loc;
            ExprPtr rhs = parse_unary();
            lhs = make_expr(Expr::Binary{op, std::move(lhs), std::move(rhs)}, loc);
        }
    }

    ExprPtr parse_unary() {
        if (check(TokenKind::Minus)) {
            SourceLoc loc = advance().loc;
            return make_expr(Expr::Unary{UnOp::Neg, parse_unary()}, loc);
        }
        if (check(TokenKind::Bang)) {
            SourceLoc loc = advance().loc;
            return make_expr(Expr::Unary{UnOp::Not, parse_unary()}, loc);
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        if (at_banned()) reject_banned(peek());
        const Token& tok = peek();
        switch (tok.kind) {
            case TokenKind::LParen: {
                advance();
                ExprPtr inner = parse_expr();
                expect(TokenKind::RParen, "to close the parenthesized expression");
                return inner;
            }
            case TokenKind::IntLit: {
                advance();
                return make_expr(Expr::IntLit{tok.int_value}, tok.loc);
            }
            case TokenKind::RealLit: {
                advance();
                return make_expr(Expr::RealLit{tok.real_value}, tok.loc);
            }
            case TokenKind::KwTrue: {
                advance();
                return make_expr(Expr::BoolLit{true}, tok.loc);
            }
            case TokenKind::KwFalse: {
                advance();
                return make_expr(Expr::BoolLit{false}, tok.loc);
            }
            case TokenKind::KwGaussian:
            case TokenKind::KwGamma:
            case TokenKind::KwBeta:
            case TokenKind::KwBernoulli:
                fail(Error::Kind::Parse,
                     "a distribution draw must be a whole statement (x = " + tok.text +
                         "(...);), not part of a larger expression",
                     tok.loc);
            case TokenKind::Ident: {
                advance();
                if (check(TokenKind::LBracket)) {
                    advance();
                    Expr::Index index;
                    index.array = tok.text;
                    do {
                        index.indices.push_back(parse_expr());
                    } while (accept(TokenKind::Comma));
                    expect(TokenKind::RBracket, "to close the array index");
                    return make_expr(std::move(index), tok.loc);
                }
                if (check(TokenKind::Dot)) {
                    advance();
                    const Token& method = expect(TokenKind::Ident, "after '.'");
                    if (method.text != "GetLength") {
                        fail(Error::Kind::Parse,
                             "unknown method '" + method.text + "' (only GetLength is supported)",
                             method.loc);
                    }
                    expect(TokenKind::LParen, "after GetLength");
                    const Token& axis = expect(TokenKind::IntLit, "as the GetLength axis");
                    expect(TokenKind::RParen, "to close GetLength");
                    return make_expr(Expr::Length{tok.text, static_cast<int>(axis.int_value)},
                                     tok.loc);
                }
                if (check(TokenKind::LParen)) {
                    fail(Error::Kind::Parse,
                         "unknown function '" + tok.text +
                             "': only the distributions Gaussian, Gamma, Beta, Bernoulli and "
                             "GetLength can be called",
                         tok.loc);
                }
                return make_expr(Expr::Var{tok.text}, tok.loc);
            }
            default:
                fail(Error::Kind::Parse,
                     std::string("expected an expression, found ") + token_kind_name(tok.kind),
                     tok.loc);
        }
    }
};

} // namespace

Program parse(const std::vector<Token>& tokens) {
    Parser parser{tokens};
    return parser.parse_program();
}

Program parse(std::string_view source) {
    return parse(tokenize(source));
}

} // namespace psp::lang
