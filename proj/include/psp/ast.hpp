#pragma once

#include "psp/error.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace psp::lang {

enum class BinOp { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnOp { Neg, Not };
enum class DistFamily { Gaussian, Gamma, Beta, Bernoulli };

const char* binop_name(BinOp op);   // surface spelling, e.g. "&&"
const char* unop_name(UnOp op);
const char* dist_family_name(DistFamily family);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    struct IntLit { long long value; };
    struct RealLit { double value; };
    struct BoolLit { bool value; };
    struct Var { std::string name; };
    // x[i, 0] style: comma-separated indices, one per array rank
    struct Index {
        std::string array;
        std::vector<ExprPtr> indices;
    };
    // x.GetLength(axis), a compile-time dimension query
    struct Length {
        std::string array;
        int axis;
    };
    struct Unary {
        UnOp op;
        ExprPtr operand;
    };
    struct Binary {
        BinOp op;
        ExprPtr lhs;
        ExprPtr rhs;
    };

    using Node = std::variant<IntLit, RealLit, BoolLit, Var, Index, Length, Unary, Binary>;

    Node node;
    SourceLoc loc;
};

ExprPtr make_expr(Expr::Node node, SourceLoc loc = {});

struct DistCall {
    DistFamily family;
    std::vector<ExprPtr> args;
    SourceLoc loc;
};

// 'double', 'bool' or absent (plain reassignment)
enum class DeclType { None, Bool, Double };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
    struct Assign {
        DeclType decl;
        std::string name;
        ExprPtr value;
    };
    struct Draw {
        DeclType decl;
        std::string name;
        DistCall dist;
    };
    // for (int i = init; i < bound; i++) body; '<=' sets inclusive
    struct For {
        std::string var;
        ExprPtr init;
        ExprPtr bound;
        bool inclusive;
        std::vector<StmtPtr> body;
    };

    using Node = std::variant<Assign, Draw, For>;

    Node node;
    SourceLoc loc;
};

struct ParamDecl {
    std::string name;
    bool is_bool = false;
    // rank 0 = scalar; each axis dim is either a literal from the
    // declaration (double[10, 2]) or unsized (double[] / double[,])
    std::vector<std::optional<long long>> dims;
    SourceLoc loc;

    int rank() const { return static_cast<int>(dims.size()); }
};

struct Program {
    std::string name;
    std::vector<ParamDecl> params;
    std::vector<StmtPtr> body;
    ExprPtr return_expr;
    SourceLoc loc;
};

// Canonical source form; parse(pretty(parse(s))) is structurally equal to
// parse(s).
std::string pretty(const Program& program);

bool ast_equal(const Expr& a, const Expr& b);
bool ast_equal(const Program& a, const Program& b);

} // namespace psp::lang
