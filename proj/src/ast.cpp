#include "psp/ast.hpp"

#include "psp/numfmt.hpp"

#include <sstream>

namespace psp::lang {

const char* binop_name(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Gt: return ">";
        case BinOp::Ge: return ">=";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::And: return "&&";
        case BinOp::Or: return "||";
    }
    return "?";
}

const char* unop_name(UnOp op) {
    return op == UnOp::Neg ? "-" : "!";
}

const char* dist_family_name(DistFamily family) {
    switch (family) {
        case DistFamily::Gaussian: return "Gaussian";
        case DistFamily::Gamma: return "Gamma";
        case DistFamily::Beta: return "Beta";
        case DistFamily::Bernoulli: return "Bernoulli";
    }
    return "?";
}

namespace {

int precedence(BinOp op) {
    switch (op) {
        case BinOp::Or: return 1;
        case BinOp::And: return 2;
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge:
        case BinOp::Eq:
        case BinOp::Ne: return 3;
        case BinOp::Add:
        case BinOp::Sub: return 4;
        case BinOp::Mul:
        case BinOp::Div: return 5;
    }
    return 0;
}

struct Printer {
    std::ostringstream out;
    int indent = 0;

    void newline() {
        out << '\n';
        for (int i = 0; i < indent; i++) out << "    ";
    }

    void print_expr(const Expr& e, int parent_prec) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Expr::IntLit>) {
                    out << node.value;
                } else if constexpr (std::is_same_v<T, Expr::RealLit>) {
                    std::string s = fmt_double(node.value);
                    out << s;
                    // keep the literal real-typed on re-parse
                    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
                        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
                        out << ".0";
                    }
                } else if constexpr (std::is_same_v<T, Expr::BoolLit>) {
                    out << (node.value ? "true" : "false");
                } else if constexpr (std::is_same_v<T, Expr::Var>) {
                    out << node.name;
                } else if constexpr (std::is_same_v<T, Expr::Index>) {
                    out << node.array << '[';
                    for (std::size_t i = 0; i < node.indices.size(); i++) {
                        if (i) out << ", ";
                        print_expr(*node.indices[i], 0);
                    }
                    out << ']';
                } else if constexpr (std::is_same_v<T, Expr::Length>) {
                    out << node.array << ".GetLength(" << node.axis << ')';
                } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                    out << unop_name(node.op);
                    print_expr(*node.operand, 6);
                } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                    int prec = precedence(node.op);
                    bool parens = prec < parent_prec;
                    if (parens) out << '(';
                    print_expr(*node.lhs, prec);
                    out << ' ' << binop_name(node.op) << ' ';
                    print_expr(*node.rhs, prec + 1);
                    if (parens) out << ')';
                }
            },
            e.node);
    }

    void print_dist(const DistCall& dist) {
        out << dist_family_name(dist.family) << '(';
        for (std::size_t i = 0; i < dist.args.size(); i++) {
            if (i) out << ", ";
            print_expr(*dist.args[i], 0);
        }
        out << ')';
    }

    void print_decl(DeclType decl) {
        if (decl == DeclType::Bool) out << "bool ";
        if (decl == DeclType::Double) out << "double ";
    }

    void print_stmt(const Stmt& stmt) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Stmt::Assign>) {
                    newline();
                    print_decl(node.decl);
                    out << node.name << " = ";
                    print_expr(*node.value, 0);
                    out << ';';
                } else if constexpr (std::is_same_v<T, Stmt::Draw>) {
                    newline();
                    print_decl(node.decl);
                    out << node.name << " = ";
                    print_dist(node.dist);
                    out << ';';
                } else if constexpr (std::is_same_v<T, Stmt::For>) {
                    newline();
                    out << "for (int " << node.var << " = ";
                    print_expr(*node.init, 0);
                    out << "; " << node.var << (node.inclusive ? " <= " : " < ");
                    print_expr(*node.bound, 0);
                    out << "; " << node.var << "++)";
                    newline();
                    out << '{';
                    indent++;
                    for (const auto& s : node.body) print_stmt(*s);
                    indent--;
                    newline();
                    out << '}';
                }
            },
            stmt.node);
    }
};

} // namespace

std::string pretty(const Program& program) {
    Printer p;
    p.out << "bool " << program.name << '(';
    for (std::size_t i = 0; i < program.params.size(); i++) {
        const ParamDecl& param = program.params[i];
        if (i) p.out << ", ";
        p.out << (param.is_bool ? "bool" : "double");
        if (param.rank() > 0) {
            p.out << '[';
            for (int d = 0; d < param.rank(); d++) {
                if (d) p.out << ", ";
                if (param.dims[d]) p.out << *param.dims[d];
            }
            p.out << ']';
        }
        p.out << ' ' << param.name;
    }
    p.out << ")\n{";
    p.indent = 1;
    for (const auto& stmt : program.body) p.print_stmt(*stmt);
    p.newline();
    p.out << "return ";
    p.print_expr(*program.return_expr, 0);
    p.out << ';';
    p.indent = 0;
    p.newline();
    p.out << "}\n";
    return p.out.str();
}

namespace {

template <class T>
bool equal_ptr_vec(const std::vector<std::unique_ptr<T>>& a,
                   const std::vector<std::unique_ptr<T>>& b,
                   bool (*eq)(const T&, const T&)) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); i++) {
        if (!eq(*a[i], *b[i])) return false;
    }
    return true;
}

bool stmt_equal(const Stmt& a, const Stmt& b);

bool dist_equal(const DistCall& a, const DistCall& b) {
    return a.family == b.family && equal_ptr_vec(a.args, b.args, ast_equal);
}

} // namespace

bool ast_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& na) {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Expr::IntLit>) {
                return na.value == nb.value;
            } else if constexpr (std::is_same_v<T, Expr::RealLit>) {
                return na.value == nb.value;
            } else if constexpr (std::is_same_v<T, Expr::BoolLit>) {
                return na.value == nb.value;
            } else if constexpr (std::is_same_v<T, Expr::Var>) {
                return na.name == nb.name;
            } else if constexpr (std::is_same_v<T, Expr::Index>) {
                return na.array == nb.array && equal_ptr_vec(na.indices, nb.indices, ast_equal);
            } else if constexpr (std::is_same_v<T, Expr::Length>) {
                return na.array == nb.array && na.axis == nb.axis;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                return na.op == nb.op && ast_equal(*na.operand, *nb.operand);
            } else {
                return na.op == nb.op && ast_equal(*na.lhs, *nb.lhs) && ast_equal(*na.rhs, *nb.rhs);
            }
        },
        a.node);
}

namespace {

bool stmt_equal(const Stmt& a, const Stmt& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& na) {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Stmt::Assign>) {
                return na.decl == nb.decl && na.name == nb.name && ast_equal(*na.value, *nb.value);
            } else if constexpr (std::is_same_v<T, Stmt::Draw>) {
                return na.decl == nb.decl && na.name == nb.name && dist_equal(na.dist, nb.dist);
            } else {
                return na.var == nb.var && na.inclusive == nb.inclusive &&
                       ast_equal(*na.init, *nb.init) && ast_equal(*na.bound, *nb.bound) &&
                       equal_ptr_vec(na.body, nb.body, stmt_equal);
            }
        },
        a.node);
}

} // namespace

bool ast_equal(const Program& a, const Program& b) {
    if (a.name != b.name || a.params.size() != b.params.size()) return false;
    for (std::size_t i = 0; i < a.params.size(); i++) {
        const ParamDecl& pa = a.params[i];
        const ParamDecl& pb = b.params[i];
        if (pa.name != pb.name || pa.is_bool != pb.is_bool || pa.dims != pb.dims) return false;
    }
    return equal_ptr_vec(a.body, b.body, stmt_equal) &&
           ast_equal(*a.return_expr, *b.return_expr);
}

} // namespace psp::lang
