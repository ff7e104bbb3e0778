#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>

#include "fkoc/errors.hpp"

namespace fkoc {

// Minimal arithmetic expression language over variables t, x, u with exact
// symbolic differentiation. Grammar (no implicit multiplication):
//
//   expr  := term  (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' unary)?          (right-associative)
//   atom  := number | 't'|'x'|'u' | name '(' expr ')' | '(' expr ')'
//
// with name in {exp, ln, sin, cos, sqrt}.
enum class ExprKind {
    Const,
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
};

enum class VarId { T = 0, X = 1, U = 2 };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind;
    double value = 0.0; // Const
    VarId var = VarId::T;
    ExprPtr a, b;
};

struct EvalEnv {
    double t = 0.0, x = 0.0, u = 0.0;
    double get(VarId v) const {
        switch (v) {
            case VarId::T: return t;
            case VarId::X: return x;
            case VarId::U: return u;
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Constructors with constant folding
// ---------------------------------------------------------------------------

inline ExprPtr make_const(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Const;
    e->value = v;
    return e;
}

inline ExprPtr make_var(VarId v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Var;
    e->var = v;
    return e;
}

inline bool is_const(const ExprPtr& e, double v) {
    return e->kind == ExprKind::Const && e->value == v;
}

inline ExprPtr make_node(ExprKind k, ExprPtr a, ExprPtr b = nullptr) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}

inline ExprPtr make_neg(ExprPtr a) {
    if (a->kind == ExprKind::Const) return make_const(-a->value);
    if (a->kind == ExprKind::Neg) return a->a;
    return make_node(ExprKind::Neg, std::move(a));
}

inline ExprPtr make_add(ExprPtr a, ExprPtr b) {
    if (a->kind == ExprKind::Const && b->kind == ExprKind::Const)
        return make_const(a->value + b->value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return make_node(ExprKind::Add, std::move(a), std::move(b));
}

inline ExprPtr make_sub(ExprPtr a, ExprPtr b) {
    if (a->kind == ExprKind::Const && b->kind == ExprKind::Const)
        return make_const(a->value - b->value);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return make_neg(std::move(b));
    return make_node(ExprKind::Sub, std::move(a), std::move(b));
}

inline ExprPtr make_mul(ExprPtr a, ExprPtr b) {
    if (a->kind == ExprKind::Const && b->kind == ExprKind::Const)
        return make_const(a->value * b->value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return make_node(ExprKind::Mul, std::move(a), std::move(b));
}

inline ExprPtr make_div(ExprPtr a, ExprPtr b) {
    if (is_const(a, 0.0)) return make_const(0.0);
    if (is_const(b, 1.0)) return a;
    return make_node(ExprKind::Div, std::move(a), std::move(b));
}

inline ExprPtr make_pow(ExprPtr a, ExprPtr b) {
    if (is_const(b, 1.0)) return a;
    if (is_const(b, 0.0)) return make_const(1.0);
    return make_node(ExprKind::Pow, std::move(a), std::move(b));
}

// ---------------------------------------------------------------------------
// Printing (minimal parentheses; reparses to a structurally equal tree)
// ---------------------------------------------------------------------------

namespace detail {

inline int precedence(ExprKind k) {
    switch (k) {
        case ExprKind::Add:
        case ExprKind::Sub: return 1;
        case ExprKind::Mul:
        case ExprKind::Div: return 2;
        case ExprKind::Neg: return 3;
        case ExprKind::Pow: return 4;
        default: return 5;
    }
}

inline void print_rec(const ExprPtr& e, std::string& out, int need) {
    int prec = precedence(e->kind);
    // A negative constant prints with a leading '-', i.e. at Neg precedence.
    if (e->kind == ExprKind::Const && e->value < 0.0) prec = 3;
    bool paren = prec < need;
    if (paren) out += '(';
    switch (e->kind) {
        case ExprKind::Const: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", e->value);
            out += buf;
            break;
        }
        case ExprKind::Var:
            out += (e->var == VarId::T ? 't' : e->var == VarId::X ? 'x' : 'u');
            break;
        case ExprKind::Add:
            print_rec(e->a, out, 1);
            out += " + ";
            print_rec(e->b, out, 2);
            break;
        case ExprKind::Sub:
            print_rec(e->a, out, 1);
            out += " - ";
            print_rec(e->b, out, 2);
            break;
        case ExprKind::Mul:
            print_rec(e->a, out, 2);
            out += '*';
            print_rec(e->b, out, 3);
            break;
        case ExprKind::Div:
            print_rec(e->a, out, 2);
            out += '/';
            print_rec(e->b, out, 3);
            break;
        case ExprKind::Neg:
            out += '-';
            print_rec(e->a, out, 3);
            break;
        case ExprKind::Pow:
            print_rec(e->a, out, 5);
            out += '^';
            print_rec(e->b, out, 3);
            break;
        case ExprKind::Exp:
        case ExprKind::Ln:
        case ExprKind::Sin:
        case ExprKind::Cos:
        case ExprKind::Sqrt: {
            const char* name = e->kind == ExprKind::Exp   ? "exp"
                               : e->kind == ExprKind::Ln  ? "ln"
                               : e->kind == ExprKind::Sin ? "sin"
                               : e->kind == ExprKind::Cos ? "cos"
                                                          : "sqrt";
            out += name;
            out += '(';
            print_rec(e->a, out, 0);
            out += ')';
            break;
        }
    }
    if (paren) out += ')';
}

} // namespace detail

inline std::string print(const ExprPtr& e) {
    std::string out;
    detail::print_rec(e, out, 0);
    return out;
}

inline bool equal(const ExprPtr& a, const ExprPtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprKind::Const: return a->value == b->value;
        case ExprKind::Var: return a->var == b->var;
        case ExprKind::Neg:
        case ExprKind::Exp:
        case ExprKind::Ln:
        case ExprKind::Sin:
        case ExprKind::Cos:
        case ExprKind::Sqrt: return equal(a->a, b->a);
        default: return equal(a->a, b->a) && equal(a->b, b->b);
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
public:
    Parser(std::string_view src, std::string_view allowed_vars)
        : src_(src), allowed_(allowed_vars) {}

    ExprPtr run() {
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    std::string_view src_;
    std::string_view allowed_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& expected) {
        throw SyntaxError("syntax error: " + expected, pos_);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        while (true) {
            if (eat('+')) {
                e = make_node(ExprKind::Add, e, parse_term());
            } else if (eat('-')) {
                e = make_node(ExprKind::Sub, e, parse_term());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_unary();
        while (true) {
            if (eat('*')) {
                e = make_node(ExprKind::Mul, e, parse_unary());
            } else if (eat('/')) {
                e = make_node(ExprKind::Div, e, parse_unary());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_unary() {
        if (eat('-')) return make_neg(parse_unary());
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (eat('^')) return make_node(ExprKind::Pow, base, parse_unary());
        return base;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) fail("expected number, variable, function, or '('");
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
        fail("expected number, variable, function, or '('");
    }

    ExprPtr parse_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark; // not an exponent suffix
            }
        }
        try {
            return make_const(std::stod(std::string(src_.substr(start, pos_ - start))));
        } catch (const std::exception&) {
            pos_ = start;
            fail("malformed number literal");
        }
    }

    ExprPtr parse_name() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        std::string_view name = src_.substr(start, pos_ - start);
        if (name.size() == 1 && (name[0] == 't' || name[0] == 'x' || name[0] == 'u')) {
            if (allowed_.find(name[0]) == std::string_view::npos) {
                pos_ = start;
                fail("variable '" + std::string(name) + "' not allowed in this context");
            }
            return make_var(name[0] == 't' ? VarId::T : name[0] == 'x' ? VarId::X
                                                                       : VarId::U);
        }
        ExprKind k;
        if (name == "exp") k = ExprKind::Exp;
        else if (name == "ln") k = ExprKind::Ln;
        else if (name == "sin") k = ExprKind::Sin;
        else if (name == "cos") k = ExprKind::Cos;
        else if (name == "sqrt") k = ExprKind::Sqrt;
        else {
            pos_ = start;
            fail("unknown name '" + std::string(name) +
                 "' (expected exp, ln, sin, cos, sqrt, or a variable)");
        }
        if (!eat('(')) fail("expected '(' after function name");
        ExprPtr arg = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return make_node(k, arg);
    }
};

} // namespace detail

// Parse an expression; `allowed_vars` restricts the variable set, e.g. "t"
// for candidate functions and "txu" for dynamics.
inline ExprPtr parse(std::string_view src, std::string_view allowed_vars = "txu") {
    if (src.empty()) throw SyntaxError("empty expression", 0);
    // Fold unary minus over constants so printing round-trips structurally.
    struct Folder {
        static ExprPtr fold(const ExprPtr& e) {
            switch (e->kind) {
                case ExprKind::Const:
                case ExprKind::Var: return e;
                case ExprKind::Neg: return make_neg(fold(e->a));
                case ExprKind::Add: return make_node(ExprKind::Add, fold(e->a), fold(e->b));
                case ExprKind::Sub: return make_node(ExprKind::Sub, fold(e->a), fold(e->b));
                case ExprKind::Mul: return make_node(ExprKind::Mul, fold(e->a), fold(e->b));
                case ExprKind::Div: return make_node(ExprKind::Div, fold(e->a), fold(e->b));
                case ExprKind::Pow: return make_node(ExprKind::Pow, fold(e->a), fold(e->b));
                default: return make_node(e->kind, fold(e->a));
            }
        }
    };
    return Folder::fold(detail::Parser(src, allowed_vars).run());
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void eval_fail(const ExprPtr& e, const std::string& what) {
    throw EvalError(what + " in '" + print(e) + "'");
}

} // namespace detail

inline double eval(const ExprPtr& e, const EvalEnv& env) {
    switch (e->kind) {
        case ExprKind::Const: return e->value;
        case ExprKind::Var: return env.get(e->var);
        case ExprKind::Add: return eval(e->a, env) + eval(e->b, env);
        case ExprKind::Sub: return eval(e->a, env) - eval(e->b, env);
        case ExprKind::Mul: return eval(e->a, env) * eval(e->b, env);
        case ExprKind::Div: {
            double num = eval(e->a, env), den = eval(e->b, env);
            if (den == 0.0) detail::eval_fail(e, "division by zero");
            double r = num / den;
            if (!std::isfinite(r)) detail::eval_fail(e, "non-finite quotient");
            return r;
        }
        case ExprKind::Pow: {
            double base = eval(e->a, env), ex = eval(e->b, env);
            bool integral = std::nearbyint(ex) == ex && std::abs(ex) < 1e15;
            if (!integral && base <= 0.0)
                detail::eval_fail(e, "non-integer power of non-positive base");
            if (integral && base == 0.0 && ex < 0.0)
                detail::eval_fail(e, "zero raised to negative power");
            double r = std::pow(base, ex);
            if (!std::isfinite(r)) detail::eval_fail(e, "non-finite power");
            return r;
        }
        case ExprKind::Neg: return -eval(e->a, env);
        case ExprKind::Exp: {
            double r = std::exp(eval(e->a, env));
            if (!std::isfinite(r)) detail::eval_fail(e, "exp overflow");
            return r;
        }
        case ExprKind::Ln: {
            double v = eval(e->a, env);
            if (v <= 0.0) detail::eval_fail(e, "ln of non-positive argument");
            return std::log(v);
        }
        case ExprKind::Sin: return std::sin(eval(e->a, env));
        case ExprKind::Cos: return std::cos(eval(e->a, env));
        case ExprKind::Sqrt: {
            double v = eval(e->a, env);
            if (v < 0.0) detail::eval_fail(e, "sqrt of negative argument");
            return std::sqrt(v);
        }
    }
    detail::eval_fail(e, "unreachable node kind");
}

// ---------------------------------------------------------------------------
// Symbolic differentiation with constant folding
// ---------------------------------------------------------------------------

inline ExprPtr diff(const ExprPtr& e, VarId v) {
    switch (e->kind) {
        case ExprKind::Const: return make_const(0.0);
        case ExprKind::Var: return make_const(e->var == v ? 1.0 : 0.0);
        case ExprKind::Add: return make_add(diff(e->a, v), diff(e->b, v));
        case ExprKind::Sub: return make_sub(diff(e->a, v), diff(e->b, v));
        case ExprKind::Mul:
            return make_add(make_mul(diff(e->a, v), e->b), make_mul(e->a, diff(e->b, v)));
        case ExprKind::Div:
            // (a'b - ab') / b^2
            return make_div(make_sub(make_mul(diff(e->a, v), e->b),
                                     make_mul(e->a, diff(e->b, v))),
                            make_pow(e->b, make_const(2.0)));
        case ExprKind::Pow: {
            if (e->b->kind == ExprKind::Const) {
                double c = e->b->value;
                return make_mul(make_mul(make_const(c), make_pow(e->a, make_const(c - 1.0))),
                                diff(e->a, v));
            }
            // f^g * (g' ln f + g f'/f)
            ExprPtr fg = make_pow(e->a, e->b);
            ExprPtr t1 = make_mul(diff(e->b, v), make_node(ExprKind::Ln, e->a));
            ExprPtr t2 = make_mul(e->b, make_div(diff(e->a, v), e->a));
            return make_mul(fg, make_add(t1, t2));
        }
        case ExprKind::Neg: return make_neg(diff(e->a, v));
        case ExprKind::Exp: return make_mul(make_node(ExprKind::Exp, e->a), diff(e->a, v));
        case ExprKind::Ln: return make_div(diff(e->a, v), e->a);
        case ExprKind::Sin:
            return make_mul(make_node(ExprKind::Cos, e->a), diff(e->a, v));
        case ExprKind::Cos:
            return make_neg(make_mul(make_node(ExprKind::Sin, e->a), diff(e->a, v)));
        case ExprKind::Sqrt:
            return make_div(diff(e->a, v),
                            make_mul(make_const(2.0), make_node(ExprKind::Sqrt, e->a)));
    }
    return make_const(0.0);
}

// True when the expression contains any of the given variables.
inline bool depends_on(const ExprPtr& e, VarId v) {
    switch (e->kind) {
        case ExprKind::Const: return false;
        case ExprKind::Var: return e->var == v;
        case ExprKind::Neg:
        case ExprKind::Exp:
        case ExprKind::Ln:
        case ExprKind::Sin:
        case ExprKind::Cos:
        case ExprKind::Sqrt: return depends_on(e->a, v);
        default: return depends_on(e->a, v) || depends_on(e->b, v);
    }
}

} // namespace fkoc
