#pragma once

// Closed-form field expressions: recursive-descent parser, canonical
// printer and vectorized grid evaluator.
//
// Grammar (lowest to highest precedence):
//
//     expr    := term (('+' | '-') term)*
//     term    := unary (('*' | '/') unary)*
//     unary   := '-' unary | power
//     power   := primary ('^' unary)?          right-associative
//     primary := number | 'pi' | 'e' | 'x0'..'x3'
//              | func '(' expr ')' | '(' expr ')'
//     func    := sin | cos | exp | log | abs | tanh
//
// There is no implicit multiplication. Every node remembers the byte offset of
// the token that produced it so evaluation errors can point into the source.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "kwsolve/error.hpp"
#include "kwsolve/grid.hpp"

namespace kw::expr {

enum class NodeKind { number, constant, variable, negate, binary, call };
enum class Func { sin, cos, exp, log, abs, tanh };

struct Node {
    NodeKind kind = NodeKind::number;
    double value = 0.0;      // number literal, or the value of a named constant
    std::string name;        // named constant
    std::size_t var = 0;     // variable index
    char op = 0;             // binary operator
    Func func = Func::sin;
    std::shared_ptr<const Node> lhs, rhs;  // negate/call use lhs only
    std::size_t offset = 0;
};

using NodePtr = std::shared_ptr<const Node>;

inline const char* func_name(Func f) {
    switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::abs: return "abs";
    case Func::tanh: return "tanh";
    }
    return "?";
}

/// Immutable expression tree; copies share nodes.
class FieldExpr {
public:
    FieldExpr() = default;
    explicit FieldExpr(NodePtr root) : root_(std::move(root)) {}

    const Node& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }
    bool empty() const { return !root_; }

    /// Largest variable index + 1, or 0 when no variable is used.
    std::size_t min_rank() const { return root_ ? min_rank_of(*root_) : 0; }

private:
    static std::size_t min_rank_of(const Node& n) {
        switch (n.kind) {
        case NodeKind::variable: return n.var + 1;
        case NodeKind::negate:
        case NodeKind::call: return min_rank_of(*n.lhs);
        case NodeKind::binary: return std::max(min_rank_of(*n.lhs), min_rank_of(*n.rhs));
        default: return 0;
        }
    }

    NodePtr root_;
};

// Node builders, also used by tests to assemble trees directly.
inline NodePtr number(double v, std::size_t offset = 0) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::number;
    n->value = v;
    n->offset = offset;
    return n;
}

inline NodePtr named_constant(const std::string& name, std::size_t offset = 0) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::constant;
    n->name = name;
    n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
    n->offset = offset;
    return n;
}

inline NodePtr variable(std::size_t index, std::size_t offset = 0) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::variable;
    n->var = index;
    n->offset = offset;
    return n;
}

inline NodePtr negate(NodePtr arg, std::size_t offset = 0) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::negate;
    n->lhs = std::move(arg);
    n->offset = offset;
    return n;
}

inline NodePtr binary(char op, NodePtr lhs, NodePtr rhs, std::size_t offset = 0) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::binary;
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->offset = offset;
    return n;
}

inline NodePtr call(Func f, NodePtr arg, std::size_t offset = 0) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::call;
    n->func = f;
    n->lhs = std::move(arg);
    n->offset = offset;
    return n;
}

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
        NodePtr root = parse_expr();
        skip_ws();
        if (pos_ < text_.size()) {
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        }
        return root;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size()) {
            throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
        }
        if (text_[pos_] != c) {
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
        ++pos_;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_ws();
            const std::size_t at = pos_;
            if (accept('+')) lhs = binary('+', lhs, parse_term(), at);
            else if (accept('-')) lhs = binary('-', lhs, parse_term(), at);
            else return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            skip_ws();
            const std::size_t at = pos_;
            if (accept('*')) lhs = binary('*', lhs, parse_unary(), at);
            else if (accept('/')) lhs = binary('/', lhs, parse_unary(), at);
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        skip_ws();
        const std::size_t at = pos_;
        if (accept('-')) return negate(parse_unary(), at);
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        skip_ws();
        const std::size_t at = pos_;
        if (accept('^')) return binary('^', base, parse_unary(), at);
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        const std::size_t at = pos_;
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        if (accept('(')) {
            NodePtr inner = parse_expr();
            expect(')');
            return inner;
        }
        throw ParseError(std::string("unexpected '") + c + "'", at);
    }

    NodePtr parse_number() {
        const std::size_t at = pos_;
        std::size_t end = pos_;
        while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
        if (end < text_.size() && text_[end] == '.') {
            ++end;
            while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
        }
        if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
            std::size_t exp_end = end + 1;
            if (exp_end < text_.size() && (text_[exp_end] == '+' || text_[exp_end] == '-')) ++exp_end;
            if (exp_end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp_end]))) {
                while (exp_end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp_end]))) ++exp_end;
                end = exp_end;
            }
        }
        const std::string lexeme(text_.substr(at, end - at));
        if (lexeme == ".") throw ParseError("malformed number", at);
        char* stop = nullptr;
        const double v = std::strtod(lexeme.c_str(), &stop);
        if (stop != lexeme.c_str() + lexeme.size() || !std::isfinite(v)) {
            throw ParseError("malformed number", at);
        }
        pos_ = end;
        return number(v, at);
    }

    NodePtr parse_identifier() {
        const std::size_t at = pos_;
        std::size_t end = pos_;
        while (end < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
            ++end;
        }
        const std::string name(text_.substr(at, end - at));
        pos_ = end;

        if (name == "pi" || name == "e") return named_constant(name, at);
        if (name.size() == 2 && name[0] == 'x' && name[1] >= '0' && name[1] <= '3') {
            return variable(static_cast<std::size_t>(name[1] - '0'), at);
        }
        static constexpr Func funcs[] = {Func::sin, Func::cos, Func::exp,
                                         Func::log, Func::abs, Func::tanh};
        for (Func f : funcs) {
            if (name == func_name(f)) {
                expect('(');
                NodePtr arg = parse_expr();
                expect(')');
                return call(f, std::move(arg), at);
            }
        }
        throw ParseError("unknown identifier '" + name + "'", at);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline void print_to(const Node& n, std::string& out) {
    switch (n.kind) {
    case NodeKind::number: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        if (n.value < 0 || std::signbit(n.value)) {
            out += "(";
            out += buf;
            out += ")";
        } else {
            out += buf;
        }
        return;
    }
    case NodeKind::constant: out += n.name; return;
    case NodeKind::variable: out += "x" + std::to_string(n.var); return;
    case NodeKind::negate:
        out += "(-";
        print_to(*n.lhs, out);
        out += ")";
        return;
    case NodeKind::binary:
        out += "(";
        print_to(*n.lhs, out);
        out += ' ';
        out += n.op;
        out += ' ';
        print_to(*n.rhs, out);
        out += ")";
        return;
    case NodeKind::call:
        out += func_name(n.func);
        out += "(";
        print_to(*n.lhs, out);
        out += ")";
        return;
    }
}

inline double checked(double v, const Node& n, const char* what) {
    if (!std::isfinite(v)) throw EvalError(what, n.offset);
    return v;
}

inline double apply_binary(const Node& n, double a, double b) {
    switch (n.op) {
    case '+': return checked(a + b, n, "non-finite sum");
    case '-': return checked(a - b, n, "non-finite difference");
    case '*': return checked(a * b, n, "non-finite product");
    case '/':
        if (b == 0.0) throw EvalError("division by zero", n.offset);
        return checked(a / b, n, "non-finite quotient");
    case '^':
        if (a < 0.0 && std::floor(b) != b) {
            throw EvalError("negative base with non-integer exponent", n.offset);
        }
        if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power", n.offset);
        return checked(std::pow(a, b), n, "non-finite power");
    }
    throw EvalError("unknown operator", n.offset);
}

inline double apply_func(const Node& n, double x) {
    switch (n.func) {
    case Func::sin: return std::sin(x);
    case Func::cos: return std::cos(x);
    case Func::exp: return checked(std::exp(x), n, "exp overflow");
    case Func::log:
        if (x <= 0.0) throw EvalError("log of non-positive value", n.offset);
        return std::log(x);
    case Func::abs: return std::abs(x);
    case Func::tanh: return std::tanh(x);
    }
    throw EvalError("unknown function", n.offset);
}

inline const Node* find_variable_beyond(const Node& n, std::size_t rank) {
    switch (n.kind) {
    case NodeKind::variable: return n.var >= rank ? &n : nullptr;
    case NodeKind::negate:
    case NodeKind::call: return find_variable_beyond(*n.lhs, rank);
    case NodeKind::binary: {
        if (const Node* l = find_variable_beyond(*n.lhs, rank)) return l;
        return find_variable_beyond(*n.rhs, rank);
    }
    default: return nullptr;
    }
}

// Whole-grid evaluation, one pass per node.
inline std::vector<double> eval_grid(const Node& n, const GridSpec& spec) {
    const std::size_t size = spec.size();
    switch (n.kind) {
    case NodeKind::number:
    case NodeKind::constant: return std::vector<double>(size, n.value);
    case NodeKind::variable: {
        std::vector<double> out(size);
        const std::size_t stride = spec.stride(n.var);
        const std::size_t dim = spec.dim(n.var);
        const double h = spec.spacing(n.var);
        for (std::size_t i = 0; i < size; ++i) {
            out[i] = static_cast<double>((i / stride) % dim) * h;
        }
        return out;
    }
    case NodeKind::negate: {
        auto v = eval_grid(*n.lhs, spec);
        for (double& x : v) x = -x;
        return v;
    }
    case NodeKind::binary: {
        auto a = eval_grid(*n.lhs, spec);
        const auto b = eval_grid(*n.rhs, spec);
        for (std::size_t i = 0; i < size; ++i) a[i] = apply_binary(n, a[i], b[i]);
        return a;
    }
    case NodeKind::call: {
        auto v = eval_grid(*n.lhs, spec);
        for (double& x : v) x = apply_func(n, x);
        return v;
    }
    }
    return {};
}

} // namespace detail

/// Throws ParseError carrying the byte offset of the offending token.
inline FieldExpr parse(std::string_view text) { return FieldExpr(detail::Parser(text).parse()); }

/// Fully parenthesized form; re-parsing it yields an equivalent tree.
inline std::string print(const FieldExpr& e) {
    std::string out;
    if (!e.empty()) detail::print_to(e.root(), out);
    return out;
}

/// Direct single-point evaluation. `x` holds the point's coordinates.
inline double evaluate_at(const Node& n, std::span<const double> x) {
    switch (n.kind) {
    case NodeKind::number:
    case NodeKind::constant: return n.value;
    case NodeKind::variable:
        if (n.var >= x.size()) throw EvalError("variable x" + std::to_string(n.var) + " out of rank", n.offset);
        return x[n.var];
    case NodeKind::negate: return -evaluate_at(*n.lhs, x);
    case NodeKind::binary:
        return detail::apply_binary(n, evaluate_at(*n.lhs, x), evaluate_at(*n.rhs, x));
    case NodeKind::call: return detail::apply_func(n, evaluate_at(*n.lhs, x));
    }
    return 0.0;
}

inline double evaluate_at(const FieldExpr& e, std::span<const double> x) {
    return evaluate_at(e.root(), x);
}

/// Samples the expression at every grid point.
inline ScalarField evaluate(const FieldExpr& e, const GridSpec& spec) {
    if (e.empty()) throw PreconditionError("empty expression");
    if (const Node* bad = detail::find_variable_beyond(e.root(), spec.rank())) {
        throw EvalError("variable x" + std::to_string(bad->var) + " out of rank " +
                            std::to_string(spec.rank()),
                        bad->offset);
    }
    return ScalarField(spec, detail::eval_grid(e.root(), spec));
}

inline ScalarField evaluate(std::string_view text, const GridSpec& spec) {
    return evaluate(parse(text), spec);
}

} // namespace kw::expr
