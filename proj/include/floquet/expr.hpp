#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace floquet {

/// Node kinds of a coefficient expression over the single variable `t`.
///
/// The function set is deliberately small ({sin, cos, exp, abs} plus `^`).
/// Adding a function means a new enumerator, an entry in the parser's
/// identifier table, and a case in eval(); nothing else depends on the list.
enum class ExprKind {
    number,
    pi,
    var,
    neg,
    add,
    sub,
    mul,
    div,
    pow,
    sin,
    cos,
    exp,
    abs,
};

class Expr;

namespace detail {
struct ExprNode {
    ExprKind kind;
    double value = 0.0;
    std::shared_ptr<const ExprNode> lhs;
    std::shared_ptr<const ExprNode> rhs;
};
}  // namespace detail

/// Immutable expression tree. Copies share structure; safe to evaluate from
/// several threads at once.
class Expr {
public:
    /// Non-negative finite literal. Negative values are spelled as neg(number).
    static Expr number(double value);
    static Expr pi();
    static Expr var();
    static Expr unary(ExprKind kind, Expr operand);
    static Expr binary(ExprKind kind, Expr lhs, Expr rhs);

    ExprKind kind() const { return node_->kind; }
    double value() const { return node_->value; }
    Expr lhs() const;
    Expr rhs() const;

    /// Number of children for this node kind (0, 1 or 2).
    int arity() const;

    const detail::ExprNode& node() const { return *node_; }

    friend bool operator==(const Expr& a, const Expr& b);

private:
    explicit Expr(std::shared_ptr<const detail::ExprNode> node) : node_(std::move(node)) {}
    std::shared_ptr<const detail::ExprNode> node_;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);

/// Literal of either sign: negative values become neg(number(|v|)).
Expr constant(double v);

class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, std::size_t offset, std::vector<std::string> expected);
    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

class UnknownIdentifierError : public ParseError {
public:
    UnknownIdentifierError(std::string identifier, std::size_t offset);
    const std::string& identifier() const noexcept { return identifier_; }

private:
    std::string identifier_;
};

/// Raised when evaluation produces a non-finite value. `subtree()` is the
/// printed form of the innermost node that first went non-finite.
class EvalError : public std::runtime_error {
public:
    EvalError(std::string subtree, double t);
    const std::string& subtree() const noexcept { return subtree_; }
    double t() const noexcept { return t_; }

private:
    std::string subtree_;
    double t_;
};

/// Grammar (lowest to highest precedence):
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?          right-associative
///   primary := number | 't' | 'pi' | fn '(' sum ')' | '(' sum ')'
Expr parse(std::string_view source);

double eval(const Expr& e, double t);

/// Fully parenthesised text form; parse(to_string(e)) == e.
std::string to_string(const Expr& e);

}  // namespace floquet
