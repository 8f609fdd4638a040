#include "floquet/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace floquet {

namespace {

struct FunctionName {
    std::string_view name;
    ExprKind kind;
};

constexpr std::array<FunctionName, 4> kFunctions{{
    {"sin", ExprKind::sin},
    {"cos", ExprKind::cos},
    {"exp", ExprKind::exp},
    {"abs", ExprKind::abs},
}};

bool is_unary(ExprKind k) {
    switch (k) {
        case ExprKind::neg:
        case ExprKind::sin:
        case ExprKind::cos:
        case ExprKind::exp:
        case ExprKind::abs:
            return true;
        default:
            return false;
    }
}

bool is_binary(ExprKind k) {
    switch (k) {
        case ExprKind::add:
        case ExprKind::sub:
        case ExprKind::mul:
        case ExprKind::div:
        case ExprKind::pow:
            return true;
        default:
            return false;
    }
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse_all() {
        if (src_.empty()) {
            throw ParseError("empty expression", 0, {"expression"});
        }
        Expr e = sum();
        skip_ws();
        if (pos_ != src_.size()) {
            fail({"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
        }
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(std::vector<std::string> expected) {
        std::string msg = "syntax error at offset " + std::to_string(pos_) + ": expected ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i) msg += ", ";
            msg += expected[i];
        }
        if (pos_ < src_.size()) {
            msg += std::string(" but found '") + src_[pos_] + "'";
        } else {
            msg += " but reached end of input";
        }
        throw ParseError(std::move(msg), pos_, std::move(expected));
    }

    Expr sum() {
        Expr lhs = product();
        for (;;) {
            if (accept('+')) {
                lhs = Expr::binary(ExprKind::add, lhs, product());
            } else if (accept('-')) {
                lhs = Expr::binary(ExprKind::sub, lhs, product());
            } else {
                return lhs;
            }
        }
    }

    Expr product() {
        Expr lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = Expr::binary(ExprKind::mul, lhs, unary());
            } else if (accept('/')) {
                lhs = Expr::binary(ExprKind::div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    Expr unary() {
        if (accept('-')) {
            return Expr::unary(ExprKind::neg, unary());
        }
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (accept('^')) {
            return Expr::binary(ExprKind::pow, base, unary());
        }
        return base;
    }

    Expr primary() {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail({"number", "identifier", "'('", "'-'"});
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = sum();
            if (!accept(')')) fail({"')'"});
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return identifier();
        }
        fail({"number", "identifier", "'('", "'-'"});
    }

    Expr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) {
            pos_ = start;
            fail({"digit"});
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) fail({"exponent digit"});
        }
        double value = 0.0;
        const char* first = src_.data() + start;
        const char* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
            pos_ = start;
            fail({"finite number"});
        }
        return Expr::number(value);
    }

    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name == "t") return Expr::var();
        if (name == "pi") return Expr::pi();
        for (const auto& fn : kFunctions) {
            if (name == fn.name) {
                if (!accept('(')) fail({"'('"});
                Expr arg = sum();
                if (!accept(')')) fail({"')'"});
                return Expr::unary(fn.kind, arg);
            }
        }
        throw UnknownIdentifierError(std::string(name), start);
    }
};

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

const char* function_name(ExprKind k) {
    for (const auto& fn : kFunctions) {
        if (fn.kind == k) return fn.name.data();
    }
    return "?";
}

char operator_symbol(ExprKind k) {
    switch (k) {
        case ExprKind::add: return '+';
        case ExprKind::sub: return '-';
        case ExprKind::mul: return '*';
        case ExprKind::div: return '/';
        case ExprKind::pow: return '^';
        default: return '?';
    }
}

}  // namespace

Expr Expr::number(double value) {
    if (!std::isfinite(value) || value < 0.0 || std::signbit(value)) {
        throw std::invalid_argument("expression literal must be finite and non-negative");
    }
    return Expr(std::make_shared<const detail::ExprNode>(detail::ExprNode{ExprKind::number, value, {}, {}}));
}

Expr Expr::pi() {
    return Expr(std::make_shared<const detail::ExprNode>(detail::ExprNode{ExprKind::pi, 0.0, {}, {}}));
}

Expr Expr::var() {
    return Expr(std::make_shared<const detail::ExprNode>(detail::ExprNode{ExprKind::var, 0.0, {}, {}}));
}

Expr Expr::unary(ExprKind kind, Expr operand) {
    if (!is_unary(kind)) throw std::invalid_argument("not a unary expression kind");
    return Expr(std::make_shared<const detail::ExprNode>(detail::ExprNode{kind, 0.0, operand.node_, {}}));
}

Expr Expr::binary(ExprKind kind, Expr lhs, Expr rhs) {
    if (!is_binary(kind)) throw std::invalid_argument("not a binary expression kind");
    return Expr(std::make_shared<const detail::ExprNode>(detail::ExprNode{kind, 0.0, lhs.node_, rhs.node_}));
}

Expr Expr::lhs() const {
    if (!node_->lhs) throw std::logic_error("expression node has no children");
    return Expr(node_->lhs);
}

Expr Expr::rhs() const {
    if (!node_->rhs) throw std::logic_error("expression node has no second child");
    return Expr(node_->rhs);
}

int Expr::arity() const {
    if (is_binary(kind())) return 2;
    if (is_unary(kind())) return 1;
    return 0;
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.arity()) {
        case 0:
            return a.kind() != ExprKind::number || a.value() == b.value();
        case 1:
            return a.lhs() == b.lhs();
        default:
            return a.lhs() == b.lhs() && a.rhs() == b.rhs();
    }
}

Expr operator+(Expr a, Expr b) { return Expr::binary(ExprKind::add, a, b); }
Expr operator-(Expr a, Expr b) { return Expr::binary(ExprKind::sub, a, b); }
Expr operator*(Expr a, Expr b) { return Expr::binary(ExprKind::mul, a, b); }
Expr operator/(Expr a, Expr b) { return Expr::binary(ExprKind::div, a, b); }
Expr operator-(Expr a) { return Expr::unary(ExprKind::neg, a); }

Expr constant(double v) { return std::signbit(v) ? -Expr::number(-v) : Expr::number(v); }

ParseError::ParseError(std::string message, std::size_t offset, std::vector<std::string> expected)
    : std::runtime_error(std::move(message)), offset_(offset), expected_(std::move(expected)) {}

UnknownIdentifierError::UnknownIdentifierError(std::string identifier, std::size_t offset)
    : ParseError("unknown identifier '" + identifier + "' at offset " + std::to_string(offset) +
                     " (allowed: t, pi, sin, cos, exp, abs)",
                 offset, {"t", "pi", "sin", "cos", "exp", "abs"}),
      identifier_(std::move(identifier)) {}

EvalError::EvalError(std::string subtree, double t)
    : std::runtime_error("non-finite value of " + subtree + " at t=" + format_number(t)),
      subtree_(std::move(subtree)),
      t_(t) {}

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

namespace {

std::string print_node(const detail::ExprNode& n) {
    switch (n.kind) {
        case ExprKind::number: return format_number(n.value);
        case ExprKind::pi: return "pi";
        case ExprKind::var: return "t";
        case ExprKind::neg: return "(-" + print_node(*n.lhs) + ")";
        case ExprKind::sin:
        case ExprKind::cos:
        case ExprKind::exp:
        case ExprKind::abs:
            return std::string(function_name(n.kind)) + "(" + print_node(*n.lhs) + ")";
        default:
            return "(" + print_node(*n.lhs) + operator_symbol(n.kind) + print_node(*n.rhs) + ")";
    }
}

double eval_node(const detail::ExprNode& n, double t) {
    double r = 0.0;
    switch (n.kind) {
        case ExprKind::number: return n.value;
        case ExprKind::pi: return std::numbers::pi;
        case ExprKind::var: return t;
        case ExprKind::neg: return -eval_node(*n.lhs, t);
        case ExprKind::add: r = eval_node(*n.lhs, t) + eval_node(*n.rhs, t); break;
        case ExprKind::sub: r = eval_node(*n.lhs, t) - eval_node(*n.rhs, t); break;
        case ExprKind::mul: r = eval_node(*n.lhs, t) * eval_node(*n.rhs, t); break;
        case ExprKind::div: r = eval_node(*n.lhs, t) / eval_node(*n.rhs, t); break;
        case ExprKind::pow: r = std::pow(eval_node(*n.lhs, t), eval_node(*n.rhs, t)); break;
        case ExprKind::sin: r = std::sin(eval_node(*n.lhs, t)); break;
        case ExprKind::cos: r = std::cos(eval_node(*n.lhs, t)); break;
        case ExprKind::exp: r = std::exp(eval_node(*n.lhs, t)); break;
        case ExprKind::abs: r = std::fabs(eval_node(*n.lhs, t)); break;
    }
    // children already passed this check, so n is the innermost offender
    if (!std::isfinite(r)) throw EvalError(print_node(n), t);
    return r;
}

}  // namespace

double eval(const Expr& e, double t) { return eval_node(e.node(), t); }

std::string to_string(const Expr& e) { return print_node(e.node()); }

}  // namespace floquet
