#pragma once

// Expressions in one variable `x`:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?            right associative
//   primary := number | 'x' | func '(' args ')' | '(' expr ')'
//
// func is one of exp sin cos tanh abs (1 arg), min max (2), clamp (3).

#include "sublim/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sublim {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

enum class Func { exp, sin, cos, tanh, abs, min, max, clamp };

struct FuncInfo {
    std::string_view name;
    Func func;
    std::size_t arity;
};

inline constexpr std::array<FuncInfo, 8> functions{{
    {"exp", Func::exp, 1},
    {"sin", Func::sin, 1},
    {"cos", Func::cos, 1},
    {"tanh", Func::tanh, 1},
    {"abs", Func::abs, 1},
    {"min", Func::min, 2},
    {"max", Func::max, 2},
    {"clamp", Func::clamp, 3},
}};

struct Expr {
    enum class Kind { number, variable, negate, add, sub, mul, div, pow, call };

    Kind kind = Kind::number;
    double value = 0.0;       // number
    Func func = Func::exp;    // call
    std::vector<Expr> args;   // operands

    friend bool operator==(const Expr&, const Expr&) = default;

    static Expr number(double v) { return {Kind::number, v, Func::exp, {}}; }
    static Expr variable() { return {Kind::variable, 0.0, Func::exp, {}}; }
    static Expr unary(Expr a) { return {Kind::negate, 0.0, Func::exp, {std::move(a)}}; }
    static Expr binary(Kind k, Expr a, Expr b) { return {k, 0.0, Func::exp, {std::move(a), std::move(b)}}; }
    static Expr call(Func f, std::vector<Expr> a) { return {Kind::call, 0.0, f, std::move(a)}; }

    double operator()(double x) const { return eval(x); }

    double eval(double x) const {
        switch (kind) {
        case Kind::number: return value;
        case Kind::variable: return x;
        case Kind::negate: return -args[0].eval(x);
        case Kind::add: return args[0].eval(x) + args[1].eval(x);
        case Kind::sub: return args[0].eval(x) - args[1].eval(x);
        case Kind::mul: return args[0].eval(x) * args[1].eval(x);
        case Kind::div: {
            const double d = args[1].eval(x);
            if (d == 0.0)
                throw EvaluationError("division by zero");
            return args[0].eval(x) / d;
        }
        case Kind::pow: return std::pow(args[0].eval(x), args[1].eval(x));
        case Kind::call: return eval_call(x);
        }
        return 0.0;
    }

private:
    double eval_call(double x) const {
        const double a = args[0].eval(x);
        switch (func) {
        case Func::exp: return std::exp(a);
        case Func::sin: return std::sin(a);
        case Func::cos: return std::cos(a);
        case Func::tanh: return std::tanh(a);
        case Func::abs: return std::abs(a);
        case Func::min: return std::min(a, args[1].eval(x));
        case Func::max: return std::max(a, args[1].eval(x));
        case Func::clamp: {
            const double lo = args[1].eval(x), hi = args[2].eval(x);
            if (!(lo <= hi))
                throw EvaluationError("clamp needs lower <= upper");
            return std::clamp(a, lo, hi);
        }
        }
        return 0.0;
    }
};

namespace detail {

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : s_(text) {}

    Expr parse() {
        Expr e = expr();
        skip_space();
        if (pos_ != s_.size())
            fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    static constexpr int max_depth = 200;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_space() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            fail(std::string("expected '") + c + "'");
    }

    struct DepthGuard {
        int& depth;
        DepthGuard(int& d, const ExprParser& p) : depth(d) {
            if (++depth > max_depth)
                p.fail("expression nested too deeply");
        }
        ~DepthGuard() { --depth; }
    };

    Expr expr() {
        DepthGuard guard(depth_, *this);
        Expr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = Expr::binary(Expr::Kind::add, std::move(lhs), term());
            else if (accept('-'))
                lhs = Expr::binary(Expr::Kind::sub, std::move(lhs), term());
            else
                return lhs;
        }
    }

    Expr term() {
        Expr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = Expr::binary(Expr::Kind::mul, std::move(lhs), unary());
            else if (accept('/'))
                lhs = Expr::binary(Expr::Kind::div, std::move(lhs), unary());
            else
                return lhs;
        }
    }

    Expr unary() {
        DepthGuard guard(depth_, *this);
        if (accept('-'))
            return Expr::unary(unary());
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (accept('^'))
            return Expr::binary(Expr::Kind::pow, std::move(base), unary());
        return base;
    }

    Expr primary() {
        skip_space();
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
            ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-'))
                ++p;
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p])))
                    ++p;
                pos_ = p;
            }
        }
        const std::string lit(s_.substr(start, pos_ - start));
        if (std::count(lit.begin(), lit.end(), '.') > 1 || lit == ".")
            throw ParseError("malformed number '" + lit + "'", start);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(lit.c_str(), &end);
        if (end != lit.c_str() + lit.size())
            throw ParseError("malformed number '" + lit + "'", start);
        if (!std::isfinite(v) || errno == ERANGE)
            throw ParseError("number out of range '" + lit + "'", start);
        return Expr::number(v);
    }

    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string_view name = s_.substr(start, pos_ - start);
        if (name == "x")
            return Expr::variable();
        const auto it = std::find_if(functions.begin(), functions.end(),
                                     [&](const FuncInfo& f) { return f.name == name; });
        if (it == functions.end())
            throw ParseError("unknown identifier '" + std::string(name) + "'", start);
        expect('(');
        std::vector<Expr> args;
        if (!accept(')')) {
            do
                args.push_back(expr());
            while (accept(','));
            expect(')');
        }
        if (args.size() != it->arity)
            throw ParseError(std::string(name) + " takes " + std::to_string(it->arity) + " argument(s), got " +
                                 std::to_string(args.size()),
                             start);
        return Expr::call(it->func, std::move(args));
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

} // namespace detail

inline Expr parse_expr(std::string_view text) { return detail::ExprParser(text).parse(); }

/// Fully parenthesized text that reparses to the same tree.
inline std::string to_string(const Expr& e) {
    using K = Expr::Kind;
    switch (e.kind) {
    case K::number: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", e.value);
        return buf;
    }
    case K::variable: return "x";
    case K::negate: return "(-" + to_string(e.args[0]) + ")";
    case K::call: {
        std::string out;
        for (const auto& f : functions)
            if (f.func == e.func)
                out = std::string(f.name);
        out += '(';
        for (std::size_t i = 0; i < e.args.size(); ++i)
            out += (i ? ", " : "") + to_string(e.args[i]);
        return out + ')';
    }
    default: break;
    }
    const char op = e.kind == K::add ? '+' : e.kind == K::sub ? '-' : e.kind == K::mul ? '*' : e.kind == K::div ? '/' : '^';
    return "(" + to_string(e.args[0]) + " " + op + " " + to_string(e.args[1]) + ")";
}

struct SampledBounds {
    double bound;           // M, with safety factor
    double lipschitz;       // L, with safety factor
    bool unbounded_growth;  // |f| keeps growing toward the sampling boundary
};

inline constexpr std::size_t bound_samples = 10'000;
inline constexpr double bound_safety = 1.25;

inline bool depends_on_x(const Expr& e) {
    if (e.kind == Expr::Kind::variable)
        return true;
    for (const auto& a : e.args)
        if (depends_on_x(a))
            return true;
    return false;
}

/// Sup-norm and Lipschitz bounds from 10^4 samples on [-2L, 2L], times 1.25.
/// Expressions free of x get their exact bounds (|c|, 0).
/// Throws EvaluationError if any sample is not finite.
inline SampledBounds infer_bounds(const Expr& e, double radius) {
    if (!(radius > 0.0))
        throw ParameterError("infer_bounds: radius must be positive");
    if (!depends_on_x(e)) {
        const double c = e.eval(0.0);
        if (!std::isfinite(c))
            throw EvaluationError("constant function is not finite");
        return {std::abs(c), 0.0, false};
    }
    const double lo = -2.0 * radius, hi = 2.0 * radius;
    const double h = (hi - lo) / static_cast<double>(bound_samples - 1);
    double inner = 0.0, outer = 0.0, lip = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < bound_samples; ++i) {
        const double x = i + 1 == bound_samples ? hi : lo + static_cast<double>(i) * h;
        const double v = e.eval(x);
        if (!std::isfinite(v))
            throw EvaluationError("function is not finite at x = " + std::to_string(x));
        if (std::abs(x) > 1.5 * radius)
            outer = std::max(outer, std::abs(v));
        else
            inner = std::max(inner, std::abs(v));
        if (i > 0)
            lip = std::max(lip, std::abs(v - prev) / h);
        prev = v;
    }
    const double m = std::max(inner, outer);
    return {bound_safety * m, bound_safety * lip, outer > 1.05 * inner + 1e-9};
}

} // namespace sublim
