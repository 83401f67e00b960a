#include "sublim/expr.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace sublim;
using Catch::Matchers::WithinAbs;

namespace {

double at(std::string_view text, double x) { return parse_expr(text).eval(x); }

std::size_t error_offset(std::string_view text) {
    try {
        (void)parse_expr(text);
    } catch (const ParseError& e) {
        return e.offset();
    }
    FAIL("expected a parse error for '" << text << "'");
    return 0;
}

// Random well-formed tree with nonnegative literals.
Expr random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    std::uniform_real_distribution<double> lit(0.0, 10.0);
    switch (pick(rng)) {
    case 0: return Expr::number(std::round(lit(rng) * 1000) / 1000 + (rng() % 4 == 0 ? 1e-7 : 0.0));
    case 1: return Expr::variable();
    case 2: return Expr::unary(random_tree(rng, depth - 1));
    case 3: return Expr::binary(Expr::Kind::add, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 4: return Expr::binary(Expr::Kind::sub, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 5: return Expr::binary(Expr::Kind::mul, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 6: return Expr::binary(Expr::Kind::div, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 7: return Expr::binary(Expr::Kind::pow, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    default: {
        const auto& f = functions[rng() % functions.size()];
        std::vector<Expr> args;
        for (std::size_t i = 0; i < f.arity; ++i)
            args.push_back(random_tree(rng, depth - 1));
        return Expr::call(f.func, std::move(args));
    }
    }
}

} // namespace

TEST_CASE("evaluation examples") {
    CHECK(at("x", 3) == 3);
    CHECK(at("clamp(x^2, 0, 25)", 7) == 25);
    CHECK(at("cos(x) + 0.5*sin(2*x)", 0) == 1.0);
    CHECK(at("exp(0) + tanh(0) + abs(-2) + min(1, 2) + max(1, 2)", 0) == 6.0);
    CHECK(at("1.5e2 / 3", 0) == 50.0);
}

TEST_CASE("precedence and associativity") {
    CHECK(at("2+3*4", 0) == 14);
    CHECK(at("2^3^2", 0) == 512);
    CHECK(at("-x^2", 3) == -9);
    CHECK(at("10-4-3", 0) == 3);
    CHECK(at("64/4/2", 0) == 8);
    CHECK(at("2^-1", 0) == 0.5);
    CHECK(at("--x", 2) == 2);
    CHECK(at("(2+3)*4", 0) == 20);
    CHECK(at(" 2 *\tx ", 4) == 8);
}

TEST_CASE("errors carry byte offsets") {
    CHECK(error_offset("") == 0);
    CHECK(error_offset("1 +") == 3);
    CHECK(error_offset("(x") == 2);
    CHECK(error_offset("x )") == 2);
    CHECK(error_offset("2 * foo(x)") == 4);
    CHECK(error_offset("1 + sin(x, x)") == 4);
    CHECK(error_offset("clamp(x)") == 0);
    CHECK(error_offset("1..2") == 0);
    CHECK(error_offset("x + 1e999") == 4);
    CHECK(error_offset("3 # 4") == 2);
    CHECK_THROWS_WITH(parse_expr("y"), Catch::Matchers::ContainsSubstring("unknown identifier"));
    CHECK_THROWS_WITH(parse_expr("max(x)"), Catch::Matchers::ContainsSubstring("argument"));
}

TEST_CASE("evaluation errors") {
    CHECK_THROWS_AS(at("1/x", 0), EvaluationError);
    CHECK_THROWS_AS(at("clamp(x, 2, 1)", 0), EvaluationError);
    CHECK_NOTHROW(at("clamp(x, 1, 1)", 0));
}

TEST_CASE("deep nesting is rejected without exhausting the stack") {
    std::string deep(5000, '(');
    deep += "x";
    deep += std::string(5000, ')');
    CHECK_THROWS_AS(parse_expr(deep), ParseError);
    CHECK_THROWS_AS(parse_expr(std::string(5000, '-') + "x"), ParseError);
    std::string ok(50, '(');
    ok += "x";
    ok += std::string(50, ')');
    CHECK(parse_expr(ok) == Expr::variable());
}

TEST_CASE("pretty-print round trip on generated trees") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 5000; ++i) {
        const Expr e = random_tree(rng, 6);
        const std::string text = to_string(e);
        const Expr back = parse_expr(text);
        REQUIRE(back == e);
        REQUIRE(to_string(back) == text);
    }
}

TEST_CASE("parsing arbitrary bytes never crashes") {
    std::mt19937_64 rng(12);
    const std::string alphabet = "x0123456789.+-*/^(),e eEsincotahbmxlp_#\t";
    int parsed = 0;
    for (int i = 0; i < 20000; ++i) {
        std::string s(rng() % 24, ' ');
        for (char& c : s)
            c = rng() % 8 == 0 ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()];
        try {
            const Expr e = parse_expr(s);
            ++parsed;
            REQUIRE(parse_expr(to_string(e)) == e);
        } catch (const ParseError&) {
        }
    }
    CHECK(parsed > 0);
}

TEST_CASE("infer_bounds") {
    const auto c = infer_bounds(parse_expr("2"), 10);
    CHECK(c.bound == 2.0);
    CHECK(c.lipschitz == 0.0);
    CHECK_FALSE(c.unbounded_growth);

    const auto cs = infer_bounds(parse_expr("cos(x)"), 10);
    CHECK(cs.bound <= 1.25);
    CHECK(cs.bound >= 1.0);
    CHECK(cs.lipschitz <= 1.25);
    CHECK(cs.lipschitz >= 1.0);
    CHECK_FALSE(cs.unbounded_growth);

    const auto id = infer_bounds(parse_expr("x"), 10);
    CHECK_THAT(id.bound, WithinAbs(25.0, 1e-9));
    CHECK(id.unbounded_growth);

    CHECK_FALSE(infer_bounds(parse_expr("clamp(x^2, 0, 25)"), 10).unbounded_growth);
    CHECK_FALSE(infer_bounds(parse_expr("tanh(x)"), 10).unbounded_growth);
    CHECK_THROWS_AS(infer_bounds(parse_expr("exp(x^3)"), 10), EvaluationError);
    CHECK_THROWS_AS(infer_bounds(parse_expr("x"), 0), ParameterError);
}
