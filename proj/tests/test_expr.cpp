#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "gcalc/expr.hpp"
#include "gcalc/rng.hpp"

using namespace gcalc;

TEST_CASE("arithmetic precedence", "[expr]") {
    auto at = [](const char* src, double t, double x) { return expr::eval(expr::parse(src), t, x); };

    CHECK(at("2+3*4", 0, 0) == 14.0);
    CHECK(at("2*x^2 - 1", 0, 3) == 17.0);
    CHECK(at("2*x + t", 1, 3) == 7.0);
    CHECK(at("(2+3)*4", 0, 0) == 20.0);
    CHECK(at("2^3^2", 0, 0) == 512.0);  // right-associative
    CHECK(at("6/3/2", 0, 0) == 1.0);    // left-associative
    CHECK(at("1 - 2 - 3", 0, 0) == -4.0);
    CHECK(at("2^-1", 0, 0) == 0.5);
    CHECK(at("exp(0)", 0, 0) == 1.0);
    CHECK(at("exp(-x^2)", 0, 0) == 1.0);
    CHECK(at("abs(-3) + sqrt(16)", 0, 0) == 7.0);
    CHECK(at("erf(0)", 0, 0) == 0.0);
    CHECK(at("sin(0) + cos(0)", 0, 0) == 1.0);
}

TEST_CASE("power binds tighter than unary minus", "[expr]") {
    CHECK(expr::eval(expr::parse("-x^2"), 0, 2) == -4.0);
    // Same AST as the explicit grouping, not (-x)^2.
    CHECK(expr::equal(expr::parse("-x^2"), expr::parse("-(x^2)")));
    CHECK_FALSE(expr::equal(expr::parse("-x^2"), expr::parse("(-x)^2")));
}

TEST_CASE("unicode minus is accepted", "[expr]") {
    // U+2212 in both unary and binary position.
    CHECK(expr::eval(expr::parse("\xe2\x88\x92x^2"), 0, 2) == -4.0);
    CHECK(expr::eval(expr::parse("1 \xe2\x88\x92 x"), 0, 3) == -2.0);
    CHECK(expr::equal(expr::parse("\xe2\x88\x92t"), expr::parse("-t")));
}

TEST_CASE("parse errors carry byte offsets", "[expr]") {
    auto message = [](const char* src) {
        try {
            expr::parse(src);
        } catch (const expr::ParseError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };

    CHECK(message("x*(1-x") == "unbalanced parenthesis at offset 6");
    CHECK(message("2*y") == "unknown identifier 'y' at offset 2");
    CHECK(message("1+2 3") == "trailing tokens at offset 4");
    CHECK(message("exp(1") == "unbalanced parenthesis at offset 5");
    CHECK(message("") == "expected expression at offset 0");
    CHECK(message("1+*2") == "expected expression at offset 2");
    // Unbalanced paren with a multi-byte minus: offsets count bytes.
    CHECK(message("x*(1\xe2\x88\x92x") == "unbalanced parenthesis at offset 8");
}

TEST_CASE("evaluation errors are located", "[expr]") {
    auto fails = [](const char* src, double t, double x) {
        try {
            expr::eval(expr::parse(src), t, x);
        } catch (const expr::EvalError&) {
            return true;
        }
        return false;
    };

    CHECK(fails("1/x", 0, 0));
    CHECK(fails("sqrt(-1)", 0, 0));
    CHECK(fails("(-1)^(1/2)", 0, 0));  // NaN power
    CHECK_FALSE(fails("1/x", 0, 2));

    // Overflow is plain IEEE evaluation, not a domain error.
    CHECK(expr::eval(expr::parse("exp(x)*exp(x)"), 0, 1e9) ==
          std::numeric_limits<double>::infinity());

    try {
        expr::eval(expr::parse("1 + 1/x"), 0, 0);
        FAIL("expected EvalError");
    } catch (const expr::EvalError& e) {
        CHECK(std::string(e.what()) == "division by zero at offset 5");
    }
}

namespace {

// Random well-formed source, depth-bounded; mirrors the grammar.
std::string random_expr(const CounterRng& rng, std::uint64_t& step, int depth) {
    auto pick = [&](int n) {
        return static_cast<int>(rng.uniform(step++, 0) * n) % n;
    };
    if (depth <= 0) {
        switch (pick(4)) {
            case 0: return std::string("t");
            case 1: return std::string("x");
            case 2: return std::to_string(pick(100));
            default: {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3f", rng.uniform(step++, 1) * 10.0);
                return std::string(buf);
            }
        }
    }
    static const char* funcs[] = {"exp", "sin", "cos", "sqrt", "abs", "erf"};
    switch (pick(8)) {
        case 0: return random_expr(rng, step, depth - 1) + "+" + random_expr(rng, step, depth - 1);
        case 1: return random_expr(rng, step, depth - 1) + "-" + random_expr(rng, step, depth - 1);
        case 2: return random_expr(rng, step, depth - 1) + "*" + random_expr(rng, step, depth - 1);
        case 3: return random_expr(rng, step, depth - 1) + "/" + random_expr(rng, step, depth - 1);
        case 4: return random_expr(rng, step, depth - 1) + "^" + std::to_string(pick(4));
        case 5: return "-" + random_expr(rng, step, depth - 1);
        case 6: return std::string(funcs[pick(6)]) + "(" + random_expr(rng, step, depth - 1) + ")";
        default: return "(" + random_expr(rng, step, depth - 1) + ")";
    }
}

}  // namespace

TEST_CASE("fuzz: well-formed sources parse, round-trip and evaluate or throw", "[expr][fuzz]") {
    CounterRng rng(0xF022, 7);
    std::uint64_t step = 0;
    int evaluated = 0, eval_errors = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string src = random_expr(rng, step, 1 + i % 6);
        expr::Ast ast;
        REQUIRE_NOTHROW(ast = expr::parse(src));

        // Round-trip: pretty-print re-parses to an identical AST.
        std::string printed = expr::to_string(ast);
        expr::Ast again = expr::parse(printed);
        REQUIRE(expr::equal(ast, again));

        double t = rng.uniform(step, 11, -2.0, 2.0);
        double x = rng.uniform(step, 12, -2.0, 2.0);
        try {
            double v1 = expr::eval(ast, t, x);
            double v2 = expr::eval(again, t, x);
            // Bit-identical across the round trip. Overflow to inf (and
            // inf - inf to NaN) is IEEE evaluation, not an error, so no
            // finiteness requirement here.
            REQUIRE(std::memcmp(&v1, &v2, sizeof v1) == 0);
            ++evaluated;
        } catch (const expr::EvalError&) {
            ++eval_errors;  // domain errors are fine; crashes are not
        }
        ++step;
    }
    CHECK(evaluated > 5000);
    CHECK(eval_errors > 0);
}

TEST_CASE("fuzz: mutated sources give a located error or parse cleanly", "[expr][fuzz]") {
    CounterRng rng(0xF023, 9);
    std::uint64_t step = 0;
    static const char junk[] = "()+-*/^abc!@ ,.";
    for (int i = 0; i < 10000; ++i) {
        std::string src = random_expr(rng, step, 1 + i % 4);
        // One random byte mutation.
        std::size_t pos = static_cast<std::size_t>(rng.uniform(step, 21) * src.size()) % src.size();
        src[pos] = junk[static_cast<std::size_t>(rng.uniform(step, 22) * (sizeof junk - 1)) %
                        (sizeof junk - 1)];
        try {
            expr::Ast ast = expr::parse(src);
            expr::eval(ast, 0.5, -0.5);
        } catch (const expr::ParseError& e) {
            REQUIRE(std::string(e.what()).find("at offset") != std::string::npos);
        } catch (const expr::EvalError&) {
        }
        ++step;
    }
}

TEST_CASE("pretty-print is deterministic and fully parenthesized", "[expr]") {
    expr::Ast a = expr::parse("2*x^2 - t/3");
    std::string s = expr::to_string(a);
    CHECK(s == expr::to_string(expr::parse(s)));
    CHECK(s.find('(') != std::string::npos);
}
