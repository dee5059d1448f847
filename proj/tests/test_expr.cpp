#include <catch2/catch_amalgamated.hpp>
#include <charperiodic/expr.hpp>

#include <cmath>
#include <random>
#include <string>

using charperiodic::EvalError;
using charperiodic::Expr;
using charperiodic::ParseError;
using Catch::Approx;

TEST_CASE("arithmetic precedence and associativity", "[expr]") {
    REQUIRE(Expr::parse("1+2*3").eval(0, 0) == 7.0);
    REQUIRE(Expr::parse("2+3*4^2").eval(0, 0) == 50.0);
    REQUIRE(Expr::parse("10-3-2").eval(0, 0) == 5.0);    // left-assoc
    REQUIRE(Expr::parse("24/4/2").eval(0, 0) == 3.0);    // left-assoc
    REQUIRE(Expr::parse("2^3^2").eval(0, 0) == 512.0);   // right-assoc: 2^(3^2)
    REQUIRE(Expr::parse("2^3^1").eval(0, 0) == 8.0);
    REQUIRE(Expr::parse("-2^2").eval(0, 0) == -4.0);     // ^ binds above unary -
    REQUIRE(Expr::parse("2^-3").eval(0, 0) == 0.125);
    REQUIRE(Expr::parse("2*-3").eval(0, 0) == -6.0);
    REQUIRE(Expr::parse("-1").eval(0, 0) == -1.0);
    REQUIRE(Expr::parse("(1+2)*3").eval(0, 0) == 9.0);
    REQUIRE(Expr::parse("  1 + 2 ").eval(0, 0) == 3.0);
}

TEST_CASE("variables, constants, functions", "[expr]") {
    REQUIRE(Expr::parse("x + sin(t)").eval(0.5, 0.0) == 0.5);
    REQUIRE(Expr::parse("exp(0) - cos(2*pi)").eval(0, 0) == Approx(0.0).margin(1e-15));
    REQUIRE(Expr::parse("pi").eval(0, 0) == Approx(3.14159265358979323846));
    REQUIRE(Expr::parse("x*t").eval(3.0, 4.0) == 12.0);
    REQUIRE(Expr::parse("abs(0-3)").eval(0, 0) == 3.0);
    REQUIRE(Expr::parse("sqrt(9)").eval(0, 0) == 3.0);
    REQUIRE(Expr::parse("log(exp(2))").eval(0, 0) == Approx(2.0));
    REQUIRE(Expr::parse("1e-6").eval(0, 0) == 1e-6);
    REQUIRE(Expr::parse("2.5e2").eval(0, 0) == 250.0);
    REQUIRE(Expr::parse("3/2").eval(0, 0) == 1.5);
}

TEST_CASE("syntax errors carry byte offsets", "[expr]") {
    auto offset_of = [](const std::string& src) -> long {
        try {
            Expr::parse(src);
        } catch (const ParseError& e) {
            return static_cast<long>(e.offset());
        }
        return -1;
    };
    REQUIRE(offset_of("") == 0);
    REQUIRE(offset_of("1+") == 2);
    REQUIRE(offset_of("(1") == 2);
    REQUIRE(offset_of("sin()") == 4);
    REQUIRE(offset_of("1 2") == 2);   // no implicit multiplication
    REQUIRE(offset_of("2x") == 1);
    REQUIRE(offset_of("x@1") == 1);

    try {
        Expr::parse("1 + foo(1)");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(std::string(e.what()).find("foo") != std::string::npos);
        REQUIRE(e.offset() == 4);
    }

    // Nesting guard fires before the stack does.
    REQUIRE_THROWS_AS(Expr::parse(std::string(500, '(') + "1"), ParseError);
}

TEST_CASE("evaluation domain errors", "[expr]") {
    REQUIRE_THROWS_AS(Expr::parse("1/(x-x)").eval(0.3, 0.0), EvalError);
    REQUIRE_THROWS_AS(Expr::parse("log(0-1)").eval(0, 0), EvalError);
    REQUIRE_THROWS_AS(Expr::parse("sqrt(0-4)").eval(0, 0), EvalError);
    REQUIRE_THROWS_AS(Expr::parse("(0-2)^0.5").eval(0, 0), EvalError);
    REQUIRE_THROWS_AS(Expr::parse("exp(1000)*exp(1000)").eval(0, 0), EvalError);
    REQUIRE(Expr::parse("log(x)").eval(1.0, 0.0) == 0.0);  // valid on its domain
}

namespace {

/// Random expression source, depth-bounded, avoiding domain violations so
/// both sides of the round-trip can be evaluated anywhere.
std::string random_source(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 3 : 11);
    std::uniform_real_distribution<double> cst(-2.0, 2.0);
    switch (pick(rng)) {
        case 0: return "x";
        case 1: return "t";
        case 2: return "pi";
        case 3: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6g", cst(rng));
            return buf;
        }
        case 4: return "(" + random_source(rng, depth - 1) + "+" + random_source(rng, depth - 1) + ")";
        case 5: return "(" + random_source(rng, depth - 1) + "-" + random_source(rng, depth - 1) + ")";
        case 6: return "(" + random_source(rng, depth - 1) + "*" + random_source(rng, depth - 1) + ")";
        case 7: return "sin(" + random_source(rng, depth - 1) + ")";
        case 8: return "cos(" + random_source(rng, depth - 1) + ")";
        case 9: return "-" + random_source(rng, depth - 1);
        case 10: return "(" + random_source(rng, depth - 1) + ")/(2+cos(" +
                        random_source(rng, depth - 1) + "))";
        default: {
            std::uniform_int_distribution<int> ex(1, 3);
            return "(" + random_source(rng, depth - 1) + ")^" + std::to_string(ex(rng));
        }
    }
}

}  // namespace

TEST_CASE("print/parse round-trip preserves values", "[expr][property]") {
    std::mt19937 rng(20240817);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::uniform_real_distribution<double> ut(0.0, 6.2831853);
    for (int trial = 0; trial < 60; ++trial) {
        std::string src = random_source(rng, 4);
        Expr original = Expr::parse(src);
        std::string printed = original.to_string();
        INFO("source: " << src << "  printed: " << printed);
        Expr reparsed = Expr::parse(printed);
        for (int i = 0; i < 100; ++i) {
            double x = ux(rng), t = ut(rng);
            REQUIRE(reparsed.eval(x, t) == Approx(original.eval(x, t)).margin(1e-12));
        }
    }
}

TEST_CASE("printer emits minimal reparsable forms", "[expr]") {
    auto round = [](const std::string& src) { return Expr::parse(src).to_string(); };
    REQUIRE(round("1+2*3") == "1+2*3");
    REQUIRE(round("(1+2)*3") == "(1+2)*3");
    REQUIRE(round("2^3^2") == "2^3^2");
    REQUIRE(round("(2^3)^2") == "(2^3)^2");
    REQUIRE(round("-(x+1)") == "-(x+1)");
    REQUIRE(round("-x^2") == "-x^2");
    REQUIRE(round("x-(t-1)") == "x-(t-1)");
    REQUIRE(round("x/(2*t)") == "x/(2*t)");
    REQUIRE(round("0.5") == "0.5");
}

TEST_CASE("substitution rewrites variables", "[expr]") {
    Expr e = Expr::parse("x^2+t");
    REQUIRE(e.substitute('t', Expr::parse("t+1")).eval(2.0, 3.0) == 8.0);
    // The replacement's own occurrences are not re-substituted.
    REQUIRE(Expr::parse("x*t").substitute('x', Expr::parse("x+1")).eval(1.0, 2.0) == 4.0);
    // Substituting an absent variable is the identity.
    REQUIRE(Expr::parse("sin(t)").substitute('x', Expr::constant(7)).eval(0.0, 0.5) ==
            Approx(std::sin(0.5)));
    // Root-level variable.
    REQUIRE(Expr::parse("t").substitute('t', Expr::parse("x*x")).eval(3.0, 0.0) == 9.0);

    Expr composed = Expr::parse("sin(t)").substitute('t', Expr::parse("t+1e-6"));
    Expr reparsed = Expr::parse(composed.to_string());
    REQUIRE(reparsed.eval(0.0, 0.25) == Approx(std::sin(0.25 + 1e-6)).margin(1e-16));
}

TEST_CASE("variable usage queries", "[expr]") {
    REQUIRE(Expr::parse("sin(t)").uses('t'));
    REQUIRE_FALSE(Expr::parse("sin(t)").uses('x'));
    REQUIRE(Expr::parse("x").uses('x'));
    REQUIRE_FALSE(Expr::constant(2.0).uses('x'));
    REQUIRE_FALSE(Expr::constant(2.0).uses('t'));
    REQUIRE_FALSE(Expr::parse("x+t").substitute('t', Expr::constant(0)).uses('t'));
    REQUIRE(Expr::parse("x+t").substitute('t', Expr::constant(0)).uses('x'));
}

TEST_CASE("expression composition operators", "[expr]") {
    Expr a = Expr::parse("2*x");
    Expr b = Expr::parse("t");
    REQUIRE((a + b).eval(1.0, 3.0) == 5.0);
    REQUIRE((a - b).eval(1.0, 3.0) == -1.0);
    REQUIRE((a * b).eval(1.0, 3.0) == 6.0);
    // Composed trees print and reparse.
    REQUIRE(Expr::parse((a * (b - Expr::constant(1))).to_string()).eval(2.0, 4.0) == 12.0);
}

TEST_CASE("derivative of polynomial and rational forms is exact", "[expr]") {
    // d/dx (x^3 - 2x + 5) = 3x^2 - 2 at sample points, exactly representable.
    const Expr p = Expr::parse("x^3-2*x+5").derivative('x');
    REQUIRE(p.eval(2.0, 0.0) == 10.0);
    REQUIRE(p.eval(0.0, 9.0) == -2.0);
    REQUIRE(p.eval(-1.0, 0.0) == 1.0);

    // d/dt of an x-only expression is identically the literal zero.
    REQUIRE(Expr::parse("x^3-2*x+5").derivative('t').to_string() == "0");
    REQUIRE(Expr::parse("sin(x)*exp(x)").derivative('t').to_string() == "0");

    // Quotient rule: d/dx (x / (1 + x)) = 1 / (1 + x)^2.
    const Expr q = Expr::parse("x/(1+x)").derivative('x');
    for (double x : {0.0, 0.5, 2.0}) {
        const double want = 1.0 / ((1.0 + x) * (1.0 + x));
        REQUIRE(std::fabs(q.eval(x, 0.0) - want) < 1e-15);
    }
}

TEST_CASE("derivative handles the full function vocabulary", "[expr]") {
    struct Probe {
        const char* source;
        char var;
        double x, t, want;
    };
    const Probe probes[] = {
        {"sin(2*t)", 't', 0.0, 0.3, 2.0 * std::cos(0.6)},
        {"cos(t)", 't', 0.0, 1.1, -std::sin(1.1)},
        {"exp(3*x)", 'x', 0.4, 0.0, 3.0 * std::exp(1.2)},
        {"log(1+x^2)", 'x', 0.7, 0.0, 1.4 / 1.49},
        {"sqrt(4+x)", 'x', 5.0, 0.0, 0.5 / 3.0},
        {"abs(x-2)", 'x', 0.5, 0.0, -1.0},
        {"abs(x-2)", 'x', 3.5, 0.0, 1.0},
        {"x^t", 't', 2.0, 3.0, 8.0 * std::log(2.0)},       // general power
        {"(1+x)^(1/2)", 'x', 3.0, 0.0, 0.25},              // literal exponent
        {"t^2*sin(x)", 't', 1.0, 2.0, 4.0 * std::sin(1.0)},
    };
    for (const Probe& pr : probes) {
        const double got = Expr::parse(pr.source).derivative(pr.var).eval(pr.x, pr.t);
        INFO(pr.source);
        REQUIRE(std::fabs(got - pr.want) < 1e-13);
    }
}

TEST_CASE("derivative agrees with divided differences on a composite", "[expr]") {
    const Expr g = Expr::parse("exp(0.3*sin(t+x^2))*(2-x)/(1+0.1*cos(t))");
    const Expr gx = g.derivative('x');
    const Expr gt = g.derivative('t');
    const double d = 1e-6;
    std::mt19937 rng(2024u);
    std::uniform_real_distribution<double> ux(0.05, 0.95), ut(0.0, 6.2);
    for (int s = 0; s < 50; ++s) {
        const double x = ux(rng), t = ut(rng);
        const double fdx = (g.eval(x + d, t) - g.eval(x - d, t)) / (2 * d);
        const double fdt = (g.eval(x, t + d) - g.eval(x, t - d)) / (2 * d);
        REQUIRE(std::fabs(gx.eval(x, t) - fdx) < 1e-8);
        REQUIRE(std::fabs(gt.eval(x, t) - fdt) < 1e-8);
    }
}

TEST_CASE("derivative output reparses to the same values", "[expr]") {
    const Expr g = Expr::parse("x^2*cos(2*t)+sqrt(1+x)*t");
    for (char var : {'x', 't'}) {
        const Expr dg = g.derivative(var);
        const Expr back = Expr::parse(dg.to_string());
        for (double x : {0.0, 0.3, 1.0})
            for (double t : {0.1, 2.7}) REQUIRE(dg.eval(x, t) == back.eval(x, t));
    }
}

TEST_CASE("derivative domain failures surface at evaluation", "[expr]") {
    // |g|' evaluates g/|g|·g', undefined where g vanishes.
    const Expr da = Expr::parse("abs(x)").derivative('x');
    REQUIRE_THROWS_AS(da.eval(0.0, 0.0), EvalError);
    REQUIRE(da.eval(2.0, 0.0) == 1.0);
}
