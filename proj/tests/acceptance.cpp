// Acceptance suite: nine numbered criteria, each printing exactly one
// PASS/FAIL line with its measured numbers. Exit 0 iff every selected
// criterion passes.
//
// Criteria 5 and 6 hold a discretized surrogate against margins that the
// underlying continuous statements suggest; where the discretization
// provably cannot reach the stated margin the line stays FAIL and the
// printed diagnostics carry the measured story (the README walks through
// both cases). Nothing here is tuned to pass.
//
// Usage: acceptance [--criterion N]

#include <charperiodic/cases.hpp>
#include <charperiodic/characteristics.hpp>
#include <charperiodic/dissipativity.hpp>
#include <charperiodic/model.hpp>
#include <charperiodic/operators.hpp>
#include <charperiodic/solver.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>
#include <string>
#include <vector>

using namespace charperiodic;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Result {
    bool pass = false;
    std::string detail;
};

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

ProblemSpec one_speed(const std::string& a_src) {
    ProblemSpec s = ProblemSpec::make(2, 1);
    s.a[0] = Coefficient::parse(a_src);
    s.a[1] = Coefficient::parse("1");
    return s;
}

PeriodicGridFunction sample_fields(const std::vector<Coefficient>& fields, int nx, int nt) {
    PeriodicGridFunction g(static_cast<int>(fields.size()), nx, nt);
    for (std::size_t c = 0; c < fields.size(); ++c)
        for (int i = 0; i <= nx; ++i)
            for (int l = 0; l < nt; ++l)
                g.at(static_cast<int>(c), i, l) = fields[c](g.x_node(i), g.t_node(l));
    return g;
}

// --------------------------------------------------------------------------
// 1. Flow identities of the characteristic tracer: shifting the anchor time
//    by one period shifts the whole curve (within 1e-8), and re-anchoring at
//    any point of the curve reproduces it (within 1e-6). Three speed
//    families, 200 random probes each, under 5 seconds total.
Result criterion1() {
    Timer timer;
    const char* families[] = {"1", "1/(1+x)", "-1+0.1*sin(t)"};
    double worst_shift = 0.0, worst_group = 0.0;
    std::mt19937 rng(2026);
    std::uniform_real_distribution<double> u01(0.0, 1.0), ut(0.0, kTwoPi);
    for (const char* family : families) {
        const ProblemSpec s = one_speed(family);
        for (int i = 0; i < 200; ++i) {
            const double xi = u01(rng), x = u01(rng), t = ut(rng);
            CharacteristicTrace tr(s, 0, x, t), shifted(s, 0, x, t + kTwoPi);
            worst_shift =
                std::fmax(worst_shift,
                          std::fabs(shifted.tau_at(xi) - (tr.tau_at(xi) + kTwoPi)));
            const double on_curve = tr.tau_at(xi);
            worst_group = std::fmax(worst_group, std::fabs(tau(s, 0, x, xi, on_curve) - t));
        }
    }
    const double elapsed = timer.seconds();
    Result r;
    r.pass = worst_shift <= 1e-8 && worst_group <= 1e-6 && elapsed < 5.0;
    r.detail = "period-shift defect " + num(worst_shift) + " (<=1e-8), re-anchoring defect " +
               num(worst_group) + " (<=1e-6), " + num(elapsed) + " s (<5)";
    return r;
}

// --------------------------------------------------------------------------
// 2. Closed-form sensitivities of the hitting time against central finite
//    differences on the time-oscillating family: relative error <= 1e-4 at
//    100 random probes.
Result criterion2() {
    const ProblemSpec s = one_speed("-1+0.1*sin(t)");
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uin(0.02, 0.98), u01(0.0, 1.0), ut(0.0, kTwoPi);
    const double delta = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double xi = u01(rng), x = uin(rng), t = ut(rng);
        const double fd_x = (tau(s, 0, xi, x + delta, t) - tau(s, 0, xi, x - delta, t)) /
                            (2 * delta);
        const double fd_t = (tau(s, 0, xi, x, t + delta) - tau(s, 0, xi, x, t - delta)) /
                            (2 * delta);
        const double rel_x =
            std::fabs(dtau_dx(s, 0, xi, x, t) - fd_x) / std::fmax(std::fabs(fd_x), 1e-12);
        const double rel_t =
            std::fabs(dtau_dt(s, 0, xi, x, t) - fd_t) / std::fmax(std::fabs(fd_t), 1e-12);
        worst = std::fmax(worst, std::fmax(rel_x, rel_t));
    }
    Result r;
    r.pass = worst <= 1e-4;
    r.detail = "worst relative derivative error " + num(worst) + " (<=1e-4, 100 probes)";
    return r;
}

// --------------------------------------------------------------------------
// 3. Contraction constants on the built-in cases: unit reflections give
//    S0 = T0 = 1, the half-strength reflections give S0 = T0 = 0.5 (both
//    within 1e-9 on the default scan grid), and no reflections at all give
//    exact zeros.
Result criterion3() {
    const DissipativityReport ones = constants(remark1_problem(2.0).spec);
    const DissipativityReport halves = constants(remark2_problem().spec);
    ProblemSpec bare = ProblemSpec::make(2, 1);
    bare.a[0] = Coefficient::parse("-1");
    bare.a[1] = Coefficient::parse("1");
    const DissipativityReport zeros = constants(bare);
    const bool ok_ones = std::fabs(ones.S0 - 1.0) <= 1e-9 && std::fabs(ones.T0 - 1.0) <= 1e-9;
    const bool ok_halves =
        std::fabs(halves.S0 - 0.5) <= 1e-9 && std::fabs(halves.T0 - 0.5) <= 1e-9;
    const bool ok_zeros = zeros.S0 == 0.0 && zeros.T0 == 0.0 && zeros.S1 == 0.0 &&
                          zeros.T1 == 0.0;
    Result r;
    r.pass = ok_ones && ok_halves && ok_zeros;
    r.detail = "unit reflections: S0=" + num(ones.S0) + " T0=" + num(ones.T0) +
               "; half reflections: S0=" + num(halves.S0) + " T0=" + num(halves.T0) +
               "; no reflections: all " +
               (ok_zeros ? std::string("exactly 0") : std::string("NONZERO"));
    return r;
}

// --------------------------------------------------------------------------
// 4. The boundary sweep is a contraction on the half-reflection example:
//    update ratios settle at <= 0.30 (the constants give 0.25) and the
//    inverted system's residual stays <= 1e-8 for 10 random right-hand
//    sides.
Result criterion4() {
    const CaseBundle bundle = remark2_problem();
    OperatorEngine eng(bundle.spec, 32, 32, 256);
    eng.set_threads(1);
    std::mt19937 rng(404);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_tail = 0.0, worst_resid = 0.0;
    bool all_converged = true, enough_ratios = true;
    for (int k = 0; k < 10; ++k) {
        PeriodicGridFunction g(2, 32, 32);
        for (double& v : g.values()) v = u(rng);
        InnerSolveStats stats;
        const PeriodicGridFunction v = invert_I_minus_C(eng, g, 1e-10, 500, &stats);
        all_converged = all_converged && stats.converged;
        if (stats.update_ratios.size() < 3) {
            enough_ratios = false;
        } else {
            for (std::size_t n = stats.update_ratios.size() - 3;
                 n < stats.update_ratios.size(); ++n)
                worst_tail = std::fmax(worst_tail, stats.update_ratios[n]);
        }
        PeriodicGridFunction resid = v;                  // (I - C)v - g
        resid.add_scaled(eng.apply_C(v), -1.0);
        resid.add_scaled(g, -1.0);
        worst_resid = std::fmax(worst_resid, resid.sup_norm());
    }
    Result r;
    r.pass = all_converged && enough_ratios && worst_tail <= 0.30 && worst_resid <= 1e-8;
    r.detail = "settled update ratio " + num(worst_tail) +
               " (<=0.30; one-round-trip constant is 0.25), worst residual " +
               num(worst_resid) + " (<=1e-8, 10 right-hand sides)";
    return r;
}

// --------------------------------------------------------------------------
// 5. The equal-speed example's explicit homogeneous family: the sampled sin
//    member's residual should drop by a factor in [1.5, 2.5] per grid
//    doubling across 32/64/128, and the singular-value probe at 32 must see
//    at least one kernel direction. The interior interpolation is second
//    order, so the measured drop sits near 4 and the first half stays red;
//    the probe half passes.
Result criterion5() {
    const CaseBundle bundle = remark2_problem();
    const int levels[] = {32, 64, 128};
    double resid[3] = {};
    for (int n = 0; n < 3; ++n) {
        OperatorEngine eng(bundle.spec, levels[n], levels[n], 512);
        eng.set_threads(1);
        resid[n] = residual(eng, sample_fields(bundle.exact, levels[n], levels[n]));
    }
    const double drop1 = resid[0] / resid[1], drop2 = resid[1] / resid[2];
    const bool ok_band = drop1 >= 1.5 && drop1 <= 2.5 && drop2 >= 1.5 && drop2 <= 2.5;

    OperatorEngine eng32(bundle.spec, 32, 32, 512);
    eng32.set_threads(1);
    const KernelProbe probe = kernel_probe(eng32, 1e-6, 20000);
    const bool ok_dim = probe.estimated_dim >= 1;

    Result r;
    r.pass = ok_band && ok_dim;
    r.detail = "family residuals " + num(resid[0]) + " / " + num(resid[1]) + " / " +
               num(resid[2]) + ", drop ratios " + num(drop1) + ", " + num(drop2) +
               " (required within [1.5,2.5]; implied orders " + num(std::log2(drop1)) +
               ", " + num(std::log2(drop2)) + "); kernel directions at 32: " +
               std::to_string(probe.estimated_dim) + " (>=1)";
    return r;
}

// --------------------------------------------------------------------------
// 6. Kernel dichotomy margins for the counter-moving pair. With the
//    measured round-trip shift equal to the period (speed 1/pi) the probe
//    must report a kernel. With shift 2 (irrational against the period) the
//    smallest relative singular value is required to clear 1e-3 — which the
//    constant pair, a homogeneous solution at every speed, makes impossible;
//    the second-smallest value is printed as the honest margin.
Result criterion6() {
    OperatorEngine eng_comm(remark1_problem(1.0 / kPi).spec, 32, 32, 512);
    eng_comm.set_threads(1);
    const KernelProbe aligned = kernel_probe(eng_comm, 1e-6, 20000);
    const bool ok_aligned = aligned.estimated_dim >= 1;

    OperatorEngine eng_inc(remark1_problem(1.0).spec, 32, 32, 512);
    eng_inc.set_threads(1);
    const KernelProbe generic = kernel_probe(eng_inc, 1e-6, 20000);
    const std::size_t count = generic.singular_values.size();
    const double top = generic.singular_values.front();
    const double smallest = generic.singular_values.back() / top;
    const double second = count >= 2 ? generic.singular_values[count - 2] / top : 0.0;
    const bool ok_margin = smallest >= 1e-3;

    Result r;
    r.pass = ok_aligned && ok_margin;
    r.detail = "period-aligned shift: kernel directions " +
               std::to_string(aligned.estimated_dim) + " (>=1); shift 2: smallest relative "
               "singular value " +
               num(smallest) + " (required >=1e-3), second smallest " + num(second) +
               " — the constant pair solves the homogeneous problem at every speed, so the "
               "bottom value sits at machine zero";
    return r;
}

// --------------------------------------------------------------------------
// 7. Decoupled components with contractive reflections: the fixed-point
//    solver finishes in one outer pass, agrees with the dense solve to
//    1e-6, and the forcing-to-solution map is linear to 1e-8 on the
//    samples.
Result criterion7() {
    ProblemSpec base = ProblemSpec::make(2, 1);
    base.a[0] = Coefficient::parse("-1");
    base.a[1] = Coefficient::parse("1");
    base.b[0][0] = Coefficient::parse("-0.5");
    base.b[1][1] = Coefficient::parse("0.3*x");
    base.r[0][1] = Coefficient::parse("0.4");
    base.r[1][0] = Coefficient::parse("0.3");

    std::mt19937 rng(1717);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    const auto smooth_field = [&]() {
        Expr e = Expr::constant(c(rng)) + Expr::constant(c(rng)) * Expr::parse("sin(t)") +
                 Expr::constant(c(rng)) * Expr::parse("cos(t)") +
                 Expr::constant(c(rng)) * Expr::parse("x*sin(2*t)") +
                 Expr::constant(c(rng)) * Expr::parse("cos(t)*x^2");
        return Coefficient::from_expr(e);
    };

    const auto solve_with = [&](const Coefficient& f0, const Coefficient& f1,
                                SolveResult& picard, SolveResult& direct) {
        ProblemSpec s = base;
        s.f = {f0, f1};
        OperatorEngine eng(s, 24, 24, 256);
        eng.set_threads(1);
        picard = solve_picard(eng, 1e-10, 100, 500);
        direct = solve_direct(eng, 1e-10, 20000);
    };

    std::vector<Coefficient> f0s, f1s;
    std::vector<PeriodicGridFunction> sols;
    bool one_pass = true, converged = true;
    double agree = 0.0;
    for (int k = 0; k < 5; ++k) {
        f0s.push_back(smooth_field());
        f1s.push_back(smooth_field());
        SolveResult pc, dr;
        solve_with(f0s.back(), f1s.back(), pc, dr);
        one_pass = one_pass && pc.outer_iters == 1;
        converged = converged && pc.converged && dr.converged;
        agree = std::fmax(agree, pc.u.sup_distance(dr.u));
        sols.push_back(pc.u);
    }

    double linear = 0.0;
    for (int pair = 0; pair < 2; ++pair) {
        const int i = 2 * pair, j = 2 * pair + 1;
        SolveResult pc, dr;
        solve_with(Coefficient::from_expr(f0s[i].expr + f0s[j].expr),
                   Coefficient::from_expr(f1s[i].expr + f1s[j].expr), pc, dr);
        converged = converged && pc.converged;
        PeriodicGridFunction sum = sols[i];
        sum.add_scaled(sols[j], 1.0);
        linear = std::fmax(linear, pc.u.sup_distance(sum));
    }
    {
        SolveResult pc, dr;
        solve_with(Coefficient::from_expr(Expr::constant(2.0) * f0s[4].expr),
                   Coefficient::from_expr(Expr::constant(2.0) * f1s[4].expr), pc, dr);
        converged = converged && pc.converged;
        PeriodicGridFunction doubled = sols[4];
        doubled.scale(2.0);
        linear = std::fmax(linear, pc.u.sup_distance(doubled));
    }

    Result r;
    r.pass = one_pass && converged && agree <= 1e-6 && linear <= 1e-8;
    r.detail = std::string("one outer pass: ") + (one_pass ? "yes" : "NO") +
               ", fixed-point vs dense " + num(agree) + " (<=1e-6), superposition defect " +
               num(linear) + " (<=1e-8, 5 random forcings)";
    return r;
}

// --------------------------------------------------------------------------
// 8. Convergence on a synthesized coupled problem with a known smooth
//    solution: the dense-solve sup error drops by >= 1.7 per doubling
//    across 12/24/48, all within two minutes.
Result criterion8() {
    Timer timer;
    ProblemSpec skeleton = ProblemSpec::make(2, 1);
    skeleton.a[0] = Coefficient::parse("-1-0.3*x");
    skeleton.a[1] = Coefficient::parse("1+0.2*x");
    skeleton.b[0][0] = Coefficient::parse("-0.2");
    skeleton.b[1][1] = Coefficient::parse("0.1");
    skeleton.b[0][1] = Coefficient::parse("0.4");
    skeleton.b[1][0] = Coefficient::parse("0.3*x");
    skeleton.r[0][1] = Coefficient::parse("1/2");
    skeleton.r[1][0] = Coefficient::parse("1/2");
    const std::vector<Coefficient> exact = {
        Coefficient::parse("(1+x^2)*(sin(t)+0.3*cos(2*t))"),
        Coefficient::parse("(2-x^3)*(sin(t)+0.3*cos(2*t))")};
    const CaseBundle bundle = manufactured_problem(skeleton, exact);

    const int levels[] = {12, 24, 48};
    double err[3] = {};
    bool converged = true;
    for (int n = 0; n < 3; ++n) {
        OperatorEngine eng(bundle.spec, levels[n], levels[n], 256);
        eng.set_threads(1);
        const SolveResult res = solve_direct(eng, 1e-8, 20000);
        converged = converged && res.converged;
        err[n] = res.u.sup_distance(sample_fields(bundle.exact, levels[n], levels[n]));
    }
    const double drop1 = err[0] / err[1], drop2 = err[1] / err[2];
    const double elapsed = timer.seconds();
    Result r;
    r.pass = converged && drop1 >= 1.7 && drop2 >= 1.7 && elapsed < 120.0;
    r.detail = "sup errors " + num(err[0]) + " / " + num(err[1]) + " / " + num(err[2]) +
               ", drop ratios " + num(drop1) + ", " + num(drop2) + " (>=1.7), " +
               num(elapsed) + " s (<120)";
    return r;
}

// --------------------------------------------------------------------------
// 9. Expression parser: a value table covering precedence, associativity,
//    functions, and every coefficient string the built-in cases use; each
//    row is also reprinted and reparsed, which must not change its value.
Result criterion9() {
    struct Row {
        std::string src;
        double x, t, want;
    };
    std::vector<Row> rows;
    const auto row = [&](std::string src, double x, double t, double want) {
        rows.push_back(Row{std::move(src), x, t, want});
    };

    // Coefficient strings from the built-in case bundles.
    row("2", 0.3, 1.0, 2.0);
    row("-2", 0.3, 1.0, -2.0);
    row("1", 0.0, 0.0, 1.0);
    row("0", 0.9, 4.0, 0.0);
    row("3/2", 0.1, 2.0, 1.5);
    row("1/2", 0.1, 2.0, 0.5);
    row("sin(t-x)", 0.25, 1.5, std::sin(1.25));
    row("(2-3*x/2)*sin(t-x)", 0.5, 2.0, (2 - 0.75) * std::sin(1.5));
    // Coefficient strings from the synthesized-convergence problem (8).
    row("-1-0.3*x", 0.5, 0.0, -1.15);
    row("1+0.2*x", 0.5, 0.0, 1.1);
    row("-0.2", 0.7, 3.0, -0.2);
    row("0.1", 0.7, 3.0, 0.1);
    row("0.4", 0.7, 3.0, 0.4);
    row("0.3*x", 0.6, 3.0, 0.18);
    row("(1+x^2)*(sin(t)+0.3*cos(2*t))", 0.5, 0.8,
        1.25 * (std::sin(0.8) + 0.3 * std::cos(1.6)));
    row("(2-x^3)*(sin(t)+0.3*cos(2*t))", 0.5, 0.8,
        (2 - 0.125) * (std::sin(0.8) + 0.3 * std::cos(1.6)));
    // Characteristic-wave strings used by the sample problems.
    row("1/pi", 0.0, 0.0, 1.0 / kPi);
    row("-1/pi", 0.0, 0.0, -1.0 / kPi);
    row("0.3", 0.0, 0.0, 0.3);
    row("-0.4", 0.0, 0.0, -0.4);
    row("sin(t-pi*x)", 0.5, 2.0, std::sin(2.0 - kPi * 0.5));
    row("sin(t+pi*x)", 0.5, 2.0, std::sin(2.0 + kPi * 0.5));
    // Additive/multiplicative precedence and left associativity.
    row("2+3*4", 0.0, 0.0, 14.0);
    row("(2+3)*4", 0.0, 0.0, 20.0);
    row("2-3-4", 0.0, 0.0, -5.0);
    row("2-3+4", 0.0, 0.0, 3.0);
    row("20/4/5", 0.0, 0.0, 1.0);
    row("1/2/2", 0.0, 0.0, 0.25);
    row("2*3+4*5", 0.0, 0.0, 26.0);
    row("x-t-1", 5.0, 2.0, 2.0);
    row("t/2/x", 4.0, 6.0, 0.75);
    // Powers bind tightest and associate right; unary minus sits below.
    row("2^3^2", 0.0, 0.0, 512.0);
    row("(2^3)^2", 0.0, 0.0, 64.0);
    row("-2^2", 0.0, 0.0, -4.0);
    row("(-2)^2", 0.0, 0.0, 4.0);
    row("-x^2", 3.0, 0.0, -9.0);
    row("2^-2", 0.0, 0.0, 0.25);
    row("x^t^0.5", 4.0, 4.0, 16.0);
    row("x*t^2", 2.0, 3.0, 18.0);
    row("2^0.5", 0.0, 0.0, std::pow(2.0, 0.5));
    // Unary minus stacking and mixed forms.
    row("--2", 0.0, 0.0, 2.0);
    row("2*-3", 0.0, 0.0, -6.0);
    row("-(x+t)", 1.0, 2.0, -3.0);
    // Functions and the builtin constant.
    row("sin(pi/2)", 0.0, 0.0, 1.0);
    row("cos(0)", 0.0, 0.0, 1.0);
    row("exp(0)", 0.0, 0.0, 1.0);
    row("log(exp(2))", 0.0, 0.0, 2.0);
    row("sqrt(16)", 0.0, 0.0, 4.0);
    row("abs(-3.5)", 0.0, 0.0, 3.5);
    row("abs(x-t)", 1.0, 3.0, 2.0);
    row("sqrt(x^2+t^2)", 3.0, 4.0, 5.0);
    row("sin(t)^2+cos(t)^2", 0.0, 0.7, 1.0);
    row("2*pi", 0.0, 0.0, kTwoPi);
    row("exp(-x)*cos(2*t)", 0.3, 1.1, std::exp(-0.3) * std::cos(2.2));
    // Scientific notation.
    row("1e-8", 0.0, 0.0, 1e-8);
    row("2.5e3", 0.0, 0.0, 2500.0);

    int failures = 0;
    std::string first_bad;
    for (const Row& rw : rows) {
        bool ok = true;
        try {
            const Expr e = Expr::parse(rw.src);
            const double got = e.eval(rw.x, rw.t);
            ok = std::fabs(got - rw.want) <= 1e-12 * std::fmax(1.0, std::fabs(rw.want));
            const Expr back = Expr::parse(e.to_string());
            ok = ok && back.eval(rw.x, rw.t) == got;
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok) {
            ++failures;
            if (first_bad.empty()) first_bad = rw.src;
        }
    }
    Result r;
    r.pass = failures == 0 && rows.size() >= 50;
    r.detail = std::to_string(rows.size()) + " rows, " + std::to_string(failures) +
               " failures" + (first_bad.empty() ? "" : " (first: '" + first_bad + "')") +
               "; each row reparsed from its printed form without value change";
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected = std::atoi(argv[++i]);
            if (selected < 1 || selected > 9) {
                std::fprintf(stderr, "acceptance: --criterion wants 1..9\n");
                return 2;
            }
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
            return 2;
        }
    }

    using Criterion = Result (*)();
    const Criterion criteria[9] = {criterion1, criterion2, criterion3, criterion4,
                                   criterion5, criterion6, criterion7, criterion8,
                                   criterion9};
    const char* names[9] = {"characteristic flow identities",
                            "closed-form hitting-time derivatives",
                            "contraction constants",
                            "boundary-sweep contraction",
                            "singular family under refinement",
                            "kernel dichotomy margins",
                            "decoupled solvability and linearity",
                            "synthesized-problem convergence",
                            "expression parser table"};

    bool all_pass = true;
    for (int n = 1; n <= 9; ++n) {
        if (selected != 0 && n != selected) continue;
        const Result r = criteria[n - 1]();
        std::printf("criterion %d (%s): %s — %s\n", n, names[n - 1],
                    r.pass ? "PASS" : "FAIL", r.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}
