#pragma once

// Problem data for the linear first-order hyperbolic system
//
//   d/dt u_j + a_j(x,t) d/dx u_j + sum_k b_jk(x,t) u_k = f_j(x,t),
//   x in (0,1),  u 2*pi-periodic in t,
//
// with reflection boundary conditions tying the first m components at x=0
// to the remaining n-m components and vice versa at x=1:
//
//   u_j(0,t) = sum_{k>m} r_jk(t) u_k(0,t)   (j <= m)
//   u_j(1,t) = sum_{k<=m} r_jk(t) u_k(1,t)  (j > m)
//
// plus the validation scans every consumer relies on: the speeds a_j must
// be bounded away from zero with constant sign, all fields must be
// 2*pi-periodic in t, and r must honor the block sparsity above.
//
// Indices are 0-based in code; reports and file formats use the 1-based
// numbering of the mathematics.

#include "expr.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace charperiodic {

inline constexpr double kTwoPi = 6.28318530717958647692;

/// A named scalar field on [0,1] x R: the parsed expression plus the source
/// text it came from (kept verbatim for files and reports).
struct Coefficient {
    std::string source;
    Expr expr;

    Coefficient() : source("0"), expr(Expr::constant(0.0)) {}
    Coefficient(std::string src, Expr e) : source(std::move(src)), expr(std::move(e)) {}

    static Coefficient parse(std::string_view src) {
        return Coefficient(std::string(src), Expr::parse(src));
    }
    static Coefficient constant(double v) {
        return Coefficient(format_g17(v), Expr::constant(v));
    }
    /// Wrap a composed expression; the stored source is the printed form.
    static Coefficient from_expr(const Expr& e) { return Coefficient(e.to_string(), e); }

    double operator()(double x, double t) const { return expr.eval(x, t); }
    bool is_structural_zero() const { return source == "0"; }
};

/// Full problem description. Components 0..m-1 carry their boundary
/// condition at x=0, components m..n-1 at x=1 (so characteristics of the
/// first group are traced back to the left edge, the rest to the right).
struct ProblemSpec {
    int n = 0;  ///< number of components, >= 2
    int m = 0;  ///< size of the x=0 group, 1 <= m < n

    std::vector<Coefficient> a;               ///< speeds, size n
    std::vector<std::vector<Coefficient>> b;  ///< zero-order coupling, n x n
    std::vector<std::vector<Coefficient>> r;  ///< reflection coefficients, n x n (t only)
    std::vector<Coefficient> f;               ///< right-hand side, size n

    double eps_a = 1e-6;  ///< admissible floor for |a_j|

    /// All-zero skeleton of the given shape.
    static ProblemSpec make(int n, int m) {
        if (n < 2 || m < 1 || m >= n)
            throw std::invalid_argument("ProblemSpec::make: need n >= 2 and 1 <= m < n");
        ProblemSpec s;
        s.n = n;
        s.m = m;
        s.a.assign(n, Coefficient());
        s.b.assign(n, std::vector<Coefficient>(n));
        s.r.assign(n, std::vector<Coefficient>(n));
        s.f.assign(n, Coefficient());
        return s;
    }

    /// Anchor boundary of component j: 0.0 for the x=0 group, 1.0 otherwise.
    double boundary_x(int j) const { return j < m ? 0.0 : 1.0; }

    /// Is (j,k) a structurally admissible reflection entry?
    bool reflection_slot(int j, int k) const {
        return (j < m && k >= m) || (j >= m && k < m);
    }
};

/// One validation measurement. `j`, `k` are 1-based (k == 0 when not
/// applicable); (x, t) locate the worst sample.
struct ValidationCheck {
    std::string name;
    int j = 0;
    int k = 0;
    double x = 0.0;
    double t = 0.0;
    double value = 0.0;
    double threshold = 0.0;
    bool ok = false;
};

struct ValidationReport {
    bool passed = false;
    std::vector<ValidationCheck> checks;
};

namespace detail {

/// Scan g over the inclusive-x / periodic-t sample grid, reducing with
/// `visit(x, t, value)`. Evaluation errors surface as EvalError.
template <typename F, typename V>
void scan_samples(const F& g, int sx, int st, V&& visit) {
    for (int i = 0; i < sx; ++i) {
        double x = (sx == 1) ? 0.0 : static_cast<double>(i) / (sx - 1);
        for (int l = 0; l < st; ++l) {
            double t = kTwoPi * l / st;
            visit(x, t, g(x, t));
        }
    }
}

inline ValidationCheck periodicity_check(const Coefficient& g, const char* name, int j, int k,
                                         int sx, int st) {
    ValidationCheck c{name, j, k, 0.0, 0.0, 0.0, 1e-12, true};
    try {
        scan_samples([&](double x, double t) { return std::fabs(g(x, t + kTwoPi) - g(x, t)); },
                     sx, st, [&](double x, double t, double v) {
                         if (v > c.value) { c.value = v; c.x = x; c.t = t; }
                     });
    } catch (const EvalError&) {
        c.value = std::numeric_limits<double>::quiet_NaN();
        c.ok = false;
        return c;
    }
    c.ok = c.value <= c.threshold;
    return c;
}

}  // namespace detail

/// Check admissibility of the coefficients on a (samples_x x samples_t)
/// grid: each a_j keeps one sign and |a_j| >= eps_a; every field is
/// 2*pi-periodic in t; r vanishes outside its reflection blocks.
inline ValidationReport validate(const ProblemSpec& spec, int samples_x = 64,
                                 int samples_t = 64) {
    ValidationReport report;
    report.passed = true;

    for (int j = 0; j < spec.n; ++j) {
        ValidationCheck c{"nonvanishing_a", j + 1, 0, 0.0, 0.0, 0.0, spec.eps_a, true};
        double min_abs = std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        try {
            detail::scan_samples(spec.a[j], samples_x, samples_t,
                                 [&](double x, double t, double v) {
                                     lo = std::min(lo, v);
                                     hi = std::max(hi, v);
                                     if (std::fabs(v) < min_abs) {
                                         min_abs = std::fabs(v);
                                         c.x = x;
                                         c.t = t;
                                         c.value = v;
                                     }
                                 });
            c.ok = (lo > 0.0 || hi < 0.0) && min_abs >= spec.eps_a;
        } catch (const EvalError&) {
            c.value = std::numeric_limits<double>::quiet_NaN();
            c.ok = false;
        }
        report.checks.push_back(c);
    }

    for (int j = 0; j < spec.n; ++j)
        report.checks.push_back(
            detail::periodicity_check(spec.a[j], "periodicity_a", j + 1, 0, samples_x, samples_t));
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k)
            report.checks.push_back(detail::periodicity_check(spec.b[j][k], "periodicity_b", j + 1,
                                                              k + 1, samples_x, samples_t));
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k)
            if (spec.reflection_slot(j, k))
                report.checks.push_back(detail::periodicity_check(
                    spec.r[j][k], "periodicity_r", j + 1, k + 1, 1, samples_t));
    for (int j = 0; j < spec.n; ++j)
        report.checks.push_back(
            detail::periodicity_check(spec.f[j], "periodicity_f", j + 1, 0, samples_x, samples_t));

    for (int j = 0; j < spec.n; ++j) {
        for (int k = 0; k < spec.n; ++k) {
            if (spec.reflection_slot(j, k)) continue;
            ValidationCheck c{"reflection_sparsity", j + 1, k + 1, 0.0, 0.0, 0.0, 0.0, true};
            try {
                detail::scan_samples(spec.r[j][k], 1, samples_t,
                                     [&](double x, double t, double v) {
                                         if (std::fabs(v) > std::fabs(c.value)) {
                                             c.value = v;
                                             c.x = x;
                                             c.t = t;
                                         }
                                     });
                c.ok = c.value == 0.0;
            } catch (const EvalError&) {
                c.value = std::numeric_limits<double>::quiet_NaN();
                c.ok = false;
            }
            report.checks.push_back(c);
        }
    }

    for (const ValidationCheck& c : report.checks) report.passed = report.passed && c.ok;
    return report;
}

/// Optional table of factored couplings: tilde[j][k] must be set for every
/// j != k (diagonals ignored).
using TildeTable = std::vector<std::vector<std::optional<Coefficient>>>;

/// Build the coupling matrix from its factored form
/// b_jk = tilde_b_jk * (a_k - a_j), j != k, keeping the given diagonal.
/// Composition happens on the syntax tree, so the result is exact pointwise
/// and serializes back to a plain expression string.
inline ProblemSpec assemble_b_from_tilde(const ProblemSpec& spec, const TildeTable& tilde) {
    if (static_cast<int>(tilde.size()) != spec.n)
        throw std::invalid_argument("assemble_b_from_tilde: tilde table has wrong shape");
    ProblemSpec out = spec;
    for (int j = 0; j < spec.n; ++j) {
        if (static_cast<int>(tilde[j].size()) != spec.n)
            throw std::invalid_argument("assemble_b_from_tilde: tilde table has wrong shape");
        for (int k = 0; k < spec.n; ++k) {
            if (j == k) continue;
            if (!tilde[j][k])
                throw std::invalid_argument("assemble_b_from_tilde: missing tilde entry (" +
                                            std::to_string(j + 1) + "," + std::to_string(k + 1) +
                                            ")");
            out.b[j][k] =
                Coefficient::from_expr(tilde[j][k]->expr * (spec.a[k].expr - spec.a[j].expr));
        }
    }
    return out;
}

}  // namespace charperiodic
