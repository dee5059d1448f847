#pragma once

// Solvers for the discretized integral system  u = Cu + Du + Ff.
//
// Two routes:
//
//  * Fixed-point route. (I−C) is inverted by the reflected-boundary Neumann
//    iteration v ← K(Lv + g_w) + g_v, which contracts at rate ≈ S0·T0 when
//    the dissipativity product is below one. An outer Picard loop then feeds
//    the coupling integral back in: u ← (I−C)⁻¹(Du + Ff). The coupling is
//    not a contraction in general, so non-convergence is a reported state,
//    not an error.
//
//  * Direct route. The affine map u ↦ u − Cu − Du is assembled row by row
//    into a dense matrix (every output node is a finite linear functional
//    of the input nodes through the interpolation stencils and quadrature
//    weights — the same arithmetic the matrix-free operators perform), and
//    the system is solved by pivoted LU. A near-zero pivot ratio signals a
//    numerically singular discretization — the nontrivial-kernel branch of
//    the solvability alternative — and raises SingularSystemError.
//
// kernel_probe estimates the kernel dimension as the number of singular
// values below threshold · σ_max.

#include "operators.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace charperiodic {

/// Raised when the dense discretization is numerically singular (pivot
/// ratio below 1e-12): the homogeneous problem likely has a nontrivial
/// kernel; run kernel_probe for a quantitative look.
class SingularSystemError : public std::runtime_error {
public:
    explicit SingularSystemError(double pivot_ratio)
        : std::runtime_error("direct solve: matrix is numerically singular (pivot ratio " +
                             std::to_string(pivot_ratio) +
                             "); the problem likely has a nontrivial kernel - "
                             "run the kernel probe"),
          pivot_ratio_(pivot_ratio) {}
    double pivot_ratio() const { return pivot_ratio_; }

private:
    double pivot_ratio_;
};

enum class SolveMethod { picard, direct };

inline const char* to_string(SolveMethod m) {
    return m == SolveMethod::picard ? "picard" : "direct";
}

struct SolveResult {
    PeriodicGridFunction u;
    double residual_sup = 0.0;
    int outer_iters = 0;
    long long inner_iters_total = 0;
    bool converged = false;
    SolveMethod method = SolveMethod::picard;
    /// Sup-norm update ratios of consecutive outer iterations
    /// (length outer_iters - 1).
    std::vector<double> contraction_estimates;
};

struct InnerSolveStats {
    int iterations = 0;
    bool converged = false;
    /// Consecutive update ratios; tails toward S0·T0 under dissipativity.
    std::vector<double> update_ratios;
};

/// Neumann-style inversion of (I−C): split g = (g_v, g_w), iterate
/// v ← K(Lv + g_w) + g_v from v = g_v until the sup-norm update is ≤ tol,
/// then w = Lv + g_w. Returns (v, w); per-iteration data lands in *stats.
inline PeriodicGridFunction invert_I_minus_C(const OperatorEngine& eng,
                                             const PeriodicGridFunction& g, double tol,
                                             int max_iter, InnerSolveStats* stats = nullptr) {
    const ProblemSpec& spec = eng.spec();
    const int m = spec.m, rest = spec.n - spec.m;
    if (g.n_comp() != spec.n || g.nx() != eng.nx() || g.nt() != eng.nt())
        throw std::invalid_argument("invert_I_minus_C: grid shape mismatch");

    PeriodicGridFunction gv(m, eng.nx(), eng.nt()), gw(rest, eng.nx(), eng.nt());
    for (int c = 0; c < m; ++c)
        for (int i = 0; i <= eng.nx(); ++i)
            for (int l = 0; l < eng.nt(); ++l) gv.at(c, i, l) = g.at(c, i, l);
    for (int c = 0; c < rest; ++c)
        for (int i = 0; i <= eng.nx(); ++i)
            for (int l = 0; l < eng.nt(); ++l) gw.at(c, i, l) = g.at(m + c, i, l);

    InnerSolveStats local;
    PeriodicGridFunction v = gv;
    double prev_update = -1.0;
    for (int k = 0; k < max_iter; ++k) {
        PeriodicGridFunction lv = eng.apply_L(v);
        lv.add_scaled(gw, 1.0);
        PeriodicGridFunction next = eng.apply_K(lv);
        next.add_scaled(gv, 1.0);
        const double update = next.sup_distance(v);
        ++local.iterations;
        if (prev_update > 0.0) local.update_ratios.push_back(update / prev_update);
        prev_update = update;
        v = std::move(next);
        if (update <= tol) {
            local.converged = true;
            break;
        }
    }

    PeriodicGridFunction w = eng.apply_L(v);
    w.add_scaled(gw, 1.0);
    PeriodicGridFunction out(spec.n, eng.nx(), eng.nt());
    for (int c = 0; c < m; ++c)
        for (int i = 0; i <= eng.nx(); ++i)
            for (int l = 0; l < eng.nt(); ++l) out.at(c, i, l) = v.at(c, i, l);
    for (int c = 0; c < rest; ++c)
        for (int i = 0; i <= eng.nx(); ++i)
            for (int l = 0; l < eng.nt(); ++l) out.at(m + c, i, l) = w.at(c, i, l);
    if (stats) *stats = std::move(local);
    return out;
}

/// Defect of the integral system: sup over nodes of |u − Cu − Du − Ff|.
inline double residual(const OperatorEngine& eng, const PeriodicGridFunction& u,
                       const std::vector<Coefficient>& fields) {
    PeriodicGridFunction r = u;
    r.add_scaled(eng.apply_C(u), -1.0);
    r.add_scaled(eng.apply_D(u), -1.0);
    r.add_scaled(eng.apply_F(fields), -1.0);
    return sup_norm(r);
}

inline double residual(const OperatorEngine& eng, const PeriodicGridFunction& u) {
    return residual(eng, u, eng.spec().f);
}

/// Outer Picard iteration u ← (I−C)⁻¹(Du + Ff). Each inner inversion runs
/// at tol/10. Iteration stops when the outer sup-norm update is ≤ tol (or
/// max_outer is hit); `converged` reports whether the final residual meets
/// tol, which is the honest definition when the coupling is not
/// contractive.
inline SolveResult solve_picard(const OperatorEngine& eng, double tol = 1e-8,
                                int max_outer = 100, int max_inner = 500) {
    const double inner_tol = tol / 10.0;
    const PeriodicGridFunction ff = eng.apply_F();

    SolveResult res;
    res.method = SolveMethod::picard;

    InnerSolveStats stats;
    PeriodicGridFunction u = invert_I_minus_C(eng, ff, inner_tol, max_inner, &stats);
    res.inner_iters_total += stats.iterations;

    std::vector<double> updates;
    for (int k = 0; k < max_outer; ++k) {
        PeriodicGridFunction rhs = eng.apply_D(u);
        rhs.add_scaled(ff, 1.0);
        PeriodicGridFunction next = invert_I_minus_C(eng, rhs, inner_tol, max_inner, &stats);
        res.inner_iters_total += stats.iterations;
        const double update = next.sup_distance(u);
        updates.push_back(update);
        u = std::move(next);
        ++res.outer_iters;
        if (update <= tol) break;
    }
    for (std::size_t i = 1; i < updates.size(); ++i)
        if (updates[i - 1] > 0.0) res.contraction_estimates.push_back(updates[i] / updates[i - 1]);

    res.residual_sup = residual(eng, u);
    res.converged = res.residual_sup <= tol;
    res.u = std::move(u);
    return res;
}

/// Dense matrix of the affine map u ↦ u − Cu − Du on vectorized grids
/// (component-major, then x, then t — the grid's storage order). Rows are
/// assembled independently from the interpolation stencils and quadrature
/// weights, so the matrix reproduces the matrix-free operators to roundoff.
inline Eigen::MatrixXd assemble_dense(const OperatorEngine& eng, std::size_t cap = 20000) {
    const ProblemSpec& spec = eng.spec();
    const int NX = eng.nx(), NT = eng.nt();
    const std::size_t per_comp = static_cast<std::size_t>(NX + 1) * NT;
    const std::size_t dim = per_comp * spec.n;
    if (dim > cap)
        throw std::invalid_argument("assemble_dense: " + std::to_string(dim) +
                                    " unknowns exceed the cap of " + std::to_string(cap));

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim),
                                                  static_cast<Eigen::Index>(dim));
    const PeriodicGridFunction geom(spec.n, NX, NT);  // stencil geometry only
    auto col = [&](int k, int ix, int it) {
        return static_cast<Eigen::Index>(k * per_comp + static_cast<std::size_t>(ix) * NT + it);
    };

    detail::parallel_for(dim, eng.threads(), [&](std::size_t idx) {
        const int j = static_cast<int>(idx / per_comp);
        const std::size_t rem = idx % per_comp;
        const int ix = static_cast<int>(rem / NT);
        const int it = static_cast<int>(rem % NT);
        const Eigen::Index row = static_cast<Eigen::Index>(idx);

        // Reflection part (−C): the boundary read is a cubic stencil in t.
        const bool left = j < spec.m;
        const OperatorEngine::BoundaryPull bp = eng.boundary_pull(j, ix, it);
        const auto cst = geom.line_stencil_t(bp.tau_b);
        const int k0 = left ? spec.m : 0;
        const int k1 = left ? spec.n : spec.m;
        const int bix = left ? 0 : NX;
        const double bx = left ? 0.0 : 1.0;
        for (int k = k0; k < k1; ++k) {
            const Coefficient& rjk = spec.r[j][k];
            if (rjk.is_structural_zero()) continue;
            const double coef = bp.decay * rjk(bx, bp.tau_b);
            for (int q = 0; q < 4; ++q) A(row, col(k, bix, cst.idx[q])) -= coef * cst.w[q];
        }

        // Coupling part (−D): apply_D carries a leading minus, so the
        // quadrature weights enter this row with a plus.
        eng.visit_quadrature(j, ix, it, [&](double xi, double tau, double wd) {
            for (int k = 0; k < spec.n; ++k) {
                if (k == j) continue;
                const Coefficient& bjk = spec.b[j][k];
                if (bjk.is_structural_zero()) continue;
                const double coef = wd * bjk(xi, tau);
                const auto bs = geom.interp_stencil(xi, tau);
                A(row, col(k, bs.ix[0], bs.it[0])) += coef * bs.w[0];
                A(row, col(k, bs.ix[0], bs.it[1])) += coef * bs.w[1];
                A(row, col(k, bs.ix[1], bs.it[0])) += coef * bs.w[2];
                A(row, col(k, bs.ix[1], bs.it[1])) += coef * bs.w[3];
            }
        });
    });
    return A;
}

/// Pivoted-LU solve of the dense system (I−C−D)u = Ff. Raises
/// SingularSystemError when the pivot ratio collapses; otherwise reports
/// the matrix-free residual of the solution.
inline SolveResult solve_direct(const OperatorEngine& eng, const std::vector<Coefficient>& fields,
                                double tol = 1e-8, std::size_t cap = 20000) {
    const Eigen::MatrixXd A = assemble_dense(eng, cap);
    const Eigen::Index dim = A.rows();

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const Eigen::VectorXd udiag = lu.matrixLU().diagonal().cwiseAbs();
    const double pivot_max = udiag.maxCoeff();
    const double pivot_ratio = pivot_max > 0.0 ? udiag.minCoeff() / pivot_max : 0.0;
    if (pivot_ratio < 1e-12) throw SingularSystemError(pivot_ratio);

    const PeriodicGridFunction ff = eng.apply_F(fields);
    Eigen::Map<const Eigen::VectorXd> rhs(ff.values().data(), dim);
    const Eigen::VectorXd x = lu.solve(rhs);

    SolveResult res;
    res.method = SolveMethod::direct;
    res.outer_iters = 1;
    res.u = PeriodicGridFunction(eng.spec().n, eng.nx(), eng.nt());
    for (Eigen::Index i = 0; i < dim; ++i) res.u.values()[static_cast<std::size_t>(i)] = x(i);
    res.residual_sup = residual(eng, res.u, fields);
    res.converged = res.residual_sup <= tol;
    return res;
}

inline SolveResult solve_direct(const OperatorEngine& eng, double tol = 1e-8,
                                std::size_t cap = 20000) {
    return solve_direct(eng, eng.spec().f, tol, cap);
}

struct KernelProbe {
    std::vector<double> singular_values;  ///< descending
    double threshold = 0.0;               ///< relative to the largest value
    int estimated_dim = 0;                ///< count below threshold · σ_max
};

/// Estimate the kernel dimension of the discretized map by counting
/// relative singular values below the threshold.
inline KernelProbe kernel_probe(const OperatorEngine& eng, double threshold = 1e-6,
                                std::size_t cap = 20000) {
    const Eigen::MatrixXd A = assemble_dense(eng, cap);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    const Eigen::VectorXd& sv = svd.singularValues();

    KernelProbe probe;
    probe.threshold = threshold;
    probe.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double top = sv.size() > 0 ? sv(0) : 0.0;
    if (top == 0.0) {
        probe.estimated_dim = static_cast<int>(sv.size());
        return probe;
    }
    for (double s : probe.singular_values)
        if (s < threshold * top) ++probe.estimated_dim;
    return probe;
}

}  // namespace charperiodic
