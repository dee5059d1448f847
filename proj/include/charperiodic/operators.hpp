#pragma once

// The building blocks of the integral reformulation, applied to periodic
// grid functions.
//
// Writing u = (v, w) for the left/right component groups, the system
// "u = Cu + Du + Ff" is assembled from
//
//   (Kw)_j(x,t) = c_j(0,x,t) Σ_{k≥m} r_jk(τ_j(0,x,t)) w_k(0, τ_j(0,x,t)),   j < m,
//   (Lv)_j(x,t) = c_j(1,x,t) Σ_{k<m} r_jk(τ_j(1,x,t)) v_k(1, τ_j(1,x,t)),   j ≥ m,
//   Cu = (Kw, Lv),
//   (Du)_j(x,t) = −∫_{x_j}^x d_j(ξ,x,t) Σ_{k≠j} b_jk(ξ,τ_j) u_k(ξ,τ_j) dξ,
//   (Ff)_j(x,t) = +∫_{x_j}^x d_j(ξ,x,t) f_j(ξ,τ_j) dξ,
//
// where τ_j(ξ,x,t) is the characteristic of component j through (x,t),
// c_j = exp(∫_x^ξ b_jj/a_j), d_j = c_j/a_j(ξ,τ_j), and x_j is the
// component's own boundary (0 for j < m, 1 otherwise).
//
// OperatorEngine fixes the grid and precomputes every characteristic trace
// it will need. When a component's speed and diagonal coupling are both
// t-independent the trace geometry is t-translation invariant, so one trace
// per x-column serves all Nt anchors (τ shifts by the anchor time exactly);
// otherwise a trace is stored per (x,t) node. Storage is about
// 5 · (ode_steps + 2) doubles per trace — roughly 20 KB at the default 512
// steps — so shared-column problems stay in the low megabytes while fully
// time-dependent speeds on an Nx × Nt grid cost about
// n · (Nx+1) · Nt · 20 KB.
//
// Boundary reads w_k(0,·) and v_k(1,·) use the grid's periodic cubic
// interpolation in t (boundary data drives the accuracy of C); interior
// reads u_k(ξ,τ) are bilinear. Quadrature is composite Simpson over the
// trace intervals with Hermite dense-output midpoints.
//
// apply_* methods are embarrassingly node-parallel: set_threads(N) splits
// output nodes into contiguous blocks. Every node writes only its own slot,
// so results are bitwise independent of the worker count.

#include "characteristics.hpp"
#include "detail/parallel.hpp"
#include "grid.hpp"
#include "model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace charperiodic {

class OperatorEngine {
public:
    OperatorEngine(ProblemSpec spec, int nx, int nt, int ode_steps = 512)
        : spec_(std::move(spec)), nx_(nx), nt_(nt) {
        if (nx_ < 1 || nt_ < 4)
            throw std::invalid_argument("OperatorEngine: need Nx >= 1 and Nt >= 4");
        if (ode_steps < 1)
            throw std::invalid_argument("OperatorEngine: need ode_steps >= 1");
        traces_.resize(spec_.n);
        column_shared_.resize(spec_.n);
        for (int j = 0; j < spec_.n; ++j) {
            column_shared_[j] =
                !spec_.a[j].expr.uses('t') && !spec_.b[j][j].expr.uses('t');
            const int per_column = column_shared_[j] ? 1 : nt_;
            traces_[j].reserve(static_cast<std::size_t>(nx_ + 1) * per_column);
            for (int ix = 0; ix <= nx_; ++ix) {
                const double x = static_cast<double>(ix) / nx_;
                for (int s = 0; s < per_column; ++s) {
                    const double t = column_shared_[j] ? 0.0 : kTwoPi * s / nt_;
                    traces_[j].emplace_back(
                        CharacteristicTrace(spec_, j, x, t, ode_steps, /*with_e=*/false));
                }
            }
        }
    }

    const ProblemSpec& spec() const { return spec_; }
    int nx() const { return nx_; }
    int nt() const { return nt_; }
    int threads() const { return threads_; }
    void set_threads(int n) { threads_ = n < 1 ? 1 : n; }

    /// True when component j reuses one trace per x-column (t-independent
    /// speed and diagonal coupling).
    bool column_shared(int j) const { return column_shared_[j]; }

    /// Boundary hitting data of component j's characteristic anchored at
    /// grid node (ix, it): the time where it meets the component's own
    /// boundary and the accumulated diagonal decay factor there.
    struct BoundaryPull {
        double tau_b;  ///< boundary time τ_j(x_j; x, t)
        double decay;  ///< c_j(x_j, x, t)
    };
    BoundaryPull boundary_pull(int j, int ix, int it) const {
        const View v = view(j, ix, it);
        const bool left = j < spec_.m;
        const double tau = left ? v.tr->tau.front() : v.tr->tau.back();
        const double cum = left ? v.tr->cum.front() : v.tr->cum.back();
        return {tau + v.tshift, std::exp(cum)};
    }

    /// Decompose ∫_{x_j}^x d_j(ξ,x,t) s(ξ, τ_j(ξ,x,t)) dξ at grid node
    /// (ix, it) into weighted samples: calls vis(ξ, τ, wd) so that
    /// Σ wd · s(ξ,τ) is the composite-Simpson value of the integral, with
    /// the orientation from x_j to x folded into wd.
    template <typename Visitor>
    void visit_quadrature(int j, int ix, int it, Visitor&& vis) const {
        const View v = view(j, ix, it);
        const Cached& c = *v.tr;
        const bool left = j < spec_.m;
        const std::size_t lo = left ? 0 : static_cast<std::size_t>(c.anchor);
        const std::size_t hi = left ? static_cast<std::size_t>(c.anchor) : c.xi.size() - 1;
        // The node list ascends, so summing [lo,hi) gives ∫_0^x for the left
        // group and ∫_x^1 for the right one; the latter must be negated.
        const double sign = left ? 1.0 : -1.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double h = c.xi[i + 1] - c.xi[i];
            if (h == 0.0) continue;
            // At nodes, 1/a is the stored slope; d = exp(cum) / a.
            const double d0 = std::exp(c.cum[i]) * c.slope[i];
            const double d1 = std::exp(c.cum[i + 1]) * c.slope[i + 1];
            // Midpoint values of τ and the decay exponent come from Hermite
            // dense output; the speed is evaluated exactly there.
            const double xm = c.xi[i] + 0.5 * h;
            const double tm = 0.5 * (c.tau[i] + c.tau[i + 1]) +
                              h * (c.slope[i] - c.slope[i + 1]) / 8.0 + v.tshift;
            const double cm = 0.5 * (c.cum[i] + c.cum[i + 1]) +
                              h * (c.gcum[i] - c.gcum[i + 1]) / 8.0;
            const double am = spec_.a[j](xm, tm);
            if (std::fabs(am) < spec_.eps_a) throw TraceError(j + 1, xm, tm, spec_.eps_a);
            const double w = sign * h / 6.0;
            vis(c.xi[i], c.tau[i] + v.tshift, w * d0);
            vis(xm, tm, 4.0 * w * std::exp(cm) / am);
            vis(c.xi[i + 1], c.tau[i + 1] + v.tshift, w * d1);
        }
    }

    /// Reflection pull-back onto the left group: w holds the right-group
    /// components (index 0 ↔ component m), the result holds components
    /// 0..m-1.
    PeriodicGridFunction apply_K(const PeriodicGridFunction& w) const {
        require_shape(w, spec_.n - spec_.m, "apply_K");
        PeriodicGridFunction out(spec_.m, nx_, nt_);
        for_nodes(spec_.m, [&](int j, int ix, int it) {
            const BoundaryPull bp = boundary_pull(j, ix, it);
            double s = 0.0;
            for (int k = spec_.m; k < spec_.n; ++k) {
                const Coefficient& rjk = spec_.r[j][k];
                if (rjk.is_structural_zero()) continue;
                s += rjk(0.0, bp.tau_b) * w.line_interp_t(k - spec_.m, 0, bp.tau_b);
            }
            out.at(j, ix, it) = bp.decay * s;
        });
        return out;
    }

    /// Mirrored pull-back onto the right group: v holds components 0..m-1,
    /// the result holds components m..n-1 (index 0 ↔ component m).
    PeriodicGridFunction apply_L(const PeriodicGridFunction& v) const {
        require_shape(v, spec_.m, "apply_L");
        PeriodicGridFunction out(spec_.n - spec_.m, nx_, nt_);
        for_nodes(spec_.n - spec_.m, [&](int jo, int ix, int it) {
            const int j = spec_.m + jo;
            const BoundaryPull bp = boundary_pull(j, ix, it);
            double s = 0.0;
            for (int k = 0; k < spec_.m; ++k) {
                const Coefficient& rjk = spec_.r[j][k];
                if (rjk.is_structural_zero()) continue;
                s += rjk(1.0, bp.tau_b) * v.line_interp_t(k, v.nx(), bp.tau_b);
            }
            out.at(jo, ix, it) = bp.decay * s;
        });
        return out;
    }

    /// Full reflection operator: split u = (v, w), return (Kw, Lv).
    PeriodicGridFunction apply_C(const PeriodicGridFunction& u) const {
        require_shape(u, spec_.n, "apply_C");
        const int m = spec_.m;
        PeriodicGridFunction v(m, nx_, nt_), w(spec_.n - m, nx_, nt_);
        copy_block(u, 0, v, 0, m);
        copy_block(u, m, w, 0, spec_.n - m);
        const PeriodicGridFunction kw = apply_K(w);
        const PeriodicGridFunction lv = apply_L(v);
        PeriodicGridFunction out(spec_.n, nx_, nt_);
        copy_block(kw, 0, out, 0, m);
        copy_block(lv, 0, out, m, spec_.n - m);
        return out;
    }

    /// Off-diagonal coupling integral along characteristics.
    PeriodicGridFunction apply_D(const PeriodicGridFunction& u) const {
        require_shape(u, spec_.n, "apply_D");
        PeriodicGridFunction out(spec_.n, nx_, nt_);
        std::vector<char> row_active(spec_.n, 0);
        for (int j = 0; j < spec_.n; ++j)
            for (int k = 0; k < spec_.n; ++k)
                if (k != j && !spec_.b[j][k].is_structural_zero()) row_active[j] = 1;
        for_nodes(spec_.n, [&](int j, int ix, int it) {
            if (!row_active[j]) return;
            double acc = 0.0;
            visit_quadrature(j, ix, it, [&](double xi, double tau, double wd) {
                double s = 0.0;
                for (int k = 0; k < spec_.n; ++k) {
                    if (k == j) continue;
                    const Coefficient& bjk = spec_.b[j][k];
                    if (bjk.is_structural_zero()) continue;
                    s += bjk(xi, tau) * u.interp(k, xi, tau);
                }
                acc += wd * s;
            });
            out.at(j, ix, it) = -acc;
        });
        return out;
    }

    /// Source integral along characteristics for the stored right-hand side.
    PeriodicGridFunction apply_F() const { return apply_F(spec_.f); }

    /// Source integral for explicit per-component fields.
    PeriodicGridFunction apply_F(const std::vector<Coefficient>& fields) const {
        if (static_cast<int>(fields.size()) != spec_.n)
            throw std::invalid_argument("apply_F: need one field per component");
        PeriodicGridFunction out(spec_.n, nx_, nt_);
        for_nodes(spec_.n, [&](int j, int ix, int it) {
            if (fields[j].is_structural_zero()) return;
            double acc = 0.0;
            visit_quadrature(j, ix, it, [&](double xi, double tau, double wd) {
                acc += wd * fields[j](xi, tau);
            });
            out.at(j, ix, it) = acc;
        });
        return out;
    }

private:
    struct Cached {
        std::vector<double> xi, tau, slope, cum, gcum;
        int anchor;

        explicit Cached(const CharacteristicTrace& tr)
            : xi(tr.xi_nodes()),
              tau(tr.tau_values()),
              slope(tr.slopes()),
              cum(tr.cum_c_values()),
              gcum(tr.cum_c_slopes()),
              anchor(tr.anchor_index()) {}
    };

    struct View {
        const Cached* tr;
        double tshift;
    };

    View view(int j, int ix, int it) const {
        if (column_shared_[j]) return {&traces_[j][ix], kTwoPi * it / nt_};
        return {&traces_[j][static_cast<std::size_t>(ix) * nt_ + it], 0.0};
    }

    /// Run body(j, ix, it) over comps · (Nx+1) · Nt output nodes, possibly
    /// on several workers.
    template <typename Body>
    void for_nodes(int comps, Body&& body) const {
        const std::size_t per_comp = static_cast<std::size_t>(nx_ + 1) * nt_;
        detail::parallel_for(per_comp * comps, threads_, [&](std::size_t idx) {
            const int j = static_cast<int>(idx / per_comp);
            const std::size_t rem = idx % per_comp;
            body(j, static_cast<int>(rem / nt_), static_cast<int>(rem % nt_));
        });
    }

    void require_shape(const PeriodicGridFunction& g, int comps, const char* who) const {
        if (g.n_comp() != comps || g.nx() != nx_ || g.nt() != nt_)
            throw std::invalid_argument(std::string(who) + ": grid shape mismatch");
    }

    static void copy_block(const PeriodicGridFunction& src, int src0, PeriodicGridFunction& dst,
                           int dst0, int count) {
        for (int c = 0; c < count; ++c)
            for (int i = 0; i <= dst.nx(); ++i)
                for (int l = 0; l < dst.nt(); ++l)
                    dst.at(dst0 + c, i, l) = src.at(src0 + c, i, l);
    }

    ProblemSpec spec_;
    int nx_, nt_;
    int threads_ = 1;
    std::vector<char> column_shared_;
    std::vector<std::vector<Cached>> traces_;
};

}  // namespace charperiodic
