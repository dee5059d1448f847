#pragma once

// Boundary-reflection decay profiles and the contraction constants built
// from them.
//
// Following the characteristic of component j from (x,t) back to its
// anchoring boundary x_j (0 for the left group, 1 for the right) multiplies
// data by exp(∫_x^{x_j} b_jj/a_j dξ) and then by the total reflection
// magnitude Σ_k |r_jk| read at the boundary hitting time τ_j(x_j; x, t):
//
//     R0_j(x,t) = exp(cum_c at x_j) · Σ_{k in opposite group} |r_jk(τ_j)|.
//
// The companion profile folds in the time-compression factor of the flow,
//
//     R1_j(x,t) = R0_j(x,t) · exp(−cum_e at x_j),
//
// which reduces to R0 whenever a_j does not depend on t. The constants
//
//     S0 = sup over the left group of R0,   T0 = sup over the right group,
//     S1, T1 = the same suprema of R1,
//
// are estimated by a dense grid scan. S0·T0 < 1 means one full reflection
// round trip is a sup-norm contraction — the regime where the fixed-point
// solver converges; S1·T1 < 1 plays the same role for the differentiated
// problem. Both flags are reported, never enforced.

#include "characteristics.hpp"
#include "model.hpp"

#include <cmath>
#include <stdexcept>

namespace charperiodic {

/// Location of a scanned maximum. `j` is the 1-based component number as
/// shown in reports.
struct ArgMax {
    int j = 0;
    double x = 0.0;
    double t = 0.0;
};

struct DissipativityReport {
    double S0 = 0.0, T0 = 0.0, S1 = 0.0, T1 = 0.0;
    ArgMax arg_S0, arg_T0, arg_S1, arg_T1;
    bool cond_t8 = false;   ///< S0 * T0 < 1
    bool cond_t81 = false;  ///< S1 * T1 < 1
    int grid_x = 0, grid_t = 0;
};

namespace detail {

/// Σ |r_jk| over the group opposite to j, read at boundary time tau_b.
inline double reflection_sum(const ProblemSpec& spec, int j, double tau_b) {
    const double xb = spec.boundary_x(j);
    const int k0 = (j < spec.m) ? spec.m : 0;
    const int k1 = (j < spec.m) ? spec.n : spec.m;
    double sum = 0.0;
    for (int k = k0; k < k1; ++k) {
        const Coefficient& rjk = spec.r[j][k];
        if (!rjk.is_structural_zero()) sum += std::fabs(rjk(xb, tau_b));
    }
    return sum;
}

struct ProfilePair {
    double r0, r1;
};

/// Both profiles from one prepared trace (needs with_e for r1 ≠ r0).
inline ProfilePair profiles_from_trace(const ProblemSpec& spec, const CharacteristicTrace& tr) {
    const int j = tr.component();
    const double xb = spec.boundary_x(j);
    const double sum = reflection_sum(spec, j, tr.tau_end(xb));
    const double r0 = std::exp(tr.cum_c_end(xb)) * sum;
    const double r1 = tr.has_e() ? r0 * std::exp(-tr.cum_e_end(xb)) : r0;
    return {r0, r1};
}

/// Running maximum with scan-order-stable argmax (strict improvement only).
struct RunningMax {
    double value = -1.0;
    ArgMax arg;

    void consider(int j, double x, double t, double v) {
        if (v > value) {
            value = v;
            arg = ArgMax{j + 1, x, t};
        }
    }
    double result() const { return value < 0.0 ? 0.0 : value; }
};

}  // namespace detail

/// Decay-times-reflection profile of component j (0-based) at (x,t).
inline double r0_profile(const ProblemSpec& spec, int j, double x, double t,
                         int ode_steps = 512) {
    CharacteristicTrace tr(spec, j, x, t, ode_steps, /*with_e=*/false);
    return detail::profiles_from_trace(spec, tr).r0;
}

/// R0 times the time-compression factor exp(−cum_e at the boundary).
inline double r1_profile(const ProblemSpec& spec, int j, double x, double t,
                         int ode_steps = 512) {
    CharacteristicTrace tr(spec, j, x, t, ode_steps, /*with_e=*/true);
    return detail::profiles_from_trace(spec, tr).r1;
}

/// Estimate S0, T0, S1, T1 by scanning a uniform (grid_x+1) × grid_t grid
/// of anchors for every component. Traces are built on the fly and
/// discarded, so memory stays flat regardless of resolution.
///
/// When a_j and b_jj are both t-independent the trace geometry is
/// t-translation invariant: one trace per (j, x) provides the boundary
/// hitting delay and decay factor for the whole t-row, and R1 coincides
/// with R0. Only genuinely time-dependent speeds pay for a full per-node
/// scan.
inline DissipativityReport constants(const ProblemSpec& spec, int grid_x = 128,
                                     int grid_t = 128, int ode_steps = 512) {
    if (grid_x < 16 || grid_t < 16)
        throw std::invalid_argument("constants: scan grid must be at least 16 x 16");

    detail::RunningMax s0, t0, s1, t1;
    auto consider = [&](int j, double x, double t, double v0, double v1) {
        if (j < spec.m) {
            s0.consider(j, x, t, v0);
            s1.consider(j, x, t, v1);
        } else {
            t0.consider(j, x, t, v0);
            t1.consider(j, x, t, v1);
        }
    };

    for (int j = 0; j < spec.n; ++j) {
        const double xb = spec.boundary_x(j);
        const bool shift_invariant =
            !spec.a[j].expr.uses('t') && !spec.b[j][j].expr.uses('t');
        for (int ix = 0; ix <= grid_x; ++ix) {
            const double x = static_cast<double>(ix) / grid_x;
            if (shift_invariant) {
                CharacteristicTrace base(spec, j, x, 0.0, ode_steps, /*with_e=*/false);
                const double delay = base.tau_end(xb);
                const double decay = std::exp(base.cum_c_end(xb));
                for (int it = 0; it < grid_t; ++it) {
                    const double t = kTwoPi * it / grid_t;
                    const double v = decay * detail::reflection_sum(spec, j, t + delay);
                    consider(j, x, t, v, v);
                }
            } else {
                for (int it = 0; it < grid_t; ++it) {
                    const double t = kTwoPi * it / grid_t;
                    CharacteristicTrace tr(spec, j, x, t, ode_steps, /*with_e=*/true);
                    const auto p = detail::profiles_from_trace(spec, tr);
                    consider(j, x, t, p.r0, p.r1);
                }
            }
        }
    }

    DissipativityReport rep;
    rep.S0 = s0.result();
    rep.T0 = t0.result();
    rep.S1 = s1.result();
    rep.T1 = t1.result();
    rep.arg_S0 = s0.arg;
    rep.arg_T0 = t0.arg;
    rep.arg_S1 = s1.arg;
    rep.arg_T1 = t1.arg;
    rep.cond_t8 = rep.S0 * rep.T0 < 1.0;
    rep.cond_t81 = rep.S1 * rep.T1 < 1.0;
    rep.grid_x = grid_x;
    rep.grid_t = grid_t;
    return rep;
}

}  // namespace charperiodic
