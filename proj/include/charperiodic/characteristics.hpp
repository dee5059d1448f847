#pragma once

// Characteristic curves of the hyperbolic system, parametrized by space.
//
// The j-th characteristic through (x,t) solves
//
//   d/dxi tau_j(xi, x, t) = 1 / a_j(xi, tau_j),   tau_j(x, x, t) = t,
//
// and is integrated over all of [0,1] with a fixed-step classical
// Runge-Kutta-4 scheme (default 512 steps per unit length), with cubic
// Hermite dense output between nodes (the ODE right-hand side doubles as
// the exact slope). Along the trace two cumulative integrals are carried:
//
//   cum_c(xi) = int_x^xi b_jj / a_j          -> weight  c_j(xi,x,t) = exp(cum_c)
//   cum_e(xi) = int_x^xi (dt a_j) / a_j^2    -> partials of tau and R^1 weights
//
// both accumulated per interval with a Simpson rule whose midpoint comes
// from the dense output (O(h^4), matching the integrator). Closed forms for
// the partial derivatives of tau:
//
//   dtau/dx = -(1/a_j(x,t)) * exp(-cum_e(xi)),   dtau/dt = exp(-cum_e(xi)),
//
// where dt a_j is taken by central finite differences (step 1e-6).

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace charperiodic {

/// Thrown when a trace runs into |a_j| < eps_a (characteristic blow-up).
class TraceError : public std::runtime_error {
public:
    TraceError(int j, double xi, double tau, double floor)
        : std::runtime_error("characteristic blow-up: |a_" + std::to_string(j) + "("
                             + format_g17(xi) + "," + format_g17(tau) + ")| < "
                             + format_g17(floor)) {}
};

/// One integrated characteristic with dense output and cumulative weights.
/// Nodes cover [0,1] in increasing xi; the anchor (x,t) is always a node.
class CharacteristicTrace {
public:
    CharacteristicTrace(const ProblemSpec& spec, int j, double x, double t, int n_steps = 512,
                        bool with_e = false) {
        if (j < 0 || j >= spec.n) throw std::invalid_argument("trace: component out of range");
        if (x < -1e-12 || x > 1 + 1e-12) throw std::invalid_argument("trace: x outside [0,1]");
        if (n_steps < 1) throw std::invalid_argument("trace: n_steps must be positive");
        x = std::clamp(x, 0.0, 1.0);
        j_ = j;
        x_ = x;
        t_ = t;
        has_e_ = with_e;
        const Expr& a = spec.a[j].expr;
        const double eps = spec.eps_a;
        const double h = 1.0 / n_steps;

        auto slope_of = [&](double xi, double tau) {
            double v = a.eval(xi, tau);
            if (std::fabs(v) < eps) throw TraceError(j + 1, xi, tau, eps);
            return 1.0 / v;
        };

        // March from the anchor toward `target`, appending nodes (excluding
        // the anchor itself). The final step is shortened to land exactly on
        // the endpoint.
        auto march = [&](double target, std::vector<double>& xs, std::vector<double>& ts,
                         std::vector<double>& ss, double& anchor_slope) {
            double xi = x, tau = t;
            double k1 = slope_of(xi, tau);
            anchor_slope = k1;
            double dir = (target > x) ? 1.0 : -1.0;
            while (std::fabs(target - xi) > 1e-14) {
                double next = (std::fabs(target - xi) <= h + 1e-14) ? target : xi + dir * h;
                double dh = next - xi;
                double k2 = slope_of(xi + dh / 2, tau + dh * k1 / 2);
                double k3 = slope_of(xi + dh / 2, tau + dh * k2 / 2);
                double k4 = slope_of(next, tau + dh * k3);
                tau += dh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
                xi = next;
                k1 = slope_of(xi, tau);  // becomes next step's first stage
                xs.push_back(xi);
                ts.push_back(tau);
                ss.push_back(k1);
            }
        };

        std::vector<double> up_x, up_t, up_s, dn_x, dn_t, dn_s;
        double anchor_slope = 0.0;
        march(1.0, up_x, up_t, up_s, anchor_slope);
        march(0.0, dn_x, dn_t, dn_s, anchor_slope);

        std::size_t total = dn_x.size() + 1 + up_x.size();
        xi_.reserve(total);
        tau_.reserve(total);
        slope_.reserve(total);
        for (std::size_t i = dn_x.size(); i-- > 0;) {
            xi_.push_back(dn_x[i]);
            tau_.push_back(dn_t[i]);
            slope_.push_back(dn_s[i]);
        }
        anchor_ = static_cast<int>(xi_.size());
        xi_.push_back(x);
        tau_.push_back(t);
        slope_.push_back(anchor_slope);
        for (std::size_t i = 0; i < up_x.size(); ++i) {
            xi_.push_back(up_x[i]);
            tau_.push_back(up_t[i]);
            slope_.push_back(up_s[i]);
        }

        // Cumulative weight integrals, Simpson per interval with dense-output
        // midpoints. gc/ge store the integrands at nodes: they double as the
        // exact derivatives of the cumulatives for Hermite interpolation.
        auto a_of = [&](double xi, double tau) {
            double v = a.eval(xi, tau);
            if (std::fabs(v) < eps) throw TraceError(j + 1, xi, tau, eps);
            return v;
        };
        const Expr& bjj = spec.b[j][j].expr;
        auto gc_of = [&](double xi, double tau) { return bjj.eval(xi, tau) / a_of(xi, tau); };
        auto ge_of = [&](double xi, double tau) {
            constexpr double dt = 1e-6;
            double av = a_of(xi, tau);
            return (a.eval(xi, tau + dt) - a.eval(xi, tau - dt)) / (2 * dt) / (av * av);
        };

        std::size_t count = xi_.size();
        gc_.resize(count);
        cum_c_.assign(count, 0.0);
        for (std::size_t i = 0; i < count; ++i) gc_[i] = gc_of(xi_[i], tau_[i]);
        if (with_e) {
            ge_.resize(count);
            cum_e_.assign(count, 0.0);
            for (std::size_t i = 0; i < count; ++i) ge_[i] = ge_of(xi_[i], tau_[i]);
        }

        auto accumulate = [&](std::vector<double>& cum, const std::vector<double>& g, auto&& mid) {
            for (std::size_t i = anchor_; i + 1 < count; ++i) {
                double len = xi_[i + 1] - xi_[i];
                double xm = 0.5 * (xi_[i] + xi_[i + 1]);
                cum[i + 1] = cum[i] + len / 6.0 * (g[i] + 4 * mid(xm) + g[i + 1]);
            }
            for (std::size_t i = anchor_; i > 0; --i) {
                double len = xi_[i] - xi_[i - 1];
                double xm = 0.5 * (xi_[i] + xi_[i - 1]);
                cum[i - 1] = cum[i] - len / 6.0 * (g[i - 1] + 4 * mid(xm) + g[i]);
            }
        };
        accumulate(cum_c_, gc_, [&](double xm) { return gc_of(xm, tau_at(xm)); });
        if (with_e) accumulate(cum_e_, ge_, [&](double xm) { return ge_of(xm, tau_at(xm)); });
    }

    int component() const { return j_; }
    double anchor_x() const { return x_; }
    double anchor_t() const { return t_; }
    bool has_e() const { return has_e_; }

    const std::vector<double>& xi_nodes() const { return xi_; }
    const std::vector<double>& tau_values() const { return tau_; }
    const std::vector<double>& slopes() const { return slope_; }
    const std::vector<double>& cum_c_values() const { return cum_c_; }
    const std::vector<double>& cum_c_slopes() const { return gc_; }
    int anchor_index() const { return anchor_; }

    /// tau_j(xi, x, t) by cubic Hermite dense output.
    double tau_at(double xi) const { return hermite(tau_, slope_, xi); }

    /// int_x^xi b_jj/a_j along the characteristic.
    double cum_c_at(double xi) const { return hermite(cum_c_, gc_, xi); }

    /// int_x^xi (dt a_j)/a_j^2 along the characteristic.
    double cum_e_at(double xi) const {
        if (!has_e_) throw std::logic_error("trace built without e-integrals");
        return hermite(cum_e_, ge_, xi);
    }

    /// c_j(xi, x, t), the diagonal damping weight.
    double c_factor_at(double xi) const { return std::exp(cum_c_at(xi)); }

    // Exact node values at the domain endpoints (0 and 1 are always nodes).
    double tau_end(double endpoint) const { return endpoint == 0.0 ? tau_.front() : tau_.back(); }
    double cum_c_end(double endpoint) const {
        return endpoint == 0.0 ? cum_c_.front() : cum_c_.back();
    }
    double cum_e_end(double endpoint) const {
        if (!has_e_) throw std::logic_error("trace built without e-integrals");
        return endpoint == 0.0 ? cum_e_.front() : cum_e_.back();
    }

private:
    double hermite(const std::vector<double>& val, const std::vector<double>& der,
                   double xi) const {
        if (xi < -1e-9 || xi > 1 + 1e-9) throw std::out_of_range("trace query outside [0,1]");
        xi = std::clamp(xi, 0.0, 1.0);
        std::size_t last = xi_.size() - 1;
        if (last == 0) return val[0];
        // Nodes ascend; find the interval [xi_i, xi_{i+1}] containing xi.
        std::size_t i = static_cast<std::size_t>(
            std::upper_bound(xi_.begin(), xi_.end(), xi) - xi_.begin());
        i = (i == 0) ? 0 : i - 1;
        i = std::min(i, last - 1);

        double x0 = xi_[i], x1 = xi_[i + 1], h = x1 - x0;
        if (h <= 0) return val[i];
        double s = (xi - x0) / h;
        double s2 = s * s, s3 = s2 * s;
        return val[i] * (2 * s3 - 3 * s2 + 1) + val[i + 1] * (-2 * s3 + 3 * s2) +
               h * der[i] * (s3 - 2 * s2 + s) + h * der[i + 1] * (s3 - s2);
    }

    int j_ = 0;
    double x_ = 0.0, t_ = 0.0;
    int anchor_ = 0;
    bool has_e_ = false;
    std::vector<double> xi_, tau_, slope_;
    std::vector<double> gc_, cum_c_;
    std::vector<double> ge_, cum_e_;
};

/// Integrate the j-th characteristic through (x,t). 0-based j.
inline CharacteristicTrace trace(const ProblemSpec& spec, int j, double x, double t,
                                 int n_steps = 512, bool with_e = false) {
    return CharacteristicTrace(spec, j, x, t, n_steps, with_e);
}

/// tau_j(xi, x, t).
inline double tau(const ProblemSpec& spec, int j, double xi, double x, double t,
                  int n_steps = 512) {
    return trace(spec, j, x, t, n_steps).tau_at(xi);
}

/// d/dx tau_j(xi, x, t) by the closed form.
inline double dtau_dx(const ProblemSpec& spec, int j, double xi, double x, double t,
                      int n_steps = 512) {
    CharacteristicTrace tr(spec, j, x, t, n_steps, /*with_e=*/true);
    double a_xt = spec.a[j](x, t);
    if (std::fabs(a_xt) < spec.eps_a) throw TraceError(j + 1, x, t, spec.eps_a);
    return -std::exp(-tr.cum_e_at(xi)) / a_xt;
}

/// d/dt tau_j(xi, x, t) by the closed form.
inline double dtau_dt(const ProblemSpec& spec, int j, double xi, double x, double t,
                      int n_steps = 512) {
    CharacteristicTrace tr(spec, j, x, t, n_steps, /*with_e=*/true);
    return std::exp(-tr.cum_e_at(xi));
}

/// c_j(xi, x, t) = exp int_x^xi b_jj/a_j.
inline double c_factor(const ProblemSpec& spec, int j, double xi, double x, double t,
                       int n_steps = 512) {
    return trace(spec, j, x, t, n_steps).c_factor_at(xi);
}

/// d_j(xi, x, t) = c_j(xi, x, t) / a_j(xi, tau_j(xi, x, t)).
inline double d_factor(const ProblemSpec& spec, int j, double xi, double x, double t,
                       int n_steps = 512) {
    CharacteristicTrace tr(spec, j, x, t, n_steps);
    double a_val = spec.a[j](xi, tr.tau_at(xi));
    if (std::fabs(a_val) < spec.eps_a) throw TraceError(j + 1, xi, tr.tau_at(xi), spec.eps_a);
    return tr.c_factor_at(xi) / a_val;
}

}  // namespace charperiodic
