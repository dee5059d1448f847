#pragma once

// Grid functions on [0,1] x (R / 2*pi*Z): the discrete stand-in for the
// continuous n-component periodic function space the operators act on.
//
// Storage is node values over a uniform grid, x-index 0..Nx inclusive and
// t-index 0..Nt-1 with wraparound; layout (component, x, t), t fastest.
// Interior evaluation is bilinear (periodic in t, clamped in x). Boundary
// evaluation along the lines x=0 / x=1 — where reflection operators read
// their data — uses 4-point periodic cubic (Lagrange) interpolation in t.
//
// Serialization: CSV rows (component, x, t, value) and a compact binary
// dump: magic "PGF1", little-endian uint32 header n_comp/Nx/Nt, then the
// raw 64-bit values in storage order.

#include "expr.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace charperiodic {

class PeriodicGridFunction {
public:
    PeriodicGridFunction() = default;

    PeriodicGridFunction(int n_comp, int nx, int nt)
        : n_comp_(n_comp), nx_(nx), nt_(nt),
          values_(static_cast<std::size_t>(n_comp) * (nx + 1) * nt, 0.0) {
        if (n_comp < 1 || nx < 1 || nt < 1)
            throw std::invalid_argument("PeriodicGridFunction: degenerate shape");
    }

    template <typename F>
    static PeriodicGridFunction from_function(int n_comp, int nx, int nt, F&& fn) {
        PeriodicGridFunction g(n_comp, nx, nt);
        for (int c = 0; c < n_comp; ++c)
            for (int i = 0; i <= nx; ++i)
                for (int l = 0; l < nt; ++l) g.at(c, i, l) = fn(c, g.x_node(i), g.t_node(l));
        return g;
    }

    int n_comp() const { return n_comp_; }
    int nx() const { return nx_; }
    int nt() const { return nt_; }
    std::size_t size() const { return values_.size(); }

    double x_node(int i) const { return static_cast<double>(i) / nx_; }
    double t_node(int l) const { return kTau * l / nt_; }

    /// Node access; the t index wraps modulo Nt (negative included).
    double& at(int comp, int ix, int it) { return values_[index(comp, ix, it)]; }
    double at(int comp, int ix, int it) const { return values_[index(comp, ix, it)]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Bilinear interpolation: periodic in t, clamped-linear in x.
    double interp(int comp, double x, double t) const {
        double u = std::fmin(std::fmax(x, 0.0), 1.0) * nx_;
        int i0 = static_cast<int>(u);
        if (i0 >= nx_) i0 = nx_ - 1;
        double fx = u - i0;

        auto [l0, ft] = t_locate(t);
        int l1 = (l0 + 1) % nt_;
        const double* base = values_.data() + static_cast<std::size_t>(comp) * (nx_ + 1) * nt_;
        const double* row0 = base + static_cast<std::size_t>(i0) * nt_;
        const double* row1 = row0 + nt_;
        return (1 - fx) * ((1 - ft) * row0[l0] + ft * row0[l1]) +
               fx * ((1 - ft) * row1[l0] + ft * row1[l1]);
    }

    /// Periodic cubic interpolation in t along the x-node line `ix` (used on
    /// the boundary lines ix = 0 and ix = Nx). Needs Nt >= 4.
    double line_interp_t(int comp, int ix, double t) const {
        if (nt_ < 4) throw std::logic_error("line_interp_t requires Nt >= 4");
        auto [l, f] = t_locate(t);
        const double* row = values_.data() +
                            (static_cast<std::size_t>(comp) * (nx_ + 1) + ix) * nt_;
        double vm = row[(l + nt_ - 1) % nt_];
        double v0 = row[l];
        double v1 = row[(l + 1) % nt_];
        double v2 = row[(l + 2) % nt_];
        // Lagrange cubic through nodes at offsets -1,0,1,2.
        double wm = -f * (f - 1) * (f - 2) / 6.0;
        double w0 = (f + 1) * (f - 1) * (f - 2) / 2.0;
        double w1 = -(f + 1) * f * (f - 2) / 2.0;
        double w2 = (f + 1) * f * (f - 1) / 6.0;
        return wm * vm + w0 * v0 + w1 * v1 + w2 * v2;
    }

    /// Weights and wrapped indices of line_interp_t, for assembling the same
    /// linear functional into a matrix row.
    struct CubicStencil {
        int idx[4];
        double w[4];
    };
    CubicStencil line_stencil_t(double t) const {
        auto [l, f] = t_locate(t);
        CubicStencil s;
        s.idx[0] = (l + nt_ - 1) % nt_;
        s.idx[1] = l;
        s.idx[2] = (l + 1) % nt_;
        s.idx[3] = (l + 2) % nt_;
        s.w[0] = -f * (f - 1) * (f - 2) / 6.0;
        s.w[1] = (f + 1) * (f - 1) * (f - 2) / 2.0;
        s.w[2] = -(f + 1) * f * (f - 2) / 2.0;
        s.w[3] = (f + 1) * f * (f - 1) / 6.0;
        return s;
    }

    /// Corner weights and indices of interp, for matrix assembly.
    struct BilinearStencil {
        int ix[2];
        int it[2];
        double w[4];  // (x0,t0) (x0,t1) (x1,t0) (x1,t1)
    };
    BilinearStencil interp_stencil(double x, double t) const {
        double u = std::fmin(std::fmax(x, 0.0), 1.0) * nx_;
        int i0 = static_cast<int>(u);
        if (i0 >= nx_) i0 = nx_ - 1;
        double fx = u - i0;
        auto [l0, ft] = t_locate(t);
        BilinearStencil s;
        s.ix[0] = i0;
        s.ix[1] = i0 + 1;
        s.it[0] = l0;
        s.it[1] = (l0 + 1) % nt_;
        s.w[0] = (1 - fx) * (1 - ft);
        s.w[1] = (1 - fx) * ft;
        s.w[2] = fx * (1 - ft);
        s.w[3] = fx * ft;
        return s;
    }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::fmax(m, std::fabs(v));
        return m;
    }

    void fill(double v) { values_.assign(values_.size(), v); }

    /// this += alpha * g (shapes must match).
    void add_scaled(const PeriodicGridFunction& g, double alpha) {
        require_same_shape(g);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * g.values_[i];
    }

    void scale(double alpha) {
        for (double& v : values_) v *= alpha;
    }

    /// sup |this - g|.
    double sup_distance(const PeriodicGridFunction& g) const {
        require_same_shape(g);
        double m = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i)
            m = std::fmax(m, std::fabs(values_[i] - g.values_[i]));
        return m;
    }

    bool same_shape(const PeriodicGridFunction& g) const {
        return n_comp_ == g.n_comp_ && nx_ == g.nx_ && nt_ == g.nt_;
    }

    /// CSV dump: header + one row per node, 17 significant digits.
    /// Components are numbered from 1 to match reports.
    void write_csv(std::ostream& os) const {
        os << "component,x,t,value\n";
        for (int c = 0; c < n_comp_; ++c)
            for (int i = 0; i <= nx_; ++i)
                for (int l = 0; l < nt_; ++l)
                    os << (c + 1) << ',' << format_g17(x_node(i)) << ',' << format_g17(t_node(l))
                       << ',' << format_g17(at(c, i, l)) << '\n';
    }

    /// Binary dump: "PGF1" magic, little-endian u32 n_comp/Nx/Nt, raw f64.
    void write_binary(std::ostream& os) const {
        os.write("PGF1", 4);
        write_u32(os, static_cast<std::uint32_t>(n_comp_));
        write_u32(os, static_cast<std::uint32_t>(nx_));
        write_u32(os, static_cast<std::uint32_t>(nt_));
        for (double v : values_) write_f64(os, v);
    }

    static PeriodicGridFunction read_binary(std::istream& is) {
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, "PGF1", 4) != 0)
            throw std::runtime_error("bad grid dump: missing PGF1 magic");
        std::uint32_t nc = read_u32(is), nx = read_u32(is), nt = read_u32(is);
        if (!is || nc < 1 || nx < 1 || nt < 1 || nc > 1u << 20 || nx > 1u << 20 || nt > 1u << 20)
            throw std::runtime_error("bad grid dump: implausible header");
        PeriodicGridFunction g(static_cast<int>(nc), static_cast<int>(nx), static_cast<int>(nt));
        for (double& v : g.values_) v = read_f64(is);
        if (!is) throw std::runtime_error("bad grid dump: truncated payload");
        return g;
    }

private:
    std::size_t index(int comp, int ix, int it) const {
        it %= nt_;
        if (it < 0) it += nt_;
        return (static_cast<std::size_t>(comp) * (nx_ + 1) + ix) * nt_ + it;
    }

    /// Reduce t to the base node index and fraction, robust at the seam.
    std::pair<int, double> t_locate(double t) const {
        double s = t / kTau * nt_;
        s = std::fmod(s, static_cast<double>(nt_));
        if (s < 0) s += nt_;
        int l = static_cast<int>(s);
        double f = s - l;
        if (l >= nt_) {  // s rounded up to exactly Nt (e.g. t = -1e-17)
            l = 0;
            f = 0.0;
        }
        if (f < 0) f = 0;
        return {l, f};
    }

    void require_same_shape(const PeriodicGridFunction& g) const {
        if (!same_shape(g)) throw std::invalid_argument("grid shape mismatch");
    }

    static void write_u32(std::ostream& os, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 4);
    }
    static std::uint32_t read_u32(std::istream& is) {
        unsigned char b[4] = {};
        is.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    static void write_f64(std::ostream& os, double v) {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(b), 8);
    }
    static double read_f64(std::istream& is) {
        unsigned char b[8] = {};
        is.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }

    static constexpr double kTau = 6.28318530717958647692;

    int n_comp_ = 0, nx_ = 0, nt_ = 0;
    std::vector<double> values_;
};

/// Max of |values| over all components and nodes.
inline double sup_norm(const PeriodicGridFunction& g) { return g.sup_norm(); }

}  // namespace charperiodic
