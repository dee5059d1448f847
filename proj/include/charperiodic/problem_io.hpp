#pragma once

// Plain-text problem files.
//
// Format: '#' comment lines and blank lines are ignored; '[name]' opens a
// section; entries are 'key = value'. The '[problem]' section (keys n, m)
// must come first so the tables can be sized. Coefficient sections use
// 1-based indices:
//
//   [a]        j = expr        transport speeds (required, every j)
//   [b]        j k = expr      zero-order couplings
//   [tilde_b]  j k = expr      factored couplings: b_jk = expr * (a_k - a_j);
//                              off-diagonal only, and for each pair at most
//                              one of [b] / [tilde_b] may provide an entry
//   [r]        j k = expr      boundary reflections (valid slots only)
//   [f]        j = expr        forcing
//   [exact]    j = expr        optional closed-form fields (all j or none)
//   [numerics] solver grid and tolerance settings (see NumericsConfig)
//
// Omitted coefficients are structural zeros; omitted numerics keys keep
// their defaults. Expressions use the coefficient grammar in x and t.
// format_problem_file writes the canonical form: fixed section order,
// sources verbatim, numbers at 17 significant digits — so a written file
// reloads and rewrites byte-identically.

#include "model.hpp"

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace charperiodic {

/// Solver and diagnostic settings carried by a problem file.
struct NumericsConfig {
    int nx = 64;                      ///< solve grid, x intervals
    int nt = 64;                      ///< solve grid, t nodes
    int ode_steps = 512;              ///< characteristic integration steps per unit x
    double tol = 1e-8;                ///< solver tolerance (sup norm)
    int max_outer = 100;              ///< outer fixed-point iteration cap
    int max_inner = 500;              ///< boundary-sweep iteration cap
    std::size_t assembly_cap = 20000; ///< dense-matrix unknown cap
    int check_nx = 128;               ///< dissipativity scan grid, x
    int check_nt = 128;               ///< dissipativity scan grid, t
    double kernel_threshold = 1e-6;   ///< relative singular-value threshold
};

/// Raised for any problem-file failure: I/O, grammar, expression syntax,
/// index range, or inconsistent entries. `line` is 1-based (0 when the
/// failure is not tied to a line, e.g. a missing file).
class LoadError : public std::runtime_error {
public:
    LoadError(const std::string& origin, int line, const std::string& message)
        : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
                             message),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct LoadedProblem {
    ProblemSpec spec;
    NumericsConfig numerics;
    std::vector<Coefficient> exact;  ///< empty when the file has no [exact]
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline int parse_int(std::string_view s, const std::string& origin, int line,
                     const std::string& what) {
    const std::string text(s);
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(text, &used);
    } catch (const std::exception&) {
        throw LoadError(origin, line, what + ": '" + text + "' is not an integer");
    }
    if (used != text.size())
        throw LoadError(origin, line, what + ": '" + text + "' is not an integer");
    if (v < -1000000000L || v > 1000000000L)
        throw LoadError(origin, line, what + ": '" + text + "' is out of range");
    return static_cast<int>(v);
}

inline double parse_real(std::string_view s, const std::string& origin, int line,
                         const std::string& what) {
    const std::string text(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw LoadError(origin, line, what + ": '" + text + "' is not a number");
    }
    if (used != text.size())
        throw LoadError(origin, line, what + ": '" + text + "' is not a number");
    return v;
}

inline Coefficient parse_coeff(std::string_view s, const std::string& origin, int line) {
    try {
        return Coefficient::parse(std::string(s));
    } catch (const ParseError& e) {
        throw LoadError(origin, line, std::string("expression error: ") + e.what());
    }
}

}  // namespace detail

/// Parse a problem document. `origin` names the source in error messages.
inline LoadedProblem load_problem_text(std::string_view text,
                                       const std::string& origin = "<memory>") {
    using detail::parse_coeff;
    using detail::parse_int;
    using detail::parse_real;
    using detail::trim;

    // First pass: split into (line number, section, key, value) entries.
    struct Entry {
        int line;
        std::string key, value;
    };
    std::vector<std::pair<std::string, std::vector<Entry>>> sections;
    std::vector<std::string> seen_sections;
    {
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = text.find('\n', pos);
            std::string_view raw = text.substr(
                pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
            pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
            ++line_no;
            const std::string_view s = trim(raw);
            if (s.empty() || s.front() == '#') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw LoadError(origin, line_no, "malformed section header");
                const std::string name(trim(s.substr(1, s.size() - 2)));
                for (const std::string& prev : seen_sections)
                    if (prev == name)
                        throw LoadError(origin, line_no, "duplicate section [" + name + "]");
                seen_sections.push_back(name);
                sections.emplace_back(name, std::vector<Entry>{});
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string_view::npos)
                throw LoadError(origin, line_no, "expected 'key = value'");
            if (sections.empty())
                throw LoadError(origin, line_no, "entry before any section header");
            sections.back().second.push_back(Entry{line_no, std::string(trim(s.substr(0, eq))),
                                                   std::string(trim(s.substr(eq + 1)))});
        }
    }

    if (sections.empty() || sections.front().first != "problem")
        throw LoadError(origin, 0, "the [problem] section must come first");

    // Sizes.
    int n = -1, m = -1;
    for (const auto& e : sections.front().second) {
        if (e.key == "n") {
            if (n != -1) throw LoadError(origin, e.line, "duplicate [problem] key 'n'");
            n = parse_int(e.value, origin, e.line, "n");
        } else if (e.key == "m") {
            if (m != -1) throw LoadError(origin, e.line, "duplicate [problem] key 'm'");
            m = parse_int(e.value, origin, e.line, "m");
        } else {
            throw LoadError(origin, e.line, "unknown [problem] key '" + e.key + "'");
        }
    }
    if (n < 2 || m < 1 || m >= n)
        throw LoadError(origin, 0, "need n >= 2 and 1 <= m < n in [problem]");

    LoadedProblem out;
    out.spec = ProblemSpec::make(n, m);

    const auto component_index = [&](const Entry& e) {
        const int j = parse_int(e.key, origin, e.line, "component index");
        if (j < 1 || j > n)
            throw LoadError(origin, e.line,
                            "component index " + std::to_string(j) + " outside 1.." +
                                std::to_string(n));
        return j - 1;
    };
    const auto pair_index = [&](const Entry& e, int& j, int& k) {
        const std::size_t sp = e.key.find_first_of(" \t");
        if (sp == std::string::npos)
            throw LoadError(origin, e.line, "expected two indices 'j k'");
        j = parse_int(trim(std::string_view(e.key).substr(0, sp)), origin, e.line, "row index");
        k = parse_int(trim(std::string_view(e.key).substr(sp + 1)), origin, e.line,
                      "column index");
        if (j < 1 || j > n || k < 1 || k > n)
            throw LoadError(origin, e.line, "index pair (" + std::to_string(j) + "," +
                                                std::to_string(k) + ") outside 1.." +
                                                std::to_string(n));
        --j;
        --k;
    };

    std::vector<bool> have_a(n, false), have_f(n, false), have_exact(n, false);
    std::vector<std::vector<int>> b_source(n, std::vector<int>(n, 0));  // 0 none, 1 b, 2 tilde
    std::vector<std::vector<std::optional<Coefficient>>> tilde(
        n, std::vector<std::optional<Coefficient>>(n));
    std::vector<std::vector<bool>> have_r(n, std::vector<bool>(n, false));
    std::vector<Coefficient> exact;
    bool exact_section = false;

    for (std::size_t si = 1; si < sections.size(); ++si) {
        const std::string& name = sections[si].first;
        const std::vector<Entry>& entries = sections[si].second;
        if (name == "a") {
            for (const Entry& e : entries) {
                const int j = component_index(e);
                if (have_a[j])
                    throw LoadError(origin, e.line, "duplicate [a] entry " + e.key);
                have_a[j] = true;
                out.spec.a[j] = parse_coeff(e.value, origin, e.line);
            }
        } else if (name == "b" || name == "tilde_b") {
            const bool is_tilde = name == "tilde_b";
            for (const Entry& e : entries) {
                int j = 0, k = 0;
                pair_index(e, j, k);
                if (is_tilde && j == k)
                    throw LoadError(origin, e.line,
                                    "[tilde_b] entries must be off-diagonal (the factored "
                                    "form vanishes on the diagonal)");
                if (b_source[j][k] != 0)
                    throw LoadError(origin, e.line,
                                    "coupling (" + std::to_string(j + 1) + "," +
                                        std::to_string(k + 1) +
                                        ") given more than once across [b]/[tilde_b]");
                b_source[j][k] = is_tilde ? 2 : 1;
                if (is_tilde)
                    tilde[j][k] = parse_coeff(e.value, origin, e.line);
                else
                    out.spec.b[j][k] = parse_coeff(e.value, origin, e.line);
            }
        } else if (name == "r") {
            for (const Entry& e : entries) {
                int j = 0, k = 0;
                pair_index(e, j, k);
                if (!out.spec.reflection_slot(j, k))
                    throw LoadError(origin, e.line,
                                    "reflection entry (" + std::to_string(j + 1) + "," +
                                        std::to_string(k + 1) +
                                        ") outside the coupling pattern (components 1.." +
                                        std::to_string(m) + " reflect off " +
                                        std::to_string(m + 1) + ".." + std::to_string(n) +
                                        " and vice versa)");
                if (have_r[j][k])
                    throw LoadError(origin, e.line, "duplicate [r] entry " + e.key);
                have_r[j][k] = true;
                out.spec.r[j][k] = parse_coeff(e.value, origin, e.line);
            }
        } else if (name == "f") {
            for (const Entry& e : entries) {
                const int j = component_index(e);
                if (have_f[j])
                    throw LoadError(origin, e.line, "duplicate [f] entry " + e.key);
                have_f[j] = true;
                out.spec.f[j] = parse_coeff(e.value, origin, e.line);
            }
        } else if (name == "exact") {
            exact_section = true;
            exact.assign(n, Coefficient::parse("0"));
            for (const Entry& e : entries) {
                const int j = component_index(e);
                if (have_exact[j])
                    throw LoadError(origin, e.line, "duplicate [exact] entry " + e.key);
                have_exact[j] = true;
                exact[j] = parse_coeff(e.value, origin, e.line);
            }
        } else if (name == "numerics") {
            for (const Entry& e : entries) {
                NumericsConfig& nc = out.numerics;
                if (e.key == "Nx")
                    nc.nx = parse_int(e.value, origin, e.line, "Nx");
                else if (e.key == "Nt")
                    nc.nt = parse_int(e.value, origin, e.line, "Nt");
                else if (e.key == "ode_steps")
                    nc.ode_steps = parse_int(e.value, origin, e.line, "ode_steps");
                else if (e.key == "tol")
                    nc.tol = parse_real(e.value, origin, e.line, "tol");
                else if (e.key == "max_outer")
                    nc.max_outer = parse_int(e.value, origin, e.line, "max_outer");
                else if (e.key == "max_inner")
                    nc.max_inner = parse_int(e.value, origin, e.line, "max_inner");
                else if (e.key == "assembly_cap")
                    nc.assembly_cap = static_cast<std::size_t>(
                        parse_int(e.value, origin, e.line, "assembly_cap"));
                else if (e.key == "check_Nx")
                    nc.check_nx = parse_int(e.value, origin, e.line, "check_Nx");
                else if (e.key == "check_Nt")
                    nc.check_nt = parse_int(e.value, origin, e.line, "check_Nt");
                else if (e.key == "kernel_threshold")
                    nc.kernel_threshold =
                        parse_real(e.value, origin, e.line, "kernel_threshold");
                else if (e.key == "eps_a")
                    out.spec.eps_a = parse_real(e.value, origin, e.line, "eps_a");
                else
                    throw LoadError(origin, e.line, "unknown [numerics] key '" + e.key + "'");
            }
        } else {
            throw LoadError(origin, 0, "unknown section [" + name + "]");
        }
    }

    for (int j = 0; j < n; ++j)
        if (!have_a[j])
            throw LoadError(origin, 0, "missing [a] entry for component " + std::to_string(j + 1));
    if (exact_section)
        for (int j = 0; j < n; ++j)
            if (!have_exact[j])
                throw LoadError(origin, 0,
                                "[exact] must list every component (missing " +
                                    std::to_string(j + 1) + ")");

    // Compose factored couplings now that the speeds are known.
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            if (b_source[j][k] == 2)
                out.spec.b[j][k] = Coefficient::from_expr(
                    tilde[j][k]->expr * (out.spec.a[k].expr - out.spec.a[j].expr));

    if (exact_section) out.exact = std::move(exact);
    return out;
}

/// Load a problem file from disk. Throws LoadError (with the path as the
/// origin) on any failure, including a missing or unreadable file.
inline LoadedProblem load_problem_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path, 0, "cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw LoadError(path, 0, "read failure");
    return load_problem_text(buf.str(), path);
}

/// Canonical text form: fixed section order, coefficient sources verbatim,
/// reals at 17 significant digits, structural zeros omitted. `note`, when
/// given, becomes leading '#' comment lines.
inline std::string format_problem_file(const ProblemSpec& spec, const NumericsConfig& numerics,
                                       const std::vector<Coefficient>& exact = {},
                                       const std::string& note = "") {
    std::string out;
    if (!note.empty()) {
        std::size_t start = 0;
        while (start <= note.size()) {
            const std::size_t eol = note.find('\n', start);
            const std::string line =
                note.substr(start, eol == std::string::npos ? std::string::npos : eol - start);
            out += "# " + line + "\n";
            if (eol == std::string::npos) break;
            start = eol + 1;
        }
    }
    out += "[problem]\n";
    out += "n = " + std::to_string(spec.n) + "\n";
    out += "m = " + std::to_string(spec.m) + "\n";

    out += "\n[a]\n";
    for (int j = 0; j < spec.n; ++j)
        out += std::to_string(j + 1) + " = " + spec.a[j].source + "\n";

    std::string body;
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k)
            if (!spec.b[j][k].is_structural_zero())
                body += std::to_string(j + 1) + " " + std::to_string(k + 1) + " = " +
                        spec.b[j][k].source + "\n";
    if (!body.empty()) out += "\n[b]\n" + body;

    body.clear();
    for (int j = 0; j < spec.n; ++j)
        for (int k = 0; k < spec.n; ++k)
            if (spec.reflection_slot(j, k) && !spec.r[j][k].is_structural_zero())
                body += std::to_string(j + 1) + " " + std::to_string(k + 1) + " = " +
                        spec.r[j][k].source + "\n";
    if (!body.empty()) out += "\n[r]\n" + body;

    body.clear();
    for (int j = 0; j < spec.n; ++j)
        if (!spec.f[j].is_structural_zero())
            body += std::to_string(j + 1) + " = " + spec.f[j].source + "\n";
    if (!body.empty()) out += "\n[f]\n" + body;

    if (!exact.empty()) {
        out += "\n[exact]\n";
        for (std::size_t j = 0; j < exact.size(); ++j)
            out += std::to_string(j + 1) + " = " + exact[j].source + "\n";
    }

    out += "\n[numerics]\n";
    out += "Nx = " + std::to_string(numerics.nx) + "\n";
    out += "Nt = " + std::to_string(numerics.nt) + "\n";
    out += "ode_steps = " + std::to_string(numerics.ode_steps) + "\n";
    out += "tol = " + format_g17(numerics.tol) + "\n";
    out += "max_outer = " + std::to_string(numerics.max_outer) + "\n";
    out += "max_inner = " + std::to_string(numerics.max_inner) + "\n";
    out += "assembly_cap = " + std::to_string(numerics.assembly_cap) + "\n";
    out += "check_Nx = " + std::to_string(numerics.check_nx) + "\n";
    out += "check_Nt = " + std::to_string(numerics.check_nt) + "\n";
    out += "kernel_threshold = " + format_g17(numerics.kernel_threshold) + "\n";
    out += "eps_a = " + format_g17(spec.eps_a) + "\n";
    return out;
}

/// Write the canonical form to `path`. Throws LoadError on I/O failure.
inline void write_problem_file(const std::string& path, const ProblemSpec& spec,
                               const NumericsConfig& numerics,
                               const std::vector<Coefficient>& exact = {},
                               const std::string& note = "") {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw LoadError(path, 0, "cannot open file for writing");
    outf << format_problem_file(spec, numerics, exact, note);
    outf.flush();
    if (!outf) throw LoadError(path, 0, "write failure");
}

}  // namespace charperiodic
