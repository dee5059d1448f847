#pragma once

// Command-line front end.
//
// Subcommands operate on problem files (see problem_io.hpp for the format):
//
//   validate <file>          field sanity report (JSON); exit 0 iff passed
//   check <file>             boundary-amplification constants (JSON);
//                            exit 0 iff S0*T0 < 1
//   trace <file> --j --x --t one characteristic as CSV (xi,tau)
//   solve <file>             solve the system; JSON run report, optional
//                            grid dump; exit 0 iff converged
//   kernel <file>            singular-value probe of the discretized
//                            system (JSON); exit 0 iff no near-kernel
//   case ...                 write a built-in or synthesized problem file
//
// Every subcommand writes exactly one report to stdout, or to the path
// given with --out; nothing else goes to stdout. Exit codes: 0 success /
// condition holds, 1 condition fails or computation error, 2 usage error,
// 3 file error. Reports are byte-deterministic: fixed field order and
// 17-significant-digit reals (which is also why the JSON is emitted by the
// small writer below rather than a general serializer: numbers must format
// identically everywhere, reports included).

#include "cases.hpp"
#include "dissipativity.hpp"
#include "model.hpp"
#include "operators.hpp"
#include "problem_io.hpp"
#include "solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace charperiodic {

namespace detail {

/// Minimal ordered JSON value: members keep insertion order, reals print
/// at 17 significant digits, output is fully deterministic.
struct Json {
    enum class Kind { Bool, Int, Real, Str, Arr, Obj };
    Kind kind = Kind::Obj;
    bool b = false;
    long long i = 0;
    double d = 0.0;
    std::string s;
    std::vector<Json> items;
    std::vector<std::pair<std::string, Json>> members;

    static Json boolean(bool v) {
        Json j;
        j.kind = Kind::Bool;
        j.b = v;
        return j;
    }
    static Json integer(long long v) {
        Json j;
        j.kind = Kind::Int;
        j.i = v;
        return j;
    }
    static Json real(double v) {
        Json j;
        j.kind = Kind::Real;
        j.d = v;
        return j;
    }
    static Json str(std::string v) {
        Json j;
        j.kind = Kind::Str;
        j.s = std::move(v);
        return j;
    }
    static Json array() {
        Json j;
        j.kind = Kind::Arr;
        return j;
    }
    static Json object() {
        Json j;
        j.kind = Kind::Obj;
        return j;
    }

    void add(std::string key, Json v) { members.emplace_back(std::move(key), std::move(v)); }
    void push(Json v) { items.push_back(std::move(v)); }

    std::string dump() const {
        std::string out;
        dump_into(out, 0);
        out += '\n';
        return out;
    }

private:
    static void escape_into(std::string& out, const std::string& text) {
        out += '"';
        for (char ch : text) {
            switch (ch) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(ch) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                        out += buf;
                    } else {
                        out += ch;
                    }
            }
        }
        out += '"';
    }

    void dump_into(std::string& out, int depth) const {
        const auto indent = [&](int d) { out.append(static_cast<std::size_t>(d) * 2, ' '); };
        switch (kind) {
            case Kind::Bool: out += b ? "true" : "false"; break;
            case Kind::Int: out += std::to_string(i); break;
            case Kind::Real: out += format_g17(d); break;
            case Kind::Str: escape_into(out, s); break;
            case Kind::Arr:
                if (items.empty()) {
                    out += "[]";
                    break;
                }
                out += "[\n";
                for (std::size_t n = 0; n < items.size(); ++n) {
                    indent(depth + 1);
                    items[n].dump_into(out, depth + 1);
                    out += n + 1 < items.size() ? ",\n" : "\n";
                }
                indent(depth);
                out += ']';
                break;
            case Kind::Obj:
                if (members.empty()) {
                    out += "{}";
                    break;
                }
                out += "{\n";
                for (std::size_t n = 0; n < members.size(); ++n) {
                    indent(depth + 1);
                    escape_into(out, members[n].first);
                    out += ": ";
                    members[n].second.dump_into(out, depth + 1);
                    out += n + 1 < members.size() ? ",\n" : "\n";
                }
                indent(depth);
                out += '}';
                break;
        }
    }
};

inline Json argmax_json(const ArgMax& a) {
    Json j = Json::object();
    j.add("j", Json::integer(a.j));
    j.add("x", Json::real(a.x));
    j.add("t", Json::real(a.t));
    return j;
}

/// Write the report to `out_path`, or to stdout when the path is empty.
inline void emit_report(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::cout << payload;
        std::cout.flush();
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw LoadError(out_path, 0, "cannot open file for writing");
    f << payload;
    f.flush();
    if (!f) throw LoadError(out_path, 0, "write failure");
}

inline int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace detail

/// Parse and dispatch `args` (natural order, program name excluded).
inline int run_cli(std::vector<std::string> args) {
    CLI::App app{
        "time-periodic transport systems with boundary reflections:\n"
        "validate, analyze, and solve problem files",
        "charperiodic"};
    app.footer(
        "Exit codes: 0 success / reported condition holds, 1 condition fails\n"
        "or the computation breaks down, 2 usage error, 3 file error.");
    app.require_subcommand(1);

    std::string file, out_path;
    const auto add_common = [&](CLI::App* cmd, bool needs_file) {
        if (needs_file)
            cmd->add_option("file", file, "problem file to operate on")->required();
        cmd->add_option("--out", out_path, "write the report here instead of stdout");
    };

    CLI::App* cmd_validate =
        app.add_subcommand("validate", "sample the fields and report sign, size, and "
                                       "periodicity violations (JSON)");
    add_common(cmd_validate, true);

    CLI::App* cmd_check = app.add_subcommand(
        "check", "scan the boundary-amplification profiles and report the contraction "
                 "constants S0, T0, S1, T1 (JSON)");
    add_common(cmd_check, true);

    CLI::App* cmd_trace = app.add_subcommand(
        "trace", "integrate one characteristic through an anchor point and emit its "
                 "(xi, tau) nodes as CSV");
    add_common(cmd_trace, true);
    int trace_j = 1;
    double trace_x = 0.0, trace_t = 0.0;
    cmd_trace->add_option("--j", trace_j, "component number (1-based)")->required();
    cmd_trace->add_option("--x", trace_x, "anchor position in [0,1]")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    cmd_trace->add_option("--t", trace_t, "anchor time")->required();

    CLI::App* cmd_solve = app.add_subcommand(
        "solve", "solve the system on the configured grid; JSON run report, with the "
                 "solution grid optionally dumped to a separate file");
    add_common(cmd_solve, true);
    std::string method = "picard", grid_path, grid_format = "csv";
    int threads = detail::default_threads();
    cmd_solve->add_option("--method", method, "picard (fixed point) or direct (dense LU)")
        ->check(CLI::IsMember({"picard", "direct"}));
    cmd_solve->add_option("--grid", grid_path, "also dump the solution grid to this file");
    cmd_solve->add_option("--grid-format", grid_format, "grid dump format")
        ->check(CLI::IsMember({"csv", "binary"}));
    cmd_solve->add_option("--threads", threads, "worker threads for grid sweeps")
        ->envname("CHARPERIODIC_THREADS")
        ->check(CLI::PositiveNumber);

    CLI::App* cmd_kernel = app.add_subcommand(
        "kernel", "assemble the discretized system and report its smallest singular "
                  "values and the estimated kernel dimension (JSON)");
    add_common(cmd_kernel, true);
    int kernel_threads = detail::default_threads();
    cmd_kernel->add_option("--threads", kernel_threads, "worker threads for grid sweeps")
        ->envname("CHARPERIODIC_THREADS")
        ->check(CLI::PositiveNumber);

    CLI::App* cmd_case = app.add_subcommand(
        "case", "write one of the built-in problems (or a synthesized one) as a problem "
                "file; the file itself is the report");
    cmd_case->require_subcommand(1);
    CLI::App* case_r1 = cmd_case->add_subcommand(
        "remark1", "two counter-moving components with unit reflections and no "
                   "zero-order coupling; --alpha sets the speeds");
    double alpha = 0.0;
    case_r1->add_option("--alpha", alpha, "speed magnitude (nonzero)")->required();
    case_r1->add_option("--out", out_path, "write the report here instead of stdout");
    CLI::App* case_r2 = cmd_case->add_subcommand(
        "remark2", "equal-speed pair whose homogeneous problem keeps a one-parameter "
                   "solution family");
    case_r2->add_option("--out", out_path, "write the report here instead of stdout");
    CLI::App* case_mf = cmd_case->add_subcommand(
        "manufactured", "read a problem file with an [exact] section and synthesize the "
                        "forcing that makes those fields the solution (any existing [f] "
                        "is replaced)");
    std::string mf_file;
    case_mf->add_option("--file", mf_file, "problem file with an [exact] section")
        ->required();
    case_mf->add_option("--out", out_path, "write the report here instead of stdout");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::Success& e) {
        return app.exit(e);  // --help and friends: print and succeed
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_validate) {
            const LoadedProblem lp = load_problem_file(file);
            const ValidationReport rep =
                validate(lp.spec, lp.numerics.check_nx, lp.numerics.check_nt);
            detail::Json root = detail::Json::object();
            root.add("passed", detail::Json::boolean(rep.passed));
            root.add("grid_x", detail::Json::integer(lp.numerics.check_nx));
            root.add("grid_t", detail::Json::integer(lp.numerics.check_nt));
            detail::Json checks = detail::Json::array();
            for (const ValidationCheck& c : rep.checks) {
                detail::Json jc = detail::Json::object();
                jc.add("name", detail::Json::str(c.name));
                jc.add("j", detail::Json::integer(c.j));
                jc.add("k", detail::Json::integer(c.k));
                jc.add("x", detail::Json::real(c.x));
                jc.add("t", detail::Json::real(c.t));
                jc.add("value", detail::Json::real(c.value));
                jc.add("threshold", detail::Json::real(c.threshold));
                jc.add("ok", detail::Json::boolean(c.ok));
                checks.push(std::move(jc));
            }
            root.add("checks", std::move(checks));
            detail::emit_report(out_path, root.dump());
            return rep.passed ? 0 : 1;
        }

        if (*cmd_check) {
            const LoadedProblem lp = load_problem_file(file);
            const DissipativityReport rep = constants(
                lp.spec, lp.numerics.check_nx, lp.numerics.check_nt, lp.numerics.ode_steps);
            detail::Json root = detail::Json::object();
            root.add("S0", detail::Json::real(rep.S0));
            root.add("T0", detail::Json::real(rep.T0));
            root.add("S1", detail::Json::real(rep.S1));
            root.add("T1", detail::Json::real(rep.T1));
            root.add("cond_t8", detail::Json::boolean(rep.cond_t8));
            root.add("cond_t81", detail::Json::boolean(rep.cond_t81));
            root.add("arg_S0", detail::argmax_json(rep.arg_S0));
            root.add("arg_T0", detail::argmax_json(rep.arg_T0));
            root.add("arg_S1", detail::argmax_json(rep.arg_S1));
            root.add("arg_T1", detail::argmax_json(rep.arg_T1));
            root.add("grid_x", detail::Json::integer(rep.grid_x));
            root.add("grid_t", detail::Json::integer(rep.grid_t));
            detail::emit_report(out_path, root.dump());
            return rep.cond_t8 ? 0 : 1;
        }

        if (*cmd_trace) {
            const LoadedProblem lp = load_problem_file(file);
            if (trace_j < 1 || trace_j > lp.spec.n) {
                std::cerr << "trace: --j must be in 1.." << lp.spec.n << '\n';
                return 2;
            }
            const CharacteristicTrace tr(lp.spec, trace_j - 1, trace_x, trace_t,
                                         lp.numerics.ode_steps);
            std::string csv = "xi,tau\n";
            const std::vector<double>& xs = tr.xi_nodes();
            const std::vector<double>& ts = tr.tau_values();
            for (std::size_t n = 0; n < xs.size(); ++n)
                csv += format_g17(xs[n]) + "," + format_g17(ts[n]) + "\n";
            detail::emit_report(out_path, csv);
            return 0;
        }

        if (*cmd_solve) {
            const LoadedProblem lp = load_problem_file(file);
            OperatorEngine eng(lp.spec, lp.numerics.nx, lp.numerics.nt, lp.numerics.ode_steps);
            eng.set_threads(threads);
            detail::Json root = detail::Json::object();
            int code = 1;
            try {
                const SolveResult res =
                    method == "direct"
                        ? solve_direct(eng, lp.numerics.tol, lp.numerics.assembly_cap)
                        : solve_picard(eng, lp.numerics.tol, lp.numerics.max_outer,
                                       lp.numerics.max_inner);
                root.add("method", detail::Json::str(to_string(res.method)));
                root.add("converged", detail::Json::boolean(res.converged));
                root.add("residual", detail::Json::real(res.residual_sup));
                root.add("outer_iters", detail::Json::integer(res.outer_iters));
                root.add("inner_iters_total", detail::Json::integer(res.inner_iters_total));
                root.add("tol", detail::Json::real(lp.numerics.tol));
                root.add("Nx", detail::Json::integer(lp.numerics.nx));
                root.add("Nt", detail::Json::integer(lp.numerics.nt));
                detail::Json estimates = detail::Json::array();
                for (double c : res.contraction_estimates)
                    estimates.push(detail::Json::real(c));
                root.add("contraction_estimates", std::move(estimates));
                if (!grid_path.empty()) {
                    std::ofstream gf(grid_path, std::ios::binary);
                    if (!gf) throw LoadError(grid_path, 0, "cannot open file for writing");
                    if (grid_format == "binary")
                        res.u.write_binary(gf);
                    else
                        res.u.write_csv(gf);
                    gf.flush();
                    if (!gf) throw LoadError(grid_path, 0, "write failure");
                }
                code = res.converged ? 0 : 1;
            } catch (const SingularSystemError& e) {
                root.add("method", detail::Json::str("direct"));
                root.add("converged", detail::Json::boolean(false));
                root.add("error", detail::Json::str(e.what()));
                root.add("pivot_ratio", detail::Json::real(e.pivot_ratio()));
                std::cerr << "solve: " << e.what() << '\n';
            }
            detail::emit_report(out_path, root.dump());
            return code;
        }

        if (*cmd_kernel) {
            const LoadedProblem lp = load_problem_file(file);
            OperatorEngine eng(lp.spec, lp.numerics.nx, lp.numerics.nt, lp.numerics.ode_steps);
            eng.set_threads(kernel_threads);
            const KernelProbe probe =
                kernel_probe(eng, lp.numerics.kernel_threshold, lp.numerics.assembly_cap);
            detail::Json root = detail::Json::object();
            root.add("estimated_dim", detail::Json::integer(probe.estimated_dim));
            root.add("threshold", detail::Json::real(probe.threshold));
            root.add("Nx", detail::Json::integer(lp.numerics.nx));
            root.add("Nt", detail::Json::integer(lp.numerics.nt));
            detail::Json values = detail::Json::array();
            for (double v : probe.singular_values) values.push(detail::Json::real(v));
            root.add("singular_values", std::move(values));
            detail::emit_report(out_path, root.dump());
            return probe.estimated_dim == 0 ? 0 : 1;
        }

        if (*cmd_case) {
            if (*case_r1) {
                if (!std::isfinite(alpha) || alpha == 0.0) {
                    std::cerr << "case remark1: --alpha must be finite and nonzero\n";
                    return 2;
                }
                const CaseBundle bundle = remark1_problem(alpha);
                detail::emit_report(out_path, format_problem_file(bundle.spec, NumericsConfig{},
                                                                  bundle.exact, bundle.notes));
                return 0;
            }
            if (*case_r2) {
                const CaseBundle bundle = remark2_problem();
                detail::emit_report(out_path, format_problem_file(bundle.spec, NumericsConfig{},
                                                                  bundle.exact, bundle.notes));
                return 0;
            }
            const LoadedProblem lp = load_problem_file(mf_file);
            if (lp.exact.empty())
                throw LoadError(mf_file, 0,
                                "the manufactured case needs an [exact] section to "
                                "differentiate");
            const CaseBundle bundle = manufactured_problem(lp.spec, lp.exact);
            detail::emit_report(out_path, format_problem_file(bundle.spec, lp.numerics,
                                                              bundle.exact, bundle.notes));
            return 0;
        }
    } catch (const LoadError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;  // unreachable: require_subcommand guarantees a branch above
}

/// main()-style entry point.
inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? static_cast<std::size_t>(argc - 1) : 0);
    for (int n = 1; n < argc; ++n) args.emplace_back(argv[n]);
    return run_cli(std::move(args));
}

}  // namespace charperiodic
