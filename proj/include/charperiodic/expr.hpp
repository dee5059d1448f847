#pragma once

// Arithmetic expressions in the variables x and t: parser, evaluator,
// pretty-printer, and variable substitution.
//
// Problem coefficients are given as expression strings ("−1+0.1*sin(t)"),
// so every downstream evaluation — validation scans, characteristic traces,
// operator quadrature — funnels through Expr::eval. The grammar is fixed:
//
//   expression := term { ('+'|'-') term }           left-associative
//   term       := unary { ('*'|'/') unary }         left-associative
//   unary      := '-' unary | power
//   power      := atom [ '^' unary ]                right-associative
//   atom       := number | 'x' | 't' | 'pi' | fn '(' expression ')'
//               | '(' expression ')'
//
// so '^' binds tighter than unary minus (-x^2 == -(x^2)) and there is no
// implicit multiplication. Functions: sin cos exp log abs sqrt.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace charperiodic {

/// Thrown on malformed source; offset() is the byte position of the error.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, const std::string& message)
        : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + message),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Thrown when evaluation leaves the domain (division by zero, log of a
/// non-positive value, fractional power of a negative base, any non-finite
/// intermediate result).
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& message) : std::runtime_error(message) {}
};

/// Format a double with 17 significant digits — enough to round-trip the
/// exact binary value through text. Shared by the printer, the problem-file
/// writer, and the JSON report writer.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// An immutable parsed expression. Value-semantic and cheap to copy (the
/// node arena is shared). Subtrees may be shared within one arena, so
/// substitution does not blow up the node count.
class Expr {
    enum class Op : std::uint8_t {
        Num, VarX, VarT, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Abs, Sqrt
    };

    struct Node {
        Op op;
        std::int32_t a = -1;  // first child index, if any
        std::int32_t b = -1;  // second child index, if any
        double value = 0.0;   // payload for Op::Num
    };

    struct Tree {
        std::vector<Node> nodes;
        std::int32_t root = -1;
    };

public:
    /// Parse `source`; throws ParseError on malformed input.
    static Expr parse(std::string_view source);

    /// The constant expression `v`.
    static Expr constant(double v) {
        auto tree = std::make_shared<Tree>();
        tree->nodes.push_back({Op::Num, -1, -1, v});
        tree->root = 0;
        return Expr(std::move(tree));
    }

    /// The bare variable 'x' or 't'.
    static Expr variable(char name) {
        auto tree = std::make_shared<Tree>();
        tree->nodes.push_back({name == 'x' ? Op::VarX : Op::VarT, -1, -1, 0.0});
        tree->root = 0;
        return Expr(std::move(tree));
    }

    /// Evaluate at (x, t). Throws EvalError on domain violations.
    double eval(double x, double t) const {
        double r = eval_node(tree_->root, x, t);
        if (!std::isfinite(r)) throw EvalError("expression evaluated to a non-finite value");
        return r;
    }

    /// Minimal-parenthesis source form; reparsing yields an expression with
    /// identical values everywhere.
    std::string to_string() const {
        std::string out;
        print_node(tree_->root, 0, out);
        return out;
    }

    /// Does the expression reference variable `var` ('x' or 't')?
    bool uses(char var) const {
        Op leaf = (var == 'x') ? Op::VarX : Op::VarT;
        for (const Node& n : tree_->nodes)
            if (n.op == leaf && reachable(n)) return true;
        // Arena may hold unreachable nodes only after substitution; those are
        // filtered by reachable(). For parsed trees every node is live.
        return false;
    }

    /// Exact partial derivative with respect to `var` ('x' or 't'), as an
    /// ordinary expression (reparseable via to_string). Domain edges follow
    /// evaluation: |g|' evaluates g/|g| · g' and so fails at g = 0, and a
    /// general power a^b keeps the a > 0 requirement of the original when
    /// the exponent depends on `var`.
    Expr derivative(char var) const {
        auto tree = std::make_shared<Tree>();
        tree->nodes = tree_->nodes;  // originals keep their indices
        Differ dif{*tree, (var == 'x') ? Op::VarX : Op::VarT,
                   std::vector<std::int32_t>(tree_->nodes.size(), -1)};
        tree->root = dif.d(tree_->root);
        return Expr(std::move(tree));
    }

    /// Replace every occurrence of `var` by `replacement` (capture-avoiding
    /// trivially: there are no binders). Returns a new expression.
    Expr substitute(char var, const Expr& replacement) const {
        Op leaf = (var == 'x') ? Op::VarX : Op::VarT;
        auto tree = std::make_shared<Tree>();
        tree->nodes = replacement.tree_->nodes;
        std::int32_t repl_root = replacement.tree_->root;
        std::int32_t offset = static_cast<std::int32_t>(tree->nodes.size());
        for (Node n : tree_->nodes) {
            if (n.a >= 0) n.a += offset;
            if (n.b >= 0) n.b += offset;
            tree->nodes.push_back(n);
        }
        // Redirect leaves: nodes of the copied tree that are `leaf` become
        // aliases of the replacement root via their parents.
        for (std::size_t i = offset; i < tree->nodes.size(); ++i) {
            Node& n = tree->nodes[i];
            if (n.a >= offset && tree->nodes[n.a].op == leaf) n.a = repl_root;
            if (n.b >= offset && tree->nodes[n.b].op == leaf) n.b = repl_root;
        }
        std::int32_t root = tree_->root + offset;
        if (tree->nodes[root].op == leaf) root = repl_root;
        tree->root = root;
        return Expr(std::move(tree));
    }

    friend Expr operator+(const Expr& l, const Expr& r) { return combine(Op::Add, l, r); }
    friend Expr operator-(const Expr& l, const Expr& r) { return combine(Op::Sub, l, r); }
    friend Expr operator*(const Expr& l, const Expr& r) { return combine(Op::Mul, l, r); }

private:
    explicit Expr(std::shared_ptr<const Tree> tree) : tree_(std::move(tree)) {}

    /// Recursive differentiation over a tree whose leading nodes are the
    /// original expression (indices unchanged, so original subtrees can be
    /// referenced directly). Emits with zero/one pruning to keep results
    /// readable.
    struct Differ {
        Tree& tree;
        Op var;
        std::vector<std::int32_t> memo;  // original-node index -> derivative

        std::int32_t emit(Op op, std::int32_t a, std::int32_t b, double v = 0.0) {
            tree.nodes.push_back({op, a, b, v});
            return static_cast<std::int32_t>(tree.nodes.size() - 1);
        }
        std::int32_t num(double v) { return emit(Op::Num, -1, -1, v); }
        bool is_const(std::int32_t i, double v) const {
            return tree.nodes[i].op == Op::Num && tree.nodes[i].value == v;
        }
        std::int32_t add(std::int32_t a, std::int32_t b) {
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            return emit(Op::Add, a, b);
        }
        std::int32_t sub(std::int32_t a, std::int32_t b) {
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return emit(Op::Neg, b, -1);
            return emit(Op::Sub, a, b);
        }
        std::int32_t mul(std::int32_t a, std::int32_t b) {
            if (is_const(a, 0.0) || is_const(b, 0.0)) return num(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            return emit(Op::Mul, a, b);
        }
        std::int32_t div(std::int32_t a, std::int32_t b) {
            if (is_const(a, 0.0)) return num(0.0);
            if (is_const(b, 1.0)) return a;
            return emit(Op::Div, a, b);
        }

        std::int32_t d(std::int32_t i) {
            if (memo[i] >= 0) return memo[i];
            const Node n = tree.nodes[i];  // copy: emit may reallocate
            std::int32_t r = -1;
            switch (n.op) {
                case Op::Num: r = num(0.0); break;
                case Op::VarX:
                case Op::VarT: r = num(n.op == var ? 1.0 : 0.0); break;
                case Op::Neg: {
                    const std::int32_t da = d(n.a);
                    r = is_const(da, 0.0) ? da : emit(Op::Neg, da, -1);
                    break;
                }
                case Op::Add: r = add(d(n.a), d(n.b)); break;
                case Op::Sub: r = sub(d(n.a), d(n.b)); break;
                case Op::Mul: r = add(mul(d(n.a), n.b), mul(n.a, d(n.b))); break;
                case Op::Div:
                    r = sub(div(d(n.a), n.b), div(mul(n.a, d(n.b)), mul(n.b, n.b)));
                    break;
                case Op::Pow: {
                    const std::int32_t db = d(n.b);
                    if (tree.nodes[n.b].op == Op::Num) {
                        const double e = tree.nodes[n.b].value;
                        if (e == 0.0)
                            r = num(0.0);
                        else if (e == 1.0)
                            r = d(n.a);
                        else
                            r = mul(mul(num(e), emit(Op::Pow, n.a, num(e - 1.0))), d(n.a));
                    } else if (is_const(db, 0.0)) {
                        // exponent free of `var` but not a literal
                        r = mul(mul(n.b, emit(Op::Pow, n.a, sub(n.b, num(1.0)))), d(n.a));
                    } else {
                        r = mul(i, add(mul(db, emit(Op::Log, n.a, -1)),
                                       div(mul(n.b, d(n.a)), n.a)));
                    }
                    break;
                }
                case Op::Sin: r = mul(emit(Op::Cos, n.a, -1), d(n.a)); break;
                case Op::Cos: {
                    const std::int32_t s = mul(emit(Op::Sin, n.a, -1), d(n.a));
                    r = is_const(s, 0.0) ? s : emit(Op::Neg, s, -1);
                    break;
                }
                case Op::Exp: r = mul(i, d(n.a)); break;
                case Op::Log: r = div(d(n.a), n.a); break;
                case Op::Abs: r = mul(div(n.a, i), d(n.a)); break;
                case Op::Sqrt: r = div(d(n.a), mul(num(2.0), i)); break;
            }
            memo[i] = r;
            return r;
        }
    };

    static Expr combine(Op op, const Expr& l, const Expr& r) {
        auto tree = std::make_shared<Tree>();
        tree->nodes = l.tree_->nodes;
        std::int32_t off = static_cast<std::int32_t>(tree->nodes.size());
        for (Node n : r.tree_->nodes) {
            if (n.a >= 0) n.a += off;
            if (n.b >= 0) n.b += off;
            tree->nodes.push_back(n);
        }
        tree->nodes.push_back({op, l.tree_->root, r.tree_->root + off, 0.0});
        tree->root = static_cast<std::int32_t>(tree->nodes.size()) - 1;
        return Expr(std::move(tree));
    }

    bool reachable(const Node& target) const {
        // Linear scan is fine at these sizes; called only from uses().
        std::vector<std::int32_t> stack{tree_->root};
        while (!stack.empty()) {
            std::int32_t i = stack.back();
            stack.pop_back();
            const Node& n = tree_->nodes[i];
            if (&n == &target) return true;
            if (n.a >= 0) stack.push_back(n.a);
            if (n.b >= 0) stack.push_back(n.b);
        }
        return false;
    }

    double eval_node(std::int32_t i, double x, double t) const {
        const Node& n = tree_->nodes[i];
        switch (n.op) {
            case Op::Num:  return n.value;
            case Op::VarX: return x;
            case Op::VarT: return t;
            case Op::Neg:  return -eval_node(n.a, x, t);
            case Op::Add:  return eval_node(n.a, x, t) + eval_node(n.b, x, t);
            case Op::Sub:  return eval_node(n.a, x, t) - eval_node(n.b, x, t);
            case Op::Mul:  return eval_node(n.a, x, t) * eval_node(n.b, x, t);
            case Op::Div: {
                double num = eval_node(n.a, x, t), den = eval_node(n.b, x, t);
                if (den == 0.0) throw EvalError("division by zero");
                return num / den;
            }
            case Op::Pow: {
                double base = eval_node(n.a, x, t), expo = eval_node(n.b, x, t);
                double r = std::pow(base, expo);
                if (!std::isfinite(r))
                    throw EvalError("power with arguments outside the real domain");
                return r;
            }
            case Op::Sin:  return std::sin(eval_node(n.a, x, t));
            case Op::Cos:  return std::cos(eval_node(n.a, x, t));
            case Op::Exp:  return std::exp(eval_node(n.a, x, t));
            case Op::Log: {
                double v = eval_node(n.a, x, t);
                if (v <= 0.0) throw EvalError("log of a non-positive value");
                return std::log(v);
            }
            case Op::Abs:  return std::fabs(eval_node(n.a, x, t));
            case Op::Sqrt: {
                double v = eval_node(n.a, x, t);
                if (v < 0.0) throw EvalError("sqrt of a negative value");
                return std::sqrt(v);
            }
        }
        throw EvalError("corrupt expression node");
    }

    // Precedence levels used by printer and parser alike:
    //   1 +,-   2 *,/   3 unary -   4 ^   5 atoms
    int node_prec(std::int32_t i) const {
        switch (tree_->nodes[i].op) {
            case Op::Add: case Op::Sub: return 1;
            case Op::Mul: case Op::Div: return 2;
            case Op::Neg: return 3;
            case Op::Pow: return 4;
            case Op::Num:
                // Negative literals print with a leading '-', so shield them
                // like a unary minus to keep the output reparsable.
                return tree_->nodes[i].value < 0 ? 3 : 5;
            default: return 5;
        }
    }

    void print_node(std::int32_t i, int min_prec, std::string& out) const {
        const Node& n = tree_->nodes[i];
        bool parens = node_prec(i) < min_prec;
        if (parens) out += '(';
        switch (n.op) {
            case Op::Num:  out += format_g17(n.value); break;
            case Op::VarX: out += 'x'; break;
            case Op::VarT: out += 't'; break;
            case Op::Neg:  out += '-'; print_node(n.a, 3, out); break;
            case Op::Add:  print_node(n.a, 1, out); out += '+'; print_node(n.b, 2, out); break;
            case Op::Sub:  print_node(n.a, 1, out); out += '-'; print_node(n.b, 2, out); break;
            case Op::Mul:  print_node(n.a, 2, out); out += '*'; print_node(n.b, 3, out); break;
            case Op::Div:  print_node(n.a, 2, out); out += '/'; print_node(n.b, 3, out); break;
            case Op::Pow:  print_node(n.a, 5, out); out += '^'; print_node(n.b, 3, out); break;
            case Op::Sin:  out += "sin(";  print_node(n.a, 0, out); out += ')'; break;
            case Op::Cos:  out += "cos(";  print_node(n.a, 0, out); out += ')'; break;
            case Op::Exp:  out += "exp(";  print_node(n.a, 0, out); out += ')'; break;
            case Op::Log:  out += "log(";  print_node(n.a, 0, out); out += ')'; break;
            case Op::Abs:  out += "abs(";  print_node(n.a, 0, out); out += ')'; break;
            case Op::Sqrt: out += "sqrt("; print_node(n.a, 0, out); out += ')'; break;
        }
        if (parens) out += ')';
    }

    struct Parser {
        std::string_view src;
        std::size_t pos = 0;
        int depth = 0;
        Tree& tree;

        [[noreturn]] void fail(std::size_t at, const std::string& msg) const {
            throw ParseError(at, msg);
        }

        void skip_ws() {
            while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
        }

        bool eat(char c) {
            skip_ws();
            if (pos < src.size() && src[pos] == c) { ++pos; return true; }
            return false;
        }

        std::int32_t emit(Expr::Op op, std::int32_t a = -1, std::int32_t b = -1, double v = 0.0) {
            tree.nodes.push_back({op, a, b, v});
            return static_cast<std::int32_t>(tree.nodes.size()) - 1;
        }

        std::int32_t expression() {
            if (++depth > 200) fail(pos, "expression nested too deeply");
            std::int32_t lhs = term();
            for (;;) {
                skip_ws();
                if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) {
                    char op = src[pos++];
                    std::int32_t rhs = term();
                    lhs = emit(op == '+' ? Expr::Op::Add : Expr::Op::Sub, lhs, rhs);
                } else break;
            }
            --depth;
            return lhs;
        }

        std::int32_t term() {
            std::int32_t lhs = unary();
            for (;;) {
                skip_ws();
                if (pos < src.size() && (src[pos] == '*' || src[pos] == '/')) {
                    char op = src[pos++];
                    std::int32_t rhs = unary();
                    lhs = emit(op == '*' ? Expr::Op::Mul : Expr::Op::Div, lhs, rhs);
                } else break;
            }
            return lhs;
        }

        std::int32_t unary() {
            if (++depth > 200) fail(pos, "expression nested too deeply");
            skip_ws();
            std::int32_t result;
            if (pos < src.size() && src[pos] == '-') {
                ++pos;
                result = emit(Expr::Op::Neg, unary());
            } else {
                result = power();
            }
            --depth;
            return result;
        }

        std::int32_t power() {
            std::int32_t base = atom();
            skip_ws();
            if (pos < src.size() && src[pos] == '^') {
                ++pos;
                std::int32_t expo = unary();  // right-associative: 2^3^2 == 2^(3^2)
                return emit(Expr::Op::Pow, base, expo);
            }
            return base;
        }

        std::int32_t atom() {
            skip_ws();
            if (pos >= src.size()) fail(pos, "expected expression");
            char c = src[pos];
            if (c == '(') {
                ++pos;
                std::int32_t inner = expression();
                skip_ws();
                if (!eat(')')) fail(pos, "expected ')'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
            fail(pos, std::string("unexpected character '") + c + "'");
        }

        std::int32_t number() {
            double v = 0.0;
            auto [end, ec] = std::from_chars(src.data() + pos, src.data() + src.size(), v);
            if (ec != std::errc()) fail(pos, "malformed number");
            pos = static_cast<std::size_t>(end - src.data());
            return emit(Expr::Op::Num, -1, -1, v);
        }

        std::int32_t identifier() {
            std::size_t start = pos;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                ++pos;
            std::string_view name = src.substr(start, pos - start);
            if (name == "x") return emit(Expr::Op::VarX);
            if (name == "t") return emit(Expr::Op::VarT);
            if (name == "pi") return emit(Expr::Op::Num, -1, -1, 3.14159265358979323846);
            Expr::Op fn;
            if (name == "sin") fn = Expr::Op::Sin;
            else if (name == "cos") fn = Expr::Op::Cos;
            else if (name == "exp") fn = Expr::Op::Exp;
            else if (name == "log") fn = Expr::Op::Log;
            else if (name == "abs") fn = Expr::Op::Abs;
            else if (name == "sqrt") fn = Expr::Op::Sqrt;
            else fail(start, "unknown identifier '" + std::string(name) + "'");
            skip_ws();
            if (!eat('(')) fail(pos, "expected '(' after function name");
            std::int32_t arg = expression();
            if (!eat(')')) fail(pos, "expected ')'");
            return emit(fn, arg);
        }
    };

    std::shared_ptr<const Tree> tree_;
};

inline Expr Expr::parse(std::string_view source) {
    auto tree = std::make_shared<Tree>();
    Parser p{source, 0, 0, *tree};
    tree->root = p.expression();
    p.skip_ws();
    if (p.pos != source.size())
        throw ParseError(p.pos, "unexpected trailing input");
    return Expr(std::move(tree));
}

}  // namespace charperiodic
