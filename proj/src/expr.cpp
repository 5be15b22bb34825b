#include "geodesy/expr.hpp"

#include "geodesy/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

namespace geodesy {

struct Expression::Node {
    enum class Kind { Literal, Variable, Constant, Neg, Add, Sub, Mul, Div, Pow, Call };
    enum class Const { Pi, E, I };
    enum class Func { Exp, Log, Sin, Cos, Sinh, Cosh, Sqrt, Abs };

    Kind kind = Kind::Literal;
    double literal = 0.0;
    Const constant = Const::Pi;
    Func func = Func::Exp;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;
using Kind = Node::Kind;

NodePtr make_literal(double v)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::Literal;
    n->literal = v;
    return n;
}

NodePtr make_leaf(Kind kind)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    return n;
}

NodePtr make_constant(Node::Const c)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->constant = c;
    return n;
}

NodePtr make_unary(Kind kind, NodePtr operand)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(operand);
    return n;
}

NodePtr make_call(Node::Func f, NodePtr arg)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::Call;
    n->func = f;
    n->lhs = std::move(arg);
    return n;
}

NodePtr make_binary(Kind kind, NodePtr a, NodePtr b)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

struct FuncName {
    std::string_view name;
    Node::Func func;
};

constexpr std::array<FuncName, 8> kFunctions{{
    {"exp", Node::Func::Exp},
    {"log", Node::Func::Log},
    {"sin", Node::Func::Sin},
    {"cos", Node::Func::Cos},
    {"sinh", Node::Func::Sinh},
    {"cosh", Node::Func::Cosh},
    {"sqrt", Node::Func::Sqrt},
    {"abs", Node::Func::Abs},
}};

constexpr std::array<std::string_view, 5> kNonHolomorphic{"abs", "conj", "re", "im", "arg"};

std::string_view func_name(Node::Func f)
{
    for (const auto& entry : kFunctions) {
        if (entry.func == f) {
            return entry.name;
        }
    }
    return "?";
}

std::string_view variable_name(Mode mode) { return mode == Mode::Real ? "x" : "z"; }

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    Parser(std::string_view src, Mode mode) : src_(src), mode_(mode) {}

    NodePtr run()
    {
        NodePtr root = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) {
            fail({"operator", "end of input"}, std::string("unexpected '") + src_[pos_] + "'");
        }
        return root;
    }

private:
    [[noreturn]] void fail(std::vector<std::string> expected, const std::string& what) const
    {
        std::string msg = "syntax error at position " + std::to_string(pos_) + ": " + what + "; expected one of:";
        for (const auto& e : expected) {
            msg += " " + e;
        }
        throw SyntaxError(pos_, std::move(expected), msg);
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_sum()
    {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = make_binary(Kind::Add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = make_binary(Kind::Sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_product()
    {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_binary(Kind::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = make_binary(Kind::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-')) {
            return make_unary(Kind::Neg, parse_unary());
        }
        if (accept('+')) {
            return parse_unary();
        }
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_primary();
        if (accept('^')) {
            return make_binary(Kind::Pow, base, parse_unary());
        }
        return base;
    }

    NodePtr parse_primary()
    {
        skip_ws();
        if (pos_ >= src_.size()) {
            fail({"number", "identifier", "(", "-", "+"}, "unexpected end of input");
        }
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_sum();
            if (!accept(')')) {
                fail({")", "operator"}, "unbalanced parenthesis");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return parse_identifier();
        }
        fail({"number", "identifier", "(", "-", "+"}, std::string("unexpected '") + c + "'");
    }

    NodePtr parse_number()
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) {
            pos_ = start;
            fail({"number"}, "malformed number");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) {
                ++look;
            }
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                digits();
            }
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(value)) {
            pos_ = start;
            fail({"number"}, "number out of range");
        }
        return make_literal(value);
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        skip_ws();
        const bool is_call = pos_ < src_.size() && src_[pos_] == '(';
        if (is_call) {
            if (mode_ == Mode::Complex) {
                for (auto nh : kNonHolomorphic) {
                    if (name == nh) {
                        throw Error(ErrorKind::NonHolomorphicPrimitive,
                                    "'" + std::string(name) + "' is not holomorphic and cannot be used in complex mode");
                    }
                }
            }
            for (const auto& entry : kFunctions) {
                if (entry.name == name) {
                    ++pos_;
                    NodePtr arg = parse_sum();
                    if (!accept(')')) {
                        fail({")", "operator"}, "unbalanced parenthesis in call");
                    }
                    return make_call(entry.func, std::move(arg));
                }
            }
            throw Error(ErrorKind::UnknownIdentifier, "unknown function '" + std::string(name) + "'");
        }
        if (name == variable_name(mode_)) {
            return make_leaf(Kind::Variable);
        }
        if (name == "pi") {
            return make_constant(Node::Const::Pi);
        }
        if (name == "e") {
            return make_constant(Node::Const::E);
        }
        if (name == "i" && mode_ == Mode::Complex) {
            return make_constant(Node::Const::I);
        }
        throw Error(ErrorKind::UnknownIdentifier,
                    "unknown identifier '" + std::string(name) + "' (variable is '" +
                        std::string(variable_name(mode_)) + "')");
    }

    std::string_view src_;
    Mode mode_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Rendering

int precedence(const Node& n)
{
    switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
    }
}

void render_node(const Node& n, Mode mode, std::string& out);

void render_child(const Node& child, bool parens, Mode mode, std::string& out)
{
    if (parens) {
        out += '(';
    }
    render_node(child, mode, out);
    if (parens) {
        out += ')';
    }
}

void render_node(const Node& n, Mode mode, std::string& out)
{
    switch (n.kind) {
    case Kind::Literal: {
        std::array<char, 64> buf{};
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), n.literal);
        out.append(buf.data(), res.ptr);
        return;
    }
    case Kind::Variable: out += variable_name(mode); return;
    case Kind::Constant:
        out += n.constant == Node::Const::Pi ? "pi" : n.constant == Node::Const::E ? "e" : "i";
        return;
    case Kind::Neg:
        out += '-';
        render_child(*n.lhs, precedence(*n.lhs) < 3, mode, out);
        return;
    case Kind::Call:
        out += func_name(n.func);
        out += '(';
        render_node(*n.lhs, mode, out);
        out += ')';
        return;
    case Kind::Pow:
        render_child(*n.lhs, precedence(*n.lhs) <= 4, mode, out);
        out += '^';
        render_child(*n.rhs, precedence(*n.rhs) < 3, mode, out);
        return;
    default: {
        const int p = precedence(n);
        const char* op = n.kind == Kind::Add ? " + " : n.kind == Kind::Sub ? " - " : n.kind == Kind::Mul ? "*" : "/";
        render_child(*n.lhs, precedence(*n.lhs) < p, mode, out);
        out += op;
        render_child(*n.rhs, precedence(*n.rhs) <= p, mode, out);
        return;
    }
    }
}

bool equal_nodes(const Node& a, const Node& b)
{
    if (a.kind != b.kind) {
        return false;
    }
    switch (a.kind) {
    case Kind::Literal: return a.literal == b.literal;
    case Kind::Variable: return true;
    case Kind::Constant: return a.constant == b.constant;
    case Kind::Call: return a.func == b.func && equal_nodes(*a.lhs, *b.lhs);
    case Kind::Neg: return equal_nodes(*a.lhs, *b.lhs);
    default: return equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
    }
}

bool references_variable(const Node& n)
{
    switch (n.kind) {
    case Kind::Variable: return true;
    case Kind::Literal:
    case Kind::Constant: return false;
    case Kind::Neg:
    case Kind::Call: return references_variable(*n.lhs);
    default: return references_variable(*n.lhs) || references_variable(*n.rhs);
    }
}

bool contains(const Node& n, bool (*pred)(const Node&))
{
    if (pred(n)) {
        return true;
    }
    return (n.lhs && contains(*n.lhs, pred)) || (n.rhs && contains(*n.rhs, pred));
}

// ---------------------------------------------------------------------------
// Evaluation over double, complex and their jets

template <class S>
struct Traits;

template <>
struct Traits<double> {
    using Base = double;
    static constexpr bool jet = false;
    static Base base(double v) { return v; }
    static double lift(Base v) { return v; }
};

template <>
struct Traits<cd> {
    using Base = cd;
    static constexpr bool jet = false;
    static Base base(cd v) { return v; }
    static cd lift(Base v) { return v; }
};

template <class T>
struct Traits<Jet2<T>> {
    using Base = T;
    static constexpr bool jet = true;
    static Base base(const Jet2<T>& v) { return v.value; }
    static Jet2<T> lift(Base v) { return Jet2<T>::constant(v); }
};

[[noreturn]] void domain_error(const std::string& what) { throw Error(ErrorKind::Domain, what); }

bool is_zero(double v) { return v == 0.0; }
bool is_zero(cd v) { return v == cd(0.0); }
bool is_finite(double v) { return std::isfinite(v); }
bool is_finite(cd v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Principal-branch functions (log, sqrt, non-integer powers) are rejected on
// their cut: the negative real half-line, or the non-positive half-line for
// real arguments.
template <class B>
void check_branch(B arg, const char* name, bool allow_zero)
{
    if constexpr (std::is_same_v<B, double>) {
        if (arg < 0.0 || (!allow_zero && arg == 0.0)) {
            domain_error(std::string(name) + " of non-positive argument");
        }
    } else {
        if (arg == cd(0.0) && !allow_zero) {
            domain_error(std::string(name) + " at the branch point 0");
        }
        if (arg.imag() == 0.0 && arg.real() < 0.0) {
            domain_error(std::string(name) + " on its branch cut (negative real axis)");
        }
    }
}

template <class S>
S eval_node(const Node& n, const S& at);

template <class S>
S eval_pow(const Node& n, const S& at)
{
    using B = typename Traits<S>::Base;
    const S base = eval_node(*n.lhs, at);
    const B base_value = Traits<S>::base(base);
    if (!references_variable(*n.rhs)) {
        const B p = eval_node<B>(*n.rhs, B(0));
        const double pr = std::real(p);
        const bool integral = std::imag(p) == 0.0 && pr == std::round(pr) && std::abs(pr) <= 1e9;
        if (integral) {
            const int k = static_cast<int>(pr);
            if (k < 0 && is_zero(base_value)) {
                domain_error("negative power of zero");
            }
            if constexpr (Traits<S>::jet) {
                return ipow(base, k);
            } else {
                return std::pow(base, k);
            }
        }
        check_branch(base_value, "non-integer power", false);
        if constexpr (Traits<S>::jet) {
            return pow_const(base, p);
        } else {
            return std::pow(base, p);
        }
    }
    check_branch(base_value, "variable power", false);
    const S expo = eval_node(*n.rhs, at);
    using std::exp;
    using std::log;
    return exp(expo * log(base));
}

template <class S>
S eval_call(const Node& n, const S& at)
{
    using std::cos;
    using std::cosh;
    using std::exp;
    using std::log;
    using std::sin;
    using std::sinh;
    using std::sqrt;
    const S arg = eval_node(*n.lhs, at);
    const auto argv = Traits<S>::base(arg);
    switch (n.func) {
    case Node::Func::Exp: return exp(arg);
    case Node::Func::Log: check_branch(argv, "log", false); return log(arg);
    case Node::Func::Sin: return sin(arg);
    case Node::Func::Cos: return cos(arg);
    case Node::Func::Sinh: return sinh(arg);
    case Node::Func::Cosh: return cosh(arg);
    case Node::Func::Sqrt: check_branch(argv, "sqrt", !Traits<S>::jet); return sqrt(arg);
    case Node::Func::Abs:
        if constexpr (std::is_same_v<typename Traits<S>::Base, double>) {
            if constexpr (Traits<S>::jet) {
                if (argv == 0.0) {
                    domain_error("abs is not differentiable at 0");
                }
                const double sign = argv > 0.0 ? 1.0 : -1.0;
                return S::chain(arg, std::abs(argv), sign, 0.0);
            } else {
                return std::abs(arg);
            }
        } else {
            throw Error(ErrorKind::NonHolomorphicPrimitive, "abs in complex evaluation");
        }
    }
    domain_error("unknown function");
}

template <class S>
S eval_node(const Node& n, const S& at)
{
    using B = typename Traits<S>::Base;
    switch (n.kind) {
    case Kind::Literal: return Traits<S>::lift(B(n.literal));
    case Kind::Variable: return at;
    case Kind::Constant:
        switch (n.constant) {
        case Node::Const::Pi: return Traits<S>::lift(B(std::numbers::pi));
        case Node::Const::E: return Traits<S>::lift(B(std::numbers::e));
        case Node::Const::I:
            if constexpr (std::is_same_v<B, cd>) {
                return Traits<S>::lift(cd(0.0, 1.0));
            } else {
                domain_error("imaginary unit in real evaluation");
            }
        }
        break;
    case Kind::Neg: return -eval_node(*n.lhs, at);
    case Kind::Add: return eval_node(*n.lhs, at) + eval_node(*n.rhs, at);
    case Kind::Sub: return eval_node(*n.lhs, at) - eval_node(*n.rhs, at);
    case Kind::Mul: return eval_node(*n.lhs, at) * eval_node(*n.rhs, at);
    case Kind::Div: {
        const S den = eval_node(*n.rhs, at);
        if (is_zero(Traits<S>::base(den))) {
            domain_error("division by zero");
        }
        return eval_node(*n.lhs, at) / den;
    }
    case Kind::Pow: return eval_pow(n, at);
    case Kind::Call: return eval_call(n, at);
    }
    domain_error("malformed expression");
}

template <class S>
S evaluate_checked(const Node& root, const S& at)
{
    S r = eval_node(root, at);
    if constexpr (Traits<S>::jet) {
        if (!is_finite(r.value) || !is_finite(r.d1) || !is_finite(r.d2)) {
            domain_error("non-finite jet");
        }
    } else {
        if (!is_finite(r)) {
            domain_error("non-finite value");
        }
    }
    return r;
}

} // namespace

Expression::Expression(std::shared_ptr<const Node> root, Mode mode) : root_(std::move(root)), mode_(mode) {}

std::string Expression::render() const
{
    std::string out;
    if (root_) {
        render_node(*root_, mode_, out);
    }
    return out;
}

bool Expression::structurally_equal(const Expression& other) const
{
    if (!root_ || !other.root_) {
        return !root_ && !other.root_;
    }
    return mode_ == other.mode_ && equal_nodes(*root_, *other.root_);
}

bool Expression::is_constant() const { return !root_ || !references_variable(*root_); }

double Expression::value(double at) const
{
    if (mode_ == Mode::Complex) {
        const cd v = value(cd(at));
        if (v.imag() != 0.0) {
            domain_error("complex-mode expression is not real at the requested point");
        }
        return v.real();
    }
    return evaluate_checked<double>(*root_, at);
}

cd Expression::value(cd at) const
{
    if (mode_ == Mode::Real) {
        if (at.imag() != 0.0) {
            domain_error("real-mode expression evaluated off the real axis");
        }
        return cd(evaluate_checked<double>(*root_, at.real()));
    }
    return evaluate_checked<cd>(*root_, at);
}

Jet2<double> Expression::jet(double at) const
{
    if (mode_ == Mode::Complex) {
        const Jet2<cd> j = jet(cd(at));
        return {j.value.real(), j.d1.real(), j.d2.real()};
    }
    return evaluate_checked(*root_, Jet2<double>::variable(at));
}

Jet2<cd> Expression::jet(cd at, cd direction) const
{
    if (mode_ == Mode::Real) {
        if (at.imag() != 0.0 || direction.imag() != 0.0) {
            domain_error("real-mode expression evaluated off the real axis");
        }
        const Jet2<double> j = evaluate_checked(*root_, Jet2<double>::variable(at.real(), direction.real()));
        return {cd(j.value), cd(j.d1), cd(j.d2)};
    }
    return evaluate_checked(*root_, Jet2<cd>::variable(at, direction));
}

Expression Expression::to_real_mode() const
{
    if (root_ && contains(*root_, [](const Node& n) { return n.kind == Kind::Constant && n.constant == Node::Const::I; })) {
        throw Error(ErrorKind::InvalidArgument, "expression uses the imaginary unit and has no real-mode form");
    }
    return Expression(root_, Mode::Real);
}

Expression Expression::to_complex_mode() const
{
    if (root_ && contains(*root_, [](const Node& n) { return n.kind == Kind::Call && n.func == Node::Func::Abs; })) {
        throw Error(ErrorKind::NonHolomorphicPrimitive, "abs has no holomorphic extension");
    }
    return Expression(root_, Mode::Complex);
}

Expression parse(std::string_view source, Mode mode)
{
    Parser parser(source, mode);
    return Expression(parser.run(), mode);
}

Jet2<cd> eval_jet2(const Expression& expr, cd at) { return expr.jet(at); }

Jet2<double> eval_jet2(const Expression& expr, double at) { return expr.jet(at); }

} // namespace geodesy
