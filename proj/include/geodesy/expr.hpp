#pragma once

/// @file expr.hpp
/// Coefficient functions h(x) / h(z) entered as text.
///
/// Grammar (conventional infix):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('-' | '+') unary | power
///     power   := primary ('^' unary)?          right-associative
///     primary := number | identifier | identifier '(' expr ')' | '(' expr ')'
///
/// so `-x^2` is `-(x^2)` and `2^-1` is `2^(-1)`. Real mode uses the variable
/// `x`, complex mode the variable `z` and additionally the constant `i`.
/// Functions: exp log sin cos sinh cosh sqrt, plus abs in real mode only.

#include "geodesy/jet.hpp"

#include <complex>
#include <memory>
#include <string>
#include <string_view>

namespace geodesy {

using cd = std::complex<double>;

enum class Mode { Real, Complex };

class Expression {
public:
    struct Node;

    Expression() = default;
    Expression(std::shared_ptr<const Node> root, Mode mode);

    Mode mode() const noexcept { return mode_; }
    bool empty() const noexcept { return !root_; }
    const Node& root() const { return *root_; }

    /// Canonical text form; parse(render()) gives a structurally identical tree.
    std::string render() const;
    bool structurally_equal(const Expression& other) const;
    /// True when the tree does not reference the variable.
    bool is_constant() const;

    double value(double at) const;
    cd value(cd at) const;
    Jet2<double> jet(double at) const;
    /// Jet along the complex direction `direction`: d1 = h'(at) * direction.
    Jet2<cd> jet(cd at, cd direction = cd(1.0)) const;

    /// Same tree with the variable renamed and the mode switched to Real.
    /// Throws InvalidArgument when the tree references the constant i.
    Expression to_real_mode() const;
    /// Same tree viewed as a holomorphic function of z. Throws
    /// NonHolomorphicPrimitive when the tree uses abs.
    Expression to_complex_mode() const;

private:
    std::shared_ptr<const Node> root_;
    Mode mode_ = Mode::Real;
};

Expression parse(std::string_view source, Mode mode);

/// (h(at), h'(at), h''(at)). Real-mode expressions require a real `at`.
Jet2<cd> eval_jet2(const Expression& expr, cd at);
Jet2<double> eval_jet2(const Expression& expr, double at);

} // namespace geodesy
