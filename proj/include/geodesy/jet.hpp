#pragma once

/// @file jet.hpp
/// Forward-mode jets truncated at second order.
///
/// Jet2<T> carries (f, f', f'') of a function of one variable; MultiJet<T, N>
/// carries the value, gradient and Hessian with respect to N seeded
/// coordinates. Both are plain value types; T is double or std::complex<double>.

#include <Eigen/Core>

#include <cmath>
#include <complex>

namespace geodesy {

template <class T>
struct Jet2 {
    T value{};
    T d1{};
    T d2{};

    static constexpr Jet2 constant(T v) { return {v, T(0), T(0)}; }
    /// Identity map seeded along `direction`: x(t) = at + direction * t.
    static constexpr Jet2 variable(T at, T direction = T(1)) { return {at, direction, T(0)}; }

    /// Composition f(u) given f, f', f'' evaluated at u.value.
    static Jet2 chain(const Jet2& u, T f0, T f1, T f2)
    {
        return {f0, f1 * u.d1, f2 * u.d1 * u.d1 + f1 * u.d2};
    }
};

template <class T>
Jet2<T> operator-(const Jet2<T>& a) { return {-a.value, -a.d1, -a.d2}; }

template <class T>
Jet2<T> operator+(const Jet2<T>& a, const Jet2<T>& b) { return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2}; }

template <class T>
Jet2<T> operator-(const Jet2<T>& a, const Jet2<T>& b) { return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2}; }

template <class T>
Jet2<T> operator*(const Jet2<T>& a, const Jet2<T>& b)
{
    return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
            a.d2 * b.value + T(2) * a.d1 * b.d1 + a.value * b.d2};
}

template <class T>
Jet2<T> operator/(const Jet2<T>& a, const Jet2<T>& b)
{
    const T q = a.value / b.value;
    const T q1 = (a.d1 - q * b.d1) / b.value;
    const T q2 = (a.d2 - T(2) * q1 * b.d1 - q * b.d2) / b.value;
    return {q, q1, q2};
}

template <class T>
Jet2<T> operator+(const Jet2<T>& a, T s) { return {a.value + s, a.d1, a.d2}; }
template <class T>
Jet2<T> operator+(T s, const Jet2<T>& a) { return a + s; }
template <class T>
Jet2<T> operator-(const Jet2<T>& a, T s) { return {a.value - s, a.d1, a.d2}; }
template <class T>
Jet2<T> operator-(T s, const Jet2<T>& a) { return {s - a.value, -a.d1, -a.d2}; }
template <class T>
Jet2<T> operator*(const Jet2<T>& a, T s) { return {a.value * s, a.d1 * s, a.d2 * s}; }
template <class T>
Jet2<T> operator*(T s, const Jet2<T>& a) { return a * s; }
template <class T>
Jet2<T> operator/(const Jet2<T>& a, T s) { return {a.value / s, a.d1 / s, a.d2 / s}; }

template <class T>
Jet2<T> exp(const Jet2<T>& u)
{
    using std::exp;
    const T e = exp(u.value);
    return Jet2<T>::chain(u, e, e, e);
}

template <class T>
Jet2<T> log(const Jet2<T>& u)
{
    using std::log;
    const T inv = T(1) / u.value;
    return Jet2<T>::chain(u, log(u.value), inv, -inv * inv);
}

template <class T>
Jet2<T> sin(const Jet2<T>& u)
{
    using std::cos;
    using std::sin;
    const T s = sin(u.value);
    return Jet2<T>::chain(u, s, cos(u.value), -s);
}

template <class T>
Jet2<T> cos(const Jet2<T>& u)
{
    using std::cos;
    using std::sin;
    const T c = cos(u.value);
    return Jet2<T>::chain(u, c, -sin(u.value), -c);
}

template <class T>
Jet2<T> sinh(const Jet2<T>& u)
{
    using std::cosh;
    using std::sinh;
    const T s = sinh(u.value);
    return Jet2<T>::chain(u, s, cosh(u.value), s);
}

template <class T>
Jet2<T> cosh(const Jet2<T>& u)
{
    using std::cosh;
    using std::sinh;
    const T c = cosh(u.value);
    return Jet2<T>::chain(u, c, sinh(u.value), c);
}

/// Square root with the root value supplied by the caller, so that branch
/// selection stays outside the jet algebra.
template <class T>
Jet2<T> sqrt_with_root(const Jet2<T>& u, T root)
{
    const T f1 = T(0.5) / root;
    const T f2 = -f1 / (T(2) * u.value);
    return Jet2<T>::chain(u, root, f1, f2);
}

template <class T>
Jet2<T> sqrt(const Jet2<T>& u)
{
    using std::sqrt;
    return sqrt_with_root(u, T(sqrt(u.value)));
}

template <class T>
Jet2<T> ipow(const Jet2<T>& u, int n)
{
    if (n == 0) {
        return Jet2<T>::constant(T(1));
    }
    if (n < 0) {
        return Jet2<T>::constant(T(1)) / ipow(u, -n);
    }
    Jet2<T> result = Jet2<T>::constant(T(1));
    Jet2<T> base = u;
    while (n > 0) {
        if (n & 1) {
            result = result * base;
        }
        n >>= 1;
        if (n > 0) {
            base = base * base;
        }
    }
    return result;
}

/// u^p for a constant real or complex exponent p, principal branch.
template <class T>
Jet2<T> pow_const(const Jet2<T>& u, T p)
{
    using std::pow;
    const T f0 = pow(u.value, p);
    const T f1 = p * f0 / u.value;
    const T f2 = p * (p - T(1)) * f0 / (u.value * u.value);
    return Jet2<T>::chain(u, f0, f1, f2);
}

// ---------------------------------------------------------------------------

template <class T, int N>
struct MultiJet {
    using Vector = Eigen::Matrix<T, N, 1>;
    using Matrix = Eigen::Matrix<T, N, N>;

    T value{};
    Vector grad = Vector::Zero();
    Matrix hess = Matrix::Zero();

    static MultiJet constant(T v)
    {
        MultiJet j;
        j.value = v;
        return j;
    }

    static MultiJet coordinate(T v, int index)
    {
        MultiJet j;
        j.value = v;
        j.grad(index) = T(1);
        return j;
    }

    /// f(u) given f, f', f'' evaluated at u.value.
    static MultiJet chain(const MultiJet& u, T f0, T f1, T f2)
    {
        MultiJet r;
        r.value = f0;
        r.grad = f1 * u.grad;
        r.hess = f2 * (u.grad * u.grad.transpose()) + f1 * u.hess;
        return r;
    }

    static MultiJet chain(const MultiJet& u, const Jet2<T>& f) { return chain(u, f.value, f.d1, f.d2); }
};

template <class T, int N>
MultiJet<T, N> operator-(const MultiJet<T, N>& a)
{
    MultiJet<T, N> r;
    r.value = -a.value;
    r.grad = -a.grad;
    r.hess = -a.hess;
    return r;
}

template <class T, int N>
MultiJet<T, N> operator+(const MultiJet<T, N>& a, const MultiJet<T, N>& b)
{
    MultiJet<T, N> r;
    r.value = a.value + b.value;
    r.grad = a.grad + b.grad;
    r.hess = a.hess + b.hess;
    return r;
}

template <class T, int N>
MultiJet<T, N> operator-(const MultiJet<T, N>& a, const MultiJet<T, N>& b)
{
    MultiJet<T, N> r;
    r.value = a.value - b.value;
    r.grad = a.grad - b.grad;
    r.hess = a.hess - b.hess;
    return r;
}

template <class T, int N>
MultiJet<T, N> operator*(const MultiJet<T, N>& a, const MultiJet<T, N>& b)
{
    MultiJet<T, N> r;
    r.value = a.value * b.value;
    r.grad = a.grad * b.value + a.value * b.grad;
    r.hess = a.hess * b.value + a.value * b.hess + a.grad * b.grad.transpose() + b.grad * a.grad.transpose();
    return r;
}

template <class T, int N>
MultiJet<T, N> operator/(const MultiJet<T, N>& a, const MultiJet<T, N>& b)
{
    const T inv = T(1) / b.value;
    const MultiJet<T, N> reciprocal = MultiJet<T, N>::chain(b, inv, -inv * inv, T(2) * inv * inv * inv);
    return a * reciprocal;
}

template <class T, int N>
MultiJet<T, N> operator+(const MultiJet<T, N>& a, T s)
{
    MultiJet<T, N> r = a;
    r.value += s;
    return r;
}
template <class T, int N>
MultiJet<T, N> operator+(T s, const MultiJet<T, N>& a) { return a + s; }
template <class T, int N>
MultiJet<T, N> operator-(const MultiJet<T, N>& a, T s) { return a + (-s); }
template <class T, int N>
MultiJet<T, N> operator-(T s, const MultiJet<T, N>& a) { return (-a) + s; }

template <class T, int N>
MultiJet<T, N> operator*(const MultiJet<T, N>& a, T s)
{
    MultiJet<T, N> r;
    r.value = a.value * s;
    r.grad = a.grad * s;
    r.hess = a.hess * s;
    return r;
}
template <class T, int N>
MultiJet<T, N> operator*(T s, const MultiJet<T, N>& a) { return a * s; }

template <class T, int N>
MultiJet<T, N> square(const MultiJet<T, N>& a) { return a * a; }

} // namespace geodesy
