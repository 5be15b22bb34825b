#include "geodesy/geometry.hpp"

#include "geodesy/error.hpp"
#include "geodesy/jet.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

namespace geodesy {

std::string_view family_name(Family family)
{
    switch (family) {
    case Family::Hyperbolic: return "hyperbolic";
    case Family::AntiDeSitterPlus: return "ads+";
    case Family::AntiDeSitterMinus: return "ads-";
    case Family::ComplexSphere: return "complex";
    case Family::KahlerNorden: return "kn";
    }
    return "?";
}

Family family_from_name(std::string_view name)
{
    if (name == "hyperbolic") {
        return Family::Hyperbolic;
    }
    if (name == "ads+" || name == "ads") {
        return Family::AntiDeSitterPlus;
    }
    if (name == "ads-") {
        return Family::AntiDeSitterMinus;
    }
    if (name == "complex") {
        return Family::ComplexSphere;
    }
    if (name == "kn") {
        return Family::KahlerNorden;
    }
    throw Error(ErrorKind::InvalidArgument,
                "unknown family '" + std::string(name) + "' (expected hyperbolic, ads+, ads-, complex or kn)");
}

int chart_dimension(Family family) { return family == Family::KahlerNorden ? 4 : 2; }

bool is_real_2d(Family family)
{
    return family == Family::Hyperbolic || family == Family::AntiDeSitterPlus || family == Family::AntiDeSitterMinus;
}

bool is_anti_de_sitter(Family family)
{
    return family == Family::AntiDeSitterPlus || family == Family::AntiDeSitterMinus;
}

Mode expression_mode(Family family) { return is_real_2d(family) ? Mode::Real : Mode::Complex; }

GeometrySpec::GeometrySpec(Family f, Expression expr) : family(f), h(std::move(expr))
{
    if (h.empty()) {
        throw Error(ErrorKind::InvalidArgument, "geometry needs a coefficient function h");
    }
    if (h.mode() != expression_mode(family)) {
        throw Error(ErrorKind::InvalidArgument, std::string("family ") + std::string(family_name(family)) +
                                                    " needs a " +
                                                    (expression_mode(family) == Mode::Real ? "real" : "complex") +
                                                    "-mode h");
    }
}

GeometrySpec GeometrySpec::parse(Family family, std::string_view h_source)
{
    return GeometrySpec(family, geodesy::parse(h_source, expression_mode(family)));
}

// ---------------------------------------------------------------------------
// Domain

namespace {

void require_dimension(const GeometrySpec& spec, const ChartPoint& p)
{
    if (p.dim != chart_dimension(spec.family)) {
        throw Error(ErrorKind::InvalidArgument, "chart point has dimension " + std::to_string(p.dim) + ", family " +
                                                    std::string(family_name(spec.family)) + " needs " +
                                                    std::to_string(chart_dimension(spec.family)));
    }
}

bool has_imaginary_part(const ChartPoint& p)
{
    for (int i = 0; i < p.dim; ++i) {
        if (p[i].imag() != 0.0) {
            return true;
        }
    }
    return false;
}

} // namespace

std::vector<double> domain_guards(const GeometrySpec& spec, const ChartPoint& p, double guard)
{
    require_dimension(spec, p);
    switch (spec.family) {
    case Family::Hyperbolic: {
        const double x = p[0].real();
        const double phi = p[1].real();
        const double h = spec.h.value(x);
        return {phi, std::abs(phi * phi - h) - guard};
    }
    case Family::AntiDeSitterPlus:
    case Family::AntiDeSitterMinus: {
        const double x = p[0].real();
        const double psi = p[1].real();
        const double h = spec.h.value(x);
        return {psi, std::abs(psi * psi + h) - guard};
    }
    case Family::ComplexSphere: {
        const cd h = spec.h.value(p[0]);
        return {std::abs(p[1]) - guard, std::abs(p[1] * p[1] - h) - guard};
    }
    case Family::KahlerNorden: {
        const double x = p[0].real();
        const double phi = p[1].real();
        const double y = p[2].real();
        const double psi = p[3].real();
        const cd h = spec.h.value(cd(x, y));
        const cd chi(phi, psi);
        return {phi * phi + psi * psi - guard, std::abs(h - chi * chi) - guard};
    }
    }
    return {};
}

bool in_domain(const GeometrySpec& spec, const ChartPoint& p, double guard)
{
    if (spec.family != Family::ComplexSphere && has_imaginary_part(p)) {
        return false;
    }
    try {
        const auto g = domain_guards(spec, p, guard);
        return std::all_of(g.begin(), g.end(), [](double v) { return v > 0.0; });
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Domain) {
            return false;
        }
        throw;
    }
}

void check_domain(const GeometrySpec& spec, const ChartPoint& p, double guard)
{
    if (spec.family != Family::ComplexSphere && has_imaginary_part(p)) {
        throw Error(ErrorKind::OutOfDomain, "real chart coordinates must have zero imaginary part");
    }
    const auto g = domain_guards(spec, p, guard);
    static const char* const names[5][2] = {
        {"Phi > 0", "|Phi^2 - h(x)| > guard"},
        {"Psi > 0", "|Psi^2 + h(x)| > guard"},
        {"Psi > 0", "|Psi^2 + h(x)| > guard"},
        {"|X| > guard", "|X^2 - h(z)| > guard"},
        {"Phi^2 + Psi^2 > guard", "|h(x+iy) - (Phi+i Psi)^2| > guard"},
    };
    const auto row = static_cast<std::size_t>(spec.family);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0)) {
            throw Error(ErrorKind::OutOfDomain, std::string("point outside the domain: ") + names[row][i] + " fails");
        }
    }
}

// ---------------------------------------------------------------------------
// Metric components on jets

namespace {

template <class T, int N>
MultiJet<T, N> lit(double v)
{
    return MultiJet<T, N>::constant(T(v));
}

// Metric of a 2D family on jets of (first coordinate, second coordinate, h).
template <class T>
std::array<MultiJet<T, 2>, 3> metric_2d(Family family, const MultiJet<T, 2>& h, const MultiJet<T, 2>& v)
{
    using J = MultiJet<T, 2>;
    const J v2 = v * v;
    const J inv_v2 = lit<T, 2>(1.0) / v2;
    switch (family) {
    case Family::Hyperbolic:
    case Family::ComplexSphere: {
        const J d = h - v2;
        return {d * d * inv_v2, lit<T, 2>(0.0), inv_v2};
    }
    case Family::AntiDeSitterPlus: {
        const J s = h + v2;
        return {-(s * s * inv_v2), lit<T, 2>(0.0), inv_v2};
    }
    case Family::AntiDeSitterMinus: {
        const J s = h + v2;
        return {s * s * inv_v2, lit<T, 2>(0.0), -inv_v2};
    }
    case Family::KahlerNorden: break;
    }
    throw Error(ErrorKind::InvalidArgument, "not a 2D family");
}

using J4 = MultiJet<double, 4>;

// Upper triangle of the Kahler-Norden metric in the order
// xx, xPhi, xy, xPsi, PhiPhi, Phiy, PhiPsi, yy, yPsi, PsiPsi.
std::array<J4, 10> metric_kn(const J4& hr, const J4& hi, const J4& phi, const J4& psi)
{
    const J4 dp = phi * phi + psi * psi;
    const J4 dm = phi * phi - psi * psi;
    const J4 dp2 = dp * dp;
    const J4 gxx = (dm * (dp2 + hr * hr - hi * hi) + 4.0 * phi * psi * hr * hi - 2.0 * dp2 * hr) / dp2;
    const J4 gxy = -2.0 * ((phi * hi - psi * (dp + hr)) * (psi * hi - phi * (dp - hr))) / dp2;
    const J4 gpp = dm / dp2;
    const J4 gpq = 2.0 * phi * psi / dp2;
    const J4 zero = J4::constant(0.0);
    return {gxx, zero, gxy, zero, gpp, zero, gpq, -gxx, zero, -gpp};
}

J4 real_part(const MultiJet<cd, 4>& j)
{
    J4 r;
    r.value = j.value.real();
    r.grad = j.grad.real();
    r.hess = j.hess.real();
    return r;
}

J4 imag_part(const MultiJet<cd, 4>& j)
{
    J4 r;
    r.value = j.value.imag();
    r.grad = j.grad.imag();
    r.hess = j.hess.imag();
    return r;
}

// Metric together with its first and second coordinate derivatives.
struct MetricJet {
    int n = 2;
    Eigen::MatrixXcd g;
    std::vector<Eigen::MatrixXcd> dg;   // dg[m] = d_m g
    std::vector<Eigen::MatrixXcd> ddg;  // ddg[m * n + q] = d_m d_q g
};

template <class J>
void store(MetricJet& out, int i, int j, const J& c)
{
    out.g(i, j) = out.g(j, i) = cd(c.value);
    for (int m = 0; m < out.n; ++m) {
        out.dg[static_cast<std::size_t>(m)](i, j) = out.dg[static_cast<std::size_t>(m)](j, i) = cd(c.grad(m));
        for (int q = 0; q < out.n; ++q) {
            auto& target = out.ddg[static_cast<std::size_t>(m * out.n + q)];
            target(i, j) = target(j, i) = cd(c.hess(m, q));
        }
    }
}

MetricJet metric_jet(const GeometrySpec& spec, const ChartPoint& p)
{
    MetricJet out;
    out.n = chart_dimension(spec.family);
    const int n = out.n;
    out.g = Eigen::MatrixXcd::Zero(n, n);
    out.dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXcd::Zero(n, n));
    out.ddg.assign(static_cast<std::size_t>(n * n), Eigen::MatrixXcd::Zero(n, n));
    if (spec.family != Family::KahlerNorden) {
        using J = MultiJet<cd, 2>;
        const J x = J::coordinate(p[0], 0);
        const J v = J::coordinate(p[1], 1);
        const J h = J::chain(x, spec.h.jet(p[0]));
        const auto c = metric_2d<cd>(spec.family, h, v);
        store(out, 0, 0, c[0]);
        store(out, 0, 1, c[1]);
        store(out, 1, 1, c[2]);
        return out;
    }
    const cd z(p[0].real(), p[2].real());
    MultiJet<cd, 4> zj = MultiJet<cd, 4>::constant(z);
    zj.grad(0) = cd(1.0);
    zj.grad(2) = cd(0.0, 1.0);
    const MultiJet<cd, 4> hj = MultiJet<cd, 4>::chain(zj, spec.h.jet(z));
    const J4 phi = J4::coordinate(p[1].real(), 1);
    const J4 psi = J4::coordinate(p[3].real(), 3);
    const auto c = metric_kn(real_part(hj), imag_part(hj), phi, psi);
    std::size_t k = 0;
    for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
            store(out, i, j, c[k++]);
        }
    }
    return out;
}

Eigen::MatrixXcd inverse_or_throw(const Eigen::MatrixXcd& g)
{
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(g);
    if (!lu.isInvertible() || !std::isfinite(std::abs(lu.determinant())) || std::abs(lu.determinant()) == 0.0) {
        throw Error(ErrorKind::SingularMetric, "metric is not invertible at this point");
    }
    return lu.inverse();
}

std::string signature_of(const GeometrySpec& spec, const Eigen::MatrixXcd& g)
{
    if (spec.family == Family::ComplexSphere) {
        return "holomorphic";
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.real());
    int neg = 0;
    int pos = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        (es.eigenvalues()(i) < 0.0 ? neg : pos) += 1;
    }
    std::string s = "(";
    for (int i = 0; i < neg + pos; ++i) {
        if (i > 0) {
            s += ',';
        }
        s += i < neg ? '-' : '+';
    }
    return s + ")";
}

struct Connection {
    int n = 2;
    Eigen::MatrixXcd ginv;
    std::vector<cd> gamma;   // (i*n + j)*n + k
    std::vector<cd> dgamma;  // ((m*n + i)*n + j)*n + k, derivative d_m
};

Connection connection_from(const MetricJet& mj, bool with_derivatives)
{
    const int n = mj.n;
    Connection c;
    c.n = n;
    c.ginv = inverse_or_throw(mj.g);
    auto idx3 = [n](int i, int j, int k) { return static_cast<std::size_t>((i * n + j) * n + k); };
    // Lowered symbols T_ljk = d_k g_lj + d_j g_lk - d_l g_jk.
    std::vector<cd> lowered(static_cast<std::size_t>(n * n * n));
    for (int l = 0; l < n; ++l) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                lowered[idx3(l, j, k)] = mj.dg[static_cast<std::size_t>(k)](l, j) +
                                         mj.dg[static_cast<std::size_t>(j)](l, k) -
                                         mj.dg[static_cast<std::size_t>(l)](j, k);
            }
        }
    }
    c.gamma.assign(static_cast<std::size_t>(n * n * n), cd(0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                cd s = 0.0;
                for (int l = 0; l < n; ++l) {
                    s += c.ginv(i, l) * lowered[idx3(l, j, k)];
                }
                c.gamma[idx3(i, j, k)] = 0.5 * s;
            }
        }
    }
    if (!with_derivatives) {
        return c;
    }
    c.dgamma.assign(static_cast<std::size_t>(n * n * n * n), cd(0.0));
    for (int m = 0; m < n; ++m) {
        const Eigen::MatrixXcd dginv = -c.ginv * mj.dg[static_cast<std::size_t>(m)] * c.ginv;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) {
                    cd s = 0.0;
                    for (int l = 0; l < n; ++l) {
                        const cd dlow = mj.ddg[static_cast<std::size_t>(m * n + k)](l, j) +
                                        mj.ddg[static_cast<std::size_t>(m * n + j)](l, k) -
                                        mj.ddg[static_cast<std::size_t>(m * n + l)](j, k);
                        s += dginv(i, l) * lowered[idx3(l, j, k)] + c.ginv(i, l) * dlow;
                    }
                    c.dgamma[static_cast<std::size_t>(m) * static_cast<std::size_t>(n * n * n) + idx3(i, j, k)] =
                        0.5 * s;
                }
            }
        }
    }
    return c;
}

std::vector<cd> riemann_from(const Connection& c)
{
    const int n = c.n;
    const auto n3 = static_cast<std::size_t>(n * n * n);
    auto G = [&](int i, int j, int k) { return c.gamma[static_cast<std::size_t>((i * n + j) * n + k)]; };
    auto dG = [&](int m, int i, int j, int k) {
        return c.dgamma[static_cast<std::size_t>(m) * n3 + static_cast<std::size_t>((i * n + j) * n + k)];
    };
    std::vector<cd> r(static_cast<std::size_t>(n * n * n * n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                for (int l = 0; l < n; ++l) {
                    cd s = dG(k, i, j, l) - dG(l, i, j, k);
                    for (int m = 0; m < n; ++m) {
                        s += G(i, m, k) * G(m, j, l) - G(i, m, l) * G(m, j, k);
                    }
                    r[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)] = s;
                }
            }
        }
    }
    return r;
}

// R(u, v, u, v) with the first index lowered.
cd lowered_riemann(const std::vector<cd>& r, const Eigen::MatrixXcd& g, const Eigen::VectorXcd& u,
                   const Eigen::VectorXcd& v)
{
    const int n = static_cast<int>(g.rows());
    cd s = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int m = 0; m < n; ++m) {
            if (g(i, m) == cd(0.0)) {
                continue;
            }
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) {
                    for (int l = 0; l < n; ++l) {
                        s += u(i) * g(i, m) * r[static_cast<std::size_t>(((m * n + j) * n + k) * n + l)] * v(j) *
                             u(k) * v(l);
                    }
                }
            }
        }
    }
    return s;
}

ChristoffelValue closed_form_2d(Family family, const Expression& h, cd x, cd v)
{
    const Jet2<cd> hj = h.jet(x);
    const cd v2 = v * v;
    ChristoffelValue c(2);
    if (is_anti_de_sitter(family)) {
        c(0, 0, 0) = hj.d1 / (hj.value + v2);
        c(0, 0, 1) = c(0, 1, 0) = (v2 - hj.value) / (v * (v2 + hj.value));
        c(1, 0, 0) = (v2 * v2 - hj.value * hj.value) / v;
        c(1, 1, 1) = -1.0 / v;
    } else {
        c(0, 0, 0) = hj.d1 / (hj.value - v2);
        c(0, 0, 1) = c(0, 1, 0) = (v2 + hj.value) / (v * (v2 - hj.value));
        c(1, 0, 0) = (hj.value * hj.value - v2 * v2) / v;
        c(1, 1, 1) = -1.0 / v;
    }
    return c;
}

// Real form of a holomorphic connection: real index a carries the real part
// of complex index a, index a + 2 the imaginary part.
ChristoffelValue kn_from_upsilon(const ChristoffelValue& ups)
{
    ChristoffelValue out(4);
    for (int I = 0; I < 4; ++I) {
        for (int Jx = 0; Jx < 4; ++Jx) {
            for (int K = 0; K < 4; ++K) {
                const int a = I % 2;
                const int b = Jx % 2;
                const int c = K % 2;
                const int imaginary_lower = Jx / 2 + K / 2;
                cd w = ups(a, b, c);
                for (int t = 0; t < imaginary_lower; ++t) {
                    w *= cd(0.0, 1.0);
                }
                out(I, Jx, K) = cd(I / 2 == 0 ? w.real() : w.imag());
            }
        }
    }
    return out;
}

} // namespace

MetricValue metric_at(const GeometrySpec& spec, const ChartPoint& p)
{
    check_domain(spec, p);
    MetricValue m;
    m.g = metric_jet(spec, p).g;
    m.signature = signature_of(spec, m.g);
    return m;
}

ChristoffelValue complex_christoffel(const Expression& h, cd z, cd chi)
{
    return closed_form_2d(Family::ComplexSphere, h, z, chi);
}

ChristoffelValue christoffel_unchecked(const GeometrySpec& spec, const ChartPoint& p, ChristoffelMethod method)
{
    if (method == ChristoffelMethod::FromJets) {
        const Connection c = connection_from(metric_jet(spec, p), false);
        ChristoffelValue out(c.n);
        out.symbols = c.gamma;
        return out;
    }
    if (spec.family == Family::KahlerNorden) {
        const cd z(p[0].real(), p[2].real());
        const cd chi(p[1].real(), p[3].real());
        return kn_from_upsilon(complex_christoffel(spec.h, z, chi));
    }
    return closed_form_2d(spec.family, spec.h, p[0], p[1]);
}

ChristoffelValue christoffel_at(const GeometrySpec& spec, const ChartPoint& p, ChristoffelMethod method)
{
    check_domain(spec, p);
    return christoffel_unchecked(spec, p, method);
}

std::vector<cd> riemann_at(const GeometrySpec& spec, const ChartPoint& p)
{
    check_domain(spec, p);
    return riemann_from(connection_from(metric_jet(spec, p), true));
}

cd sectional_curvature(const GeometrySpec& spec, const ChartPoint& p, const Eigen::VectorXcd& u,
                       const Eigen::VectorXcd& v)
{
    check_domain(spec, p);
    const MetricJet mj = metric_jet(spec, p);
    if (u.size() != mj.n || v.size() != mj.n) {
        throw Error(ErrorKind::InvalidArgument, "plane vectors must match the chart dimension");
    }
    const auto r = riemann_from(connection_from(mj, true));
    const cd guu = u.transpose() * mj.g * u;
    const cd gvv = v.transpose() * mj.g * v;
    const cd guv = u.transpose() * mj.g * v;
    const cd area = guu * gvv - guv * guv;
    if (std::abs(area) == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "degenerate plane");
    }
    return lowered_riemann(r, mj.g, u, v) / area;
}

CurvatureReport curvature_at(const GeometrySpec& spec, const ChartPoint& p)
{
    check_domain(spec, p);
    const MetricJet mj = metric_jet(spec, p);
    const Connection c = connection_from(mj, true);
    const auto r = riemann_from(c);
    const int n = mj.n;

    CurvatureReport rep;
    rep.family = spec.family;
    rep.point = p;
    rep.metric = mj.g;
    rep.ricci = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
            cd s = 0.0;
            for (int k = 0; k < n; ++k) {
                s += r[static_cast<std::size_t>(((k * n + j) * n + k) * n + l)];
            }
            rep.ricci(j, l) = s;
        }
    }
    rep.ricci_scalar = (c.ginv * rep.ricci).trace();

    if (n == 2) {
        Eigen::VectorXcd u = Eigen::VectorXcd::Zero(2);
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(2);
        u(0) = 1.0;
        v(1) = 1.0;
        const cd area = mj.g(0, 0) * mj.g(1, 1) - mj.g(0, 1) * mj.g(1, 0);
        rep.sectional = lowered_riemann(r, mj.g, u, v) / area;
    }

    cd num = 0.0;
    double den = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            num += std::conj(mj.g(i, j)) * rep.ricci(i, j);
            den += std::norm(mj.g(i, j));
        }
    }
    rep.einstein_eta = num / den;
    double resid = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            resid = std::max(resid, std::abs(rep.ricci(i, j) - rep.einstein_eta * mj.g(i, j)));
        }
    }
    rep.einstein_fit_residual = resid;
    return rep;
}

} // namespace geodesy
