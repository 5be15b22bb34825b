#include "geodesy/geodesics.hpp"

#include "geodesy/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace geodesy {

std::string_view termination_name(Termination t)
{
    switch (t) {
    case Termination::RangeEnd: return "RangeEnd";
    case Termination::DomainBoundary: return "DomainBoundary";
    case Termination::TurningPoint: return "TurningPoint";
    }
    return "?";
}

namespace {

bool complex_chart(Family f) { return f == Family::ComplexSphere; }

Eigen::VectorXd pack(Family family, const GeodesicState& st)
{
    const int n = chart_dimension(family);
    if (complex_chart(family)) {
        Eigen::VectorXd y(4 * n);
        for (int i = 0; i < n; ++i) {
            y(2 * i) = st.coords[i].real();
            y(2 * i + 1) = st.coords[i].imag();
            y(2 * n + 2 * i) = st.velocity[static_cast<std::size_t>(i)].real();
            y(2 * n + 2 * i + 1) = st.velocity[static_cast<std::size_t>(i)].imag();
        }
        return y;
    }
    Eigen::VectorXd y(2 * n);
    for (int i = 0; i < n; ++i) {
        y(i) = st.coords[i].real();
        y(n + i) = st.velocity[static_cast<std::size_t>(i)].real();
    }
    return y;
}

GeodesicState unpack(Family family, const Eigen::VectorXd& y, double s)
{
    const int n = chart_dimension(family);
    GeodesicState st;
    st.s = s;
    st.coords.dim = n;
    for (int i = 0; i < n; ++i) {
        if (complex_chart(family)) {
            st.coords[i] = cd(y(2 * i), y(2 * i + 1));
            st.velocity[static_cast<std::size_t>(i)] = cd(y(2 * n + 2 * i), y(2 * n + 2 * i + 1));
        } else {
            st.coords[i] = cd(y(i));
            st.velocity[static_cast<std::size_t>(i)] = cd(y(n + i));
        }
    }
    return st;
}

Eigen::VectorXd pack_derivative(Family family, const std::array<cd, 4>& vel, const std::array<cd, 4>& acc)
{
    GeodesicState st;
    st.coords.dim = chart_dimension(family);
    for (int i = 0; i < st.coords.dim; ++i) {
        st.coords[i] = vel[static_cast<std::size_t>(i)];
    }
    st.velocity = acc;
    return pack(family, st);
}

ChristoffelMethod effective_method(const GeometrySpec& spec, const GeodesicOptions& o)
{
    if (spec.family == Family::KahlerNorden && o.kn_from_jets) {
        return ChristoffelMethod::FromJets;
    }
    return o.method;
}

// Velocity of the first complex coordinate: x' (real), z' (complex), x' + i y' (KN).
cd first_velocity(Family family, const std::array<cd, 4>& v)
{
    if (family == Family::KahlerNorden) {
        return cd(v[0].real(), v[2].real());
    }
    return v[0];
}

} // namespace

std::array<cd, 4> geodesic_acceleration(const GeometrySpec& spec, const GeodesicState& state,
                                        ChristoffelMethod method)
{
    const ChristoffelValue gamma = christoffel_unchecked(spec, state.coords, method);
    const int n = gamma.dim;
    std::array<cd, 4> acc{};
    for (int i = 0; i < n; ++i) {
        cd s = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                s += gamma(i, j, k) * state.velocity[static_cast<std::size_t>(j)] *
                     state.velocity[static_cast<std::size_t>(k)];
            }
        }
        acc[static_cast<std::size_t>(i)] = -s;
    }
    return acc;
}

cd metric_norm(const GeometrySpec& spec, const GeodesicState& state)
{
    const MetricValue m = metric_at(spec, state.coords);
    cd s = 0.0;
    for (int i = 0; i < state.coords.dim; ++i) {
        for (int j = 0; j < state.coords.dim; ++j) {
            s += m.g(i, j) * state.velocity[static_cast<std::size_t>(i)] * state.velocity[static_cast<std::size_t>(j)];
        }
    }
    return s;
}

GeodesicState GeodesicTrajectory::state_at(double s) const
{
    return unpack(spec.family, dense.eval(s), s);
}

namespace {

// Distance to the singular set below which a collapsing step size is read as
// reaching the boundary of the domain.
constexpr double kBoundaryBand = 1e-3;

} // namespace

GeodesicTrajectory integrate_geodesic(const GeometrySpec& spec, const GeodesicState& initial, double s_end,
                                      const GeodesicOptions& o)
{
    if (!(o.tol > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    }
    check_domain(spec, initial.coords, o.guard);
    const Family family = spec.family;
    const ChristoffelMethod method = effective_method(spec, o);

    const OdeRhs rhs = [&](double s, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const GeodesicState st = unpack(family, y, s);
        dy = pack_derivative(family, st.velocity, geodesic_acceleration(spec, st, method));
    };
    const double dir0 = first_velocity(family, initial.velocity).real() >= 0.0 ? 1.0 : -1.0;
    const OdeGuard guard = [&](double s, const Eigen::VectorXd& y, std::vector<double>& out) {
        const GeodesicState st = unpack(family, y, s);
        out = domain_guards(spec, st.coords, o.guard);
        if (o.stop_at_turning_point) {
            const cd v = first_velocity(family, st.velocity);
            out.push_back(is_real_2d(family) ? dir0 * v.real() - o.turning_guard : std::abs(v) - o.turning_guard);
        }
        double speed = 0.0;
        for (const cd& c : st.velocity) {
            speed = std::max(speed, std::abs(c));
        }
        out.push_back(o.speed_bound - speed);
    };

    OdeOptions oo;
    oo.rtol = o.tol;
    oo.atol = o.tol;
    oo.h_max = o.max_step;
    GeodesicTrajectory traj;
    traj.spec = spec;
    traj.dense = integrate_dopri5(rhs, initial.s, pack(family, initial), s_end, oo, guard);
    switch (traj.dense.status) {
    case OdeStatus::Completed: traj.termination = Termination::RangeEnd; break;
    case OdeStatus::GuardTriggered: {
        const int domain_count = static_cast<int>(domain_guards(spec, initial.coords, o.guard).size());
        traj.termination = o.stop_at_turning_point && traj.dense.triggered_guard == domain_count
                               ? Termination::TurningPoint
                               : Termination::DomainBoundary;
        break;
    }
    case OdeStatus::StepSizeUnderflow: {
        // The step size collapses as the curve runs into the singular set;
        // that is the end of the chart, not a numerical failure.
        const auto g = domain_guards(spec, unpack(family, traj.dense.y.back(), traj.dense.t.back()).coords, o.guard);
        if (*std::min_element(g.begin(), g.end()) < kBoundaryBand) {
            traj.termination = Termination::DomainBoundary;
            break;
        }
        throw Error(ErrorKind::StepSizeUnderflow,
                    "step size underflow at s = " + std::to_string(traj.dense.t.back()));
    }
    case OdeStatus::StepBudgetExhausted:
        throw Error(ErrorKind::StepSizeUnderflow, "step budget exhausted at s = " + std::to_string(traj.dense.t.back()));
    }
    for (std::size_t k = 0; k < traj.dense.t.size(); ++k) {
        GeodesicState st = unpack(family, traj.dense.y[k], traj.dense.t[k]);
        traj.accelerations.push_back(geodesic_acceleration(spec, st, method));
        traj.samples.push_back(st);
    }
    return traj;
}

// ---------------------------------------------------------------------------

ComplexPath::ComplexPath(std::vector<cd> vertices) : vertices_(std::move(vertices))
{
    if (vertices_.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "a path needs at least two vertices");
    }
    for (std::size_t k = 0; k + 1 < vertices_.size(); ++k) {
        if (vertices_[k] == vertices_[k + 1]) {
            throw Error(ErrorKind::InvalidArgument, "consecutive path vertices must differ");
        }
        if (!std::isfinite(vertices_[k].real()) || !std::isfinite(vertices_[k].imag())) {
            throw Error(ErrorKind::InvalidArgument, "path vertices must be finite");
        }
    }
}

double ComplexPath::segment_begin(std::size_t k) const
{
    return static_cast<double>(k) / static_cast<double>(segments());
}

double ComplexPath::segment_end(std::size_t k) const
{
    return k + 1 == segments() ? 1.0 : static_cast<double>(k + 1) / static_cast<double>(segments());
}

std::size_t ComplexPath::segment_of(double s) const
{
    const double n = static_cast<double>(segments());
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(s * n), 0.0, n - 1.0));
    return k;
}

cd ComplexPath::velocity(std::size_t k) const
{
    return static_cast<double>(segments()) * (vertices_[k + 1] - vertices_[k]);
}

cd ComplexPath::point(double s) const
{
    const std::size_t k = segment_of(s);
    return vertices_[k] + (s - segment_begin(k)) * velocity(k);
}

double ComplexPath::length() const
{
    double l = 0.0;
    for (std::size_t k = 0; k + 1 < vertices_.size(); ++k) {
        l += std::abs(vertices_[k + 1] - vertices_[k]);
    }
    return l;
}

// ---------------------------------------------------------------------------

namespace {

struct Hermite {
    cd f;
    cd ft;
    cd ftt;
};

Hermite hermite5(double t0, double t1, cd f0, cd d0, cd s0, cd f1, cd d1, cd s1, double t)
{
    const double H = t1 - t0;
    const double u = (t - t0) / H;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double u4 = u3 * u;
    const double u5 = u4 * u;
    const double h0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
    const double h1 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double h2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
    const double h3 = 0.5 * (u3 - 2 * u4 + u5);
    const double h4 = -4 * u3 + 7 * u4 - 3 * u5;
    const double h5 = 10 * u3 - 15 * u4 + 6 * u5;
    const double h0d = -30 * u2 + 60 * u3 - 30 * u4;
    const double h1d = 1 - 18 * u2 + 32 * u3 - 15 * u4;
    const double h2d = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4);
    const double h3d = 0.5 * (3 * u2 - 8 * u3 + 5 * u4);
    const double h4d = -12 * u2 + 28 * u3 - 15 * u4;
    const double h5d = 30 * u2 - 60 * u3 + 30 * u4;
    const double h0dd = -60 * u + 180 * u2 - 120 * u3;
    const double h1dd = -36 * u + 96 * u2 - 60 * u3;
    const double h2dd = 0.5 * (2 - 18 * u + 36 * u2 - 20 * u3);
    const double h3dd = 0.5 * (6 * u - 24 * u2 + 20 * u3);
    const double h4dd = -24 * u + 84 * u2 - 60 * u3;
    const double h5dd = 60 * u - 180 * u2 + 120 * u3;
    const cd a = H * d0;
    const cd b = H * H * s0;
    const cd c = H * H * s1;
    const cd d = H * d1;
    Hermite r;
    r.f = f0 * h0 + a * h1 + b * h2 + c * h3 + d * h4 + f1 * h5;
    r.ft = (f0 * h0d + a * h1d + b * h2d + c * h3d + d * h4d + f1 * h5d) / H;
    r.ftt = (f0 * h0dd + a * h1dd + b * h2dd + c * h3dd + d * h4dd + f1 * h5dd) / (H * H);
    return r;
}

// Degree-7 Hermite interpolation from value and three derivatives at both ends.
Hermite hermite7(double t0, double t1, const std::array<cd, 4>& a, const std::array<cd, 4>& b, double t)
{
    static const Eigen::Matrix4d inv = [] {
        Eigen::Matrix4d m;
        // Rows: p, p', p'', p''' at u = 1 of u^4 .. u^7.
        m << 1, 1, 1, 1, 4, 5, 6, 7, 12, 20, 30, 42, 24, 60, 120, 210;
        return Eigen::Matrix4d(m.inverse());
    }();
    const double H = t1 - t0;
    std::array<cd, 8> c{a[0], H * a[1], H * H * a[2] / 2.0, H * H * H * a[3] / 6.0, {}, {}, {}, {}};
    const std::array<cd, 4> target{b[0], H * b[1], H * H * b[2], H * H * H * b[3]};
    std::array<cd, 4> rhs{};
    for (int r = 0; r < 4; ++r) {
        cd known = 0.0;
        for (int k = 0; k < 4; ++k) {
            double f = 1.0;
            for (int q = 0; q < r; ++q) {
                f *= static_cast<double>(k - q);
            }
            known += f * c[static_cast<std::size_t>(k)];
        }
        rhs[static_cast<std::size_t>(r)] = target[static_cast<std::size_t>(r)] - known;
    }
    for (int i = 0; i < 4; ++i) {
        cd v = 0.0;
        for (int j = 0; j < 4; ++j) {
            v += inv(i, j) * rhs[static_cast<std::size_t>(j)];
        }
        c[static_cast<std::size_t>(i + 4)] = v;
    }
    const double u = (t - t0) / H;
    cd p = 0.0, pd = 0.0, pdd = 0.0;
    for (int k = 7; k >= 0; --k) {
        pdd = pdd * u + 2.0 * pd;
        pd = pd * u + p;
        p = p * u + c[static_cast<std::size_t>(k)];
    }
    return {p, pd / H, pdd / (H * H)};
}

bool has_third(const ExplicitNode& n) { return std::isfinite(n.third.real()) && std::isfinite(n.third.imag()); }

cd value_t(const ExplicitNode& n) { return n.slope * n.position_t; }
cd value_tt(const ExplicitNode& n) { return n.second * n.position_t * n.position_t + n.slope * n.position_tt; }
cd value_ttt(const ExplicitNode& n)
{
    const cd zt = n.position_t;
    return n.third * zt * zt * zt + 3.0 * n.second * zt * n.position_tt + n.slope * n.position_ttt;
}

} // namespace

cd ExplicitGeodesic::base_position() const { return at(base_t).position; }

ExplicitSample ExplicitGeodesic::at(double t) const
{
    if (nodes.empty() || !contains(t)) {
        throw Error(ErrorKind::OutsideSupport, "parameter " + std::to_string(t) + " outside the explicit geodesic's support [" +
                                                   (nodes.empty() ? std::string("empty") : std::to_string(t_min()) + ", " +
                                                                                              std::to_string(t_max())) +
                                                   "]");
    }
    // Last node with node.t <= t.
    auto it = std::upper_bound(nodes.begin(), nodes.end(), t, [](double v, const ExplicitNode& n) { return v < n.t; });
    std::size_t k = static_cast<std::size_t>(std::distance(nodes.begin(), it)) - 1;
    if (nodes[k].t == t) {
        return nodes[k];
    }
    const ExplicitNode& a = nodes[k];
    const ExplicitNode& b = nodes[k + 1];
    Hermite pos;
    Hermite val;
    if (has_third(a) && has_third(b)) {
        pos = hermite7(a.t, b.t, {a.position, a.position_t, a.position_tt, a.position_ttt},
                       {b.position, b.position_t, b.position_tt, b.position_ttt}, t);
        val = hermite7(a.t, b.t, {a.value, value_t(a), value_tt(a), value_ttt(a)},
                       {b.value, value_t(b), value_tt(b), value_ttt(b)}, t);
    } else {
        pos = hermite5(a.t, b.t, a.position, a.position_t, a.position_tt, b.position, b.position_t,
                       b.position_tt, t);
        val = hermite5(a.t, b.t, a.value, value_t(a), value_tt(a), b.value, value_t(b), value_tt(b), t);
    }
    ExplicitSample s;
    s.t = t;
    s.position = pos.f;
    s.position_t = pos.ft;
    s.position_tt = pos.ftt;
    s.value = val.f;
    s.slope = val.ft / pos.ft;
    s.second = (val.ftt - s.slope * pos.ftt) / (pos.ft * pos.ft);
    return s;
}

std::vector<double> ExplicitGeodesic::breakpoints() const
{
    std::vector<double> b;
    for (const auto& n : nodes) {
        if (b.empty() || b.back() != n.t) {
            b.push_back(n.t);
        }
    }
    return b;
}

ExplicitGeodesic sample_explicit(Family family, const Expression& h, double lo, double hi, double base, int n,
                                 const ValueFunction& f)
{
    if (!(hi > lo) || n < 1 || base < lo || base > hi) {
        throw Error(ErrorKind::InvalidArgument, "invalid sampling interval");
    }
    ExplicitGeodesic g;
    g.family = family;
    g.h = h;
    g.base_t = base;
    for (int i = 0; i <= n; ++i) {
        const double t = i == n ? hi : lo + (hi - lo) * i / n;
        const auto v = f(cd(t));
        g.nodes.push_back({t, cd(t), cd(1.0), cd(0.0), v[0], v[1], v[2]});
    }
    return g;
}

ExplicitGeodesic sample_explicit(const Expression& h, const ComplexPath& path, int n, const ValueFunction& f)
{
    ExplicitGeodesic g;
    g.family = Family::ComplexSphere;
    g.h = h;
    g.base_t = 0.0;
    for (std::size_t k = 0; k < path.segments(); ++k) {
        const double a = path.segment_begin(k);
        const double b = path.segment_end(k);
        for (int i = 0; i <= n; ++i) {
            const double t = i == n ? b : a + (b - a) * i / n;
            const cd z = path.vertices()[k] + (t - a) * path.velocity(k);
            const auto v = f(z);
            g.nodes.push_back({t, z, path.velocity(k), cd(0.0), v[0], v[1], v[2]});
        }
    }
    return g;
}

cd explicit_rhs(Family family, const Jet2<cd>& hj, cd v, cd slope)
{
    const cd h = hj.value;
    const cd v2 = v * v;
    if (is_anti_de_sitter(family)) {
        cd r = -(v2 * v2 - h * h) / v;
        if (slope != cd(0.0)) {
            const cd den = v2 + h;
            if (den == cd(0.0)) {
                throw Error(ErrorKind::DenominatorVanishes, "Psi^2 + h vanishes");
            }
            r += (3.0 * v2 - h) / den * slope * slope / v + hj.d1 * slope / den;
        }
        return r;
    }
    cd r = (v2 * v2 - h * h) / v;
    if (slope != cd(0.0)) {
        const cd den = v2 - h;
        if (den == cd(0.0)) {
            throw Error(ErrorKind::DenominatorVanishes, "value^2 - h vanishes");
        }
        r += (3.0 * v2 + h) / den * slope * slope / v - hj.d1 * slope / den;
    }
    return r;
}

cd explicit_third(Family family, const Jet2<cd>& hj, cd v, cd slope, cd second)
{
    using J = Jet2<cd>;
    const J h{hj.value, hj.d1, cd(0.0)};
    const J dh{hj.d1, hj.d2, cd(0.0)};
    const J x{v, slope, cd(0.0)};
    const J p{slope, second, cd(0.0)};
    const J x2 = x * x;
    const cd sign = is_anti_de_sitter(family) ? cd(-1.0) : cd(1.0);
    // explicit_rhs with h -> -h in the anti-de Sitter case; there only the
    // slope-free term changes sign.
    const J hs = sign * h;
    const J dhs = sign * dh;
    J r = sign * ((x2 * x2 - hs * hs) / x);
    if (slope != cd(0.0) || second != cd(0.0)) {
        const J den = x2 - hs;
        if (den.value == cd(0.0)) {
            throw Error(ErrorKind::DenominatorVanishes, "value^2 - h vanishes");
        }
        r = r + (cd(3.0) * x2 + hs) / den * p * p / x - dhs * p / den;
    }
    return r.d1;
}

cd explicit_residual(Family family, const Jet2<cd>& h, cd value, cd slope, cd second)
{
    return explicit_rhs(family, h, value, slope) - second;
}

namespace {

Termination from_status(const DenseSolution& d)
{
    switch (d.status) {
    case OdeStatus::Completed: return Termination::RangeEnd;
    case OdeStatus::GuardTriggered: return Termination::DomainBoundary;
    case OdeStatus::StepSizeUnderflow:
        throw Error(ErrorKind::StepSizeUnderflow, "step size underflow at t = " + std::to_string(d.t.back()));
    case OdeStatus::StepBudgetExhausted:
        throw Error(ErrorKind::StepSizeUnderflow, "step budget exhausted at t = " + std::to_string(d.t.back()));
    }
    return Termination::RangeEnd;
}

// Accepted step end points. The continuous output is less accurate than the
// step values, and its noise is amplified by the second derivative of the
// Hermite interpolant, so no extra points are inserted.
std::vector<std::pair<double, Eigen::VectorXd>> step_points(const DenseSolution& d)
{
    std::vector<std::pair<double, Eigen::VectorXd>> out;
    for (std::size_t k = 0; k < d.t.size(); ++k) {
        out.emplace_back(d.t[k], d.y[k]);
    }
    return out;
}

double singular_distance(Family family, cd h, cd v)
{
    return is_anti_de_sitter(family) ? std::abs(v * v + h) : std::abs(v * v - h);
}

} // namespace

ExplicitGeodesic integrate_explicit(const GeometrySpec& spec, double x0, double value0, double slope0, double lo,
                                    double hi, const ExplicitOptions& o)
{
    const Family family = spec.family;
    if (!is_real_2d(family)) {
        throw Error(ErrorKind::InvalidArgument, "the complex families are integrated along a path");
    }
    if (!(hi > lo) || x0 < lo || x0 > hi) {
        throw Error(ErrorKind::InvalidArgument, "support must be an interval containing the base point");
    }
    if (!(value0 > 0.0)) {
        throw Error(ErrorKind::OutOfDomain, "initial value must be positive");
    }
    if (singular_distance(family, spec.h.value(cd(x0)), cd(value0)) <= o.guard) {
        throw Error(ErrorKind::StartOnSingularSet, "initial value lies on the singular set");
    }

    const OdeRhs rhs = [&](double x, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(2);
        dy(0) = y(1);
        dy(1) = explicit_rhs(family, spec.h.jet(cd(x)), cd(y(0)), cd(y(1))).real();
    };
    const OdeGuard guard = [&](double x, const Eigen::VectorXd& y, std::vector<double>& out) {
        out = {y(0), singular_distance(family, spec.h.value(cd(x)), cd(y(0))) - o.guard,
               o.value_bound - std::abs(y(0)), o.value_bound - std::abs(y(1))};
    };
    OdeOptions oo;
    oo.rtol = o.tol;
    oo.atol = o.tol;
    oo.h_max = (hi - lo) * o.max_step_fraction;
    Eigen::VectorXd y0(2);
    y0 << value0, slope0;
    const DenseSolution fwd = integrate_dopri5(rhs, x0, y0, hi, oo, guard);
    const DenseSolution bwd = integrate_dopri5(rhs, x0, y0, lo, oo, guard);

    ExplicitGeodesic g;
    g.family = family;
    g.h = spec.h;
    g.base_t = x0;
    g.termination_hi = from_status(fwd);
    g.termination_lo = from_status(bwd);
    auto node = [&](double x, const Eigen::VectorXd& y) {
        const Jet2<cd> hj = spec.h.jet(cd(x));
        const cd second = explicit_rhs(family, hj, cd(y(0)), cd(y(1)));
        ExplicitNode n{x, cd(x), cd(1.0), cd(0.0), cd(y(0)), cd(y(1)), second};
        n.third = explicit_third(family, hj, n.value, n.slope, second);
        return n;
    };
    const auto back = step_points(bwd);
    for (std::size_t k = back.size(); k-- > 1;) {
        g.nodes.push_back(node(back[k].first, back[k].second));
    }
    for (const auto& [x, y] : step_points(fwd)) {
        g.nodes.push_back(node(x, y));
    }
    return g;
}

ExplicitGeodesic integrate_explicit(const GeometrySpec& spec, const ComplexPath& path, cd value0, cd slope0,
                                    const ExplicitOptions& o)
{
    if (spec.family != Family::ComplexSphere && spec.family != Family::KahlerNorden) {
        throw Error(ErrorKind::InvalidArgument, "path integration needs a complex-mode family");
    }
    if (std::abs(value0) <= o.guard) {
        throw Error(ErrorKind::OutOfDomain, "initial value must be nonzero");
    }
    if (singular_distance(Family::ComplexSphere, spec.h.value(path.start()), value0) <= o.guard) {
        throw Error(ErrorKind::StartOnSingularSet, "initial value lies on the singular set");
    }

    ExplicitGeodesic g;
    g.family = Family::ComplexSphere;
    g.h = spec.h;
    g.base_t = 0.0;
    OdeOptions oo;
    oo.rtol = o.tol;
    oo.atol = o.tol;
    oo.h_max = o.max_step_fraction;
    Eigen::VectorXd y(4);
    y << value0.real(), value0.imag(), slope0.real(), slope0.imag();
    for (std::size_t k = 0; k < path.segments(); ++k) {
        const cd zs = path.velocity(k);
        const double a = path.segment_begin(k);
        const cd za = path.vertices()[k];
        auto zeta = [&](double t) { return za + (t - a) * zs; };
        const OdeRhs rhs = [&](double t, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
            const cd v(s(0), s(1));
            const cd p(s(2), s(3));
            const cd dv = p * zs;
            const cd dp = explicit_rhs(Family::ComplexSphere, spec.h.jet(zeta(t)), v, p) * zs;
            ds.resize(4);
            ds << dv.real(), dv.imag(), dp.real(), dp.imag();
        };
        const OdeGuard guard = [&](double t, const Eigen::VectorXd& s, std::vector<double>& out) {
            const cd v(s(0), s(1));
            const cd p(s(2), s(3));
            out = {std::abs(v) - o.guard, singular_distance(Family::ComplexSphere, spec.h.value(zeta(t)), v) - o.guard,
                   o.value_bound - std::abs(v), o.value_bound - std::abs(p)};
        };
        const DenseSolution sol = integrate_dopri5(rhs, a, y, path.segment_end(k), oo, guard);
        for (const auto& [t, s] : step_points(sol)) {
            const cd z = zeta(t);
            const cd v(s(0), s(1));
            const cd p(s(2), s(3));
            const Jet2<cd> hj = spec.h.jet(z);
            const cd second = explicit_rhs(Family::ComplexSphere, hj, v, p);
            ExplicitNode n{t, z, zs, cd(0.0), v, p, second};
            n.third = explicit_third(Family::ComplexSphere, hj, v, p, second);
            g.nodes.push_back(n);
        }
        g.termination_hi = from_status(sol);
        if (g.termination_hi != Termination::RangeEnd) {
            break;
        }
        y = sol.y.back();
    }
    return g;
}

namespace {

// Trajectory samples with extra points from the continuous output inside each
// step, so that the explicit form is interpolated on a finer grid.
std::pair<std::vector<GeodesicState>, std::vector<std::array<cd, 4>>> refine_samples(const GeodesicTrajectory& traj,
                                                                                    int subdivisions)
{
    const ChristoffelMethod method =
        traj.spec.family == Family::KahlerNorden ? ChristoffelMethod::FromJets : ChristoffelMethod::ClosedForm;
    std::pair<std::vector<GeodesicState>, std::vector<std::array<cd, 4>>> out;
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        out.first.push_back(traj.samples[k]);
        out.second.push_back(traj.accelerations[k]);
        if (k + 1 == traj.samples.size()) {
            break;
        }
        const double a = traj.samples[k].s;
        const double b = traj.samples[k + 1].s;
        for (int i = 1; i < subdivisions; ++i) {
            const GeodesicState st = traj.state_at(a + (b - a) * i / subdivisions);
            out.first.push_back(st);
            out.second.push_back(geodesic_acceleration(traj.spec, st, method));
        }
    }
    return out;
}

} // namespace

// Near a turning point the explicit form becomes ill-conditioned; it is cut
// off once the slope exceeds this bound, as in integrate_explicit.
constexpr double kSlopeBound = 1e2;

ExplicitGeodesic explicit_from_trajectory(const GeodesicTrajectory& traj)
{
    const Family family = traj.spec.family;
    ExplicitGeodesic g;
    g.h = traj.spec.h;
    g.termination_hi = traj.termination;
    const auto& samples = traj.samples;
    if (samples.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty trajectory");
    }

    if (is_real_2d(family)) {
        g.family = family;
        const double xd0 = samples.front().velocity[0].real();
        const double speed = std::abs(xd0) + std::abs(samples.front().velocity[1].real());
        if (std::abs(xd0) <= 1e-14 * std::max(1.0, speed)) {
            throw Error(ErrorKind::TurningPointAtStart, "x' vanishes at the start: no explicit form exists locally");
        }
        const double dir = xd0 > 0.0 ? 1.0 : -1.0;
        // Real nodes carry third derivatives and are interpolated with degree
        // 7, so step endpoints suffice; extra nodes only add interpolation noise.
        const auto refined = refine_samples(traj, 1);
        for (std::size_t k = 0; k < refined.first.size(); ++k) {
            const auto& st = refined.first[k];
            const double xd = st.velocity[0].real();
            if (dir * xd <= 0.0) {
                g.termination_hi = Termination::TurningPoint;
                break;
            }
            const double x = st.coords[0].real();
            if (!g.nodes.empty() && dir * (x - g.nodes.back().t) <= 0.0) {
                continue;
            }
            const double vd = st.velocity[1].real();
            const double xdd = refined.second[k][0].real();
            const double vdd = refined.second[k][1].real();
            const double slope = vd / xd;
            if (std::abs(slope) > kSlopeBound) {
                g.termination_hi = Termination::TurningPoint;
                break;
            }
            const double second = (vdd * xd - vd * xdd) / (xd * xd * xd);
            ExplicitNode n{x, cd(x), cd(1.0), cd(0.0), st.coords[1], cd(slope), cd(second)};
            n.third = explicit_third(family, traj.spec.h.jet(cd(x)), n.value, n.slope, n.second);
            g.nodes.push_back(n);
        }
        g.base_t = g.nodes.front().t;
        if (dir < 0.0) {
            std::reverse(g.nodes.begin(), g.nodes.end());
            g.termination_lo = g.termination_hi;
            g.termination_hi = Termination::RangeEnd;
        }
        return g;
    }

    g.family = Family::ComplexSphere;
    auto split = [&](const GeodesicState& st, const std::array<cd, 4>& acc) {
        if (family == Family::KahlerNorden) {
            return std::array<cd, 6>{cd(st.coords[0].real(), st.coords[2].real()),
                                     cd(st.coords[1].real(), st.coords[3].real()),
                                     cd(st.velocity[0].real(), st.velocity[2].real()),
                                     cd(st.velocity[1].real(), st.velocity[3].real()),
                                     cd(acc[0].real(), acc[2].real()), cd(acc[1].real(), acc[3].real())};
        }
        return std::array<cd, 6>{st.coords[0], st.coords[1], st.velocity[0], st.velocity[1], acc[0], acc[1]};
    };
    const auto first = split(samples.front(), traj.accelerations.front());
    if (std::abs(first[2]) <= 1e-14 * std::max(1.0, std::abs(first[3]))) {
        throw Error(ErrorKind::TurningPointAtStart, "z' vanishes at the start: no explicit form exists locally");
    }
    g.base_t = samples.front().s;
    const auto refined = refine_samples(traj, 4);
    for (std::size_t k = 0; k < refined.first.size(); ++k) {
        const auto c = split(refined.first[k], refined.second[k]);
        if (std::abs(c[2]) <= 1e-12 * std::max(1.0, std::abs(c[3]))) {
            g.termination_hi = Termination::TurningPoint;
            break;
        }
        const cd slope = c[3] / c[2];
        if (std::abs(slope) > kSlopeBound) {
            g.termination_hi = Termination::TurningPoint;
            break;
        }
        const cd second = (c[5] - slope * c[4]) / (c[2] * c[2]);
        g.nodes.push_back({refined.first[k].s, c[0], c[2], c[4], c[1], slope, second});
    }
    return g;
}

cd geodesic_residual(const GeometrySpec& spec, const ExplicitGeodesic& g, double t)
{
    const ExplicitSample s = g.at(t);
    const Family family = spec.family == Family::KahlerNorden ? Family::ComplexSphere : spec.family;
    return explicit_residual(family, spec.h.jet(s.position), s.value, s.slope, s.second);
}

double max_geodesic_residual(const GeometrySpec& spec, const ExplicitGeodesic& g)
{
    double m = 0.0;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        m = std::max(m, std::abs(geodesic_residual(spec, g, g.nodes[k].t)));
        if (k + 1 < g.nodes.size() && g.nodes[k + 1].t > g.nodes[k].t) {
            m = std::max(m, std::abs(geodesic_residual(spec, g, 0.5 * (g.nodes[k].t + g.nodes[k + 1].t))));
        }
    }
    return m;
}

} // namespace geodesy
