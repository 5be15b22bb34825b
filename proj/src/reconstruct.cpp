#include "geodesy/reconstruct.hpp"

#include "geodesy/error.hpp"
#include "geodesy/ode.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace geodesy {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();
const cd kI(0.0, 1.0);

bool finite(cd v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Root of `radicand` closest to `hint`.
cd nearest_root(cd radicand, cd hint)
{
    const cd r = std::sqrt(radicand);
    return std::abs(r - hint) <= std::abs(-r - hint) ? r : -r;
}

struct ThetaEval {
    cd top;
    cd top_d1;
    cd bot;
    cd bot_d1;
    cd radicand;
    cd root;
    cd denominator;
};

// Theta_top / Theta_bot from value, slope and second derivative at one point.
// `root` selects the branch of the square root (nullopt: principal).
ThetaEval eval_theta(Family family, const Expression& h, const ExplicitSample& s, std::optional<cd> root_hint)
{
    const Jet2<cd> hj = h.jet(s.position);
    const Jet2<cd> v{s.value, s.slope, s.second};
    const Jet2<cd> vp{s.slope, s.second, cd(0.0)};
    const bool ads = is_anti_de_sitter(family);
    const Jet2<cd> d = ads ? hj + v * v : hj - v * v;
    const Jet2<cd> rad = ads ? d * d - vp * vp : d * d + vp * vp;
    if (d.value == cd(0.0)) {
        throw Error(ErrorKind::DenominatorVanishes, "Theta denominator vanishes at t = " + std::to_string(s.t));
    }
    const cd root = root_hint ? nearest_root(rad.value, *root_hint) : std::sqrt(rad.value);
    const Jet2<cd> rj = root == cd(0.0) ? Jet2<cd>::constant(cd(0.0)) : sqrt_with_root(rad, root);
    Jet2<cd> top;
    Jet2<cd> bot;
    if (ads) {
        top = -(v * (vp + kI * rj)) / d;
        bot = -(v * (vp - kI * rj)) / d;
    } else {
        top = v * (vp - rj) / d;
        bot = v * (vp + rj) / d;
    }
    return {top.value, top.d1, bot.value, bot.d1, rad.value, root, d.value};
}

cd radicand_at(Family family, const Expression& h, const ExplicitSample& s)
{
    const cd hv = h.value(s.position);
    const cd v2 = s.value * s.value;
    if (is_anti_de_sitter(family)) {
        const cd d = hv + v2;
        return d * d - s.slope * s.slope;
    }
    const cd d = hv - v2;
    return d * d + s.slope * s.slope;
}

std::size_t base_index(const std::vector<ExplicitNode>& nodes, double base_t)
{
    std::size_t best = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (std::abs(nodes[k].t - base_t) < std::abs(nodes[best].t - base_t)) {
            best = k;
        }
    }
    return best;
}

// Interval index k with nodes[k].t <= t <= nodes[k+1].t, nodes[k].t < nodes[k+1].t.
std::size_t bracket(const std::vector<double>& ts, double t)
{
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t k = it == ts.begin() ? 0 : static_cast<std::size_t>(std::distance(ts.begin(), it)) - 1;
    if (k + 1 >= ts.size()) {
        k = ts.size() >= 2 ? ts.size() - 2 : 0;
    }
    while (k > 0 && ts[k + 1] == ts[k]) {
        --k;
    }
    return k;
}

std::vector<double> node_times(const ExplicitGeodesic& g)
{
    std::vector<double> ts;
    ts.reserve(g.nodes.size());
    for (const auto& n : g.nodes) {
        ts.push_back(n.t);
    }
    return ts;
}

} // namespace

// ---------------------------------------------------------------------------

DenseFunction::DenseFunction(Eval eval, double lo, double hi) : eval_(std::move(eval)), lo_(lo), hi_(hi)
{
    if (!(hi >= lo)) {
        throw Error(ErrorKind::InvalidArgument, "empty function support");
    }
}

FunctionSample DenseFunction::operator()(double t) const
{
    if (!contains(t)) {
        throw Error(ErrorKind::OutsideSupport, "t = " + std::to_string(t) + " outside [" + std::to_string(lo_) + ", " +
                                                   std::to_string(hi_) + "]");
    }
    return eval_(t);
}

DenseFunction real_function(double lo, double hi, std::function<std::array<cd, 3>(double)> f)
{
    return DenseFunction(
        [f = std::move(f)](double t) {
            const auto v = f(t);
            return FunctionSample{cd(t), v[0], v[1], v[2]};
        },
        lo, hi);
}

// ---------------------------------------------------------------------------

cd ThetaPair::radicand(double t) const { return radicand_at(family, geodesic.h, geodesic.at(t)); }

cd ThetaPair::root(double t) const
{
    const std::vector<double>& ts = node_t;
    const std::size_t k = bracket(ts, t);
    cd hint = node_roots[k];
    if (ts[k + 1] > ts[k]) {
        const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        hint = (1.0 - w) * node_roots[k] + w * node_roots[k + 1];
    }
    return nearest_root(radicand(t), hint);
}

FunctionSample ThetaPair::top(double t) const
{
    const ExplicitSample s = geodesic.at(t);
    const ThetaEval e = eval_theta(family, geodesic.h, s, root(t));
    return {s.position, e.top, e.top_d1, cd(kNaN)};
}

FunctionSample ThetaPair::bottom(double t) const
{
    const ExplicitSample s = geodesic.at(t);
    const ThetaEval e = eval_theta(family, geodesic.h, s, root(t));
    return {s.position, e.bot, e.bot_d1, cd(kNaN)};
}

DenseFunction ThetaPair::top_function() const
{
    return DenseFunction([self = *this](double t) { return self.top(t); }, t_min(), t_max());
}

DenseFunction ThetaPair::bottom_function() const
{
    return DenseFunction([self = *this](double t) { return self.bottom(t); }, t_min(), t_max());
}

ThetaPair theta_from_geodesic(const GeometrySpec& spec, const ExplicitGeodesic& g)
{
    if (g.nodes.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty explicit geodesic");
    }
    ThetaPair tp;
    tp.family = spec.family == Family::KahlerNorden ? Family::ComplexSphere : spec.family;
    tp.geodesic = g;
    tp.geodesic.h = spec.h;
    const auto& nodes = g.nodes;
    const std::size_t b = base_index(nodes, g.base_t);
    std::vector<cd> rad(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        rad[k] = radicand_at(tp.family, spec.h, nodes[k]);
        if (is_anti_de_sitter(tp.family) ? spec.h.value(nodes[k].position) + nodes[k].value * nodes[k].value == cd(0.0)
                                         : spec.h.value(nodes[k].position) - nodes[k].value * nodes[k].value == cd(0.0)) {
            throw Error(ErrorKind::DenominatorVanishes,
                        "Theta denominator vanishes at t = " + std::to_string(nodes[k].t));
        }
        tp.radicand_sup = std::max(tp.radicand_sup, std::abs(rad[k]));
    }
    tp.coincident = tp.radicand_sup < 1e-10;
    tp.node_roots.assign(nodes.size(), cd(0.0));
    tp.node_t = node_times(g);
    tp.base_root = std::sqrt(rad[b]);
    tp.node_roots[b] = tp.base_root;
    auto step = [&](std::size_t from, std::size_t to) {
        tp.node_roots[to] = nearest_root(rad[to], tp.node_roots[from]);
        const bool real_sign_change =
            is_real_2d(tp.family) && rad[to].real() * rad[from].real() < 0.0;
        const bool tiny = std::abs(rad[to]) < 1e-12 * (1.0 + tp.radicand_sup);
        if ((real_sign_change || tiny) && !tp.coincident) {
            tp.flagged_nodes.push_back(nodes[to].t);
        }
    };
    for (std::size_t k = b + 1; k < nodes.size(); ++k) {
        step(k - 1, k);
    }
    for (std::size_t k = b; k-- > 0;) {
        step(k + 1, k);
    }
    std::sort(tp.flagged_nodes.begin(), tp.flagged_nodes.end());
    return tp;
}

// ---------------------------------------------------------------------------

namespace {

struct ThetaIntegrand {
    const ThetaPair* theta;
    bool top;

    cd operator()(double t) const
    {
        const ExplicitSample s = theta->geodesic.at(t);
        const FunctionSample f = top ? theta->top(t) : theta->bottom(t);
        return f.value * s.position_t;
    }
};

cd integrate_segment(const ThetaPair& theta, bool top, double a, double b, double tol, double& err)
{
    if (a == b) {
        err = 0.0;
        return cd(0.0);
    }
    // Integrate over the unit interval: Boost compares the unscaled error
    // estimate with the scaled integral, which stalls on short intervals.
    const ThetaIntegrand f{&theta, top};
    const double len = b - a;
    double e = 0.0;
    const cd r = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double s) { return f(a + s * len) * len; }, 0.0, 1.0, 8, tol, &e);
    err = e;
    return r;
}

} // namespace

cd SolutionBasis::log_top(double t) const
{
    if (!theta.geodesic.contains(t)) {
        throw Error(ErrorKind::OutsideSupport, "t = " + std::to_string(t) + " outside the basis support");
    }
    auto cum = [&](double at) {
        const std::size_t k = bracket(node_t, at);
        double err = 0.0;
        return cumulative_top[k] + integrate_segment(theta, true, node_t[k], at, tol, err);
    };
    return cum(t) - cum(base_t);
}

cd SolutionBasis::log_bot(double t) const
{
    if (!theta.geodesic.contains(t)) {
        throw Error(ErrorKind::OutsideSupport, "t = " + std::to_string(t) + " outside the basis support");
    }
    auto cum = [&](double at) {
        const std::size_t k = bracket(node_t, at);
        double err = 0.0;
        return cumulative_bot[k] + integrate_segment(theta, false, node_t[k], at, tol, err);
    };
    return cum(t) - cum(base_t);
}

FunctionSample SolutionBasis::top(double t) const
{
    const FunctionSample th = theta.top(t);
    const cd u = std::exp(log_top(t));
    return {th.position, u, th.value * u, (th.d1 + th.value * th.value) * u};
}

FunctionSample SolutionBasis::bottom(double t) const
{
    const FunctionSample th = theta.bottom(t);
    const cd u = std::exp(log_bot(t));
    return {th.position, u, th.value * u, (th.d1 + th.value * th.value) * u};
}

FunctionSample SolutionBasis::combination(cd a, cd b, double t) const
{
    const FunctionSample p = top(t);
    const FunctionSample q = bottom(t);
    return {p.position, a * p.value + b * q.value, a * p.d1 + b * q.d1, a * p.d2 + b * q.d2};
}

cd SolutionBasis::wronskian(double t) const
{
    const FunctionSample p = top(t);
    const FunctionSample q = bottom(t);
    return p.value * q.d1 - p.d1 * q.value;
}

DenseFunction SolutionBasis::top_function() const
{
    return DenseFunction([self = *this](double t) { return self.top(t); }, t_min(), t_max());
}

DenseFunction SolutionBasis::bottom_function() const
{
    return DenseFunction([self = *this](double t) { return self.bottom(t); }, t_min(), t_max());
}

DenseFunction SolutionBasis::combination_function(cd a, cd b) const
{
    return DenseFunction([self = *this, a, b](double t) { return self.combination(a, b, t); }, t_min(), t_max());
}

SolutionBasis reconstruct_basis(const GeometrySpec& spec, const ExplicitGeodesic& g, const ReconstructOptions& o)
{
    if (!(o.tol > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    }
    if (o.auto_check) {
        const double r = max_geodesic_residual(spec, g);
        if (!(r <= o.residual_limit)) {
            throw Error(ErrorKind::ResidualTooLarge, "curve is not a geodesic: residual " + std::to_string(r) +
                                                         " exceeds " + std::to_string(o.residual_limit));
        }
    }
    SolutionBasis basis;
    basis.theta = theta_from_geodesic(spec, g);
    basis.tol = o.tol;
    basis.base_t = o.base_t.value_or(g.base_t);
    if (!g.contains(basis.base_t)) {
        throw Error(ErrorKind::OutsideSupport, "base point outside the geodesic's support");
    }
    basis.node_t = node_times(g);
    const std::size_t n = basis.node_t.size();
    basis.cumulative_top.assign(n, cd(0.0));
    basis.cumulative_bot.assign(n, cd(0.0));
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double et = 0.0;
        double eb = 0.0;
        const cd it = integrate_segment(basis.theta, true, basis.node_t[k], basis.node_t[k + 1], o.tol, et);
        const cd ib = integrate_segment(basis.theta, false, basis.node_t[k], basis.node_t[k + 1], o.tol, eb);
        if (!finite(it) || !finite(ib) || !std::isfinite(et) || !std::isfinite(eb)) {
            throw Error(ErrorKind::QuadratureFailure, "non-finite Theta integral near t = " +
                                                          std::to_string(basis.node_t[k]));
        }
        const double limit = std::max(1e3 * o.tol * (1.0 + std::max(std::abs(it), std::abs(ib))), 1e-13);
        if (et > limit || eb > limit) {
            throw Error(ErrorKind::QuadratureFailure,
                        "quadrature error estimate above tolerance near t = " + std::to_string(basis.node_t[k]));
        }
        basis.quadrature_error += et + eb;
        basis.cumulative_top[k + 1] = basis.cumulative_top[k] + it;
        basis.cumulative_bot[k + 1] = basis.cumulative_bot[k] + ib;
    }
    return basis;
}

// ---------------------------------------------------------------------------

cd ode_residual(const Expression& h, const DenseFunction& u, double t)
{
    const FunctionSample s = u(t);
    return s.d2 + h.value(s.position) * s.value;
}

cd riccati_residual(const Expression& h, const DenseFunction& theta, double t)
{
    const FunctionSample s = theta(t);
    return s.d1 + s.value * s.value + h.value(s.position);
}

double sup_ode_residual(const Expression& h, const DenseFunction& u, int n)
{
    double m = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = i == n ? u.hi() : u.lo() + (u.hi() - u.lo()) * i / n;
        m = std::max(m, std::abs(ode_residual(h, u, t)));
    }
    return m;
}

double sup_riccati_residual(const Expression& h, const DenseFunction& theta, int n)
{
    double m = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = i == n ? theta.hi() : theta.lo() + (theta.hi() - theta.lo()) * i / n;
        m = std::max(m, std::abs(riccati_residual(h, theta, t)));
    }
    return m;
}

// ---------------------------------------------------------------------------

namespace {

struct ThetaValues {
    cd top;
    cd top_d1;
    cd bot;
    cd bot_d1;
};

ExplicitGeodesic invert_core(Family family, const Expression& h, const std::vector<ExplicitNode>& layout,
                             double base_t, const std::function<ThetaValues(std::size_t)>& thetas)
{
    const bool ads = is_anti_de_sitter(family);
    const double sign = ads ? 1.0 : -1.0;
    ExplicitGeodesic g;
    g.family = family;
    g.h = h;
    g.base_t = base_t;
    g.nodes = layout;
    const std::size_t b = base_index(layout, base_t);
    std::vector<cd> v2(layout.size());
    std::vector<ThetaValues> th(layout.size());
    for (std::size_t k = 0; k < layout.size(); ++k) {
        th[k] = thetas(k);
        v2[k] = sign * th[k].top * th[k].bot;
        if (is_real_2d(family) && !(v2[k].real() > 0.0)) {
            throw Error(ErrorKind::NegativeRadicand,
                        std::string(ads ? "Theta_top*Theta_bot" : "-Theta_top*Theta_bot") +
                            " is not positive at t = " + std::to_string(layout[k].t) +
                            ": the pair does not come from a geodesic of this family");
        }
    }
    std::vector<cd> roots(layout.size());
    roots[b] = std::sqrt(v2[b]);
    for (std::size_t k = b + 1; k < layout.size(); ++k) {
        roots[k] = nearest_root(v2[k], roots[k - 1]);
    }
    for (std::size_t k = b; k-- > 0;) {
        roots[k] = nearest_root(v2[k], roots[k + 1]);
    }
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const ThetaValues& t = th[k];
        const cd hp = h.jet(layout[k].position).d1;
        const cd top_d2 = -2.0 * t.top * t.top_d1 - hp;
        const cd bot_d2 = -2.0 * t.bot * t.bot_d1 - hp;
        const cd dv2 = sign * (t.top_d1 * t.bot + t.top * t.bot_d1);
        const cd ddv2 = sign * (top_d2 * t.bot + 2.0 * t.top_d1 * t.bot_d1 + t.top * bot_d2);
        const cd v = roots[k];
        const cd vp = dv2 / (2.0 * v);
        g.nodes[k].value = v;
        g.nodes[k].slope = vp;
        g.nodes[k].second = (0.5 * ddv2 - vp * vp) / v;
    }
    return g;
}

ThetaValues from_solutions(const FunctionSample& p, const FunctionSample& q, double t)
{
    const double tiny = 1e-300;
    if (std::abs(p.value) < tiny || std::abs(q.value) < tiny) {
        throw Error(ErrorKind::ZeroCrossingOfU, "a basis function vanishes at t = " + std::to_string(t));
    }
    const cd tt = p.d1 / p.value;
    const cd tb = q.d1 / q.value;
    return {tt, p.d2 / p.value - tt * tt, tb, q.d2 / q.value - tb * tb};
}

} // namespace

ExplicitGeodesic invert_to_geodesic(const ThetaPair& theta)
{
    const auto& nodes = theta.geodesic.nodes;
    return invert_core(theta.family, theta.geodesic.h, nodes, theta.geodesic.base_t, [&](std::size_t k) {
        const FunctionSample a = theta.top(nodes[k].t);
        const FunctionSample b = theta.bottom(nodes[k].t);
        return ThetaValues{a.value, a.d1, b.value, b.d1};
    });
}

ExplicitGeodesic invert_to_geodesic(const SolutionBasis& basis)
{
    const auto& nodes = basis.theta.geodesic.nodes;
    // Walk the nodes once, accumulating the stored integrals instead of
    // re-integrating from the base at every node.
    const std::size_t b = base_index(nodes, basis.base_t);
    const cd base_top = basis.log_top(nodes[b].t);
    const cd base_bot = basis.log_bot(nodes[b].t);
    return invert_core(basis.theta.family, basis.theta.geodesic.h, nodes, basis.base_t, [&](std::size_t k) {
        const double t = nodes[k].t;
        const FunctionSample ta = basis.theta.top(t);
        const FunctionSample tb = basis.theta.bottom(t);
        const std::size_t j = std::min(k, basis.cumulative_top.size() - 1);
        const cd ut = std::exp(basis.cumulative_top[j] - basis.cumulative_top[b] + base_top);
        const cd ub = std::exp(basis.cumulative_bot[j] - basis.cumulative_bot[b] + base_bot);
        const FunctionSample p{ta.position, ut, ta.value * ut, (ta.d1 + ta.value * ta.value) * ut};
        const FunctionSample q{tb.position, ub, tb.value * ub, (tb.d1 + tb.value * tb.value) * ub};
        return from_solutions(p, q, t);
    });
}

ExplicitGeodesic invert_to_geodesic(const DenseFunction& u_top, const DenseFunction& u_bot, Family family,
                                    const Expression& h, double base_t, int n)
{
    const double lo = std::max(u_top.lo(), u_bot.lo());
    const double hi = std::min(u_top.hi(), u_bot.hi());
    if (!(hi > lo) || n < 1 || base_t < lo || base_t > hi) {
        throw Error(ErrorKind::InvalidArgument, "solutions need a common support containing the base");
    }
    std::vector<ExplicitNode> layout;
    for (int i = 0; i <= n; ++i) {
        const double t = i == n ? hi : lo + (hi - lo) * i / n;
        layout.push_back({t, u_top(t).position, cd(1.0), cd(0.0), {}, {}, {}});
    }
    return invert_core(family, h, layout, base_t, [&](std::size_t k) {
        const double t = layout[k].t;
        return from_solutions(u_top(t), u_bot(t), t);
    });
}

// ---------------------------------------------------------------------------

RiccatiGeodesicReport riccati_solution_is_geodesic(const Expression& h, const DenseFunction& theta, SignMode mode,
                                                   double tol, int n)
{
    RiccatiGeodesicReport rep;
    rep.tol = tol;
    rep.samples = n + 1;
    const Family family = mode == SignMode::Real ? Family::AntiDeSitterPlus : Family::ComplexSphere;
    rep.induced.family = family;
    rep.induced.h = h;
    rep.induced.base_t = theta.lo();
    cd sign = mode == SignMode::Real ? cd(1.0) : cd(0.0, -1.0);
    for (int i = 0; i <= n; ++i) {
        const double t = i == n ? theta.hi() : theta.lo() + (theta.hi() - theta.lo()) * i / n;
        const FunctionSample s = theta(t);
        const Jet2<cd> hj = h.jet(s.position);
        rep.riccati_residual = std::max(rep.riccati_residual, std::abs(s.d1 + s.value * s.value + hj.value));
        if (std::abs(s.value) < 1e-12) {
            throw Error(ErrorKind::InvalidArgument, "Theta vanishes at t = " + std::to_string(t));
        }
        if (i == 0 && mode == SignMode::Real && s.value.real() < 0.0) {
            sign = cd(-1.0);
        }
        const cd second = finite(s.d2) ? s.d2 : -2.0 * s.value * s.d1 - hj.d1;
        rep.induced.nodes.push_back({t, s.position, cd(1.0), cd(0.0), sign * s.value, sign * s.d1, sign * second});
    }
    if (!(rep.riccati_residual <= tol)) {
        throw Error(ErrorKind::RiccatiResidualTooLarge,
                    "Theta does not solve the Riccati equation: residual " + std::to_string(rep.riccati_residual));
    }
    for (const auto& node : rep.induced.nodes) {
        const Jet2<cd> hj = h.jet(node.position);
        const cd v2 = node.value * node.value;
        const cd d = mode == SignMode::Real ? hj.value + v2 : v2 - hj.value;
        if (std::abs(d) <= kDomainGuard) {
            rep.on_singular_set = true;
        }
        rep.geodesic_residual =
            std::max(rep.geodesic_residual, std::abs(explicit_residual(family, hj, node.value, node.slope, node.second)));
    }
    rep.pass = rep.geodesic_residual <= tol;
    return rep;
}

namespace {

struct PiecewiseDense {
    std::vector<DenseSolution> pieces;
};

} // namespace

DenseFunction solve_riccati(const Expression& h, double x0, double theta0, double lo, double hi, double tol,
                            double min_abs, double max_abs)
{
    if (h.mode() != Mode::Real) {
        throw Error(ErrorKind::InvalidArgument, "real Riccati solver needs a real-mode h");
    }
    const OdeRhs rhs = [&](double x, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(1);
        dy(0) = -y(0) * y(0) - h.value(x);
    };
    const OdeGuard guard = [&](double, const Eigen::VectorXd& y, std::vector<double>& out) {
        out = {std::abs(y(0)) - min_abs, max_abs - std::abs(y(0))};
    };
    OdeOptions oo;
    oo.rtol = tol;
    oo.atol = tol;
    oo.h_max = (hi - lo) / 64.0;
    Eigen::VectorXd y0(1);
    y0 << theta0;
    auto fwd = std::make_shared<DenseSolution>(integrate_dopri5(rhs, x0, y0, hi, oo, guard));
    auto bwd = std::make_shared<DenseSolution>(integrate_dopri5(rhs, x0, y0, lo, oo, guard));
    const double a = bwd->t.back();
    const double b = fwd->t.back();
    return DenseFunction(
        [fwd, bwd, h, x0](double x) {
            const double th = (x >= x0 ? fwd->eval(x) : bwd->eval(x))(0);
            const Jet2<double> hj = h.jet(x);
            const double d1 = -th * th - hj.value;
            return FunctionSample{cd(x), cd(th), cd(d1), cd(-2.0 * th * d1 - hj.d1)};
        },
        a, b);
}

DenseFunction solve_linear_ode(const Expression& h, const ComplexPath& path, cd u0, cd du0, double tol)
{
    auto pieces = std::make_shared<std::vector<DenseSolution>>();
    OdeOptions oo;
    oo.rtol = tol;
    oo.atol = tol;
    oo.h_max = 1.0 / 64.0;
    Eigen::VectorXd y(4);
    y << u0.real(), u0.imag(), du0.real(), du0.imag();
    for (std::size_t k = 0; k < path.segments(); ++k) {
        const cd zs = path.velocity(k);
        const cd za = path.vertices()[k];
        const double a = path.segment_begin(k);
        const OdeRhs rhs = [&](double t, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
            const cd z = za + (t - a) * zs;
            const cd u(s(0), s(1));
            const cd p(s(2), s(3));
            const cd du = p * zs;
            const cd dp = -h.value(z) * u * zs;
            ds.resize(4);
            ds << du.real(), du.imag(), dp.real(), dp.imag();
        };
        pieces->push_back(integrate_dopri5(rhs, a, y, path.segment_end(k), oo));
        if (pieces->back().status != OdeStatus::Completed) {
            throw Error(ErrorKind::StepSizeUnderflow, "linear ODE integration failed along the path");
        }
        y = pieces->back().y.back();
    }
    return DenseFunction(
        [pieces, path, h](double t) {
            const std::size_t k = path.segment_of(t);
            const Eigen::VectorXd s = (*pieces)[k].eval(t);
            const cd z = path.point(t);
            const cd u(s(0), s(1));
            return FunctionSample{z, u, cd(s(2), s(3)), -h.value(z) * u};
        },
        0.0, 1.0);
}

DenseFunction solve_linear_ode(const Expression& h, double x0, cd u0, cd du0, double lo, double hi, double tol)
{
    if (h.mode() != Mode::Real) {
        throw Error(ErrorKind::InvalidArgument, "interval solver needs a real-mode h");
    }
    const OdeRhs rhs = [&](double x, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        const double hv = h.value(x);
        ds.resize(4);
        ds << s(2), s(3), -hv * s(0), -hv * s(1);
    };
    OdeOptions oo;
    oo.rtol = tol;
    oo.atol = tol;
    oo.h_max = (hi - lo) / 64.0;
    Eigen::VectorXd y0(4);
    y0 << u0.real(), u0.imag(), du0.real(), du0.imag();
    auto fwd = std::make_shared<DenseSolution>(integrate_dopri5(rhs, x0, y0, hi, oo));
    auto bwd = std::make_shared<DenseSolution>(integrate_dopri5(rhs, x0, y0, lo, oo));
    return DenseFunction(
        [fwd, bwd, h, x0](double x) {
            const Eigen::VectorXd s = x >= x0 ? fwd->eval(x) : bwd->eval(x);
            const cd u(s(0), s(1));
            return FunctionSample{cd(x), u, cd(s(2), s(3)), -h.value(x) * u};
        },
        bwd->t.back(), fwd->t.back());
}

// ---------------------------------------------------------------------------

namespace {

// Total change of arg(f) along a sequence of values, in turns.
double winding(const std::vector<cd>& values)
{
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        total += std::arg(values[k + 1] / values[k]);
    }
    return total / (2.0 * std::numbers::pi);
}

} // namespace

PathIndependenceReport path_independence_check(const GeometrySpec& spec, cd value0, cd slope0,
                                               const ComplexPath& path_a, const ComplexPath& path_b, double tol,
                                               const ExplicitOptions& options)
{
    if (path_a.start() != path_b.start() || path_a.end() != path_b.end()) {
        throw Error(ErrorKind::InvalidArgument, "paths must share their end points");
    }
    const ExplicitGeodesic ga = integrate_explicit(spec, path_a, value0, slope0, options);
    const ExplicitGeodesic gb = integrate_explicit(spec, path_b, value0, slope0, options);
    if (ga.termination_hi != Termination::RangeEnd || gb.termination_hi != Termination::RangeEnd) {
        throw Error(ErrorKind::PathLeavesSupport, "the geodesic does not extend along the whole path");
    }
    // Loop a followed by b reversed: the region between the paths must not
    // contain a point of the singular set.
    std::vector<cd> sing;
    std::vector<cd> vals;
    for (const auto& n : ga.nodes) {
        sing.push_back(spec.h.value(n.position) - n.value * n.value);
        vals.push_back(n.value);
    }
    for (auto it = gb.nodes.rbegin(); it != gb.nodes.rend(); ++it) {
        sing.push_back(spec.h.value(it->position) - it->value * it->value);
        vals.push_back(it->value);
    }
    const double wind_sing = winding(sing);
    const double wind_vals = winding(vals);
    PathIndependenceReport rep;
    rep.endpoint_mismatch = std::abs(ga.nodes.back().value - gb.nodes.back().value);
    if (std::abs(wind_sing) > 0.5 || std::abs(wind_vals) > 0.5 ||
        rep.endpoint_mismatch > 1e-6 * (1.0 + std::abs(ga.nodes.back().value))) {
        throw Error(ErrorKind::PathLeavesSupport,
                    "the paths enclose a point of the singular set (winding " + std::to_string(wind_sing) +
                        ", end point mismatch " + std::to_string(rep.endpoint_mismatch) + ")");
    }
    const SolutionBasis ba = reconstruct_basis(spec, ga);
    const SolutionBasis bb = reconstruct_basis(spec, gb);
    rep.integral_top_a = ba.log_top(1.0);
    rep.integral_bot_a = ba.log_bot(1.0);
    rep.integral_top_b = bb.log_top(1.0);
    rep.integral_bot_b = bb.log_bot(1.0);
    rep.difference_top = std::abs(rep.integral_top_a - rep.integral_top_b);
    rep.difference_bot = std::abs(rep.integral_bot_a - rep.integral_bot_b);
    rep.pass = rep.difference_top <= tol && rep.difference_bot <= tol;
    return rep;
}

DegeneracyReport degeneracy_probe(const GeometrySpec& spec, const ExplicitGeodesic& g, double threshold)
{
    const Family family = spec.family == Family::KahlerNorden ? Family::ComplexSphere : spec.family;
    DegeneracyReport rep;
    for (const auto& n : g.nodes) {
        rep.radicand_sup = std::max(rep.radicand_sup, std::abs(radicand_at(family, spec.h, n)));
    }
    rep.degenerate = rep.radicand_sup < threshold;
    return rep;
}

} // namespace geodesy
