#include "geodesy/ode.hpp"

#include "geodesy/error.hpp"

#include <algorithm>
#include <cmath>

namespace geodesy {

namespace {

// Dormand & Prince (1980) tableau with the continuous extension of Hairer,
// Norsett & Wanner.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

Eigen::VectorXd interpolate(const DenseSolution::Step& s, double theta)
{
    const double t1 = 1.0 - theta;
    return s.rc[0] + theta * (s.rc[1] + t1 * (s.rc[2] + theta * (s.rc[3] + t1 * s.rc[4])));
}

// True when every guard is positive; evaluation failures count as outside.
bool guards_ok(const OdeGuard& guard, double t, const Eigen::VectorXd& y, std::vector<double>& buf, int* which)
{
    if (!guard) {
        return true;
    }
    buf.clear();
    try {
        guard(t, y, buf);
    } catch (const Error&) {
        if (which) {
            *which = -1;
        }
        return false;
    }
    for (std::size_t i = 0; i < buf.size(); ++i) {
        if (!(buf[i] > 0.0)) {
            if (which) {
                *which = static_cast<int>(i);
            }
            return false;
        }
    }
    return true;
}

double rms_error(const Eigen::VectorXd& err, const Eigen::VectorXd& y0, const Eigen::VectorXd& y1,
                 const OdeOptions& o)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = o.atol + o.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double r = err(i) / sc;
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(std::max<Eigen::Index>(1, err.size())));
}

} // namespace

bool DenseSolution::covers(double at) const
{
    if (t.empty()) {
        return false;
    }
    const double lo = std::min(t.front(), t.back());
    const double hi = std::max(t.front(), t.back());
    return at >= lo && at <= hi;
}

Eigen::VectorXd DenseSolution::eval(double at) const
{
    if (!covers(at)) {
        throw Error(ErrorKind::OutsideSupport, "requested time outside the integrated range");
    }
    if (steps.empty()) {
        return y.front();
    }
    const double dir = direction();
    // First step whose end lies at or beyond `at` in the integration direction.
    const auto it = std::lower_bound(t.begin() + 1, t.end(), at,
                                     [dir](double node, double value) { return dir * node < dir * value; });
    std::size_t k = static_cast<std::size_t>(std::distance(t.begin() + 1, it));
    k = std::min(k, steps.size() - 1);
    const Step& s = steps[k];
    return interpolate(s, (at - s.t0) / s.h);
}

DenseSolution integrate_dopri5(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0, double t1,
                               const OdeOptions& o, const OdeGuard& guard)
{
    DenseSolution sol;
    sol.t.push_back(t0);
    sol.y.push_back(y0);
    const Eigen::Index n = y0.size();
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);

    std::vector<double> gbuf;
    int which = -1;
    if (!guards_ok(guard, t0, y0, gbuf, &which)) {
        sol.status = OdeStatus::GuardTriggered;
        sol.triggered_guard = which;
        return sol;
    }
    if (span == 0.0) {
        return sol;
    }

    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
    rhs(t0, y0, k1);
    if (!all_finite(k1)) {
        throw Error(ErrorKind::Domain, "right-hand side is not finite at the initial state");
    }

    double h = o.h_init;
    if (h <= 0.0) {
        const double d0 = y0.norm() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, n)));
        const double dd = k1.norm() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, n)));
        h = (d0 < 1e-5 || dd < 1e-5) ? 1e-6 : 0.01 * d0 / dd;
        h = std::max(h, 1e-6 * span);
    }
    h = std::min({h, span, o.h_max});

    double t = t0;
    Eigen::VectorXd y = y0;
    long steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > o.max_steps) {
            sol.status = OdeStatus::StepBudgetExhausted;
            return sol;
        }
        const double remaining = std::abs(t1 - t);
        bool last = false;
        if (h >= remaining) {
            h = remaining;
            last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            sol.status = OdeStatus::StepSizeUnderflow;
            return sol;
        }
        const double hs = dir * h;
        bool ok = true;
        try {
            ytmp = y + hs * a21 * k1;
            rhs(t + c2 * hs, ytmp, k2);
            ytmp = y + hs * (a31 * k1 + a32 * k2);
            rhs(t + c3 * hs, ytmp, k3);
            ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs(t + c4 * hs, ytmp, k4);
            ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs(t + c5 * hs, ytmp, k5);
            ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs(t + hs, ytmp, k6);
            ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            rhs(t + hs, ynew, k7);
            ok = all_finite(ynew) && all_finite(k7);
        } catch (const Error&) {
            ok = false;
        }
        double en = 0.0;
        if (ok) {
            err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            en = rms_error(err, y, ynew, o);
            ok = std::isfinite(en);
        }
        if (!ok) {
            ++sol.rejected_steps;
            h *= 0.25;
            continue;
        }
        if (en > 1.0) {
            ++sol.rejected_steps;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            continue;
        }

        DenseSolution::Step step;
        step.t0 = t;
        step.h = hs;
        const Eigen::VectorXd ydiff = ynew - y;
        const Eigen::VectorXd bspl = hs * k1 - ydiff;
        step.rc[0] = y;
        step.rc[1] = ydiff;
        step.rc[2] = bspl;
        step.rc[3] = ydiff - hs * k7 - bspl;
        step.rc[4] = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        // Guard check at the end point and the middle of the step.
        double bad = -1.0;
        if (!guards_ok(guard, t + 0.5 * hs, interpolate(step, 0.5), gbuf, &which)) {
            bad = 0.5;
        } else if (!guards_ok(guard, t + hs, ynew, gbuf, &which)) {
            bad = 1.0;
        }
        if (bad > 0.0) {
            double lo = 0.0;
            double hi = bad;
            while ((hi - lo) * h > o.event_tol) {
                const double mid = 0.5 * (lo + hi);
                if (guards_ok(guard, t + mid * hs, interpolate(step, mid), gbuf, nullptr)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            guards_ok(guard, t + hi * hs, interpolate(step, hi), gbuf, &which);
            if (lo > 0.0) {
                sol.steps.push_back(step);
                sol.t.push_back(t + lo * hs);
                sol.y.push_back(interpolate(step, lo));
                ++sol.accepted_steps;
            }
            sol.status = OdeStatus::GuardTriggered;
            sol.triggered_guard = which;
            return sol;
        }

        sol.steps.push_back(step);
        ++sol.accepted_steps;
        t = last ? t1 : t + hs;
        y = ynew;
        sol.t.push_back(t);
        sol.y.push_back(y);
        k1 = k7;

        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = std::min(h * fac, o.h_max);
    }
    return sol;
}

} // namespace geodesy
