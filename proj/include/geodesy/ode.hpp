#pragma once

/// @file ode.hpp
/// Dormand-Prince 5(4) with continuous output and guard events.
///
/// Guards are functions of (t, y) that are positive while the state is
/// acceptable; integration stops at the last point where all guards are
/// positive, located by bisection on the continuous output.

#include <Eigen/Core>

#include <array>
#include <functional>
#include <limits>
#include <vector>

namespace geodesy {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;
using OdeGuard = std::function<void(double t, const Eigen::VectorXd& y, std::vector<double>& values)>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;  // 0 selects a starting step automatically
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 500000;
    double event_tol = 1e-12;
};

enum class OdeStatus { Completed, GuardTriggered, StepSizeUnderflow, StepBudgetExhausted };

class DenseSolution {
public:
    OdeStatus status = OdeStatus::Completed;
    int triggered_guard = -1;
    long accepted_steps = 0;
    long rejected_steps = 0;

    /// Node times (monotone in the integration direction) and states.
    std::vector<double> t;
    std::vector<Eigen::VectorXd> y;

    double t_begin() const { return t.front(); }
    double t_end() const { return t.back(); }
    double direction() const { return t.size() > 1 && t.back() < t.front() ? -1.0 : 1.0; }
    bool covers(double at) const;
    /// Continuous output; `at` must lie in the integrated range.
    Eigen::VectorXd eval(double at) const;

    // Per-step interpolation data, filled by the integrator.
    struct Step {
        double t0 = 0.0;
        double h = 0.0;
        std::array<Eigen::VectorXd, 5> rc;
    };
    std::vector<Step> steps;
};

DenseSolution integrate_dopri5(const OdeRhs& rhs, double t0, const Eigen::VectorXd& y0, double t1,
                               const OdeOptions& options, const OdeGuard& guard = {});

} // namespace geodesy
