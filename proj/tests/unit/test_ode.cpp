#include <doctest.h>

#include "geodesy/ode.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <vector>

using namespace geodesy;

TEST_CASE("exponential decay and harmonic oscillator")
{
    OdeOptions o;
    const auto decay = integrate_dopri5([](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d = -y; }, 0.0,
                                        Eigen::VectorXd::Constant(1, 1.0), 3.0, o);
    CHECK(decay.status == OdeStatus::Completed);
    CHECK(decay.t_end() == 3.0);
    CHECK(std::abs(decay.y.back()(0) - std::exp(-3.0)) < 1e-10);

    Eigen::VectorXd y0(2);
    y0 << 0.0, 1.0;
    const auto osc = integrate_dopri5(
        [](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) {
            d.resize(2);
            d << y(1), -y(0);
        },
        0.0, y0, 10.0, o);
    double err = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double t = 10.0 * k / 200.0;
        err = std::max(err, std::abs(osc.eval(t)(0) - std::sin(t)));
    }
    CHECK(err < 1e-8);
    for (std::size_t k = 0; k < osc.t.size(); ++k) {
        CHECK(std::abs(osc.y[k](0) - std::sin(osc.t[k])) < 1e-9);
    }
}

TEST_CASE("backward integration")
{
    const auto s = integrate_dopri5([](double t, const Eigen::VectorXd&, Eigen::VectorXd& d) { d.setConstant(1, t); },
                                    2.0, Eigen::VectorXd::Constant(1, 2.0), -1.0, OdeOptions{});
    CHECK(s.direction() == -1.0);
    CHECK(s.covers(0.0));
    CHECK_FALSE(s.covers(2.5));
    CHECK(std::abs(s.eval(0.0)(0) - 0.0) < 1e-12);
    CHECK(std::abs(s.y.back()(0) - 0.5) < 1e-12);
}

TEST_CASE("guard stops at the crossing")
{
    // y' = 1 from 0; guard 0.75 - y triggers at t = 0.75.
    const auto s = integrate_dopri5(
        [](double, const Eigen::VectorXd&, Eigen::VectorXd& d) { d.setConstant(1, 1.0); }, 0.0,
        Eigen::VectorXd::Zero(1), 2.0, OdeOptions{},
        [](double, const Eigen::VectorXd& y, std::vector<double>& g) { g = {0.75 - y(0)}; });
    CHECK(s.status == OdeStatus::GuardTriggered);
    CHECK(s.triggered_guard == 0);
    CHECK(s.t_end() <= 0.75);
    CHECK(s.t_end() > 0.75 - 1e-10);
}

TEST_CASE("blow-up ends in a step-size underflow")
{
    // y' = y^2, y(0) = 1 blows up at t = 1.
    const auto s = integrate_dopri5(
        [](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d = y.cwiseProduct(y); }, 0.0,
        Eigen::VectorXd::Constant(1, 1.0), 2.0, OdeOptions{});
    CHECK(s.status != OdeStatus::Completed);
    CHECK(s.t_end() < 1.0);
    CHECK(s.t_end() > 0.99);
}

TEST_CASE("step budget")
{
    OdeOptions o;
    o.max_steps = 5;
    const auto s = integrate_dopri5([](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d = -y; }, 0.0,
                                    Eigen::VectorXd::Constant(1, 1.0), 100.0, o);
    CHECK(s.status == OdeStatus::StepBudgetExhausted);
}

TEST_CASE("property: dense output agrees with boost odeint on a nonlinear system")
{
    using State = std::vector<double>;
    const double mu = 1.5;
    auto vdp = [mu](const State& y, State& d, double) {
        d[0] = y[1];
        d[1] = mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
    };
    for (double a : {0.5, 1.0, 2.0}) {
        Eigen::VectorXd y0(2);
        y0 << a, 0.0;
        OdeOptions o;
        o.rtol = 1e-11;
        o.atol = 1e-13;
        const auto s = integrate_dopri5(
            [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& d) {
                State in{y(0), y(1)}, out(2);
                vdp(in, out, t);
                d.resize(2);
                d << out[0], out[1];
            },
            0.0, y0, 8.0, o);
        REQUIRE(s.status == OdeStatus::Completed);
        namespace ode = boost::numeric::odeint;
        auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_cash_karp54<State>());
        for (double t1 : {0.5, 2.0, 4.5, 8.0}) {
            State ref{a, 0.0};
            ode::integrate_adaptive(stepper, vdp, ref, 0.0, t1, 1e-3);
            const Eigen::VectorXd mine = s.eval(t1);
            CHECK(std::abs(mine(0) - ref[0]) < 1e-7);
            CHECK(std::abs(mine(1) - ref[1]) < 1e-7);
        }
    }
}
