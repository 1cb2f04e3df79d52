#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridplan/powerflow.hpp"

using namespace gridplan;

TEST_CASE("chain sensitivities follow the common path") {
    const GridNetwork one = fixtures::pu_chain(1, 0.01);
    const SensitivityModel m1 = build_sensitivity(one, PerUnitInjection::zero(2));
    CHECK(m1.s_p(1, 1) == doctest::Approx(0.01).epsilon(1e-12));

    const GridNetwork g = fixtures::pu_chain(2, 0.01, 0.005);
    const SensitivityModel m = build_sensitivity(g, PerUnitInjection::zero(3));
    Eigen::Matrix2d expected;
    expected << 0.01, 0.01, 0.01, 0.02;
    CHECK((m.s_p.bottomRightCorner(2, 2) - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.s_p.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.s_q(2, 2) == doctest::Approx(0.01));
    CHECK((m.v0.array() - 1.0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("two-bus sweep matches the quadratic root") {
    const GridNetwork g = fixtures::pu_chain(1, 0.1);
    PerUnitInjection inj = PerUnitInjection::zero(2);
    inj.p(1) = -0.1;
    const VoltageSolution sol = nonlinear_loadflow(g, inj);
    REQUIRE(sol.converged);
    // v^2 - v + r p = 0
    const double root = (1.0 + std::sqrt(1.0 - 4.0 * 0.1 * 0.1)) / 2.0;
    CHECK(std::abs(sol.v(1) - root) < 1e-8);
    CHECK(sol.v(0) == 1.0);

    const SensitivityModel m = build_sensitivity(g, PerUnitInjection::zero(2));
    const Eigen::VectorXd lin = linear_voltages(m, inj);
    CHECK(lin(1) == doctest::Approx(0.99));
    CHECK(std::abs(lin(1) - sol.v(1)) <= 1e-3);
}

TEST_CASE("zero injection gives a flat profile") {
    std::mt19937 rng(3);
    const GridNetwork g = fixtures::random_tree(30, rng, 0.02, 0.08, 0.0);
    const VoltageSolution sol = nonlinear_loadflow(g, PerUnitInjection::zero(30), 1.02);
    REQUIRE(sol.converged);
    CHECK((sol.v.array() - 1.02).abs().maxCoeff() < 1e-12);
    CHECK(sol.losses_kw == 0.0);
}

TEST_CASE("linear model properties on a random 106-bus tree") {
    std::mt19937 rng(11);
    const GridNetwork g = fixtures::random_tree(106, rng);
    const SensitivityModel m = build_sensitivity(g, PerUnitInjection::zero(106));
    CHECK((m.s_p - m.s_p.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.s_p.minCoeff() >= 0.0);

    std::uniform_real_distribution<double> u(-0.01, 0.01);
    PerUnitInjection a = PerUnitInjection::zero(106), b = PerUnitInjection::zero(106);
    for (int i = 1; i < 106; ++i) {
        a.p(i) = u(rng);
        b.p(i) = u(rng);
    }
    PerUnitInjection sum{a.p + b.p, a.q + b.q};
    const Eigen::VectorXd lhs = linear_voltages(m, sum) - m.v0;
    const Eigen::VectorXd rhs = (linear_voltages(m, a) - m.v0) + (linear_voltages(m, b) - m.v0);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((linear_voltages(m, PerUnitInjection::zero(106)) - m.v0).cwiseAbs().maxCoeff() == 0.0);

    // More generation anywhere never lowers a linear voltage.
    PerUnitInjection more = a;
    more.p(57) += 0.01;
    CHECK(((linear_voltages(m, more) - linear_voltages(m, a)).array() >= 0.0).all());

    CHECK_THROWS_AS(linear_voltages(m, PerUnitInjection::zero(5)), std::invalid_argument);
}

TEST_CASE("sweep power balance") {
    std::mt19937 rng(5);
    const GridNetwork g = fixtures::random_tree(60, rng);
    std::uniform_real_distribution<double> u(-20.0, 30.0);
    Eigen::VectorXd kw(60);
    for (int i = 0; i < 60; ++i) kw(i) = i == 0 ? 0.0 : u(rng);
    const PerUnitInjection inj = per_unit_injection(g, kw, 0.95);
    const VoltageSolution sol = nonlinear_loadflow(g, inj);
    REQUIRE(sol.converged);
    CHECK(sol.iterations < 30);
    const double balance = kw.sum() + sol.slack_import_kw - sol.losses_kw;
    CHECK(std::abs(balance) / g.s_base_kva() <= 1e-6);
    CHECK(sol.mismatch < 1e-8);
}

TEST_CASE("divergence is flagged, not thrown") {
    const GridNetwork g = fixtures::pu_chain(1, 0.5);
    PerUnitInjection inj = PerUnitInjection::zero(2);
    inj.p(1) = -2.0;
    const VoltageSolution sol = nonlinear_loadflow(g, inj);
    CHECK_FALSE(sol.converged);
}

TEST_CASE("limit screening") {
    const GridNetwork g = fixtures::pu_chain(2, 0.01);
    VoltageSolution sol = nonlinear_loadflow(g, PerUnitInjection::zero(3));
    REQUIRE(sol.converged);
    CHECK(screen_limits(g, sol, {0.97, 1.03}).feasible());

    sol.v(2) = 1.06;
    sol.line_currents(0) = 1500.0;
    const ViolationReport r = screen_limits(g, sol, {0.95, 1.05});
    REQUIRE(r.buses.size() == 1);
    CHECK(r.buses[0].bus == 2);
    CHECK(r.buses[0].excess == doctest::Approx(0.01));
    REQUIRE(r.segments.size() == 1);
    CHECK(r.segments[0].excess_a == doctest::Approx(500.0));

    // Elementwise oracle on a high-generation snapshot.
    std::mt19937 rng(9);
    const GridNetwork t = fixtures::random_tree(80, rng, 0.05, 0.15);
    const Eigen::VectorXd kw = Eigen::VectorXd::Constant(80, 12.0);
    const VoltageSolution hot = nonlinear_loadflow(t, per_unit_injection(t, kw));
    REQUIRE(hot.converged);
    const VoltageLimits lim = VoltageLimits::from_deviation(0.03);
    const ViolationReport hr = screen_limits(t, hot, lim);
    std::vector<int> oracle;
    for (int b = 0; b < 80; ++b)
        if (hot.v(b) > 1.03 || hot.v(b) < 0.97) oracle.push_back(b);
    std::vector<int> found;
    for (const auto& v : hr.buses) found.push_back(v.bus);
    CHECK(found == oracle);
    CHECK_FALSE(oracle.empty());
}

TEST_CASE("window flow stacks hourly solutions") {
    const GridNetwork g = fixtures::pu_chain(2, 0.01);
    Eigen::MatrixXd kw(2, 3);
    kw << 0, 10, 20, 0, -5, -5;
    const WindowFlow w = solve_window(g, kw);
    CHECK(w.converged);
    CHECK(w.v.rows() == 2);
    CHECK(w.v(0, 2) > 1.0);
    CHECK(w.v(1, 2) < 1.0);
}
