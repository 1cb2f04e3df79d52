#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridplan/reinforce.hpp"
#include "json.hpp"

using namespace gridplan;

namespace {

/// `hours` hours of `kw` generation on every bus of the listed feeders.
Eigen::MatrixXd feeder_pv(const GridNetwork& g, int per_feeder, const std::vector<int>& feeders, double kw, int hours = 3) {
    Eigen::MatrixXd net = Eigen::MatrixXd::Zero(hours, g.bus_count());
    for (int f : feeders)
        for (int k = 0; k < per_feeder; ++k) net.col(1 + f * per_feeder + k).setConstant(kw);
    net.row(0) *= 0.5;
    return net;
}

bool replay_feasible(const GridNetwork& g, const Eigen::MatrixXd& net, const VoltageLimits& lim, double slack = 0.0) {
    const WindowFlow w = solve_window(g, net);
    if (!w.converged) return false;
    for (Eigen::Index t = 0; t < w.v.rows(); ++t) {
        for (int b = 0; b < g.bus_count(); ++b)
            if (lim.excess(w.v(t, b)) > slack) return false;
        for (int s = 0; s < g.segment_count(); ++s)
            if (w.currents(t, s) > g.segment_ampacity(s) * (1.0 + 1e-9)) return false;
    }
    return true;
}

/// Cheapest uniform upgrade of every path segment to the strongest type
/// that clears the window; the cap-level upgrade when none does.
double everything_bound(const GridNetwork& g, const std::vector<int>& buses, const Eigen::MatrixXd& net,
                        const VoltageLimits& lim, int cap = 3) {
    std::set<int> segs;
    for (int b : buses)
        for (int s : path_to_slack(g, b)) segs.insert(s);
    for (int n = 1; n <= cap; ++n) {
        GridNetwork up = g;
        for (int s : segs) {
            LineSegment seg = up.segment(s);
            seg.line_type = "NAYY 4x150 SE";
            seg.n_parallel = n;
            up = up.with_segment(s, seg);
        }
        if (n == cap || replay_feasible(up, net, lim)) return upgrade_everything_bound(g, buses, GridCostBook{}, n);
    }
    return 0.0;
}

}  // namespace

TEST_CASE("candidate actions on a 1 km 4x50 segment") {
    const GridNetwork g = fixtures::nayy_star(1, 1, 1.0);
    const auto actions = candidate_actions(g, 0, GridCostBook{});
    bool replace120 = false, parallel50 = false;
    for (const auto& a : actions) {
        CHECK(std::abs(g.line_type(a.line_type).r_per_km) > 0.0);
        const double z_after = std::abs(std::complex<double>(g.line_type(a.line_type).r_per_km,
                                                             g.line_type(a.line_type).x_per_km)) /
                               a.n_parallel;
        CHECK(z_after < std::abs(g.segment_impedance(0)));
        CHECK(a.capex == line_capex(a.line_type, 1.0, a.n_new, a.kind == ActionKind::AddParallel));
        if (a.kind == ActionKind::Replace && a.line_type == "NAYY 4x120 SE" && a.n_new == 1) {
            replace120 = true;
            CHECK(a.capex == 69900.0);
        }
        if (a.kind == ActionKind::AddParallel && a.line_type == "NAYY 4x50 SE" && a.n_new == 1) {
            parallel50 = true;
            CHECK(a.capex == 60000.0 * 0.15 + 3500.0);
            CHECK(a.n_parallel == 2);
        }
    }
    CHECK(replace120);
    CHECK(parallel50);
}

TEST_CASE("catalog exhaustion at the parallel cap") {
    GridNetwork g = fixtures::nayy_star(1, 1, 0.5, "NAYY 4x150 SE");
    LineSegment s = g.segment(0);
    s.n_parallel = 3;
    g = g.with_segment(0, s);
    CHECK(candidate_actions(g, 0, GridCostBook{}, 3).empty());
    const auto more = candidate_actions(g, 0, GridCostBook{}, 5);
    int additions = 0;
    for (const auto& a : more) {
        additions += a.kind == ActionKind::AddParallel;
        if (a.kind == ActionKind::Replace) CHECK(a.n_parallel >= 4);
    }
    CHECK(additions == 2);
}

TEST_CASE("critical node") {
    const GridNetwork g = fixtures::nayy_star(2, 5, 0.1);
    const auto br = branches(g);
    Eigen::MatrixXd net = Eigen::MatrixXd::Zero(2, g.bus_count());
    net(1, 5) = 60.0;
    const VoltageLimits lim = VoltageLimits::from_deviation(0.03);
    CHECK(find_critical_node(g, br[1], net, lim).violation <= 0.0);
    const CriticalNode c = find_critical_node(g, br[0], net, lim);
    CHECK(c.bus == 5);
    CHECK(c.hour == 1);
    CHECK(c.violation > 0.0);

    // Brute force over buses and hours on a random PV tree.
    std::mt19937 rng(21);
    const GridNetwork t = fixtures::random_tree(106, rng, 0.03, 0.09);
    std::uniform_real_distribution<double> u(0.0, 12.0);
    Eigen::MatrixXd pv(24, 106);
    for (int h = 0; h < 24; ++h)
        for (int b = 0; b < 106; ++b) pv(h, b) = b == 0 ? 0.0 : u(rng) * std::sin(M_PI * h / 24.0);
    const WindowFlow w = solve_window(t, pv);
    for (const Branch& b : branches(t)) {
        const CriticalNode got = find_critical_node(t, b, pv, lim);
        double best = -1e9;
        for (int h = 0; h < 24; ++h)
            for (int bus : b.buses) best = std::max(best, std::max(w.v(h, bus) - 1.03, 0.97 - w.v(h, bus)));
        CHECK(got.violation == best);
        CHECK(lim.excess(w.v(got.hour, got.bus)) == best);
    }
}

TEST_CASE("feasible branch needs nothing") {
    GridNetwork g = fixtures::nayy_star(2, 4, 0.1);
    const Eigen::MatrixXd net = Eigen::MatrixXd::Constant(3, g.bus_count(), 1.0);
    const auto br = branches(g);
    CHECK(reinforce_branch(g, br[0], net, VoltageLimits{}, CostBook{}).empty());
    const ReinforcementPlan plan = reinforce_grid(g, net, VoltageLimits{}, CostBook{});
    CHECK(plan.empty());
    CHECK(plan.total_capex == 0.0);
    CHECK(plan.annual_cost == 0.0);
}

TEST_CASE("forced single move on a two-bus feeder") {
    std::vector<LineType> catalog{{"thin", 0.641, 0.083, 400.0, 0.0}, {"thick", 0.206, 0.080, 500.0, 0.0}};
    Transformer t;
    GridNetwork g({{0, "lv", BusKind::Slack, 400.0}, {1, "b", BusKind::Load, 400.0}}, {{0, 1, 0.5, "thin", 1}}, t,
                  catalog);
    Eigen::MatrixXd net(1, 2);
    net << 0.0, 90.0;
    const VoltageLimits lim = VoltageLimits::from_deviation(0.15);
    const double before = find_critical_node(g, branches(g)[0], net, lim).violation;
    REQUIRE(before > 0.0);
    REQUIRE(before < 0.05);
    CostBook book;
    book.grid.lines = {{"thin", {60000.0, 0.0}}, {"thick", {60000.0, 0.0}}};
    ReinforceOptions opt;
    opt.max_parallel = 1;
    const auto actions = reinforce_branch(g, branches(g)[0], net, lim, book, opt);
    REQUIRE(actions.size() == 1);
    CHECK(actions[0].line_type == "thick");
    CHECK(find_critical_node(g, branches(g)[0], net, lim).violation <= 0.0);
}

TEST_CASE("chain with leaf PV stays under the upgrade-everything bound") {
    GridNetwork g = fixtures::nayy_star(1, 6, 0.12);
    Eigen::MatrixXd net = Eigen::MatrixXd::Zero(4, g.bus_count());
    net.col(6) << 20.0, 45.0, 60.0, 30.0;
    const VoltageLimits lim = VoltageLimits::from_deviation(0.03);
    REQUIRE_FALSE(replay_feasible(g, net, lim));
    const GridNetwork original = g;
    const auto actions = reinforce_branch(g, branches(g)[0], net, lim, CostBook{});
    REQUIRE_FALSE(actions.empty());
    CHECK(replay_feasible(g, net, lim));
    double cost = 0.0;
    for (const auto& a : actions) cost += a.capex;
    CHECK(cost <= everything_bound(original, {6}, net, lim));
}

TEST_CASE("grid plan touches only violating branches") {
    const int per = 6;
    const GridNetwork g = fixtures::nayy_star(4, per, 0.1);
    const Eigen::MatrixXd net = feeder_pv(g, per, {0, 1, 3}, 14.0);
    const VoltageLimits lim = VoltageLimits::from_deviation(0.03);
    const ReinforcementPlan plan = reinforce_grid(g, net, lim, CostBook{});
    REQUIRE_FALSE(plan.actions.empty());

    std::set<int> touched;
    for (size_t k = 0; k < plan.actions.size(); ++k) touched.insert(plan.action_branch[k]);
    CHECK(touched == std::set<int>{0, 1, 3});
    const auto br = branches(g);
    for (const auto& a : plan.actions) {
        CHECK(g.in_subtree(g.downstream_bus(a.segment), br[2].root) == false);
    }

    CHECK(replay_feasible(plan.grid, net, lim));
    CHECK(plan.final_max_voltage.maxCoeff() <= lim.v_max);
    CHECK(plan.final_max_loading <= 1.0);

    double sum = 0.0;
    for (const auto& a : plan.actions) sum += a.capex;
    CHECK(plan.total_capex == doctest::Approx(sum).epsilon(1e-12));
    CHECK(plan.total_capex == reprice_plan(g, plan, CostBook{}));
    CHECK(plan.annual_cost == doctest::Approx(plan.total_capex / 40.0).epsilon(1e-12));

    std::vector<int> all;
    for (int b = 1; b < g.bus_count(); ++b) all.push_back(b);
    CHECK(plan.total_capex < everything_bound(g, all, net, lim));

    const auto doc = nlohmann::json::parse(plan_to_json(g, plan));
    CHECK(doc["actions"].size() == plan.actions.size());
    CHECK(doc["total_capex_eur"].get<double>() == plan.total_capex);
    CHECK(doc["actions"][0].contains("from"));
    CHECK(doc["actions"][0].contains("cost_eur"));
}

TEST_CASE("overloaded cable is upgraded for ampacity") {
    GridNetwork g = fixtures::nayy_star(1, 1, 0.01);
    Eigen::MatrixXd net(1, 2);
    net << 0.0, 110.0;  // about 159 A on a 142 A cable, negligible voltage rise
    const ReinforcementPlan plan = reinforce_grid(g, net, VoltageLimits::from_deviation(0.1), CostBook{});
    REQUIRE(plan.actions.size() == 1);
    CHECK(plan.final_max_loading <= 1.0);
    CHECK(plan.actions[0].kind == ActionKind::AddParallel);
}

TEST_CASE("transformer is replaced only when overloaded") {
    const int per = 3;
    GridNetwork g = fixtures::nayy_star(6, per, 0.01, "NAYY 4x150 SE");
    Eigen::MatrixXd net = feeder_pv(g, per, {0, 1, 2, 3, 4, 5}, 30.0, 2);
    ReinforcementPlan plan = reinforce_grid(g, net, VoltageLimits::from_deviation(0.1), CostBook{});
    CHECK_FALSE(plan.transformer_replaced);
    net *= 1.5;  // 810 kW peak on 630 kVA
    plan = reinforce_grid(g, net, VoltageLimits::from_deviation(0.1), CostBook{});
    CHECK(plan.transformer_replaced);
    CHECK(plan.transformer_rating_kva >= 810.0);
    CHECK(plan.total_capex == reprice_plan(g, plan, CostBook{}));
}

TEST_CASE("infeasible branch is reported") {
    std::vector<LineType> catalog{{"only", 0.641, 0.083, 1000.0, 0.0}};
    Transformer t;
    GridNetwork g({{0, "lv", BusKind::Slack, 400.0}, {1, "b", BusKind::Load, 400.0}}, {{0, 1, 0.5, "only", 1}}, t,
                  catalog);
    Eigen::MatrixXd net(1, 2);
    net << 0.0, 150.0;
    CostBook book;
    book.grid.lines = {{"only", {60000.0, 0.0}}};
    ReinforceOptions opt;
    opt.max_parallel = 2;
    try {
        reinforce_grid(g, net, VoltageLimits::from_deviation(0.03), book, opt);
        FAIL("expected an infeasible branch");
    } catch (const InfeasibleBranch& e) {
        CHECK(e.root == 1);
        CHECK(std::string(e.what()).find("infeasible branch") != std::string::npos);
    }
}
