#include "gridplan/battopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "text_io.hpp"

namespace gridplan {

namespace {

double tan_phi(double power_factor) { return std::sqrt(1.0 - power_factor * power_factor) / power_factor; }

/// Linear voltages with no storage and no curtailment, correction included.
Eigen::MatrixXd baseline_voltages(const PlacementProblem& p) {
    const double s_base = p.grid.s_base_kva();
    const double k = tan_phi(p.options.power_factor);
    Eigen::MatrixXd v(p.hours(), p.buses());
    for (int t = 0; t < p.hours(); ++t) {
        const Eigen::VectorXd pt = p.net_kw.row(t).transpose() / s_base;
        v.row(t) = linear_voltages(p.model, pt, pt * k).transpose();
    }
    return v + p.correction;
}

/// kW a battery at each candidate must absorb (over) or deliver (under) in
/// each hour to clear that hour on its own.
struct Relief {
    Eigen::MatrixXd over;   // hours x candidates
    Eigen::MatrixXd under;
};

Relief solo_relief(const PlacementProblem& p, const Eigen::MatrixXd& base) {
    const double s_base = p.grid.s_base_kva();
    const int nc = static_cast<int>(p.candidates.size());
    Relief r{Eigen::MatrixXd::Zero(p.hours(), nc), Eigen::MatrixXd::Zero(p.hours(), nc)};
    for (int t = 0; t < p.hours(); ++t)
        for (int i = 0; i < p.buses(); ++i) {
            const double up = base(t, i) - p.limits.v_max;
            const double down = p.limits.v_min - base(t, i);
            if (up <= 0.0 && down <= 0.0) continue;
            for (int n = 0; n < nc; ++n) {
                const double s = p.model.s_p(i, p.candidates[static_cast<size_t>(n)]);
                const double need = s > 0.0 ? std::max(up, down) * s_base / s : lp::kInfinity;
                (up > 0.0 ? r.over : r.under)(t, n) = std::max((up > 0.0 ? r.over : r.under)(t, n), need);
            }
        }
    return r;
}

std::vector<VoltageRow> violated_pairs(const PlacementProblem& p, const Eigen::MatrixXd& v, double tolerance) {
    std::vector<VoltageRow> rows;
    for (int t = 0; t < p.hours(); ++t)
        for (int i = 0; i < p.buses(); ++i) {
            if (v(t, i) > p.limits.v_max + tolerance) rows.push_back({i, t, true});
            if (v(t, i) < p.limits.v_min - tolerance) rows.push_back({i, t, false});
        }
    return rows;
}

}  // namespace

PlacementProblem make_problem(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const Eigen::MatrixXd& gen_kw,
                              const VoltageLimits& limits, std::vector<int> candidates, const BatteryOptions& options) {
    if (net_kw.cols() != grid.bus_count() || gen_kw.rows() != net_kw.rows() || gen_kw.cols() != net_kw.cols())
        throw std::invalid_argument("placement problem: injection dimensions do not match the grid");
    if (!(options.charge_efficiency > 0.0 && options.charge_efficiency <= 1.0) ||
        !(options.discharge_efficiency > 0.0 && options.discharge_efficiency <= 1.0))
        throw std::invalid_argument("placement problem: efficiencies must lie in (0, 1]");
    if (!(limits.v_min < limits.v_max)) throw std::invalid_argument("placement problem: v_min must be below v_max");
    for (int c : candidates)
        if (c < 0 || c >= grid.bus_count()) throw std::invalid_argument("placement problem: unknown candidate bus");

    PerUnitInjection op = PerUnitInjection::zero(grid.bus_count());
    if (options.linearize_at_peak && net_kw.rows() > 0) {
        Eigen::Index peak = 0;
        net_kw.rowwise().sum().maxCoeff(&peak);
        op = per_unit_injection(grid, net_kw.row(peak).transpose(), options.power_factor);
    }
    SensitivityModel model = build_sensitivity(grid, op, options.slack_v);
    Eigen::MatrixXd correction = Eigen::MatrixXd::Zero(net_kw.rows(), net_kw.cols());
    return PlacementProblem{grid, std::move(model), net_kw, gen_kw, limits, std::move(candidates), options,
                            std::move(correction)};
}

double model_voltage(const PlacementProblem& p, const MilpLayout& layout, const Eigen::VectorXd& x, int bus, int hour) {
    const double s_base = p.grid.s_base_kva();
    const double k = tan_phi(p.options.power_factor);
    const Eigen::VectorXd pt = p.net_kw.row(hour).transpose() / s_base;
    double v = p.model.v0(bus) + p.model.s_p.row(bus).dot(pt - p.model.p_op) +
               p.model.s_q.row(bus).dot(pt * k - p.model.q_op) + p.correction(hour, bus);
    for (int n = 0; n < layout.candidates; ++n) {
        const int c = p.candidates[static_cast<size_t>(n)];
        v += p.model.s_p(bus, c) * (x(layout.discharge(n, hour)) - x(layout.charge(n, hour))) / s_base;
    }
    for (size_t u = 0; u < layout.curtail_bus.size(); ++u) {
        if (layout.curtail_hour[u] != hour) continue;
        const int j = layout.curtail_bus[u];
        v -= (p.model.s_p(bus, j) + k * p.model.s_q(bus, j)) * x(layout.curtail_offset + static_cast<int>(u)) / s_base;
    }
    return v;
}

void add_voltage_row(PlacementMilp& milp, const PlacementProblem& p, const VoltageRow& row) {
    const double s_base = p.grid.s_base_kva();
    const double k = tan_phi(p.options.power_factor);
    const MilpLayout& layout = milp.layout;
    std::vector<int> vars;
    std::vector<double> coef;
    for (int n = 0; n < layout.candidates; ++n) {
        const double s = p.model.s_p(row.bus, p.candidates[static_cast<size_t>(n)]) / s_base;
        vars.push_back(layout.discharge(n, row.hour));
        coef.push_back(s);
        vars.push_back(layout.charge(n, row.hour));
        coef.push_back(-s);
    }
    for (size_t u = 0; u < layout.curtail_bus.size(); ++u) {
        if (layout.curtail_hour[u] != row.hour) continue;
        const int j = layout.curtail_bus[u];
        vars.push_back(layout.curtail_offset + static_cast<int>(u));
        coef.push_back(-(p.model.s_p(row.bus, j) + k * p.model.s_q(row.bus, j)) / s_base);
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(milp.mip.base.variables());
    const double base = model_voltage(p, layout, zero, row.bus, row.hour);
    if (row.upper)
        milp.mip.base.add_row(vars, coef, lp::Sense::LessEqual, p.limits.v_max - base);
    else
        milp.mip.base.add_row(vars, coef, lp::Sense::GreaterEqual, p.limits.v_min - base);
    milp.voltage_rows.push_back(row);
}

PlacementMilp build_milp(const PlacementProblem& p, const CostBook& book, bool all_rows) {
    const BatteryOptions& o = p.options;
    const int T = p.hours();
    const int nc = static_cast<int>(p.candidates.size());
    if (nc == 0) throw std::invalid_argument("build_milp: candidate set is empty");
    if (p.correction.rows() != T || p.correction.cols() != p.buses())
        throw std::invalid_argument("build_milp: correction dimension mismatch");
    if (p.model.size() != p.buses()) throw std::invalid_argument("build_milp: sensitivity model dimension mismatch");

    const Eigen::MatrixXd base = baseline_voltages(p);
    const Relief relief = solo_relief(p, base);

    PlacementMilp milp;
    MilpLayout& L = milp.layout;
    L.candidates = nc;
    L.hours = T;
    L.per_site = 3 + 3 * T;
    lp::LinearProgram& lp = milp.mip.base;
    const BatteryCostBook& bc = book.battery;
    const double dt = o.dt_hours;

    for (int n = 0; n < nc; ++n) {
        // Big-M per site: what a lone battery here would need, capped by the configured maxima.
        const double p_need = std::max(relief.over.col(n).maxCoeff(), relief.under.col(n).maxCoeff());
        const double c_need = dt * (o.charge_efficiency * relief.over.col(n).sum() +
                                    relief.under.col(n).sum() / o.discharge_efficiency);
        const double p_big = std::min(o.p_max, std::isfinite(p_need) ? 1.25 * p_need + 1.0 : o.p_max);
        const double c_big = std::max(o.c_min, std::min(o.c_max, std::isfinite(c_need) ? 1.25 * c_need + 1.0 : o.c_max));

        const int b = lp.add_variable(bc.installation_cost, 0.0, 1.0);
        const int c = lp.add_variable(bc.energy_cost(), 0.0, c_big);
        const int pw = lp.add_variable(bc.power_electronics_cost, 0.0, p_big);
        milp.mip.integer_vars.push_back(b);
        for (int t = 0; t < T; ++t) {
            lp.add_variable(o.throughput_penalty * dt, 0.0, p_big);  // charge
            lp.add_variable(o.throughput_penalty * dt, 0.0, p_big);  // discharge
            lp.add_variable(0.0, 0.0, c_big);                         // energy
        }
        for (int t = 0; t < T; ++t) {
            const int next = (t + 1) % T;
            if (T == 1) {
                lp.add_row({L.charge(n, t), L.discharge(n, t)}, {o.charge_efficiency * dt, -dt / o.discharge_efficiency},
                           lp::Sense::Equal, 0.0);
            } else {
                lp.add_row({L.energy(n, next), L.energy(n, t), L.charge(n, t), L.discharge(n, t)},
                           {1.0, -1.0, -o.charge_efficiency * dt, dt / o.discharge_efficiency}, lp::Sense::Equal, 0.0);
            }
            lp.add_row({L.energy(n, t), c}, {1.0, -1.0}, lp::Sense::LessEqual, 0.0);
            // One converter: charge and discharge share the power rating.
            lp.add_row({L.charge(n, t), L.discharge(n, t), pw}, {1.0, 1.0, -1.0}, lp::Sense::LessEqual, 0.0);
        }
        lp.add_row({c, b}, {1.0, -c_big}, lp::Sense::LessEqual, 0.0);
        lp.add_row({pw, b}, {1.0, -p_big}, lp::Sense::LessEqual, 0.0);
        lp.add_row({c, b}, {1.0, -o.c_min}, lp::Sense::GreaterEqual, 0.0);
    }

    L.curtail_offset = lp.variables();
    if (o.allow_curtailment)
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < p.buses(); ++j) {
                const double g = p.gen_kw(t, j);
                if (!(g > 0.0)) continue;
                lp.add_variable(o.curtailment_penalty * dt, 0.0, g);
                L.curtail_bus.push_back(j);
                L.curtail_hour.push_back(t);
            }

    std::vector<int> bs(static_cast<size_t>(nc));
    for (int n = 0; n < nc; ++n) bs[static_cast<size_t>(n)] = L.b(n);
    const std::vector<double> ones(static_cast<size_t>(nc), 1.0);
    if (o.exact_batteries) {
        if (*o.exact_batteries > nc) throw std::invalid_argument("build_milp: more batteries requested than candidates");
        lp.add_row(bs, ones, lp::Sense::Equal, *o.exact_batteries);
    } else if (o.max_batteries) {
        lp.add_row(bs, ones, lp::Sense::LessEqual, *o.max_batteries);
    }

    if (all_rows) {
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < p.buses(); ++i) {
                add_voltage_row(milp, p, {i, t, true});
                add_voltage_row(milp, p, {i, t, false});
            }
    } else {
        std::set<std::pair<int, bool>> sides;
        for (const VoltageRow& r : violated_pairs(p, base, 0.0)) sides.insert({r.bus, r.upper});
        for (const auto& [bus, upper] : sides)
            for (int t = 0; t < T; ++t) add_voltage_row(milp, p, {bus, t, upper});
    }
    return milp;
}

double BatteryPlan::total_capacity() const {
    double sum = 0.0;
    for (const auto& b : placements) sum += b.capacity_kwh;
    return sum;
}

Eigen::MatrixXd BatteryPlan::injection_delta(int buses) const {
    const Eigen::Index hours = std::max(power_kw.rows(), curtailment_kw.rows());
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(hours, buses);
    for (int k = 0; k < count(); ++k) delta.col(placements[static_cast<size_t>(k)].bus) -= power_kw.col(k);
    if (curtailment_kw.size() > 0) delta -= curtailment_kw;
    return delta;
}

namespace {

BatteryPlan decode(const PlacementProblem& p, const PlacementMilp& milp, const lp::SolveResult& r, const CostBook& book) {
    const MilpLayout& L = milp.layout;
    BatteryPlan plan;
    std::vector<int> sites;
    for (int n = 0; n < L.candidates; ++n)
        if (r.x(L.b(n)) > 0.5 && r.x(L.capacity(n)) > 0.1) sites.push_back(n);
    plan.power_kw = Eigen::MatrixXd::Zero(L.hours, static_cast<Eigen::Index>(sites.size()));
    plan.soc_kwh = plan.power_kw;
    plan.charge_kw = plan.power_kw;
    plan.discharge_kw = plan.power_kw;
    for (size_t k = 0; k < sites.size(); ++k) {
        const int n = sites[k];
        plan.placements.push_back({p.candidates[static_cast<size_t>(n)], r.x(L.capacity(n)), r.x(L.power(n))});
        for (int t = 0; t < L.hours; ++t) {
            const double ch = r.x(L.charge(n, t));
            const double dis = r.x(L.discharge(n, t));
            plan.power_kw(t, static_cast<Eigen::Index>(k)) = ch - dis;
            plan.charge_kw(t, static_cast<Eigen::Index>(k)) = ch;
            plan.discharge_kw(t, static_cast<Eigen::Index>(k)) = dis;
            plan.soc_kwh(t, static_cast<Eigen::Index>(k)) = r.x(L.energy(n, t));
            if (ch > 1e-4 && dis > 1e-4)
                plan.warnings.push_back("battery at bus " + std::to_string(p.candidates[static_cast<size_t>(n)]) +
                                        " charges and discharges in hour " + std::to_string(t));
        }
    }
    plan.curtailment_kw = Eigen::MatrixXd::Zero(L.hours, p.buses());
    for (size_t u = 0; u < L.curtail_bus.size(); ++u)
        plan.curtailment_kw(L.curtail_hour[u], L.curtail_bus[u]) = r.x(L.curtail_offset + static_cast<int>(u));
    for (const auto& b : plan.placements) plan.capex += battery_capex(b.capacity_kwh, b.power_kw, book.battery);
    plan.annual_cost = annualize(plan.capex, book.battery.lifetime_years);
    plan.objective = r.objective;
    plan.gap = r.gap;
    plan.nodes = r.nodes;
    plan.proven_optimal = r.status == lp::Status::Optimal;
    plan.voltage_rows = static_cast<int>(milp.voltage_rows.size());
    return plan;
}

BatteryPlan empty_plan(const PlacementProblem& p) {
    BatteryPlan plan;
    plan.power_kw = Eigen::MatrixXd::Zero(p.hours(), 0);
    plan.soc_kwh = plan.power_kw;
    plan.charge_kw = plan.power_kw;
    plan.discharge_kw = plan.power_kw;
    plan.curtailment_kw = Eigen::MatrixXd::Zero(p.hours(), p.buses());
    return plan;
}

std::vector<std::pair<int, int>> as_pairs(const std::vector<VoltageRow>& rows) {
    std::vector<std::pair<int, int>> out;
    for (const auto& r : rows) out.emplace_back(r.bus, r.hour);
    return out;
}

}  // namespace

BatteryPlan place_batteries(const PlacementProblem& problem, const CostBook& book) {
    PlacementProblem p = problem;
    const BatteryOptions& o = p.options;
    const bool forced = o.exact_batteries && *o.exact_batteries > 0;

    std::optional<BatteryPlan> best;
    double best_excess = lp::kInfinity;
    for (int round = 0; round <= o.nonlinear_refinements; ++round) {
        const Eigen::MatrixXd base = baseline_voltages(p);
        const auto initially_violated = violated_pairs(p, base, 0.0);
        BatteryPlan plan;
        if (initially_violated.empty() && !forced) {
            plan = empty_plan(p);
        } else {
            if (p.candidates.empty())
                throw PlacementInfeasible("no candidate buses for a violating scenario", as_pairs(initially_violated));
            PlacementMilp milp = build_milp(p, book);
            lp::SolveResult r;
            for (int generation = 0;; ++generation) {
                r = lp::solve_mip(milp.mip, o.mip);
                if (!r.has_solution()) {
                    if (r.status == lp::Status::Infeasible)
                        throw PlacementInfeasible("battery placement infeasible; violated bus/hour pairs at zero storage: " +
                                                      std::to_string(initially_violated.size()),
                                                  as_pairs(initially_violated));
                    throw std::runtime_error("battery placement: solver stopped with status " + lp::to_string(r.status));
                }
                std::vector<VoltageRow> missing;
                for (int t = 0; t < p.hours(); ++t)
                    for (int i = 0; i < p.buses(); ++i) {
                        const double v = model_voltage(p, milp.layout, r.x, i, t);
                        if (v > p.limits.v_max + 1e-7) missing.push_back({i, t, true});
                        if (v < p.limits.v_min - 1e-7) missing.push_back({i, t, false});
                    }
                if (missing.empty()) break;
                if (generation > 50) throw std::runtime_error("battery placement: row generation did not settle");
                // A bus that slipped out of the band in one hour is watched in every hour.
                std::set<std::pair<int, bool>> watched;
                for (const VoltageRow& row : missing) watched.insert({row.bus, row.upper});
                std::set<std::tuple<int, int, bool>> present;
                for (const VoltageRow& row : milp.voltage_rows) present.insert({row.bus, row.hour, row.upper});
                for (const auto& [bus, upper] : watched)
                    for (int t = 0; t < p.hours(); ++t)
                        if (!present.count({bus, t, upper})) add_voltage_row(milp, p, {bus, t, upper});
            }
            plan = decode(p, milp, r, book);
        }

        // Replay through the full load flow and fold the gap back into the model.
        const PlanVerification check =
            verify_plan(p.grid, plan, p.net_kw, p.limits, o.power_factor, o.slack_v, nullptr, 0.0);
        if (!check.converged) throw std::runtime_error("battery placement: replay load flow diverged");
        if (check.max_excess < best_excess) {
            best_excess = check.max_excess;
            best = plan;
        }
        if (check.max_excess <= o.nonlinear_tolerance) break;

        const double s_base = p.grid.s_base_kva();
        const double k = tan_phi(o.power_factor);
        const Eigen::MatrixXd net = p.net_kw + plan.injection_delta(p.buses());
        for (int t = 0; t < p.hours(); ++t) {
            const Eigen::VectorXd pt = net.row(t).transpose() / s_base;
            const Eigen::VectorXd lin = linear_voltages(p.model, pt, pt * k);
            p.correction.row(t) = (check.flow.v.row(t).transpose() - lin).transpose();
        }
    }
    if (best_excess > o.nonlinear_tolerance)
        best->warnings.push_back("nonlinear replay exceeds the voltage band by " + std::to_string(best_excess) + " p.u.");
    return *best;
}

BatteryPlan place_batteries(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const Eigen::MatrixXd& gen_kw,
                            const VoltageLimits& limits, const CostBook& book, const BatteryOptions& options) {
    const int k = std::max(options.candidates, options.exact_batteries.value_or(0));
    std::vector<int> candidates = prune_candidates(grid, net_kw, limits, k, options.power_factor, options.slack_v);
    PlacementProblem problem = make_problem(grid, net_kw, gen_kw, limits, candidates, options);
    if (candidates.empty()) {
        BatteryPlan plan = empty_plan(problem);
        if (options.exact_batteries && *options.exact_batteries > 0)
            plan.warnings.push_back("no voltage violations; no batteries placed");
        return plan;
    }
    if (options.exact_batteries && *options.exact_batteries > static_cast<int>(candidates.size()))
        throw std::invalid_argument("more batteries requested than buses available");
    return place_batteries(problem, book);
}

PlanVerification verify_plan(const GridNetwork& grid, const BatteryPlan& plan, const Eigen::MatrixXd& net_kw,
                             const VoltageLimits& limits, double power_factor, double slack_v,
                             const SensitivityModel* model, double tolerance) {
    Eigen::MatrixXd net = net_kw;
    if (plan.count() > 0 || plan.curtailment_kw.size() > 0) {
        const Eigen::MatrixXd delta = plan.injection_delta(grid.bus_count());
        if (delta.rows() != net.rows()) throw std::invalid_argument("verify_plan: trajectories do not cover the window");
        net += delta;
    }
    PlanVerification out;
    out.flow = solve_window(grid, net, power_factor, slack_v);
    out.converged = out.flow.converged;
    out.max_voltage = out.flow.v.maxCoeff();
    out.min_voltage = out.flow.v.minCoeff();
    out.max_excess = std::max(out.max_voltage - limits.v_max, limits.v_min - out.min_voltage);
    for (Eigen::Index t = 0; t < out.flow.v.rows(); ++t)
        for (int b = 0; b < grid.bus_count(); ++b) {
            const double e = limits.excess(out.flow.v(t, b));
            if (e > tolerance) {
                out.violations.push_back({b, out.flow.v(t, b), e});
                out.violation_hours.push_back(static_cast<int>(t));
            }
        }
    for (int s = 0; s < grid.segment_count(); ++s)
        out.max_loading = std::max(out.max_loading, out.flow.currents.col(s).maxCoeff() / grid.segment_ampacity(s));
    if (model) {
        const double s_base = grid.s_base_kva();
        const double k = tan_phi(power_factor);
        for (Eigen::Index t = 0; t < net.rows(); ++t) {
            const Eigen::VectorXd pt = net.row(t).transpose() / s_base;
            const Eigen::VectorXd lin = linear_voltages(*model, pt, pt * k);
            out.linear_gap = std::max(out.linear_gap, (lin - out.flow.v.row(t).transpose()).cwiseAbs().maxCoeff());
        }
    }
    return out;
}

std::vector<int> prune_candidates(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const VoltageLimits& limits,
                                  int k, double power_factor, double slack_v) {
    if (k < 1) throw std::invalid_argument("prune_candidates: k must be at least 1");
    const WindowFlow flow = solve_window(grid, net_kw, power_factor, slack_v);
    if (!flow.converged) throw std::runtime_error("prune_candidates: load flow diverged");
    const Eigen::MatrixXd r = common_path_resistance(grid);
    const int n = grid.bus_count();
    // Each violated pair credits a site with the share of its path that the
    // site covers, so a weak spot far from the worst bus still scores.
    Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd total_excess = Eigen::VectorXd::Zero(n);
    std::vector<int> roots;
    const auto all = branches(grid);
    for (Eigen::Index t = 0; t < flow.v.rows(); ++t)
        for (int b = 0; b < n; ++b) {
            const double e = limits.excess(flow.v(t, b));
            if (e <= 0.0) continue;
            total_excess(b) += e;
            if (r(b, b) > 0.0) score += e / r(b, b) * r.row(b).transpose();
            const int br = branch_of(all, b);
            if (br >= 0) roots.push_back(all[static_cast<size_t>(br)].root);
        }
    if (!(total_excess.array() > 0.0).any()) return {};

    // Violating buses without a violating descendant come first.
    std::vector<int> frontier;
    for (int b = 0; b < n; ++b) {
        if (total_excess(b) <= 0.0) continue;
        bool deepest = true;
        for (int d = 0; d < n && deepest; ++d)
            if (d != b && total_excess(d) > 0.0 && r(d, b) >= r(b, b) * (1.0 - 1e-12) && r(b, b) > 0.0) deepest = false;
        if (deepest) frontier.push_back(b);
    }
    std::stable_sort(frontier.begin(), frontier.end(),
                     [&](int a, int b) { return total_excess(a) > total_excess(b); });

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score(a) > score(b); });
    std::vector<int> out;
    for (int b : frontier)
        if (static_cast<int>(out.size()) < k) out.push_back(b);
    for (int b : order)
        if (static_cast<int>(out.size()) < std::min(k, n) && score(b) > 0.0 &&
            std::find(out.begin(), out.end(), b) == out.end())
            out.push_back(b);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    for (int root : roots)
        if (std::find(out.begin(), out.end(), root) == out.end()) out.push_back(root);
    return out;
}

std::string battery_plan_to_json(const BatteryPlan& plan) {
    nlohmann::ordered_json doc;
    doc["batteries"] = nlohmann::ordered_json::array();
    for (const auto& b : plan.placements)
        doc["batteries"].push_back({{"bus", b.bus}, {"capacity_kwh", b.capacity_kwh}, {"power_kw", b.power_kw}});
    doc["capex_eur"] = plan.capex;
    doc["annual_cost_eur"] = plan.annual_cost;
    doc["proven_optimal"] = plan.proven_optimal;
    doc["gap"] = plan.gap;
    doc["curtailed_kwh"] = plan.curtailment_kw.size() > 0 ? plan.curtailment_kw.sum() : 0.0;
    doc["warnings"] = plan.warnings;
    return doc.dump(2) + "\n";
}

BatteryPlan parse_battery_plan(const std::string& json_text) {
    BatteryPlan plan;
    try {
        const auto doc = nlohmann::json::parse(json_text);
        for (const auto& b : doc.at("batteries"))
            plan.placements.push_back(
                {b.at("bus").get<int>(), b.at("capacity_kwh").get<double>(), b.at("power_kw").get<double>()});
        plan.capex = doc.value("capex_eur", 0.0);
        plan.annual_cost = doc.value("annual_cost_eur", 0.0);
        plan.proven_optimal = doc.value("proven_optimal", true);
        plan.gap = doc.value("gap", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw GridError(std::string("parse error: battery plan: ") + e.what());
    }
    return plan;
}

std::string trajectories_to_csv(const BatteryPlan& plan) {
    std::ostringstream out;
    out << "hour";
    for (const auto& b : plan.placements) out << ",bus_" << b.bus << "_kw";
    for (const auto& b : plan.placements) out << ",bus_" << b.bus << "_soc_kwh";
    out << "\n";
    for (Eigen::Index t = 0; t < plan.power_kw.rows(); ++t) {
        out << t;
        for (Eigen::Index k = 0; k < plan.power_kw.cols(); ++k) out << ',' << detail::format_fixed(plan.power_kw(t, k), 4);
        for (Eigen::Index k = 0; k < plan.soc_kwh.cols(); ++k) out << ',' << detail::format_fixed(plan.soc_kwh(t, k), 4);
        out << "\n";
    }
    return out.str();
}

double reprice_batteries(const BatteryPlan& plan, const BatteryCostBook& book) {
    double total = 0.0;
    for (const auto& b : plan.placements) total += battery_capex(b.capacity_kwh, b.power_kw, book);
    return total;
}

}  // namespace gridplan
