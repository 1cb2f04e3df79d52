#include "gridplan/reinforce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include "json.hpp"

namespace gridplan {

namespace {

double type_resistance(const GridNetwork& grid, const std::string& type, double length_km, int n_parallel) {
    return grid.line_type(type).r_per_km * length_km / n_parallel;
}

std::complex<double> type_impedance(const GridNetwork& grid, const std::string& type, double length_km, int n_parallel) {
    const LineType& t = grid.line_type(type);
    return std::complex<double>(t.r_per_km, t.x_per_km) * length_km / static_cast<double>(n_parallel);
}

void check_converged(const WindowFlow& flow) {
    if (!flow.converged) throw std::runtime_error("load flow diverged during reinforcement");
}

double max_branch_loading(const GridNetwork& grid, const Branch& branch, const WindowFlow& flow, int* worst_segment) {
    double worst = 0.0;
    *worst_segment = -1;
    for (int s : branch.segments) {
        const double loading = flow.currents.col(s).maxCoeff() / grid.segment_ampacity(s);
        if (loading > worst) {
            worst = loading;
            *worst_segment = s;
        }
    }
    return worst;
}

bool branch_feasible(const GridNetwork& grid, const Branch& branch, const Eigen::MatrixXd& net_kw,
                     const VoltageLimits& limits, const ReinforceOptions& options) {
    const WindowFlow flow = solve_window(grid, net_kw, options.power_factor, options.slack_v);
    if (!flow.converged) return false;
    int worst = -1;
    if (max_branch_loading(grid, branch, flow, &worst) > 1.0) return false;
    for (Eigen::Index t = 0; t < flow.v.rows(); ++t)
        for (int b : branch.buses)
            if (limits.excess(flow.v(t, b)) > 0.0) return false;
    return true;
}

/// Single action taking a segment from its original state to its final one.
ReinforcementAction direct_action(const GridNetwork& original, const GridNetwork& final_grid, int segment,
                                  const GridCostBook& book) {
    const LineSegment& from = original.segment(segment);
    const LineSegment& to = final_grid.segment(segment);
    ReinforcementAction a;
    a.segment = segment;
    a.line_type = to.line_type;
    a.n_parallel = to.n_parallel;
    a.kind = to.line_type == from.line_type ? ActionKind::AddParallel : ActionKind::Replace;
    a.n_new = a.kind == ActionKind::AddParallel ? to.n_parallel - from.n_parallel : to.n_parallel;
    const bool shared = a.kind == ActionKind::AddParallel && book.parallel_in_existing_trench;
    a.capex = line_capex(a.line_type, from.length_km, a.n_new, shared, book);
    a.resistance_after = type_resistance(final_grid, to.line_type, to.length_km, to.n_parallel);
    return a;
}

/// Collapses repeated upgrades of a segment into one action, then swaps each
/// upgrade for the cheapest alternative that keeps the branch feasible.
std::vector<ReinforcementAction> clean_up(const GridNetwork& original, GridNetwork& grid, const Branch& branch,
                                          const std::vector<ReinforcementAction>& applied,
                                          const Eigen::MatrixXd& net_kw, const VoltageLimits& limits,
                                          const CostBook& book, const ReinforceOptions& options) {
    std::vector<int> touched;
    for (const auto& a : applied)
        if (std::find(touched.begin(), touched.end(), a.segment) == touched.end()) touched.push_back(a.segment);
    std::vector<ReinforcementAction> direct;
    for (int s : touched) direct.push_back(direct_action(original, grid, s, book.grid));

    std::vector<size_t> order(direct.size());
    for (size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return direct[a].capex > direct[b].capex; });
    std::vector<bool> dropped(direct.size(), false);
    for (size_t k : order) {
        const int s = direct[k].segment;
        const GridNetwork reverted = grid.with_segment(s, original.segment(s));
        if (branch_feasible(reverted, branch, net_kw, limits, options)) {
            grid = reverted;
            dropped[k] = true;
            continue;
        }
        auto alternatives = candidate_actions(reverted, s, book.grid, options.max_parallel);
        std::stable_sort(alternatives.begin(), alternatives.end(),
                         [](const ReinforcementAction& a, const ReinforcementAction& b) { return a.capex < b.capex; });
        for (const ReinforcementAction& alt : alternatives) {
            if (!(alt.capex < direct[k].capex)) break;
            GridNetwork trial = apply_action(reverted, alt);
            if (branch_feasible(trial, branch, net_kw, limits, options)) {
                grid = std::move(trial);
                direct[k] = alt;
                break;
            }
        }
    }
    std::vector<ReinforcementAction> out;
    for (size_t k = 0; k < direct.size(); ++k)
        if (!dropped[k]) out.push_back(direct[k]);
    return out;
}

}  // namespace

CriticalNode find_critical_node(const Branch& branch, const WindowFlow& flow, const VoltageLimits& limits) {
    CriticalNode worst;
    worst.violation = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < flow.v.rows(); ++t)
        for (int b : branch.buses) {
            const double e = limits.excess(flow.v(t, b));
            if (e > worst.violation) worst = {b, static_cast<int>(t), e};
        }
    return worst;
}

CriticalNode find_critical_node(const GridNetwork& grid, const Branch& branch, const Eigen::MatrixXd& net_kw,
                                const VoltageLimits& limits, const ReinforceOptions& options) {
    const WindowFlow flow = solve_window(grid, net_kw, options.power_factor, options.slack_v);
    check_converged(flow);
    return find_critical_node(branch, flow, limits);
}

std::vector<ReinforcementAction> candidate_actions(const GridNetwork& grid, int segment, const GridCostBook& book,
                                                   int max_parallel) {
    const LineSegment& seg = grid.segment(segment);
    const double z_now = std::abs(grid.segment_impedance(segment));
    std::vector<ReinforcementAction> out;
    auto consider = [&](ActionKind kind, const std::string& type, int n_new, int n_after) {
        if (std::abs(type_impedance(grid, type, seg.length_km, n_after)) >= z_now) return;
        ReinforcementAction a;
        a.segment = segment;
        a.kind = kind;
        a.line_type = type;
        a.n_new = n_new;
        a.n_parallel = n_after;
        const bool shared = kind == ActionKind::AddParallel && book.parallel_in_existing_trench;
        a.capex = line_capex(type, seg.length_km, n_new, shared, book);
        a.resistance_after = type_resistance(grid, type, seg.length_km, n_after);
        out.push_back(std::move(a));
    };
    for (const LineType& t : grid.catalog()) {
        if (t.name == seg.line_type) continue;
        for (int n = 1; n <= max_parallel; ++n) consider(ActionKind::Replace, t.name, n, n);
    }
    for (int k = 1; seg.n_parallel + k <= max_parallel; ++k)
        consider(ActionKind::AddParallel, seg.line_type, k, seg.n_parallel + k);
    return out;
}

GridNetwork apply_action(const GridNetwork& grid, const ReinforcementAction& action) {
    LineSegment seg = grid.segment(action.segment);
    seg.line_type = action.line_type;
    seg.n_parallel = action.n_parallel;
    return grid.with_segment(action.segment, std::move(seg));
}

std::vector<ReinforcementAction> reinforce_branch(GridNetwork& grid, const Branch& branch, const Eigen::MatrixXd& net_kw,
                                                  const VoltageLimits& limits, const CostBook& book,
                                                  const ReinforceOptions& options) {
    const GridNetwork original = grid;
    std::vector<ReinforcementAction> applied;
    WindowFlow flow = solve_window(grid, net_kw, options.power_factor, options.slack_v);
    check_converged(flow);

    for (int iteration = 0;; ++iteration) {
        if (iteration >= options.max_iterations_per_branch)
            throw InfeasibleBranch(branch.root, "iteration limit reached");

        // Overloaded cables first: the cheapest upgrade that carries the current.
        int overloaded = -1;
        const double loading = max_branch_loading(grid, branch, flow, &overloaded);
        if (loading > 1.0) {
            const double current = flow.currents.col(overloaded).maxCoeff();
            const ReinforcementAction* best = nullptr;
            const auto actions = candidate_actions(grid, overloaded, book.grid, options.max_parallel);
            for (const ReinforcementAction& a : actions) {
                if (grid.line_type(a.line_type).ampacity * a.n_parallel < current) continue;
                if (!best || a.capex < best->capex ||
                    (a.capex == best->capex && a.resistance_after < best->resistance_after))
                    best = &a;
            }
            if (!best)
                throw InfeasibleBranch(branch.root, "no cable carries " + std::to_string(current) + " A on segment " +
                                                        std::to_string(overloaded));
            applied.push_back(*best);
            grid = apply_action(grid, *best);
            flow = solve_window(grid, net_kw, options.power_factor, options.slack_v);
            check_converged(flow);
            continue;
        }

        const CriticalNode critical = find_critical_node(branch, flow, limits);
        if (critical.violation <= 0.0) break;
        const bool over = flow.v(critical.hour, critical.bus) > limits.v_max;

        // Branch currents at the critical hour give the first-order voltage
        // change of an impedance change on the critical path.
        const Eigen::VectorXd row = net_kw.row(critical.hour).transpose();
        const VoltageSolution snapshot =
            nonlinear_loadflow(grid, per_unit_injection(grid, row, options.power_factor), options.slack_v);
        if (!snapshot.converged) throw std::runtime_error("load flow diverged during reinforcement");

        struct Choice {
            ReinforcementAction action;
            double reduction = 0.0;
            double ratio = 0.0;
            int depth = 0;
        };
        std::optional<Choice> best;
        for (int s : path_to_slack(grid, critical.bus)) {
            const int zb_bus = grid.downstream_bus(s);
            const std::complex<double> z_now = grid.segment_impedance(s) / grid.z_base(zb_bus);
            const std::complex<double> j = snapshot.branch_current_pu(s);
            for (ReinforcementAction& a : candidate_actions(grid, s, book.grid, options.max_parallel)) {
                const std::complex<double> z_new =
                    type_impedance(grid, a.line_type, grid.segment(s).length_km, a.n_parallel) / grid.z_base(zb_bus);
                const double dv = -std::real((z_new - z_now) * j);
                const double reduction = over ? -dv : dv;
                if (!(reduction > 0.0)) continue;
                Choice c{a, reduction, reduction / a.capex, grid.depth(zb_bus)};
                const bool better = !best || c.ratio > best->ratio ||
                                    (c.ratio == best->ratio &&
                                     (c.action.capex < best->action.capex ||
                                      (c.action.capex == best->action.capex &&
                                       (c.depth < best->depth ||
                                        (c.depth == best->depth && c.action.segment < best->action.segment)))));
                if (better) best = std::move(c);
            }
        }
        if (!best)
            throw InfeasibleBranch(branch.root, "no upgrade reduces the violation of " +
                                                    std::to_string(critical.violation) + " p.u. at bus " +
                                                    std::to_string(critical.bus));

        GridNetwork next = apply_action(grid, best->action);
        WindowFlow next_flow = solve_window(next, net_kw, options.power_factor, options.slack_v);
        check_converged(next_flow);
        const double after = limits.excess(next_flow.v(critical.hour, critical.bus));
        if (!(after < critical.violation))
            throw InfeasibleBranch(branch.root, "violation at bus " + std::to_string(critical.bus) + " did not decrease");
        applied.push_back(best->action);
        grid = std::move(next);
        flow = std::move(next_flow);
    }
    if (applied.empty()) return applied;
    return clean_up(original, grid, branch, applied, net_kw, limits, book, options);
}

ReinforcementPlan reinforce_grid(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const VoltageLimits& limits,
                                 const CostBook& book, const ReinforceOptions& options) {
    if (net_kw.cols() != grid.bus_count()) throw std::invalid_argument("reinforce_grid: injection dimension mismatch");
    ReinforcementPlan plan(grid);
    const auto all = branches(grid);
    const double cable_life = book.grid.cable_lifetime_years;
    double cable_capex = 0.0;
    double transformer_capex = 0.0;

    WindowFlow flow = solve_window(plan.grid, net_kw, options.power_factor, options.slack_v);
    for (int pass = 0;; ++pass) {
        check_converged(flow);
        for (size_t b = 0; b < all.size(); ++b) {
            const auto actions = reinforce_branch(plan.grid, all[b], net_kw, limits, book, options);
            for (const auto& a : actions) {
                plan.actions.push_back(a);
                plan.action_branch.push_back(static_cast<int>(b));
                cable_capex += a.capex;
            }
        }
        flow = solve_window(plan.grid, net_kw, options.power_factor, options.slack_v);
        check_converged(flow);

        const double peak_loading = flow.transformer_loading.maxCoeff();
        if (peak_loading > 1.0) {
            const double needed = peak_loading * plan.grid.transformer().rating_kva;
            double rating = -1.0;
            for (double size : options.transformer_sizes_kva)
                if (size >= needed && size >= book.grid.transformer_rating_kva) {
                    rating = size;
                    break;
                }
            if (rating < 0.0)
                throw std::runtime_error("transformer loading of " + std::to_string(needed) +
                                         " kVA exceeds the largest available size");
            Transformer t = plan.grid.transformer();
            t.rating_kva = rating;
            plan.grid = plan.grid.with_transformer(t);
            plan.transformer_replaced = true;
            plan.transformer_rating_kva = rating;
            transformer_capex += book.grid.transformer_cost;
            flow = solve_window(plan.grid, net_kw, options.power_factor, options.slack_v);
            check_converged(flow);
        }

        bool feasible = flow.transformer_loading.maxCoeff() <= 1.0;
        for (Eigen::Index t = 0; t < flow.v.rows() && feasible; ++t) {
            for (int bus = 0; bus < plan.grid.bus_count(); ++bus)
                if (limits.excess(flow.v(t, bus)) > 0.0) feasible = false;
            for (int s = 0; s < plan.grid.segment_count(); ++s)
                if (flow.currents(t, s) > plan.grid.segment_ampacity(s)) feasible = false;
        }
        if (feasible) break;
        if (pass + 1 >= options.max_passes) throw std::runtime_error("reinforcement did not reach a feasible grid");
    }

    plan.total_capex = cable_capex + transformer_capex;
    plan.annual_cost =
        annualize(cable_capex, cable_life) + annualize(transformer_capex, book.grid.transformer_lifetime_years);
    plan.final_max_voltage = flow.v.rowwise().maxCoeff();
    plan.final_min_voltage = flow.v.rowwise().minCoeff();
    for (int s = 0; s < plan.grid.segment_count(); ++s)
        plan.final_max_loading =
            std::max(plan.final_max_loading, flow.currents.col(s).maxCoeff() / plan.grid.segment_ampacity(s));
    if (!plan.transformer_replaced) plan.transformer_rating_kva = grid.transformer().rating_kva;
    return plan;
}

double reprice_plan(const GridNetwork& original, const ReinforcementPlan& plan, const CostBook& book) {
    double total = 0.0;
    for (const ReinforcementAction& a : plan.actions)
        total += line_capex(a.line_type, original.segment(a.segment).length_km, a.n_new,
                            a.kind == ActionKind::AddParallel && book.grid.parallel_in_existing_trench, book.grid);
    if (plan.transformer_replaced) total += book.grid.transformer_cost;
    return total;
}

double upgrade_everything_bound(const GridNetwork& grid, const std::vector<int>& buses, const GridCostBook& book,
                                int n_parallel) {
    const auto strongest = std::min_element(grid.catalog().begin(), grid.catalog().end(),
                                            [](const LineType& a, const LineType& b) { return a.r_per_km < b.r_per_km; });
    std::set<int> segments;
    for (int b : buses)
        for (int s : path_to_slack(grid, b)) segments.insert(s);
    double total = 0.0;
    for (int s : segments) total += line_capex(strongest->name, grid.segment(s).length_km, n_parallel, false, book);
    return total;
}

std::string plan_to_json(const GridNetwork& original, const ReinforcementPlan& plan) {
    nlohmann::ordered_json doc;
    doc["actions"] = nlohmann::ordered_json::array();
    for (const ReinforcementAction& a : plan.actions) {
        const LineSegment& seg = original.segment(a.segment);
        doc["actions"].push_back({{"from", seg.from_bus},
                                  {"to", seg.to_bus},
                                  {"n_parallel", a.n_parallel},
                                  {"type", a.line_type},
                                  {"cost_eur", a.capex},
                                  {"action", a.kind == ActionKind::Replace ? "replace" : "add_parallel"},
                                  {"n_new", a.n_new},
                                  {"segment", a.segment}});
    }
    doc["transformer_replaced"] = plan.transformer_replaced;
    doc["transformer_rating_kva"] = plan.transformer_rating_kva;
    doc["total_capex_eur"] = plan.total_capex;
    doc["annual_cost_eur"] = plan.annual_cost;
    return doc.dump(2) + "\n";
}

}  // namespace gridplan
