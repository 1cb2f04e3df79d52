#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridplan/costbook.hpp"
#include "gridplan/grid.hpp"
#include "gridplan/powerflow.hpp"

namespace gridplan {

/// Raised when the catalog and the parallel cap cannot bring a branch within limits.
class InfeasibleBranch : public std::runtime_error {
public:
    InfeasibleBranch(int branch_root, const std::string& detail)
        : std::runtime_error("infeasible branch at bus " + std::to_string(branch_root) + ": " + detail),
          root(branch_root) {}
    int root;
};

enum class ActionKind { Replace, AddParallel };

struct ReinforcementAction {
    int segment = 0;
    ActionKind kind = ActionKind::Replace;
    std::string line_type;   // type of the segment afterwards
    int n_new = 1;           // cables installed by this action
    int n_parallel = 1;      // parallel cables afterwards
    double capex = 0.0;
    double resistance_after = 0.0;  // effective, ohm
};

struct ReinforceOptions {
    int max_parallel = 3;
    double power_factor = 1.0;
    double slack_v = 1.0;
    int max_iterations_per_branch = 500;
    int max_passes = 5;
    std::vector<double> transformer_sizes_kva{630.0, 800.0, 1000.0, 1250.0, 1600.0};
};

struct CriticalNode {
    int bus = -1;
    int hour = -1;
    double violation = 0.0;  // p.u. beyond the limit; <= 0 means feasible
};

/// Worst voltage-limit excess among the branch buses over all hours of the
/// window, by nonlinear load flow. Throws std::runtime_error on divergence.
CriticalNode find_critical_node(const GridNetwork& grid, const Branch& branch, const Eigen::MatrixXd& net_kw,
                                const VoltageLimits& limits, const ReinforceOptions& options = {});
CriticalNode find_critical_node(const Branch& branch, const WindowFlow& flow, const VoltageLimits& limits);

/// Every upgrade of one segment that strictly lowers its effective impedance
/// while respecting the parallel cap.
std::vector<ReinforcementAction> candidate_actions(const GridNetwork& grid, int segment, const GridCostBook& book,
                                                   int max_parallel = 3);

GridNetwork apply_action(const GridNetwork& grid, const ReinforcementAction& action);

/// Greedy loop on one branch; returns the actions in the order applied and
/// updates `grid` in place.
std::vector<ReinforcementAction> reinforce_branch(GridNetwork& grid, const Branch& branch, const Eigen::MatrixXd& net_kw,
                                                  const VoltageLimits& limits, const CostBook& book,
                                                  const ReinforceOptions& options = {});

struct ReinforcementPlan {
    explicit ReinforcementPlan(GridNetwork reinforced) : grid(std::move(reinforced)) {}

    std::vector<ReinforcementAction> actions;
    std::vector<int> action_branch;  // branch index per action
    bool transformer_replaced = false;
    double transformer_rating_kva = 0.0;
    double total_capex = 0.0;
    double annual_cost = 0.0;
    Eigen::VectorXd final_max_voltage;  // per hour
    Eigen::VectorXd final_min_voltage;
    double final_max_loading = 0.0;  // segment current over ampacity
    GridNetwork grid;

    bool empty() const { return actions.empty() && !transformer_replaced; }
};

ReinforcementPlan reinforce_grid(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const VoltageLimits& limits,
                                 const CostBook& book, const ReinforceOptions& options = {});

/// Re-prices the action list (and transformer) through the cost book.
double reprice_plan(const GridNetwork& original, const ReinforcementPlan& plan, const CostBook& book);

/// Cost of replacing every segment on the slack paths of the given buses
/// with `n_parallel` lines of the lowest-resistance catalog type on a new route.
double upgrade_everything_bound(const GridNetwork& grid, const std::vector<int>& buses, const GridCostBook& book,
                                int n_parallel = 1);

std::string plan_to_json(const GridNetwork& original, const ReinforcementPlan& plan);

}  // namespace gridplan
