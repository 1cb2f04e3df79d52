#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridplan/costbook.hpp"
#include "gridplan/grid.hpp"
#include "gridplan/lp.hpp"
#include "gridplan/powerflow.hpp"

namespace gridplan {

struct BatteryOptions {
    std::optional<int> max_batteries;
    std::optional<int> exact_batteries;
    double c_max = 1000.0;  // kWh per site
    double p_max = 500.0;   // kW per site
    double c_min = 1.0;     // kWh, smallest battery worth installing
    double charge_efficiency = 0.95;
    double discharge_efficiency = 0.95;
    bool allow_curtailment = false;
    double curtailment_penalty = 0.3;  // euro/kWh
    double throughput_penalty = 0.01;  // euro/kWh, breaks ties between dispatches
    double dt_hours = 1.0;
    double power_factor = 1.0;
    double slack_v = 1.0;
    bool linearize_at_peak = false;
    int candidates = 15;
    int nonlinear_refinements = 4;
    double nonlinear_tolerance = 1e-4;  // p.u., accepted replay excess
    lp::MipOptions mip;
};

/// Battery placement problem on the linearised grid over one window.
struct PlacementProblem {
    GridNetwork grid;
    SensitivityModel model;
    Eigen::MatrixXd net_kw;  // hours x buses, generation minus load
    Eigen::MatrixXd gen_kw;  // hours x buses, curtailable generation
    VoltageLimits limits;
    std::vector<int> candidates;
    BatteryOptions options;
    /// Additive nonlinear correction of the linear voltages, hours x buses.
    Eigen::MatrixXd correction;

    int hours() const { return static_cast<int>(net_kw.rows()); }
    int buses() const { return static_cast<int>(net_kw.cols()); }
};

/// Builds the sensitivity model (flat start, or the hour with the largest
/// generation surplus) and an empty correction.
PlacementProblem make_problem(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const Eigen::MatrixXd& gen_kw,
                              const VoltageLimits& limits, std::vector<int> candidates, const BatteryOptions& options);

/// Column layout of the MILP.
struct MilpLayout {
    int candidates = 0;
    int hours = 0;
    int per_site = 0;
    std::vector<int> curtail_bus;   // per curtailment variable
    std::vector<int> curtail_hour;
    int curtail_offset = 0;

    int b(int n) const { return n * per_site; }
    int capacity(int n) const { return n * per_site + 1; }
    int power(int n) const { return n * per_site + 2; }
    int charge(int n, int t) const { return n * per_site + 3 + 3 * t; }
    int discharge(int n, int t) const { return n * per_site + 4 + 3 * t; }
    int energy(int n, int t) const { return n * per_site + 5 + 3 * t; }
};

struct VoltageRow {
    int bus = 0;
    int hour = 0;
    bool upper = true;
};

struct PlacementMilp {
    lp::MixedIntegerProgram mip;
    MilpLayout layout;
    std::vector<VoltageRow> voltage_rows;
};

/// Linear voltage at (bus, hour) for a candidate solution, correction included.
double model_voltage(const PlacementProblem& problem, const MilpLayout& layout, const Eigen::VectorXd& x, int bus,
                     int hour);

/// Voltage rows: with `all_rows` every bus and hour gets both sides,
/// otherwise every hour of each bus and side violated at zero storage.
PlacementMilp build_milp(const PlacementProblem& problem, const CostBook& book, bool all_rows = false);
void add_voltage_row(PlacementMilp& milp, const PlacementProblem& problem, const VoltageRow& row);

struct BatteryPlacement {
    int bus = 0;
    double capacity_kwh = 0.0;
    double power_kw = 0.0;
};

struct BatteryPlan {
    std::vector<BatteryPlacement> placements;
    Eigen::MatrixXd power_kw;        // hours x placements, charge positive
    Eigen::MatrixXd charge_kw;       // hours x placements
    Eigen::MatrixXd discharge_kw;
    Eigen::MatrixXd soc_kwh;         // hours x placements, state at the start of each hour
    Eigen::MatrixXd curtailment_kw;  // hours x buses
    double capex = 0.0;
    double annual_cost = 0.0;
    double objective = 0.0;
    double gap = 0.0;
    bool proven_optimal = true;
    long nodes = 0;
    int voltage_rows = 0;
    std::vector<std::string> warnings;

    int count() const { return static_cast<int>(placements.size()); }
    double total_capacity() const;
    /// Net injection change per hour and bus: discharge minus charge minus curtailment.
    Eigen::MatrixXd injection_delta(int buses) const;
};

class PlacementInfeasible : public std::runtime_error {
public:
    PlacementInfeasible(const std::string& what, std::vector<std::pair<int, int>> binding)
        : std::runtime_error(what), bus_hours(std::move(binding)) {}
    std::vector<std::pair<int, int>> bus_hours;  // (bus, hour)
};

BatteryPlan place_batteries(const PlacementProblem& problem, const CostBook& book);

/// Convenience wrapper: prunes candidates, builds the problem and solves it.
BatteryPlan place_batteries(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const Eigen::MatrixXd& gen_kw,
                            const VoltageLimits& limits, const CostBook& book, const BatteryOptions& options = {});

struct PlanVerification {
    double max_voltage = 0.0;
    double min_voltage = 0.0;
    double max_excess = 0.0;   // largest limit excess, negative when inside the band
    double max_loading = 0.0;  // segment current over ampacity
    double linear_gap = 0.0;   // max |linear - nonlinear| when a model is supplied
    std::vector<BusViolation> violations;
    std::vector<int> violation_hours;
    bool converged = true;
    WindowFlow flow;

    bool feasible(double tolerance = 0.0) const { return converged && max_excess <= tolerance; }
};

PlanVerification verify_plan(const GridNetwork& grid, const BatteryPlan& plan, const Eigen::MatrixXd& net_kw,
                             const VoltageLimits& limits, double power_factor = 1.0, double slack_v = 1.0,
                             const SensitivityModel* model = nullptr, double tolerance = 0.0);

/// Buses ranked by the voltage excess they can relieve, top k plus the
/// branch root of every violating bus. Empty when nothing is violated.
std::vector<int> prune_candidates(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, const VoltageLimits& limits,
                                  int k = 15, double power_factor = 1.0, double slack_v = 1.0);

std::string battery_plan_to_json(const BatteryPlan& plan);
/// Placements only; the trajectories live in the CSV.
BatteryPlan parse_battery_plan(const std::string& json_text);
std::string trajectories_to_csv(const BatteryPlan& plan);
double reprice_batteries(const BatteryPlan& plan, const BatteryCostBook& book);

}  // namespace gridplan
