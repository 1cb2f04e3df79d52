#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridplan/battopt.hpp"
#include "gridplan/reinforce.hpp"
#include "gridplan/scenario.hpp"

namespace gridplan {

/// Outcome of one reinforcement or battery run inside a comparison.
struct CellResult {
    bool ok = true;
    std::string error;
    double capex = 0.0;        // euro
    double annual_cost = 0.0;  // euro/yr
    int batteries = 0;
    double capacity_kwh = 0.0;
    bool proven_optimal = true;
};

struct ScenarioRow {
    std::string name;
    double pv_penetration = 0.0;
    double v_deviation_limit = 0.0;
    int window_start = 0;
    int baseline_violations = 0;
    Eigen::VectorXd baseline_max_v;  // per hour
    Eigen::VectorXd baseline_min_v;

    CellResult reinforcement;
    std::optional<ReinforcementPlan> reinforcement_plan;
    std::vector<CellResult> batteries;  // per variant
    std::vector<std::optional<BatteryPlan>> battery_plans;
};

struct ComparisonReport {
    std::vector<BatteryLimit> variants;
    std::vector<ScenarioRow> rows;
    std::vector<ScenarioBundle> bundles;  // parallel to rows

    /// "<scenario>/<cell>: <message>" for every failed cell.
    std::vector<std::string> failures() const;
};

/// Runs reinforcement and every battery variant for each bundle. Cells run
/// on `threads` workers; the report does not depend on the thread count.
ComparisonReport compare(std::vector<ScenarioBundle> bundles, const std::vector<BatteryLimit>& variants, int threads = 1);
ComparisonReport compare(const StudyConfig& study, int threads = 1);

/// k euro with one decimal, as in the cost tables.
std::string format_keur(double euro);

std::string report_to_csv(const ComparisonReport& report);
std::string report_to_json(const ComparisonReport& report);

/// report.csv, report.json, reinforcement.json, batteries.json and
/// voltages_<scenario>_<baseline|reinforced|batteries-<variant>>.csv.
void write_report(const ComparisonReport& report, const std::filesystem::path& out_dir);

}  // namespace gridplan
