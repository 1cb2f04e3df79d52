#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridplan/battopt.hpp"
#include "gridplan/costbook.hpp"
#include "gridplan/grid.hpp"
#include "gridplan/powerflow.hpp"

namespace gridplan {

/// Battery-count constraint: "auto", "max-<n>" or "<n>".
struct BatteryLimit {
    enum class Kind { Unconstrained, AtMost, Exactly };
    Kind kind = Kind::Unconstrained;
    int n = 0;

    static BatteryLimit parse(const std::string& text);
    std::string label() const;
    void apply(BatteryOptions& options) const;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::filesystem::path grid;
    /// Load per bus; also generation at full rooftop potential unless
    /// irradiance and roofs are given.
    std::filesystem::path injections;
    std::filesystem::path irradiance;
    std::filesystem::path roofs;
    std::filesystem::path costs;
    double latitude = 48.78;
    double longitude = 9.18;
    double pv_penetration = 1.0;
    double v_deviation_limit = 0.05;
    BatteryLimit batteries;
    bool allow_curtailment = false;
    int window_hours = 72;
    double power_factor = 1.0;
    double slack_v = 1.0;

    void validate() const;
};

/// Scenario matrix sharing one grid; `scenarios` is never empty.
struct StudyConfig {
    std::vector<ScenarioConfig> scenarios;
    std::vector<BatteryLimit> variants{BatteryLimit{}, {BatteryLimit::Kind::Exactly, 5}, {BatteryLimit::Kind::Exactly, 10}};
};

/// Top-level keys are the defaults of every scenario; an optional
/// `scenarios` array overrides them per entry. Relative paths resolve
/// against `base_dir`.
StudyConfig parse_study(const std::string& json_text, const std::filesystem::path& base_dir);
StudyConfig load_study(const std::filesystem::path& path);

/// Worst-window injections of one scenario with its baseline load flow.
struct ScenarioBundle {
    ScenarioConfig config;
    GridNetwork grid;
    CostBook costs;
    VoltageLimits limits;
    int window_start = 0;
    std::vector<Timestamp> timestamps;
    Eigen::MatrixXd load_kw;  // window hours x buses
    Eigen::MatrixXd gen_kw;
    Eigen::MatrixXd net_kw;
    WindowFlow baseline;
    std::vector<std::pair<int, int>> violations;  // (bus, hour) outside the band

    bool needs_action() const { return !violations.empty(); }
};

/// Scales generation by the penetration, selects the worst window and
/// screens the baseline. `full_potential` holds load and generation at
/// 100 % penetration.
ScenarioBundle make_bundle(const ScenarioConfig& config, const GridNetwork& grid, const CostBook& costs,
                           const InjectionSeries& full_potential);

/// Load and generation at full potential as described by the config.
InjectionSeries scenario_injections(const ScenarioConfig& config, const GridNetwork& grid);

ScenarioBundle run_scenario(const ScenarioConfig& config);

BatteryOptions battery_options(const ScenarioConfig& config);

/// Wide CSV: timestamp then one voltage column per bus, one row per hour.
/// `delta_kw` (hours x buses) is added to the window injections when given.
std::string voltage_profile_csv(const ScenarioBundle& bundle, const Eigen::MatrixXd* delta_kw = nullptr);
std::string voltage_profile_csv(const ScenarioBundle& bundle, const GridNetwork& grid);

}  // namespace gridplan
