#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gridplan/grid.hpp"

namespace gridplan {

struct VoltageLimits {
    double v_min = 0.95;
    double v_max = 1.05;

    static VoltageLimits from_deviation(double deviation) { return {1.0 - deviation, 1.0 + deviation}; }
    /// Positive when `v` lies outside the band, otherwise minus the margin to the nearer limit.
    double excess(double v) const { return std::max(v - v_max, v_min - v); }
};

/// Per-bus net injection in p.u. on the transformer base; generation positive.
struct PerUnitInjection {
    Eigen::VectorXd p;
    Eigen::VectorXd q;

    static PerUnitInjection zero(int buses) {
        return {Eigen::VectorXd::Zero(buses), Eigen::VectorXd::Zero(buses)};
    }
};

/// Converts net kW (generation minus load) to p.u. With power_factor < 1 a
/// reactive component of the same sign is synthesised from the active power.
PerUnitInjection per_unit_injection(const GridNetwork& grid, const Eigen::Ref<const Eigen::VectorXd>& net_kw,
                                    double power_factor = 1.0);

/// Linearised voltage model around an operating point: voltage magnitudes are
/// affine in the active and reactive injections. Indexed by bus id; the slack
/// bus row and column carry only the transformer contribution.
struct SensitivityModel {
    Eigen::MatrixXd s_p;
    Eigen::MatrixXd s_q;
    Eigen::VectorXd v0;
    Eigen::VectorXd p_op;
    Eigen::VectorXd q_op;

    Eigen::Index size() const { return v0.size(); }
};

/// Common-path impedance sums: entry (i, j) is the resistance (or reactance)
/// in p.u. shared by the paths of buses i and j to the source, transformer
/// included.
Eigen::MatrixXd common_path_resistance(const GridNetwork& grid);
Eigen::MatrixXd common_path_reactance(const GridNetwork& grid);

/// Throws std::runtime_error when the load flow at the operating point does not converge.
SensitivityModel build_sensitivity(const GridNetwork& grid, const PerUnitInjection& operating_point,
                                   double slack_v = 1.0);

/// v = v0 + s_p (p - p_op) + s_q (q - q_op).
template <typename DerivedP, typename DerivedQ>
Eigen::VectorXd linear_voltages(const SensitivityModel& model, const Eigen::MatrixBase<DerivedP>& p,
                                const Eigen::MatrixBase<DerivedQ>& q) {
    if (p.size() != model.size() || q.size() != model.size())
        throw std::invalid_argument("linear_voltages: injection dimension does not match the model");
    return model.v0 + model.s_p * (p - model.p_op) + model.s_q * (q - model.q_op);
}

inline Eigen::VectorXd linear_voltages(const SensitivityModel& model, const PerUnitInjection& injection) {
    return linear_voltages(model, injection.p, injection.q);
}

struct SweepOptions {
    double tolerance = 1e-8;  // max power mismatch, p.u.
    int max_iterations = 100;
};

struct VoltageSolution {
    Eigen::VectorXd v;              // magnitude per bus, p.u.
    Eigen::VectorXcd v_complex;     // phasor per bus, p.u.
    Eigen::VectorXd line_currents;  // per segment, A
    Eigen::VectorXcd branch_current_pu;  // per segment, flowing away from the source
    double losses_kw = 0.0;
    double slack_import_kw = 0.0;      // power drawn from the upstream source
    double transformer_loading = 0.0;  // apparent power / rating
    double mismatch = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Backward/forward sweep with constant-power injections. `slack_v` is the
/// source voltage behind the transformer impedance. Divergence is reported
/// through the converged flag, never thrown.
VoltageSolution nonlinear_loadflow(const GridNetwork& grid, const PerUnitInjection& injection, double slack_v = 1.0,
                                   const SweepOptions& options = {});

struct BusViolation {
    int bus = 0;
    double v = 0.0;
    double excess = 0.0;
};

struct SegmentOverload {
    int segment = 0;
    double current_a = 0.0;
    double ampacity_a = 0.0;
    double excess_a = 0.0;
};

struct ViolationReport {
    std::vector<BusViolation> buses;
    std::vector<SegmentOverload> segments;
    double transformer_overload = 0.0;  // loading above 1.0, zero when within rating

    bool feasible() const { return buses.empty() && segments.empty() && transformer_overload <= 0.0; }
};

ViolationReport screen_limits(const GridNetwork& grid, const VoltageSolution& solution, const VoltageLimits& limits);

/// Nonlinear load flow for every hour of a window; rows are hours.
struct WindowFlow {
    Eigen::MatrixXd v;         // hours x buses
    Eigen::MatrixXd currents;  // hours x segments, A
    Eigen::VectorXd transformer_loading;
    bool converged = true;
    int max_iterations = 0;
};

WindowFlow solve_window(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, double power_factor = 1.0,
                        double slack_v = 1.0, const SweepOptions& options = {});

}  // namespace gridplan
