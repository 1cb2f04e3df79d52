#include "gridplan/powerflow.hpp"

#include <cmath>
#include <stdexcept>

namespace gridplan {

PerUnitInjection per_unit_injection(const GridNetwork& grid, const Eigen::Ref<const Eigen::VectorXd>& net_kw,
                                    double power_factor) {
    if (net_kw.size() != grid.bus_count()) throw std::invalid_argument("per_unit_injection: dimension mismatch");
    if (!(power_factor > 0.0 && power_factor <= 1.0)) throw std::invalid_argument("power factor must be in (0, 1]");
    PerUnitInjection inj;
    inj.p = net_kw / grid.s_base_kva();
    const double tan_phi = std::sqrt(1.0 - power_factor * power_factor) / power_factor;
    inj.q = inj.p * tan_phi;
    return inj;
}

namespace {

template <typename Part>
Eigen::MatrixXd common_path(const GridNetwork& grid, Part part) {
    const int n = grid.bus_count();
    Eigen::VectorXd path_sum(n);
    Eigen::MatrixXd m(n, n);
    const int slack = grid.slack();
    path_sum(slack) = part(grid.transformer().impedance()) / grid.z_base(slack);
    m.row(slack).setConstant(path_sum(slack));
    const auto& order = grid.preorder();
    for (size_t i = 1; i < order.size(); ++i) {
        const int c = order[i];
        const int p = grid.parent_bus(c);
        path_sum(c) = path_sum(p) + part(grid.segment_impedance(grid.parent_segment(c))) / grid.z_base(c);
        m.row(c) = m.row(p);
        const int start = grid.preorder_position(c);
        for (int k = start; k < start + grid.subtree_size(c); ++k) m(c, order[static_cast<size_t>(k)]) = path_sum(c);
    }
    return m;
}

}  // namespace

Eigen::MatrixXd common_path_resistance(const GridNetwork& grid) {
    return common_path(grid, [](std::complex<double> z) { return z.real(); });
}

Eigen::MatrixXd common_path_reactance(const GridNetwork& grid) {
    return common_path(grid, [](std::complex<double> z) { return z.imag(); });
}

SensitivityModel build_sensitivity(const GridNetwork& grid, const PerUnitInjection& operating_point, double slack_v) {
    const VoltageSolution base = nonlinear_loadflow(grid, operating_point, slack_v);
    if (!base.converged) throw std::runtime_error("build_sensitivity: load flow at the operating point did not converge");
    SensitivityModel model;
    model.v0 = base.v;
    model.p_op = operating_point.p;
    model.q_op = operating_point.q;
    // Dividing by v_i v_j keeps the matrices symmetric.
    const Eigen::MatrixXd scale = (base.v * base.v.transpose()).cwiseInverse();
    model.s_p = common_path_resistance(grid).cwiseProduct(scale);
    model.s_q = common_path_reactance(grid).cwiseProduct(scale);
    return model;
}

VoltageSolution nonlinear_loadflow(const GridNetwork& grid, const PerUnitInjection& injection, double slack_v,
                                   const SweepOptions& options) {
    const int n = grid.bus_count();
    const int m = grid.segment_count();
    if (injection.p.size() != n || injection.q.size() != n)
        throw std::invalid_argument("nonlinear_loadflow: injection dimension mismatch");

    const int slack = grid.slack();
    const auto& order = grid.preorder();
    Eigen::VectorXcd z_seg(m);
    for (int s = 0; s < m; ++s) z_seg(s) = grid.segment_impedance(s) / grid.z_base(grid.downstream_bus(s));
    const std::complex<double> z_trafo = grid.transformer().impedance() / grid.z_base(slack);

    Eigen::VectorXcd s_inj(n);
    for (int b = 0; b < n; ++b) s_inj(b) = {injection.p(b), injection.q(b)};

    VoltageSolution sol;
    sol.v_complex = Eigen::VectorXcd::Constant(n, std::complex<double>(slack_v, 0.0));
    Eigen::VectorXcd i_inj(n);
    Eigen::VectorXcd j_down(n);  // current entering each bus from its parent
    std::complex<double> j_trafo{0.0, 0.0};

    for (int it = 1; it <= options.max_iterations; ++it) {
        sol.iterations = it;
        for (int b = 0; b < n; ++b) i_inj(b) = std::conj(s_inj(b) / sol.v_complex(b));

        // Backward sweep: a bus draws the negative of its injection plus its subtree.
        for (auto rit = order.rbegin(); rit != order.rend(); ++rit) {
            const int b = *rit;
            std::complex<double> total = -i_inj(b);
            for (int c : grid.children(b)) total += j_down(c);
            j_down(b) = total;
        }
        j_trafo = j_down(slack);

        // Forward sweep.
        Eigen::VectorXcd v_new(n);
        v_new(slack) = slack_v - z_trafo * j_trafo;
        for (size_t k = 1; k < order.size(); ++k) {
            const int b = order[k];
            v_new(b) = v_new(grid.parent_bus(b)) - z_seg(grid.parent_segment(b)) * j_down(b);
        }

        double mismatch = 0.0;
        bool finite = true;
        for (int b = 0; b < n; ++b) {
            const std::complex<double> s_calc = v_new(b) * std::conj(i_inj(b));
            mismatch = std::max(mismatch, std::abs(s_calc - s_inj(b)));
            if (!std::isfinite(v_new(b).real()) || !std::isfinite(v_new(b).imag()) || std::abs(v_new(b)) < 0.3)
                finite = false;
        }
        sol.v_complex = v_new;
        sol.mismatch = mismatch;
        if (!finite) {
            sol.converged = false;
            break;
        }
        if (mismatch < options.tolerance) {
            sol.converged = true;
            break;
        }
    }

    sol.v = sol.v_complex.cwiseAbs();
    sol.branch_current_pu = Eigen::VectorXcd::Zero(m);
    sol.line_currents = Eigen::VectorXd::Zero(m);
    double losses = std::norm(j_trafo) * z_trafo.real();
    for (int s = 0; s < m; ++s) {
        const std::complex<double> j = j_down(grid.downstream_bus(s));
        sol.branch_current_pu(s) = j;
        sol.line_currents(s) = std::abs(j) * grid.i_base(grid.downstream_bus(s));
        losses += std::norm(j) * z_seg(s).real();
    }
    const double s_base = grid.s_base_kva();
    sol.losses_kw = losses * s_base;
    sol.slack_import_kw = (std::complex<double>(slack_v, 0.0) * std::conj(j_trafo)).real() * s_base;
    sol.transformer_loading = std::abs(sol.v_complex(slack)) * std::abs(j_trafo);
    return sol;
}

ViolationReport screen_limits(const GridNetwork& grid, const VoltageSolution& solution, const VoltageLimits& limits) {
    if (!solution.converged) throw std::invalid_argument("screen_limits: solution did not converge");
    ViolationReport report;
    for (int b = 0; b < grid.bus_count(); ++b) {
        const double v = solution.v(b);
        if (v > limits.v_max || v < limits.v_min) report.buses.push_back({b, v, limits.excess(v)});
    }
    for (int s = 0; s < grid.segment_count(); ++s) {
        const double current = solution.line_currents(s);
        const double ampacity = grid.segment_ampacity(s);
        if (current > ampacity) report.segments.push_back({s, current, ampacity, current - ampacity});
    }
    report.transformer_overload = std::max(0.0, solution.transformer_loading - 1.0);
    return report;
}

WindowFlow solve_window(const GridNetwork& grid, const Eigen::MatrixXd& net_kw, double power_factor, double slack_v,
                        const SweepOptions& options) {
    const auto hours = net_kw.rows();
    WindowFlow flow;
    flow.v.resize(hours, grid.bus_count());
    flow.currents.resize(hours, grid.segment_count());
    flow.transformer_loading.resize(hours);
    for (Eigen::Index t = 0; t < hours; ++t) {
        const Eigen::VectorXd row = net_kw.row(t).transpose();
        const VoltageSolution sol = nonlinear_loadflow(grid, per_unit_injection(grid, row, power_factor), slack_v, options);
        flow.converged = flow.converged && sol.converged;
        flow.max_iterations = std::max(flow.max_iterations, sol.iterations);
        flow.v.row(t) = sol.v.transpose();
        flow.currents.row(t) = sol.line_currents.transpose();
        flow.transformer_loading(t) = sol.transformer_loading;
    }
    return flow;
}

}  // namespace gridplan
