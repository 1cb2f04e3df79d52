#include "gridplan/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace gridplan::lp {

std::string to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration-limit";
        case Status::NodeLimit: return "node-limit";
    }
    return "unknown";
}

int LinearProgram::add_variable(double cost, double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper) || lower > upper)
        throw std::invalid_argument("add_variable: lower bound exceeds upper bound");
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return variables() - 1;
}

int LinearProgram::add_row(std::span<const int> vars, std::span<const double> coefficients, Sense sense, double rhs) {
    if (vars.size() != coefficients.size()) throw std::invalid_argument("add_row: index/coefficient size mismatch");
    if (!std::isfinite(rhs)) throw std::invalid_argument("add_row: right-hand side must be finite");
    const int row = rows();
    for (size_t k = 0; k < vars.size(); ++k) {
        if (vars[k] < 0 || vars[k] >= variables()) throw std::invalid_argument("add_row: unknown variable");
        if (coefficients[k] != 0.0) entries_.emplace_back(row, vars[k], coefficients[k]);
    }
    sense_.push_back(sense);
    rhs_.push_back(rhs);
    return row;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
    if (lower > upper) throw std::invalid_argument("set_bounds: lower bound exceeds upper bound");
    lower_.at(static_cast<size_t>(var)) = lower;
    upper_.at(static_cast<size_t>(var)) = upper;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> LinearProgram::matrix() const {
    Eigen::SparseMatrix<double, Eigen::RowMajor> a(rows(), variables());
    a.setFromTriplets(entries_.begin(), entries_.end());
    return a;
}

double LinearProgram::objective_value(const Eigen::VectorXd& x) const {
    double sum = 0.0;
    for (int j = 0; j < variables(); ++j) sum += cost_[static_cast<size_t>(j)] * x(j);
    return sum;
}

double LinearProgram::max_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (int j = 0; j < variables(); ++j) {
        worst = std::max(worst, lower_[static_cast<size_t>(j)] - x(j));
        worst = std::max(worst, x(j) - upper_[static_cast<size_t>(j)]);
    }
    const Eigen::VectorXd activity = matrix() * x;
    for (int i = 0; i < rows(); ++i) {
        const double r = rhs_[static_cast<size_t>(i)];
        switch (sense_[static_cast<size_t>(i)]) {
            case Sense::LessEqual: worst = std::max(worst, activity(i) - r); break;
            case Sense::GreaterEqual: worst = std::max(worst, r - activity(i)); break;
            case Sense::Equal: worst = std::max(worst, std::abs(activity(i) - r)); break;
        }
    }
    return worst;
}

// Internal form: structurals x (n) and logicals s (m) with A_s x - s = 0,
// where A_s is A with equilibrated rows. All variables carry bounds.
class SimplexSolver {
public:
    SimplexSolver(const LinearProgram& lp, Tolerances tol) : tol_(tol), n_(lp.variables()), m_(lp.rows()) {
        const auto rowwise = lp.matrix();
        row_scale_.assign(static_cast<size_t>(m_), 1.0);
        for (int i = 0; i < m_; ++i) {
            double biggest = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rowwise, i); it; ++it)
                biggest = std::max(biggest, std::abs(it.value()));
            if (biggest > 0.0) row_scale_[static_cast<size_t>(i)] = 1.0 / biggest;
        }
        std::vector<Eigen::Triplet<double>> scaled;
        scaled.reserve(lp.entries().size());
        for (const auto& e : lp.entries())
            scaled.emplace_back(e.row(), e.col(), e.value() * row_scale_[static_cast<size_t>(e.row())]);
        a_.resize(m_, n_);
        a_.setFromTriplets(scaled.begin(), scaled.end());
        a_.makeCompressed();

        double cmax = 0.0;
        for (double c : lp.cost()) cmax = std::max(cmax, std::abs(c));
        cost_scale_ = cmax > 0.0 ? 1.0 / cmax : 1.0;
        original_cost_ = Eigen::Map<const Eigen::VectorXd>(lp.cost().data(), n_);
        cost_ = Eigen::VectorXd::Zero(n_ + m_);
        cost_.head(n_) = original_cost_ * cost_scale_;

        row_lo_.resize(m_);
        row_hi_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            const double r = lp.rhs(i) * row_scale_[static_cast<size_t>(i)];
            switch (lp.sense(i)) {
                case Sense::LessEqual: row_lo_(i) = -kInfinity; row_hi_(i) = r; break;
                case Sense::GreaterEqual: row_lo_(i) = r; row_hi_(i) = kInfinity; break;
                case Sense::Equal: row_lo_(i) = r; row_hi_(i) = r; break;
            }
        }
        default_lower_ = lp.lower();
        default_upper_ = lp.upper();
    }

    SolveResult solve(std::span<const double> lower, std::span<const double> upper, const Basis* warm) {
        if (static_cast<int>(lower.size()) != n_ || static_cast<int>(upper.size()) != n_)
            throw std::invalid_argument("Simplex::solve: bound vector size mismatch");
        const int total = n_ + m_;
        lo_.resize(total);
        up_.resize(total);
        for (int j = 0; j < n_; ++j) {
            lo_(j) = lower[static_cast<size_t>(j)];
            up_(j) = upper[static_cast<size_t>(j)];
            if (lo_(j) > up_(j)) {
                SolveResult infeasible;
                infeasible.status = Status::Infeasible;
                return infeasible;
            }
        }
        lo_.tail(m_) = row_lo_;
        up_.tail(m_) = row_hi_;
        x_ = Eigen::VectorXd::Zero(total);
        status_.assign(static_cast<size_t>(total), Basis::AtLower);

        const bool warm_installed = warm && install_basis(*warm);
        if (!warm_installed) install_slack_basis();
        bool factored = refactor();
        if (!factored) {
            install_slack_basis();
            refactor();
        }
        compute_basics();
        long iterations = 0;
        if (warm_installed && factored) {
            // A warm basis usually stays dual feasible after bound or row changes.
            const DualOutcome outcome = dual_iterate(iterations);
            if (outcome == DualOutcome::Infeasible) return finish(Status::Infeasible, iterations);
            if (outcome == DualOutcome::Abandoned && !refactor()) {
                install_slack_basis();
                refactor();
            }
            compute_basics();
        }
        return iterate(iterations);
    }

    SolveResult solve_default(const Basis* warm) { return solve(default_lower_, default_upper_, warm); }

private:
    struct Eta {
        int row = 0;
        double pivot = 1.0;
        std::vector<std::pair<int, double>> entries;
    };

    void place_nonbasic(int j, std::int8_t preferred) {
        const bool lo_finite = std::isfinite(lo_(j));
        const bool up_finite = std::isfinite(up_(j));
        std::int8_t s = preferred;
        if (s == Basis::AtLower && !lo_finite) s = up_finite ? Basis::AtUpper : Basis::AtZero;
        if (s == Basis::AtUpper && !up_finite) s = lo_finite ? Basis::AtLower : Basis::AtZero;
        if (s == Basis::AtZero && lo_finite) s = Basis::AtLower;
        if (s == Basis::AtZero && up_finite) s = Basis::AtUpper;
        status_[static_cast<size_t>(j)] = s;
        x_(j) = s == Basis::AtLower ? lo_(j) : s == Basis::AtUpper ? up_(j) : 0.0;
    }

    void install_slack_basis() {
        head_.resize(static_cast<size_t>(m_));
        for (int j = 0; j < n_; ++j) place_nonbasic(j, Basis::AtLower);
        for (int i = 0; i < m_; ++i) {
            status_[static_cast<size_t>(n_ + i)] = Basis::Basic;
            head_[static_cast<size_t>(i)] = n_ + i;
        }
    }

    bool install_basis(const Basis& basis) {
        const int total = n_ + m_;
        const int given = static_cast<int>(basis.status.size());
        // Rows appended after the basis was taken enter with their logical basic.
        if (given < n_ || given > total) return false;
        std::vector<std::int8_t> status(basis.status);
        status.resize(static_cast<size_t>(total), Basis::Basic);
        if (std::count(status.begin(), status.end(), Basis::Basic) != m_) return false;
        head_.clear();
        for (int j = 0; j < total; ++j) {
            if (status[static_cast<size_t>(j)] == Basis::Basic) {
                status_[static_cast<size_t>(j)] = Basis::Basic;
                head_.push_back(j);
            } else {
                place_nonbasic(j, status[static_cast<size_t>(j)]);
            }
        }
        return true;
    }

    bool refactor() {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<size_t>(m_) * 2);
        for (int k = 0; k < m_; ++k) {
            const int j = head_[static_cast<size_t>(k)];
            if (j < n_) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it)
                    triplets.emplace_back(static_cast<int>(it.row()), k, it.value());
            } else {
                triplets.emplace_back(j - n_, k, -1.0);
            }
        }
        Eigen::SparseMatrix<double> b(m_, m_);
        b.setFromTriplets(triplets.begin(), triplets.end());
        b.makeCompressed();
        etas_.clear();
        if (m_ == 0) return true;
        lu_.analyzePattern(b);
        lu_.factorize(b);
        return lu_.info() == Eigen::Success;
    }

    Eigen::VectorXd column(int j) const {
        Eigen::VectorXd col = Eigen::VectorXd::Zero(m_);
        if (j < n_) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) col(it.row()) = it.value();
        } else {
            col(j - n_) = -1.0;
        }
        return col;
    }

    Eigen::VectorXd ftran(const Eigen::VectorXd& rhs) const {
        if (m_ == 0) return rhs;
        Eigen::VectorXd w = lu_.solve(rhs);
        for (const Eta& eta : etas_) {
            const double wr = w(eta.row) / eta.pivot;
            if (wr != 0.0)
                for (const auto& [i, a] : eta.entries) w(i) -= a * wr;
            w(eta.row) = wr;
        }
        return w;
    }

    Eigen::VectorXd btran(Eigen::VectorXd z) const {
        if (m_ == 0) return z;
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double sum = z(it->row);
            for (const auto& [i, a] : it->entries) sum -= a * z(i);
            z(it->row) = sum / it->pivot;
        }
        return lu_.transpose().solve(z);
    }

    void compute_basics() {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
        for (int j = 0; j < n_ + m_; ++j) {
            if (status_[static_cast<size_t>(j)] == Basis::Basic || x_(j) == 0.0) continue;
            if (j < n_) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) rhs(it.row()) -= it.value() * x_(j);
            } else {
                rhs(j - n_) += x_(j);
            }
        }
        const Eigen::VectorXd xb = ftran(rhs);
        for (int k = 0; k < m_; ++k) x_(head_[static_cast<size_t>(k)]) = xb(k);
    }

    double infeasibility(int j) const {
        if (x_(j) < lo_(j) - tol_.feasibility) return lo_(j) - x_(j);
        if (x_(j) > up_(j) + tol_.feasibility) return x_(j) - up_(j);
        return 0.0;
    }

    SolveResult finish(Status status, long iterations) const {
        SolveResult result;
        result.status = status;
        result.iterations = iterations;
        result.basis.status = status_;
        if (status == Status::Optimal || status == Status::IterationLimit) {
            result.x = x_.head(n_);
            for (int j = 0; j < n_; ++j) {
                // Snap tiny bound violations from floating-point drift.
                result.x(j) = std::clamp(result.x(j), lo_(j), up_(j));
            }
            result.objective = original_cost_.dot(result.x);
            result.bound = result.objective;
        }
        return result;
    }

    enum class DualOutcome { Optimal, Infeasible, Abandoned };
    static constexpr double kDualPivot = 1e-7;

    Eigen::VectorXd reduced_costs() const {
        Eigen::VectorXd c_basic(m_);
        for (int k = 0; k < m_; ++k) c_basic(k) = cost_(head_[static_cast<size_t>(k)]);
        const Eigen::VectorXd y = btran(c_basic);
        Eigen::VectorXd d(n_ + m_);
        d.head(n_) = cost_.head(n_) - a_.transpose() * y;
        d.tail(m_) = cost_.tail(m_) + y;
        return d;
    }

    bool dual_feasible(const Eigen::VectorXd& d) const {
        for (int j = 0; j < n_ + m_; ++j) {
            const std::int8_t s = status_[static_cast<size_t>(j)];
            if (s == Basis::Basic || !(up_(j) > lo_(j))) continue;
            if (s == Basis::AtLower && d(j) < -tol_.optimality) return false;
            if (s == Basis::AtUpper && d(j) > tol_.optimality) return false;
            if (s == Basis::AtZero && std::abs(d(j)) > tol_.optimality) return false;
        }
        return true;
    }

    /// Bounded dual simplex from a dual feasible basis. Leaves the basis
    /// primal feasible, proves infeasibility, or gives up for the primal.
    DualOutcome dual_iterate(long& iterations) {
        const int total = n_ + m_;
        if (!dual_feasible(reduced_costs())) return DualOutcome::Abandoned;
        bool confirmed = false;
        while (true) {
            if (iterations >= tol_.max_iterations) return DualOutcome::Abandoned;
            int r = -1;
            double worst = tol_.feasibility;
            for (int k = 0; k < m_; ++k) {
                const int j = head_[static_cast<size_t>(k)];
                const double inf = std::max(lo_(j) - x_(j), x_(j) - up_(j));
                if (inf > worst) {
                    worst = inf;
                    r = k;
                }
            }
            if (r < 0) return DualOutcome::Optimal;
            const int leaving = head_[static_cast<size_t>(r)];
            const bool increase = x_(leaving) < lo_(leaving);
            const double target = increase ? lo_(leaving) : up_(leaving);

            Eigen::VectorXd unit = Eigen::VectorXd::Zero(m_);
            unit(r) = 1.0;
            const Eigen::VectorXd rho = btran(unit);
            Eigen::VectorXd row(total);
            row.head(n_) = a_.transpose() * rho;
            row.tail(m_) = -rho;
            const Eigen::VectorXd d = reduced_costs();

            int entering = -1;
            double best_ratio = kInfinity;
            double best_pivot = 0.0;
            for (int j = 0; j < total; ++j) {
                const std::int8_t s = status_[static_cast<size_t>(j)];
                if (s == Basis::Basic || !(up_(j) > lo_(j))) continue;
                const double a = row(j);
                if (std::abs(a) <= kDualPivot) continue;
                // x_leaving moves by -a per unit increase of x_j.
                bool eligible = s == Basis::AtZero;
                if (s == Basis::AtLower) eligible = increase ? a < 0.0 : a > 0.0;
                if (s == Basis::AtUpper) eligible = increase ? a > 0.0 : a < 0.0;
                if (!eligible) continue;
                const double ratio = std::abs(d(j)) / std::abs(a);
                if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && std::abs(a) > best_pivot)) {
                    best_ratio = std::min(best_ratio, ratio);
                    best_pivot = std::abs(a);
                    entering = j;
                }
            }
            if (entering < 0) {
                if (confirmed || etas_.empty()) return DualOutcome::Infeasible;
                if (!refactor()) return DualOutcome::Abandoned;
                compute_basics();
                confirmed = true;
                continue;
            }
            confirmed = false;

            const Eigen::VectorXd alpha = ftran(column(entering));
            const double pivot = alpha(r);
            if (std::abs(pivot) <= kDualPivot || std::abs(pivot - row(entering)) > 1e-6 * (1.0 + std::abs(pivot))) {
                if (etas_.empty()) return DualOutcome::Abandoned;
                if (!refactor()) return DualOutcome::Abandoned;
                compute_basics();
                continue;
            }
            const double delta = (x_(leaving) - target) / pivot;
            x_(entering) += delta;
            for (int k = 0; k < m_; ++k)
                if (alpha(k) != 0.0) x_(head_[static_cast<size_t>(k)]) -= alpha(k) * delta;
            x_(leaving) = target;
            status_[static_cast<size_t>(leaving)] = increase ? Basis::AtLower : Basis::AtUpper;
            status_[static_cast<size_t>(entering)] = Basis::Basic;
            head_[static_cast<size_t>(r)] = entering;
            ++iterations;

            Eta eta;
            eta.row = r;
            eta.pivot = pivot;
            for (int k = 0; k < m_; ++k)
                if (k != r && std::abs(alpha(k)) > 1e-14) eta.entries.emplace_back(k, alpha(k));
            etas_.push_back(std::move(eta));
            if (static_cast<int>(etas_.size()) >= tol_.refactor_interval) {
                if (!refactor()) return DualOutcome::Abandoned;
                compute_basics();
            }
        }
    }

    SolveResult iterate(long iterations = 0) {
        int degenerate = 0;
        bool bland = false;
        int repairs = 0;
        const int total = n_ + m_;
        Eigen::VectorXd c_basic(m_);

        while (true) {
            if (iterations >= tol_.max_iterations) return finish(Status::IterationLimit, iterations);

            bool phase_one = false;
            for (int k = 0; k < m_; ++k) {
                const int j = head_[static_cast<size_t>(k)];
                if (x_(j) < lo_(j) - tol_.feasibility) {
                    c_basic(k) = -1.0;
                    phase_one = true;
                } else if (x_(j) > up_(j) + tol_.feasibility) {
                    c_basic(k) = 1.0;
                    phase_one = true;
                } else {
                    c_basic(k) = 0.0;
                }
            }
            if (!phase_one)
                for (int k = 0; k < m_; ++k) c_basic(k) = cost_(head_[static_cast<size_t>(k)]);

            const Eigen::VectorXd y = btran(c_basic);
            Eigen::VectorXd reduced(total);
            if (phase_one) {
                reduced.head(n_) = -(a_.transpose() * y);
                reduced.tail(m_) = y;
            } else {
                reduced.head(n_) = cost_.head(n_) - a_.transpose() * y;
                reduced.tail(m_) = cost_.tail(m_) + y;
            }

            int entering = -1;
            double best = 0.0;
            for (int j = 0; j < total; ++j) {
                const std::int8_t s = status_[static_cast<size_t>(j)];
                if (s == Basis::Basic) continue;
                const double d = reduced(j);
                bool eligible = false;
                if (s == Basis::AtLower) eligible = d < -tol_.optimality && up_(j) > lo_(j);
                else if (s == Basis::AtUpper) eligible = d > tol_.optimality && up_(j) > lo_(j);
                else eligible = std::abs(d) > tol_.optimality;
                if (!eligible) continue;
                if (bland) {
                    entering = j;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    entering = j;
                }
            }

            if (entering < 0) {
                if (!etas_.empty()) {
                    // Confirm on a fresh factorisation before concluding.
                    if (!refactor()) {
                        if (!repair(iterations, repairs)) return finish(Status::IterationLimit, iterations);
                        continue;
                    }
                    compute_basics();
                    continue;
                }
                return finish(phase_one ? Status::Infeasible : Status::Optimal, iterations);
            }

            const double dir = reduced(entering) < 0.0 ? 1.0 : -1.0;
            const Eigen::VectorXd alpha = ftran(column(entering));

            // Harris two-pass ratio test.
            double theta_relaxed = kInfinity;
            for (int k = 0; k < m_; ++k) {
                const double a = alpha(k);
                if (std::abs(a) <= tol_.pivot) continue;
                const double rate = -dir * a;
                double bound = 0.0;
                if (!blocking_bound(head_[static_cast<size_t>(k)], rate, phase_one, bound)) continue;
                const double v = x_(head_[static_cast<size_t>(k)]);
                const double limit = rate < 0.0 ? (v - bound + tol_.feasibility) / -rate
                                                : (bound + tol_.feasibility - v) / rate;
                theta_relaxed = std::min(theta_relaxed, limit);
            }
            int leave_row = -1;
            double step = kInfinity;
            double leave_bound = 0.0;
            double best_pivot = 0.0;
            int best_index = total;
            for (int k = 0; k < m_; ++k) {
                const double a = alpha(k);
                if (std::abs(a) <= tol_.pivot) continue;
                const double rate = -dir * a;
                double bound = 0.0;
                const int j = head_[static_cast<size_t>(k)];
                if (!blocking_bound(j, rate, phase_one, bound)) continue;
                const double v = x_(j);
                const double limit = std::max(0.0, rate < 0.0 ? (v - bound) / -rate : (bound - v) / rate);
                if (limit > theta_relaxed) continue;
                const bool better = bland ? j < best_index : std::abs(a) > best_pivot;
                if (better) {
                    leave_row = k;
                    step = limit;
                    leave_bound = bound;
                    best_pivot = std::abs(a);
                    best_index = j;
                }
            }

            const double flip = up_(entering) - lo_(entering);
            const bool do_flip = std::isfinite(flip) && flip <= step;
            if (leave_row < 0 && !do_flip) {
                if (!phase_one) return finish(Status::Unbounded, iterations);
                if (!repair(iterations, repairs)) return finish(Status::IterationLimit, iterations);
                continue;
            }
            if (do_flip) step = flip;

            ++iterations;
            if (step <= 1e-12) {
                if (++degenerate >= tol_.degenerate_before_bland) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }

            x_(entering) += dir * step;
            if (step != 0.0)
                for (int k = 0; k < m_; ++k)
                    if (alpha(k) != 0.0) x_(head_[static_cast<size_t>(k)]) -= dir * step * alpha(k);

            if (do_flip) {
                const bool to_upper = dir > 0.0;
                status_[static_cast<size_t>(entering)] = to_upper ? Basis::AtUpper : Basis::AtLower;
                x_(entering) = to_upper ? up_(entering) : lo_(entering);
                continue;
            }

            const int leaving = head_[static_cast<size_t>(leave_row)];
            x_(leaving) = leave_bound;
            const bool at_lower = std::isfinite(lo_(leaving)) && leave_bound == lo_(leaving);
            status_[static_cast<size_t>(leaving)] = at_lower ? Basis::AtLower : Basis::AtUpper;
            status_[static_cast<size_t>(entering)] = Basis::Basic;
            head_[static_cast<size_t>(leave_row)] = entering;

            Eta eta;
            eta.row = leave_row;
            eta.pivot = alpha(leave_row);
            for (int k = 0; k < m_; ++k)
                if (k != leave_row && std::abs(alpha(k)) > 1e-14) eta.entries.emplace_back(k, alpha(k));
            etas_.push_back(std::move(eta));

            if (static_cast<int>(etas_.size()) >= tol_.refactor_interval) {
                if (!refactor()) {
                    if (!repair(iterations, repairs)) return finish(Status::IterationLimit, iterations);
                    continue;
                }
                compute_basics();
            }
        }
    }

    /// Returns the bound a basic variable moving at `rate` would block on.
    bool blocking_bound(int j, double rate, bool phase_one, double& bound) const {
        const double v = x_(j);
        if (phase_one && v < lo_(j) - tol_.feasibility) {
            if (rate > 0.0) {
                bound = lo_(j);
                return true;
            }
            return false;
        }
        if (phase_one && v > up_(j) + tol_.feasibility) {
            if (rate < 0.0) {
                bound = up_(j);
                return true;
            }
            return false;
        }
        if (rate < 0.0 && std::isfinite(lo_(j))) {
            bound = lo_(j);
            return true;
        }
        if (rate > 0.0 && std::isfinite(up_(j))) {
            bound = up_(j);
            return true;
        }
        return false;
    }

    /// Falls back to the slack basis after a numerical failure.
    bool repair(long, int& repairs) {
        if (++repairs > 3) return false;
        for (int j = 0; j < n_; ++j) {
            if (status_[static_cast<size_t>(j)] != Basis::Basic) continue;
            const double v = x_(j);
            const bool near_upper = std::isfinite(up_(j)) && (!std::isfinite(lo_(j)) || up_(j) - v < v - lo_(j));
            place_nonbasic(j, near_upper ? Basis::AtUpper : Basis::AtLower);
        }
        for (int i = 0; i < m_; ++i) {
            status_[static_cast<size_t>(n_ + i)] = Basis::Basic;
            head_[static_cast<size_t>(i)] = n_ + i;
        }
        if (!refactor()) return false;
        compute_basics();
        return true;
    }

    Tolerances tol_;
    int n_ = 0;
    int m_ = 0;
    Eigen::SparseMatrix<double> a_;
    std::vector<double> row_scale_;
    double cost_scale_ = 1.0;
    Eigen::VectorXd original_cost_;
    Eigen::VectorXd cost_;
    Eigen::VectorXd row_lo_;
    Eigen::VectorXd row_hi_;
    std::vector<double> default_lower_;
    std::vector<double> default_upper_;

    Eigen::VectorXd lo_;
    Eigen::VectorXd up_;
    Eigen::VectorXd x_;
    std::vector<std::int8_t> status_;
    std::vector<int> head_;
    mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    std::vector<Eta> etas_;
};

Simplex::Simplex(const LinearProgram& lp, Tolerances tolerances)
    : impl_(std::make_unique<SimplexSolver>(lp, tolerances)) {}
Simplex::~Simplex() = default;
Simplex::Simplex(Simplex&&) noexcept = default;
Simplex& Simplex::operator=(Simplex&&) noexcept = default;

SolveResult Simplex::solve(const Basis* warm_start) { return impl_->solve_default(warm_start); }

SolveResult Simplex::solve(std::span<const double> lower, std::span<const double> upper, const Basis* warm_start) {
    return impl_->solve(lower, upper, warm_start);
}

SolveResult solve_lp(const LinearProgram& lp, const Tolerances& tolerances, const Basis* warm_start) {
    Simplex simplex(lp, tolerances);
    return simplex.solve(warm_start);
}

namespace {

std::string var_name(int j) { return "x" + std::to_string(j); }

std::string number(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

}  // namespace

void write_lp_text(std::ostream& out, const LinearProgram& lp, std::span<const int> binaries) {
    out << "\\ gridplan LP export: " << lp.variables() << " variables, " << lp.rows() << " rows\n";
    out << "Minimize\n obj:";
    for (int j = 0; j < lp.variables(); ++j) {
        const double c = lp.cost()[static_cast<size_t>(j)];
        if (c != 0.0) out << (c < 0 ? " - " : " + ") << number(std::abs(c)) << " " << var_name(j);
    }
    out << "\nSubject To\n";
    const auto a = lp.matrix();
    for (int i = 0; i < lp.rows(); ++i) {
        out << " r" << i << ":";
        bool any = false;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, i); it; ++it) {
            out << (it.value() < 0 ? " - " : " + ") << number(std::abs(it.value())) << " " << var_name(static_cast<int>(it.col()));
            any = true;
        }
        if (!any) out << " 0 " << var_name(0);
        const char* op = lp.sense(i) == Sense::LessEqual ? " <= " : lp.sense(i) == Sense::GreaterEqual ? " >= " : " = ";
        out << op << number(lp.rhs(i)) << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.variables(); ++j) {
        const double lo = lp.lower()[static_cast<size_t>(j)];
        const double hi = lp.upper()[static_cast<size_t>(j)];
        out << " ";
        if (std::isinf(lo) && std::isinf(hi)) {
            out << var_name(j) << " free\n";
            continue;
        }
        out << (std::isinf(lo) ? "-inf" : number(lo)) << " <= " << var_name(j) << " <= "
            << (std::isinf(hi) ? "+inf" : number(hi)) << "\n";
    }
    if (!binaries.empty()) {
        out << "Binaries\n";
        for (int j : binaries) out << " " << var_name(j) << "\n";
    }
    out << "End\n";
}

}  // namespace gridplan::lp
