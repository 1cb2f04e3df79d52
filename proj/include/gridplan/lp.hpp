#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace gridplan::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

std::string to_string(Status status);

/// min c'x  s.t.  row_lo <= A x <= row_hi,  lower <= x <= upper.
class LinearProgram {
public:
    int add_variable(double cost, double lower = 0.0, double upper = kInfinity);
    int add_row(std::span<const int> vars, std::span<const double> coefficients, Sense sense, double rhs);
    int add_row(std::initializer_list<int> vars, std::initializer_list<double> coefficients, Sense sense, double rhs) {
        return add_row(std::span<const int>(vars.begin(), vars.size()),
                       std::span<const double>(coefficients.begin(), coefficients.size()), sense, rhs);
    }

    int variables() const { return static_cast<int>(cost_.size()); }
    int rows() const { return static_cast<int>(sense_.size()); }

    const std::vector<double>& cost() const { return cost_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    Sense sense(int row) const { return sense_[static_cast<size_t>(row)]; }
    double rhs(int row) const { return rhs_[static_cast<size_t>(row)]; }
    void set_cost(int var, double cost) { cost_.at(static_cast<size_t>(var)) = cost; }
    void set_bounds(int var, double lower, double upper);

    /// Row-major view of the constraint matrix.
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix() const;
    const std::vector<Eigen::Triplet<double>>& entries() const { return entries_; }

    double objective_value(const Eigen::VectorXd& x) const;
    /// Largest absolute violation of any row or bound.
    double max_violation(const Eigen::VectorXd& x) const;

private:
    std::vector<double> cost_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<Sense> sense_;
    std::vector<double> rhs_;
    std::vector<Eigen::Triplet<double>> entries_;
};

struct Tolerances {
    double feasibility = 1e-7;  // on equilibrated rows
    double optimality = 1e-7;   // reduced cost, on the normalised objective
    double pivot = 1e-9;
    int max_iterations = 50000;
    int refactor_interval = 64;
    int degenerate_before_bland = 30;
};

/// Status per structural and logical variable; enables warm starts.
struct Basis {
    enum : std::int8_t { Basic = 0, AtLower = 1, AtUpper = 2, AtZero = 3 };
    std::vector<std::int8_t> status;  // structurals first, then one logical per row
};

struct SolveResult {
    Status status = Status::Infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
    double bound = 0.0;  // best proven lower bound (MIP)
    double gap = 0.0;    // relative MIP gap
    long iterations = 0;
    long nodes = 0;
    Basis basis;

    bool has_solution() const { return x.size() > 0; }
};

class SimplexSolver;

/// Bounded-variable primal simplex (revised, sparse LU with product-form
/// updates). Dantzig pricing, Bland's rule once progress stalls on
/// degenerate pivots. Reusable across bound changes for branch-and-bound.
class Simplex {
public:
    explicit Simplex(const LinearProgram& lp, Tolerances tolerances = {});
    ~Simplex();
    Simplex(Simplex&&) noexcept;
    Simplex& operator=(Simplex&&) noexcept;

    SolveResult solve(const Basis* warm_start = nullptr);
    SolveResult solve(std::span<const double> lower, std::span<const double> upper, const Basis* warm_start = nullptr);

private:
    std::unique_ptr<SimplexSolver> impl_;
};

SolveResult solve_lp(const LinearProgram& lp, const Tolerances& tolerances = {}, const Basis* warm_start = nullptr);

struct MixedIntegerProgram {
    LinearProgram base;
    std::vector<int> integer_vars;  // binaries
};

struct MipOptions {
    double gap_tolerance = 1e-6;
    long node_limit = 20000;
    double integrality = 1e-6;
    Tolerances lp;
};

/// Best-first branch and bound on binary variables; branches on the most
/// fractional variable, lowest index on ties.
SolveResult solve_mip(const MixedIntegerProgram& mip, const MipOptions& options = {});

/// CPLEX LP text format (objective, constraints, bounds, binaries).
void write_lp_text(std::ostream& out, const LinearProgram& lp, std::span<const int> binaries = {});

}  // namespace gridplan::lp
