#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "gridplan/lp.hpp"

namespace gridplan::lp {

namespace {

struct Node {
    double bound = 0.0;
    long id = 0;
    std::vector<double> lower;
    std::vector<double> upper;
    SolveResult relaxation;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

/// Index of the most fractional integer variable, -1 if integral.
int branching_variable(const Eigen::VectorXd& x, const std::vector<int>& integers, double tolerance) {
    int best = -1;
    double best_score = tolerance;
    for (int j : integers) {
        const double f = x(j) - std::floor(x(j));
        const double score = std::min(f, 1.0 - f);
        if (score > best_score || (score == best_score && best >= 0 && j < best)) {
            best_score = score;
            best = j;
        }
    }
    return best;
}

double relative_gap(double incumbent, double bound) {
    if (!std::isfinite(incumbent)) return kInfinity;
    return std::max(0.0, incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

}  // namespace

SolveResult solve_mip(const MixedIntegerProgram& mip, const MipOptions& options) {
    const LinearProgram& lp = mip.base;
    std::vector<int> integers = mip.integer_vars;
    std::sort(integers.begin(), integers.end());
    integers.erase(std::unique(integers.begin(), integers.end()), integers.end());
    for (int j : integers) {
        if (j < 0 || j >= lp.variables()) throw std::invalid_argument("solve_mip: integer index out of range");
        if (lp.lower()[static_cast<size_t>(j)] < 0.0 || lp.upper()[static_cast<size_t>(j)] > 1.0)
            throw std::invalid_argument("solve_mip: integer variables must be binary");
    }

    Simplex simplex(lp, options.lp);
    SolveResult best;
    best.status = Status::Infeasible;
    double incumbent = kInfinity;
    long iterations = 0;
    long nodes = 0;

    auto accept = [&](const SolveResult& r) {
        if (r.objective < incumbent) {
            incumbent = r.objective;
            best = r;
            for (int j : integers) best.x(j) = std::round(best.x(j));
        }
    };

    Node root;
    root.lower = lp.lower();
    root.upper = lp.upper();
    root.relaxation = simplex.solve(root.lower, root.upper);
    iterations += root.relaxation.iterations;
    ++nodes;
    if (root.relaxation.status == Status::Unbounded || root.relaxation.status == Status::IterationLimit) {
        root.relaxation.nodes = nodes;
        return root.relaxation;
    }
    if (root.relaxation.status == Status::Infeasible) {
        best.nodes = nodes;
        best.iterations = iterations;
        return best;
    }
    root.bound = root.relaxation.objective;
    const double root_bound = root.bound;

    // Round-up heuristic: with big-M indicator links this usually yields a
    // feasible incumbent right away.
    {
        std::vector<double> lo = root.lower;
        std::vector<double> hi = root.upper;
        for (int j : integers) {
            const double v = root.relaxation.x(j) > options.integrality ? 1.0 : 0.0;
            lo[static_cast<size_t>(j)] = hi[static_cast<size_t>(j)] = v;
        }
        SolveResult r = simplex.solve(lo, hi, &root.relaxation.basis);
        iterations += r.iterations;
        if (r.status == Status::Optimal) accept(r);
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 1;
    open.push(std::move(root));
    double best_bound = root_bound;
    bool node_limited = false;
    bool pruned_by_gap = false;

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        best_bound = node.bound;
        if (relative_gap(incumbent, node.bound) <= options.gap_tolerance) {
            best_bound = std::min(incumbent, node.bound);
            pruned_by_gap = true;
            break;
        }
        const int branch = branching_variable(node.relaxation.x, integers, options.integrality);
        if (branch < 0) {
            accept(node.relaxation);
            continue;
        }
        if (nodes >= options.node_limit) {
            node_limited = true;
            break;
        }
        for (double value : {0.0, 1.0}) {
            Node child;
            child.id = next_id++;
            child.lower = node.lower;
            child.upper = node.upper;
            child.lower[static_cast<size_t>(branch)] = value;
            child.upper[static_cast<size_t>(branch)] = value;
            child.relaxation = simplex.solve(child.lower, child.upper, &node.relaxation.basis);
            iterations += child.relaxation.iterations;
            ++nodes;
            if (child.relaxation.status != Status::Optimal) continue;
            child.bound = std::max(node.bound, child.relaxation.objective);
            if (relative_gap(incumbent, child.bound) <= options.gap_tolerance) continue;
            if (branching_variable(child.relaxation.x, integers, options.integrality) < 0) {
                accept(child.relaxation);
                continue;
            }
            open.push(std::move(child));
        }
    }

    if (!std::isfinite(incumbent)) {
        best.status = node_limited ? Status::NodeLimit : Status::Infeasible;
        best.nodes = nodes;
        best.iterations = iterations;
        best.bound = best_bound;
        return best;
    }
    if (!node_limited && !pruned_by_gap) best_bound = incumbent;
    best.status = node_limited ? Status::NodeLimit : Status::Optimal;
    best.bound = std::min(best_bound, incumbent);
    best.gap = relative_gap(incumbent, best.bound);
    best.nodes = nodes;
    best.iterations = iterations;
    return best;
}

}  // namespace gridplan::lp
