#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "gridplan/lp.hpp"

using namespace gridplan::lp;

namespace {

struct DenseLp {
    Eigen::MatrixXd a;
    std::vector<Sense> sense;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    LinearProgram build() const {
        LinearProgram lp;
        for (Eigen::Index j = 0; j < c.size(); ++j) lp.add_variable(c(j), lo(j), hi(j));
        std::vector<int> idx(static_cast<size_t>(c.size()));
        for (size_t j = 0; j < idx.size(); ++j) idx[j] = static_cast<int>(j);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            std::vector<double> row(static_cast<size_t>(a.cols()));
            for (Eigen::Index j = 0; j < a.cols(); ++j) row[static_cast<size_t>(j)] = a(i, j);
            lp.add_row(idx, row, sense[static_cast<size_t>(i)], b(i));
        }
        return lp;
    }

    bool feasible(const Eigen::VectorXd& x, double tol) const {
        for (Eigen::Index j = 0; j < x.size(); ++j)
            if (x(j) < lo(j) - tol || x(j) > hi(j) + tol) return false;
        const Eigen::VectorXd ax = a * x;
        for (Eigen::Index i = 0; i < ax.size(); ++i) {
            const Sense s = sense[static_cast<size_t>(i)];
            if (s != Sense::GreaterEqual && ax(i) > b(i) + tol) return false;
            if (s != Sense::LessEqual && ax(i) < b(i) - tol) return false;
        }
        return true;
    }
};

// Every vertex is the solution of n linearly independent active constraints
// drawn from rows and bounds; equality rows are always active.
double enumerate_vertices(const DenseLp& p, bool& found) {
    const int n = static_cast<int>(p.c.size());
    struct Plane {
        Eigen::RowVectorXd g;
        double r;
    };
    std::vector<Plane> equalities, others;
    for (Eigen::Index i = 0; i < p.a.rows(); ++i) {
        Plane pl{p.a.row(i), p.b(i)};
        (p.sense[static_cast<size_t>(i)] == Sense::Equal ? equalities : others).push_back(pl);
    }
    for (int j = 0; j < n; ++j) {
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
        e(j) = 1.0;
        others.push_back({e, p.lo(j)});
        others.push_back({e, p.hi(j)});
    }
    const int need = n - static_cast<int>(equalities.size());
    found = false;
    double best = kInfinity;
    if (need < 0) return best;
    std::vector<int> pick(static_cast<size_t>(need));
    for (int k = 0; k < need; ++k) pick[static_cast<size_t>(k)] = k;
    const int total = static_cast<int>(others.size());
    while (true) {
        Eigen::MatrixXd g(n, n);
        Eigen::VectorXd r(n);
        int row = 0;
        for (const Plane& e : equalities) {
            g.row(row) = e.g;
            r(row++) = e.r;
        }
        for (int k : pick) {
            g.row(row) = others[static_cast<size_t>(k)].g;
            r(row++) = others[static_cast<size_t>(k)].r;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
        if (lu.rank() == n) {
            const Eigen::VectorXd x = lu.solve(r);
            if (p.feasible(x, 1e-9)) {
                found = true;
                best = std::min(best, p.c.dot(x));
            }
        }
        int k = need - 1;
        while (k >= 0 && pick[static_cast<size_t>(k)] == total - need + k) --k;
        if (k < 0) break;
        ++pick[static_cast<size_t>(k)];
        for (int q = k + 1; q < need; ++q) pick[static_cast<size_t>(q)] = pick[static_cast<size_t>(q - 1)] + 1;
    }
    return best;
}

DenseLp random_lp(std::mt19937& rng, int n, int m) {
    std::uniform_real_distribution<double> coef(-5.0, 5.0);
    std::uniform_real_distribution<double> width(0.5, 6.0);
    std::uniform_int_distribution<int> kind(0, 5);
    DenseLp p;
    p.a = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return std::round(coef(rng) * 4.0) / 4.0; });
    p.c = Eigen::VectorXd::NullaryExpr(n, [&] { return std::round(coef(rng) * 4.0) / 4.0; });
    p.lo = Eigen::VectorXd::NullaryExpr(n, [&] { return std::round(coef(rng)) * 0.5; });
    p.hi = p.lo + Eigen::VectorXd::NullaryExpr(n, [&] { return width(rng); });
    // Anchor the rows at an interior point so most instances are feasible.
    const Eigen::VectorXd anchor = 0.5 * (p.lo + p.hi);
    const Eigen::VectorXd ax = p.a * anchor;
    p.b.resize(m);
    for (int i = 0; i < m; ++i) {
        const int k = kind(rng);
        const Sense s = k == 0 ? Sense::Equal : (k <= 3 ? Sense::LessEqual : Sense::GreaterEqual);
        p.sense.push_back(s);
        const double shift = std::abs(coef(rng));
        p.b(i) = s == Sense::Equal ? ax(i) : (s == Sense::LessEqual ? ax(i) + shift - 1.5 : ax(i) - shift + 1.5);
    }
    return p;
}

}  // namespace

TEST_CASE("single bound row") {
    LinearProgram lp;
    const int x = lp.add_variable(1.0);
    lp.add_row({x}, {1.0}, Sense::GreaterEqual, 3.0);
    const SolveResult r = solve_lp(lp);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.x(0) == doctest::Approx(3.0));
    CHECK(r.objective == doctest::Approx(3.0));
}

TEST_CASE("facet tie goes to the lowest index") {
    LinearProgram lp;
    const int x = lp.add_variable(-1.0, 0.0, 1.0);
    const int y = lp.add_variable(-1.0, 0.0, 1.0);
    lp.add_row({x, y}, {1.0, 1.0}, Sense::LessEqual, 1.0);
    const SolveResult r = solve_lp(lp);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(-1.0));
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == doctest::Approx(0.0));
}

TEST_CASE("infeasible and unbounded") {
    LinearProgram a;
    const int x = a.add_variable(1.0, 0.0, 1.0);
    a.add_row({x}, {1.0}, Sense::GreaterEqual, 2.0);
    CHECK(solve_lp(a).status == Status::Infeasible);

    LinearProgram b;
    const int u = b.add_variable(-1.0);
    const int v = b.add_variable(0.0);
    b.add_row({u, v}, {1.0, -1.0}, Sense::LessEqual, 1.0);
    CHECK(solve_lp(b).status == Status::Unbounded);
}

TEST_CASE("free variables and equality rows") {
    LinearProgram lp;
    const int x = lp.add_variable(1.0, -kInfinity, kInfinity);
    const int y = lp.add_variable(2.0, -kInfinity, kInfinity);
    lp.add_row({x, y}, {1.0, 1.0}, Sense::Equal, 4.0);
    lp.add_row({x}, {1.0}, Sense::LessEqual, 10.0);
    const SolveResult r = solve_lp(lp);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.x(0) == doctest::Approx(10.0));
    CHECK(r.x(1) == doctest::Approx(-6.0));
    CHECK(r.objective == doctest::Approx(-2.0));
}

TEST_CASE("random dense LPs agree with vertex enumeration") {
    std::mt19937 rng(20190611);
    std::uniform_int_distribution<int> dim_n(2, 6);
    std::uniform_int_distribution<int> dim_m(1, 8);
    int optimal = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const DenseLp p = random_lp(rng, dim_n(rng), dim_m(rng));
        bool found = false;
        const double oracle = enumerate_vertices(p, found);
        const SolveResult r = solve_lp(p.build());
        CAPTURE(trial);
        if (!found) {
            CHECK(r.status == Status::Infeasible);
            continue;
        }
        REQUIRE(r.status == Status::Optimal);
        ++optimal;
        CHECK(r.objective == doctest::Approx(oracle).epsilon(1e-6).scale(1.0));
        CHECK(p.feasible(r.x, 1e-6));

        // Weak duality probes: no sampled feasible point beats the optimum.
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int probe = 0; probe < 2000; ++probe) {
            Eigen::VectorXd z(p.c.size());
            for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = p.lo(j) + unit(rng) * (p.hi(j) - p.lo(j));
            if (p.feasible(z, 0.0)) CHECK(p.c.dot(z) >= r.objective - 1e-6);
        }
    }
    CHECK(optimal >= 20);
}

TEST_CASE("solutions are bit-identical across runs") {
    std::mt19937 rng(7);
    const DenseLp p = random_lp(rng, 6, 8);
    const LinearProgram lp = p.build();
    const SolveResult a = solve_lp(lp);
    const SolveResult b = solve_lp(lp);
    REQUIRE(a.status == b.status);
    REQUIRE(a.x.size() == b.x.size());
    for (Eigen::Index j = 0; j < a.x.size(); ++j) CHECK(a.x(j) == b.x(j));
}

TEST_CASE("warm start after appending rows") {
    LinearProgram lp;
    const int x = lp.add_variable(-1.0, 0.0, 10.0);
    const int y = lp.add_variable(-2.0, 0.0, 10.0);
    lp.add_row({x, y}, {1.0, 1.0}, Sense::LessEqual, 8.0);
    const SolveResult first = solve_lp(lp);
    REQUIRE(first.status == Status::Optimal);
    lp.add_row({y}, {1.0}, Sense::LessEqual, 3.0);
    const SolveResult warm = solve_lp(lp, {}, &first.basis);
    const SolveResult cold = solve_lp(lp);
    REQUIRE(warm.status == Status::Optimal);
    CHECK(warm.objective == doctest::Approx(cold.objective));
    CHECK(warm.objective == doctest::Approx(-11.0));
}

TEST_CASE("knapsack") {
    MixedIntegerProgram mip;
    const int a = mip.base.add_variable(-3.0, 0.0, 1.0);
    const int b = mip.base.add_variable(-2.0, 0.0, 1.0);
    mip.base.add_row({a, b}, {1.0, 1.0}, Sense::LessEqual, 1.0);
    mip.integer_vars = {a, b};
    const SolveResult r = solve_mip(mip);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.x(a) == 1.0);
    CHECK(r.x(b) == 0.0);
    CHECK(r.objective == doctest::Approx(-3.0));
}

TEST_CASE("fixed binaries reduce to the LP") {
    MixedIntegerProgram mip;
    const int a = mip.base.add_variable(1.0, 1.0, 1.0);
    const int b = mip.base.add_variable(1.0, 0.0, 0.0);
    const int x = mip.base.add_variable(2.0, 0.0, 5.0);
    mip.base.add_row({a, b, x}, {2.0, 1.0, 1.0}, Sense::GreaterEqual, 3.5);
    mip.integer_vars = {a, b};
    const SolveResult r = solve_mip(mip);
    const SolveResult l = solve_lp(mip.base);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.objective == doctest::Approx(l.objective));
    CHECK(r.objective == doctest::Approx(4.0));
}

TEST_CASE("random six-binary MIPs agree with exhaustive enumeration") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coef(-4.0, 4.0);
    std::uniform_int_distribution<int> rows(2, 5);
    int solved = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const int nb = 6, nc = 2;
        const int m = rows(rng);
        DenseLp p;
        p.a = Eigen::MatrixXd::NullaryExpr(m, nb + nc, [&] { return std::round(coef(rng) * 2.0) / 2.0; });
        p.c = Eigen::VectorXd::NullaryExpr(nb + nc, [&] { return std::round(coef(rng) * 2.0) / 2.0; });
        p.lo = Eigen::VectorXd::Zero(nb + nc);
        p.hi = Eigen::VectorXd::Ones(nb + nc);
        p.hi.tail(nc).setConstant(3.0);
        p.b = (p.a * (0.5 * p.hi)).array() + 1.0;
        p.sense.assign(static_cast<size_t>(m), Sense::LessEqual);

        // Oracle: fix each of the 64 assignments, enumerate vertices of the rest.
        double oracle = kInfinity;
        for (int mask = 0; mask < 64; ++mask) {
            DenseLp q;
            Eigen::VectorXd fixed(nb);
            for (int k = 0; k < nb; ++k) fixed(k) = (mask >> k) & 1;
            q.a = p.a.rightCols(nc);
            q.b = p.b - p.a.leftCols(nb) * fixed;
            q.sense = p.sense;
            q.c = p.c.tail(nc);
            q.lo = p.lo.tail(nc);
            q.hi = p.hi.tail(nc);
            bool found = false;
            const double v = enumerate_vertices(q, found);
            if (found) oracle = std::min(oracle, v + p.c.head(nb).dot(fixed));
        }

        MixedIntegerProgram mip{p.build(), {0, 1, 2, 3, 4, 5}};
        const SolveResult r = solve_mip(mip);
        CAPTURE(trial);
        if (!std::isfinite(oracle)) {
            CHECK(r.status == Status::Infeasible);
            continue;
        }
        REQUIRE(r.status == Status::Optimal);
        ++solved;
        CHECK(r.objective == doctest::Approx(oracle).epsilon(1e-6).scale(1.0));
        for (int j = 0; j < nb; ++j) CHECK((r.x(j) == 0.0 || r.x(j) == 1.0));
        CHECK(p.feasible(r.x, 1e-6));

        const SolveResult root = solve_lp(mip.base);
        CHECK(r.objective >= root.objective - 1e-9);
    }
    CHECK(solved >= 15);
}

TEST_CASE("node limit keeps the incumbent") {
    MixedIntegerProgram mip;
    std::vector<int> vars;
    std::vector<double> weights;
    for (int j = 0; j < 14; ++j) {
        vars.push_back(mip.base.add_variable(-(10.0 + j), 0.0, 1.0));
        weights.push_back(7.0 + 0.5 * j);
    }
    mip.base.add_row(vars, weights, Sense::LessEqual, 40.3);
    mip.integer_vars = vars;
    MipOptions opts;
    opts.node_limit = 3;
    const SolveResult r = solve_mip(mip, opts);
    CHECK((r.status == Status::NodeLimit || r.status == Status::Optimal));
    if (r.status == Status::NodeLimit && r.has_solution()) CHECK(r.gap >= 0.0);
}

TEST_CASE("LP text dump") {
    LinearProgram lp;
    const int x = lp.add_variable(1.5, 0.0, 4.0);
    const int y = lp.add_variable(-1.0);
    lp.add_row({x, y}, {1.0, 2.0}, Sense::LessEqual, 6.0);
    std::ostringstream out;
    const std::vector<int> binaries;
    write_lp_text(out, lp, binaries);
    const std::string text = out.str();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("Bounds") != std::string::npos);
    CHECK(text.find("End") != std::string::npos);
}
