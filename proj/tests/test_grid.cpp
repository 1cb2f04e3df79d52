#include <algorithm>
#include <queue>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridplan/grid.hpp"

using namespace gridplan;

namespace {

const char* kThreeBus = R"({
  "buses": [
    {"id": 0, "name": "lv", "kind": "slack", "v_nominal_v": 400},
    {"id": 1, "name": "a", "kind": "load", "v_nominal_v": 400},
    {"id": 2, "name": "b", "kind": "load", "v_nominal_v": 400}
  ],
  "segments": [
    {"from": 0, "to": 1, "length_km": 0.1, "type": "NAYY 4x50 SE", "n_parallel": 1},
    {"from": 1, "to": 2, "length_km": 0.2, "type": "NAYY 4x50 SE", "n_parallel": 2}
  ],
  "transformer": {"rating_kva": 630, "lv_bus": 0, "impedance_ohm": 0.01},
  "catalog": [
    {"name": "NAYY 4x50 SE", "r_per_km": 0.641, "x_per_km": 0.083, "ampacity": 142, "acquisition_cost": 3500},
    {"name": "NAYY 4x150 SE", "r_per_km": 0.206, "x_per_km": 0.08, "ampacity": 270, "acquisition_cost": 12000}
  ]
})";

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

std::string error_of(const std::string& json) {
    try {
        parse_grid(json);
    } catch (const GridError& e) {
        return e.what();
    }
    return {};
}

// Breadth-first search from the slack over an undirected adjacency list.
std::vector<int> bfs_path(const GridNetwork& grid, int target) {
    const int n = grid.bus_count();
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(n));
    for (int s = 0; s < grid.segment_count(); ++s) {
        const auto& seg = grid.segment(s);
        adj[static_cast<size_t>(seg.from_bus)].push_back({seg.to_bus, s});
        adj[static_cast<size_t>(seg.to_bus)].push_back({seg.from_bus, s});
    }
    std::vector<int> via(static_cast<size_t>(n), -2), prev(static_cast<size_t>(n), -1);
    std::queue<int> q;
    q.push(grid.slack());
    via[static_cast<size_t>(grid.slack())] = -1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (auto [w, s] : adj[static_cast<size_t>(u)])
            if (via[static_cast<size_t>(w)] == -2) {
                via[static_cast<size_t>(w)] = s;
                prev[static_cast<size_t>(w)] = u;
                q.push(w);
            }
    }
    std::vector<int> path;
    for (int b = target; b != grid.slack(); b = prev[static_cast<size_t>(b)]) path.push_back(via[static_cast<size_t>(b)]);
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace

TEST_CASE("three-bus feeder parses") {
    const GridNetwork g = parse_grid(kThreeBus);
    CHECK(g.bus_count() == 3);
    CHECK(g.segment_count() == 2);
    CHECK(g.slack() == 0);
    CHECK(g.parent_bus(2) == 1);
    CHECK(g.depth(2) == 2);
    CHECK(g.segment_ampacity(1) == doctest::Approx(284.0));
    CHECK(g.segment_impedance(1).real() == doctest::Approx(0.641 * 0.2 / 2));

    const GridNetwork again = parse_grid(grid_to_json(g));
    CHECK(grid_to_json(again) == grid_to_json(g));
}

TEST_CASE("malformed grids are rejected with the offending element") {
    const std::string base = kThreeBus;
    CHECK(error_of(replace(base, R"("n_parallel": 2})",
                           R"("n_parallel": 2}, {"from": 0, "to": 2, "length_km": 0.1, "type": "NAYY 4x50 SE"})"))
              .find("non-radial topology") != std::string::npos);
    CHECK(error_of(replace(base, R"("type": "NAYY 4x50 SE", "n_parallel": 2)", R"("type": "NAYY 4x95", "n_parallel": 2)"))
              .find("unknown line type 'NAYY 4x95'") != std::string::npos);
    CHECK(error_of(replace(base, R"({"id": 2, "name": "b")", R"({"id": 1, "name": "b")")).find("duplicate bus id 1") !=
          std::string::npos);
    CHECK(error_of(replace(base, R"("kind": "load", "v_nominal_v": 400},
    {"id": 2)",
                           R"("kind": "slack", "v_nominal_v": 400},
    {"id": 2)"))
              .find("exactly one slack") != std::string::npos);
    CHECK(error_of(replace(base, R"("length_km": 0.1, "type")", R"("length_km": 0.0, "type")")).find("length") !=
          std::string::npos);
    CHECK(error_of("{").find("parse error") != std::string::npos);
    CHECK(error_of(replace(base, R"("ampacity": 270)", R"("ampacity": 100)")).find("line catalog") != std::string::npos);
}

TEST_CASE("branches of a star and a chain") {
    std::vector<Bus> buses{{0, "lv", BusKind::Slack, 400}, {1, "a", BusKind::Load, 400},
                           {2, "b", BusKind::Load, 400},   {3, "c", BusKind::Load, 400}};
    std::vector<LineSegment> segs{{0, 1, 0.1, "NAYY 4x50 SE", 1}, {0, 2, 0.1, "NAYY 4x50 SE", 1}, {3, 0, 0.1, "NAYY 4x50 SE", 1}};
    const GridNetwork star(buses, segs, Transformer{}, fixtures::nayy_catalog());
    const auto br = branches(star);
    REQUIRE(br.size() == 3);
    for (const auto& b : br) CHECK(b.buses.size() == 1);
    CHECK(branch_of(br, 3) >= 0);
    CHECK(branch_of(br, 0) == -1);
    CHECK(star.downstream_bus(2) == 3);

    const GridNetwork chain = fixtures::pu_chain(5, 0.01);
    const auto cb = branches(chain);
    REQUIRE(cb.size() == 1);
    CHECK(cb[0].buses.size() == 5);
    CHECK(path_to_slack(chain, 0).empty());
    CHECK(path_to_slack(chain, 5) == std::vector<int>{0, 1, 2, 3, 4});
    CHECK_THROWS_AS(path_to_slack(chain, 6), GridError);
}

TEST_CASE("paths agree with breadth-first search on random trees") {
    std::mt19937 rng(106);
    for (int trial = 0; trial < 20; ++trial) {
        const GridNetwork g = fixtures::random_tree(106, rng);
        CHECK(g.bus_count() == g.segment_count() + 1);
        std::set<int> covered;
        for (int b = 0; b < g.bus_count(); ++b) {
            const auto path = path_to_slack(g, b);
            CHECK(path == bfs_path(g, b));
            if (g.children(b).empty()) covered.insert(path.begin(), path.end());
        }
        CHECK(static_cast<int>(covered.size()) == g.segment_count());
        int in_branches = 0;
        for (const auto& br : branches(g)) in_branches += static_cast<int>(br.buses.size());
        CHECK(in_branches == g.bus_count() - 1);
    }
}

TEST_CASE("doubling parallels halves impedance and doubles ampacity") {
    const GridNetwork g = parse_grid(kThreeBus);
    LineSegment s = g.segment(0);
    s.n_parallel = 2;
    const GridNetwork doubled = g.with_segment(0, s);
    CHECK(doubled.segment_impedance(0) == g.segment_impedance(0) / 2.0);
    CHECK(doubled.segment_ampacity(0) == 2.0 * g.segment_ampacity(0));
}

TEST_CASE("injection CSV round trip") {
    std::vector<Timestamp> ts;
    for (int h = 0; h < 3; ++h) ts.push_back(parse_timestamp("2019-06-21T10:00:00Z") + std::chrono::hours(h));
    Eigen::MatrixXd load(3, 2), gen(3, 2);
    load << 1.5, 0.25, 2.0, 0.1, 0.0, 1.0 / 3.0;
    gen << 0.0, 4.0, 0.0, 5.5, 0.0, 7.125;
    const InjectionSeries series(ts, load, gen);
    const InjectionSeries back = parse_injections(injections_to_csv(series), 2);
    CHECK(back.load_kw() == series.load_kw());
    CHECK(back.generation_kw() == series.generation_kw());
    CHECK(back.timestamps() == series.timestamps());
    CHECK(format_timestamp(ts[1]) == "2019-06-21T11:00:00");
    CHECK(series.total_surplus_kw()(2) == doctest::Approx(7.125 - 1.0 / 3.0));
    CHECK(series.window(1, 2).hours() == 2);

    std::vector<Timestamp> gap{ts[0], ts[2]};
    CHECK_THROWS_AS(InjectionSeries(gap, load.topRows(2), gen.topRows(2)), GridError);
    CHECK_THROWS_AS(parse_injections("timestamp,bus_9_load_kw\n2019-06-21T10:00:00,1\n", 2), GridError);
    CHECK_THROWS_AS(parse_timestamp("yesterday"), GridError);
}
