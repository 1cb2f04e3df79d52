#pragma once

#include <random>
#include <string>
#include <vector>

#include "gridplan/grid.hpp"

namespace fixtures {

inline std::vector<gridplan::LineType> nayy_catalog() {
    return {{"NAYY 4x50 SE", 0.641, 0.083, 142.0, 3500.0},
            {"NAYY 4x120 SE", 0.253, 0.080, 242.0, 9900.0},
            {"NAYY 4x150 SE", 0.206, 0.080, 270.0, 12000.0}};
}

inline double z_base_400v_630kva() { return 400.0 * 400.0 / (630.0 * 1000.0); }

/// Chain 0-1-...-n with identical 1 km segments of the given p.u. impedance.
inline gridplan::GridNetwork pu_chain(int segments, double r_pu, double x_pu = 0.0, double trafo_ohm = 0.0) {
    const double zb = z_base_400v_630kva();
    std::vector<gridplan::Bus> buses;
    for (int i = 0; i <= segments; ++i)
        buses.push_back({i, "b" + std::to_string(i), i == 0 ? gridplan::BusKind::Slack : gridplan::BusKind::Load, 400.0});
    std::vector<gridplan::LineSegment> segs;
    for (int i = 0; i < segments; ++i) segs.push_back({i, i + 1, 1.0, "unit", 1});
    gridplan::Transformer t;
    t.impedance_ohm = trafo_ohm;
    return gridplan::GridNetwork(buses, segs, t, {{"unit", r_pu * zb, x_pu * zb, 1000.0, 0.0}});
}

/// Random radial tree: each bus attaches to a uniformly chosen earlier bus.
inline gridplan::GridNetwork random_tree(int buses, std::mt19937& rng, double min_km = 0.02, double max_km = 0.08,
                                         double trafo_ohm = 0.01) {
    std::vector<gridplan::Bus> bus_list;
    for (int i = 0; i < buses; ++i)
        bus_list.push_back({i, "n" + std::to_string(i), i == 0 ? gridplan::BusKind::Slack : gridplan::BusKind::Load, 400.0});
    std::uniform_real_distribution<double> len(min_km, max_km);
    const auto catalog = nayy_catalog();
    std::uniform_int_distribution<int> type(0, static_cast<int>(catalog.size()) - 1);
    std::vector<gridplan::LineSegment> segs;
    for (int i = 1; i < buses; ++i) {
        std::uniform_int_distribution<int> parent(0, i - 1);
        segs.push_back({parent(rng), i, len(rng), catalog[static_cast<size_t>(type(rng))].name, 1});
    }
    gridplan::Transformer t;
    t.impedance_ohm = trafo_ohm;
    return gridplan::GridNetwork(bus_list, segs, t, catalog);
}

/// Star of identical NAYY chains hanging off the LV bus; feeder f owns buses
/// 1 + f * per_feeder .. (f + 1) * per_feeder.
inline gridplan::GridNetwork nayy_star(int feeders, int per_feeder, double km, const std::string& type = "NAYY 4x50 SE",
                                       double trafo_ohm = 0.01) {
    std::vector<gridplan::Bus> buses{{0, "lv", gridplan::BusKind::Slack, 400.0}};
    std::vector<gridplan::LineSegment> segs;
    for (int f = 0; f < feeders; ++f)
        for (int k = 0; k < per_feeder; ++k) {
            const int id = 1 + f * per_feeder + k;
            buses.push_back({id, "f" + std::to_string(f) + "_" + std::to_string(k), gridplan::BusKind::Load, 400.0});
            segs.push_back({k == 0 ? 0 : id - 1, id, km, type, 1});
        }
    gridplan::Transformer t;
    t.impedance_ohm = trafo_ohm;
    return gridplan::GridNetwork(buses, segs, t, nayy_catalog());
}

}  // namespace fixtures
