#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridplan/costbook.hpp"
#include "gridplan/grid.hpp"
#include "gridplan/pvgen.hpp"

namespace gridplan {

/// Parameters of the seeded synthetic feeder, roof, weather and load generator.
struct SynthOptions {
    std::uint32_t seed = 1;
    int buses = 106;  // including the LV bus
    int feeders = 4;
    /// Relative feeder sizes; empty means equal shares.
    std::vector<double> feeder_weights;
    double trunk_share = 0.6;  // share of a feeder's buses on its main line
    double trunk_km_min = 0.03;
    double trunk_km_max = 0.07;
    double lateral_km_min = 0.015;
    double lateral_km_max = 0.04;
    std::string trunk_type = "NAYY 4x150 SE";
    std::string lateral_type = "NAYY 4x50 SE";
    /// Long 4x50 spurs to outlying farms, hung off the end of a feeder trunk.
    int farm_spurs = 0;
    int farm_spur_buses = 3;
    double farm_km_min = 0.2;
    double farm_km_max = 0.4;
    double farm_roof_min = 200.0;
    double farm_roof_max = 400.0;
    double transformer_kva = 630.0;
    double transformer_ohm = 0.01;

    double roof_share = 1.0;  // buses with a PV-capable roof
    double roof_area_min = 60.0;
    double roof_area_max = 160.0;
    double annual_load_min_kwh = 2500.0;
    double annual_load_max_kwh = 5500.0;

    double latitude = 48.78;
    double longitude = 9.18;
    int year = 2019;
    int hours = 8760;
};

/// Standard NAYY catalog: 4x50, 4x120 and 4x150 SE.
std::vector<LineType> nayy_catalog();

GridNetwork synth_feeder(const SynthOptions& options);
std::vector<RoofSpec> synth_roofs(const GridNetwork& grid, const SynthOptions& options);
/// Hourly clear-sky irradiance thinned by a seeded day-to-day cloud process;
/// ghi = dni cos(zenith) + dhi holds for every record.
std::vector<IrradianceRecord> synth_weather(const SynthOptions& options);
/// Household load per hour and bus, kW; the LV bus carries none.
Eigen::MatrixXd synth_load(const GridNetwork& grid, const std::vector<Timestamp>& timestamps,
                           const SynthOptions& options);

struct SynthFixture {
    GridNetwork grid;
    std::vector<RoofSpec> roofs;
    std::vector<IrradianceRecord> weather;
    /// Load plus generation at full rooftop potential.
    InjectionSeries injections;
};

SynthFixture synthesize(const SynthOptions& options);

/// Four-feeder, 106-bus rural study grid: a stiff village core plus two long
/// spurs to outlying farms. 50 % penetration at a 5 % band is feasible while
/// the tighter scenarios violate on the spurs.
SynthOptions study_options(std::uint32_t seed = 7);

/// Default prices with added parallel lines priced as a new route.
CostBook study_costs();

/// Writes grid.json, roofs.json, irradiance.csv, injections.csv, costs.json
/// and a study.json scenario matrix referencing them.
void write_fixture(const SynthFixture& fixture, const SynthOptions& options, const std::filesystem::path& dir);

}  // namespace gridplan
