#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridplan/grid.hpp"

namespace gridplan {

struct RoofSpec {
    int bus = 0;
    double area_m2 = 0.0;
    double azimuth_deg = 180.0;  // 0 = north, 180 = south
    double tilt_deg = 30.0;      // from horizontal
};

struct PvSystemParams {
    double usable_fraction = 0.8;
    double power_density = 0.2;  // kWp/m2
    double temp_coefficient = -0.004;  // 1/degC
    double noct = 45.0;  // degC
    double inverter_efficiency = 0.96;
    double dc_ac_ratio = 1.0;
    double albedo = 0.2;
};

struct IrradianceRecord {
    Timestamp timestamp;
    double ghi = 0.0;  // W/m2
    double dni = 0.0;
    double dhi = 0.0;
    double ambient_temp = 20.0;  // degC
};

struct SunPosition {
    double zenith_deg = 0.0;
    double azimuth_deg = 0.0;  // clockwise from north
};

/// Rooftop potential in kWp: area * usable fraction * module power density.
double max_pv_capacity(const RoofSpec& roof, const PvSystemParams& params = {});

/// Solar geometry from declination, equation of time and hour angle. The
/// timestamp is interpreted as UTC; longitude is positive east.
SunPosition sun_position(Timestamp timestamp, double latitude_deg, double longitude_deg);

/// Plane-of-array irradiance: beam + isotropic sky diffuse + ground reflected.
double poa_irradiance(const IrradianceRecord& record, const SunPosition& sun, const RoofSpec& roof, double albedo);

/// NOCT cell temperature, linear temperature derate and inverter clipping.
double pv_power(double poa_wm2, double ambient_temp_c, double capacity_kwp, const PvSystemParams& params = {});

std::vector<double> scale_penetration(std::span<const double> capacities_kwp, double fraction);

/// Start index of the window with the largest summed surplus; earliest on ties.
int select_worst_window(std::span<const double> surplus_kw, int window_hours = 72);

/// Per-bus rooftop potential; buses without roofs get zero.
std::vector<double> bus_capacities(const std::vector<RoofSpec>& roofs, int bus_count, const PvSystemParams& params = {});

/// AC generation per hour (rows) and bus (columns) at full rooftop potential.
Eigen::MatrixXd generation_profile(const std::vector<IrradianceRecord>& weather, const std::vector<RoofSpec>& roofs,
                                   int bus_count, double latitude_deg, double longitude_deg,
                                   const PvSystemParams& params = {});

std::vector<IrradianceRecord> load_irradiance(const std::filesystem::path& path);
std::vector<IrradianceRecord> parse_irradiance(const std::string& csv_text);
std::string irradiance_to_csv(const std::vector<IrradianceRecord>& records);

std::vector<RoofSpec> load_roofs(const std::filesystem::path& path);
std::vector<RoofSpec> parse_roofs(const std::string& json_text);
std::string roofs_to_json(const std::vector<RoofSpec>& roofs);

}  // namespace gridplan
