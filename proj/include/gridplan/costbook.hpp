#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace gridplan {

/// Battery installation prices for 2019.
struct BatteryCostBook {
    double capacity_cost = 130.0;          // euro/kWh
    double periphery_cost = 87.0;          // euro/kWh
    double power_electronics_cost = 93.0;  // euro/kW
    double installation_cost = 20000.0;    // euro per battery
    double lifetime_years = 10.0;

    double energy_cost() const { return capacity_cost + periphery_cost; }
};

struct LineCost {
    double installation = 60000.0;  // euro/km
    double acquisition = 0.0;       // euro/km
};

struct GridCostBook {
    std::map<std::string, LineCost> lines{
        {"NAYY 4x50 SE", {60000.0, 3500.0}},
        {"NAYY 4x120 SE", {60000.0, 9900.0}},
        {"NAYY 4x150 SE", {60000.0, 12000.0}},
    };
    double parallel_surcharge = 0.15;  // share of installation cost per added line
    /// Lines added beside an existing cable reuse its trench. When false they
    /// are priced as a new route.
    bool parallel_in_existing_trench = true;
    double transformer_cost = 21000.0;
    double transformer_rating_kva = 630.0;
    double cable_lifetime_years = 40.0;
    double transformer_lifetime_years = 40.0;

    const LineCost& line(const std::string& type) const;
};

struct CostBook {
    BatteryCostBook battery;
    GridCostBook grid;
};

/// Missing keys keep their defaults.
CostBook load_costbook(const std::filesystem::path& path);
CostBook parse_costbook(const std::string& json_text);
std::string costbook_to_json(const CostBook& book);

double battery_capex(double capacity_kwh, double power_kw, const BatteryCostBook& book = {});

/// Cable cost for `n_new_parallel` lines of one type along `length_km`. A
/// shared trench pays only the parallel surcharge per line; a new route pays
/// the full installation for the first line.
double line_capex(const std::string& line_type, double length_km, int n_new_parallel, bool shared_trench,
                  const GridCostBook& book = {});

/// Straight-line, undiscounted.
double annualize(double capex, double lifetime_years);

double lcoe(double capex, double annual_om, double annual_energy_kwh, double discount_rate, int years);

/// Levelized cost of storage: charging cost joins the annual cost stream and
/// discharged energy replaces generated energy.
double lcoes(double capex, double annual_om, double annual_charging_cost, double annual_discharged_kwh,
             double discount_rate, int years);

}  // namespace gridplan
