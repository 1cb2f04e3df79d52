#include "gridplan/costbook.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "text_io.hpp"

namespace gridplan {

using nlohmann::json;

const LineCost& GridCostBook::line(const std::string& type) const {
    const auto it = lines.find(type);
    if (it == lines.end()) throw std::invalid_argument("unknown line type '" + type + "' in cost book");
    return it->second;
}

CostBook parse_costbook(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw GridError(std::string("parse error: ") + e.what());
    }
    CostBook book;
    try {
        if (doc.contains("battery")) {
            const json& b = doc["battery"];
            BatteryCostBook& bb = book.battery;
            bb.capacity_cost = b.value("capacity_cost_eur_per_kwh", bb.capacity_cost);
            bb.periphery_cost = b.value("periphery_cost_eur_per_kwh", bb.periphery_cost);
            bb.power_electronics_cost = b.value("power_electronics_cost_eur_per_kw", bb.power_electronics_cost);
            bb.installation_cost = b.value("installation_cost_eur", bb.installation_cost);
            bb.lifetime_years = b.value("lifetime_years", bb.lifetime_years);
        }
        if (doc.contains("grid")) {
            const json& g = doc["grid"];
            GridCostBook& gb = book.grid;
            if (g.contains("line_types")) {
                gb.lines.clear();
                for (const auto& [name, entry] : g["line_types"].items())
                    gb.lines[name] = {entry.at("installation_eur_per_km").get<double>(),
                                      entry.at("acquisition_eur_per_km").get<double>()};
            }
            gb.parallel_surcharge = g.value("parallel_surcharge", gb.parallel_surcharge);
            gb.parallel_in_existing_trench = g.value("parallel_in_existing_trench", gb.parallel_in_existing_trench);
            gb.transformer_cost = g.value("transformer_cost_eur", gb.transformer_cost);
            gb.transformer_rating_kva = g.value("transformer_rating_kva", gb.transformer_rating_kva);
            gb.cable_lifetime_years = g.value("cable_lifetime_years", gb.cable_lifetime_years);
            gb.transformer_lifetime_years = g.value("transformer_lifetime_years", gb.transformer_lifetime_years);
        }
    } catch (const json::exception& e) {
        throw GridError(std::string("parse error: cost book: ") + e.what());
    }
    const BatteryCostBook& b = book.battery;
    if (b.capacity_cost < 0 || b.periphery_cost < 0 || b.power_electronics_cost < 0 || b.installation_cost < 0 ||
        !(b.lifetime_years > 0))
        throw GridError("cost book: battery costs must be non-negative and lifetime positive");
    const GridCostBook& g = book.grid;
    if (g.parallel_surcharge < 0 || g.parallel_surcharge > 1) throw GridError("cost book: parallel_surcharge outside [0, 1]");
    if (g.transformer_cost < 0 || !(g.cable_lifetime_years > 0) || !(g.transformer_lifetime_years > 0))
        throw GridError("cost book: grid costs must be non-negative and lifetimes positive");
    for (const auto& [name, c] : g.lines)
        if (c.installation < 0 || c.acquisition < 0) throw GridError("cost book: negative cost for '" + name + "'");
    return book;
}

CostBook load_costbook(const std::filesystem::path& path) { return parse_costbook(detail::read_text_file(path)); }

std::string costbook_to_json(const CostBook& book) {
    json doc;
    const BatteryCostBook& b = book.battery;
    doc["battery"] = {{"capacity_cost_eur_per_kwh", b.capacity_cost},
                      {"periphery_cost_eur_per_kwh", b.periphery_cost},
                      {"power_electronics_cost_eur_per_kw", b.power_electronics_cost},
                      {"installation_cost_eur", b.installation_cost},
                      {"lifetime_years", b.lifetime_years}};
    const GridCostBook& g = book.grid;
    json lines = json::object();
    for (const auto& [name, c] : g.lines)
        lines[name] = {{"installation_eur_per_km", c.installation}, {"acquisition_eur_per_km", c.acquisition}};
    doc["grid"] = {{"line_types", lines},
                   {"parallel_surcharge", g.parallel_surcharge},
                   {"parallel_in_existing_trench", g.parallel_in_existing_trench},
                   {"transformer_cost_eur", g.transformer_cost},
                   {"transformer_rating_kva", g.transformer_rating_kva},
                   {"cable_lifetime_years", g.cable_lifetime_years},
                   {"transformer_lifetime_years", g.transformer_lifetime_years}};
    return doc.dump(2) + "\n";
}

double battery_capex(double capacity_kwh, double power_kw, const BatteryCostBook& book) {
    if (capacity_kwh < 0.0 || power_kw < 0.0) throw std::invalid_argument("battery_capex: negative size");
    return book.energy_cost() * capacity_kwh + book.power_electronics_cost * power_kw + book.installation_cost;
}

double line_capex(const std::string& line_type, double length_km, int n_new_parallel, bool shared_trench,
                  const GridCostBook& book) {
    if (n_new_parallel < 1) throw std::invalid_argument("line_capex: at least one new line");
    if (length_km < 0.0) throw std::invalid_argument("line_capex: negative length");
    const LineCost& c = book.line(line_type);
    const double n = static_cast<double>(n_new_parallel);
    const double installation = shared_trench ? c.installation * book.parallel_surcharge * n
                                              : c.installation * (1.0 + book.parallel_surcharge * (n - 1.0));
    return length_km * (installation + c.acquisition * n);
}

double annualize(double capex, double lifetime_years) {
    if (!(lifetime_years > 0.0)) throw std::invalid_argument("annualize: lifetime must be positive");
    return capex / lifetime_years;
}

namespace {

double discounted_sum(double annual, double rate, int years) {
    double sum = 0.0;
    for (int t = 1; t <= years; ++t) sum += annual / std::pow(1.0 + rate, t);
    return sum;
}

}  // namespace

double lcoe(double capex, double annual_om, double annual_energy_kwh, double discount_rate, int years) {
    return lcoes(capex, annual_om, 0.0, annual_energy_kwh, discount_rate, years);
}

double lcoes(double capex, double annual_om, double annual_charging_cost, double annual_discharged_kwh,
             double discount_rate, int years) {
    if (!(annual_discharged_kwh > 0.0)) throw std::invalid_argument("levelized cost: energy must be positive");
    if (years < 1) throw std::invalid_argument("levelized cost: at least one year");
    if (discount_rate <= -1.0) throw std::invalid_argument("levelized cost: discount rate must exceed -1");
    const double cost = capex + discounted_sum(annual_om + annual_charging_cost, discount_rate, years);
    return cost / discounted_sum(annual_discharged_kwh, discount_rate, years);
}

}  // namespace gridplan
