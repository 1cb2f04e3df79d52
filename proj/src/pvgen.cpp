#include "gridplan/pvgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "text_io.hpp"

namespace gridplan {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_roof(const RoofSpec& roof) {
    const std::string ctx = "roof at bus " + std::to_string(roof.bus);
    if (!(roof.area_m2 > 0.0)) throw std::invalid_argument(ctx + ": area must be positive");
    if (!(roof.tilt_deg >= 0.0 && roof.tilt_deg <= 90.0)) throw std::invalid_argument(ctx + ": tilt outside [0, 90]");
    if (!(roof.azimuth_deg >= 0.0 && roof.azimuth_deg < 360.0))
        throw std::invalid_argument(ctx + ": azimuth outside [0, 360)");
}

void check_params(const PvSystemParams& params) {
    if (!(params.usable_fraction > 0.0 && params.usable_fraction <= 1.0))
        throw std::invalid_argument("usable_fraction must be in (0, 1]");
    if (!(params.inverter_efficiency > 0.0 && params.inverter_efficiency <= 1.0))
        throw std::invalid_argument("inverter_efficiency must be in (0, 1]");
    if (!(params.power_density > 0.0) || !(params.dc_ac_ratio > 0.0))
        throw std::invalid_argument("power_density and dc_ac_ratio must be positive");
}

}  // namespace

double max_pv_capacity(const RoofSpec& roof, const PvSystemParams& params) {
    check_roof(roof);
    check_params(params);
    return roof.area_m2 * params.usable_fraction * params.power_density;
}

SunPosition sun_position(Timestamp timestamp, double latitude_deg, double longitude_deg) {
    using namespace std::chrono;
    const auto day_point = floor<days>(timestamp);
    const year_month_day ymd{day_point};
    const auto day_of_year = (day_point - sys_days{ymd.year() / January / 1}).count() + 1;
    const double hour_utc = duration<double, std::ratio<3600>>(timestamp - day_point).count();
    const double days_in_year = ymd.year().is_leap() ? 366.0 : 365.0;

    // Fractional year, radians.
    const double g = 2.0 * std::numbers::pi / days_in_year * (static_cast<double>(day_of_year) - 1.0 + (hour_utc - 12.0) / 24.0);
    const double declination = 0.006918 - 0.399912 * std::cos(g) + 0.070257 * std::sin(g) -
                               0.006758 * std::cos(2 * g) + 0.000907 * std::sin(2 * g) -
                               0.002697 * std::cos(3 * g) + 0.00148 * std::sin(3 * g);
    const double eq_time_min = 229.18 * (0.000075 + 0.001868 * std::cos(g) - 0.032077 * std::sin(g) -
                                         0.014615 * std::cos(2 * g) - 0.040849 * std::sin(2 * g));
    const double true_solar_min = hour_utc * 60.0 + eq_time_min + 4.0 * longitude_deg;
    const double hour_angle = (true_solar_min / 4.0 - 180.0) * kDeg;

    const double lat = latitude_deg * kDeg;
    const double cos_zenith = std::clamp(std::sin(lat) * std::sin(declination) +
                                             std::cos(lat) * std::cos(declination) * std::cos(hour_angle),
                                         -1.0, 1.0);
    SunPosition sun;
    sun.zenith_deg = std::acos(cos_zenith) / kDeg;
    const double az = std::atan2(std::sin(hour_angle),
                                 std::cos(hour_angle) * std::sin(lat) - std::tan(declination) * std::cos(lat));
    sun.azimuth_deg = std::fmod(az / kDeg + 180.0 + 360.0, 360.0);
    return sun;
}

double poa_irradiance(const IrradianceRecord& record, const SunPosition& sun, const RoofSpec& roof, double albedo) {
    const double zenith = sun.zenith_deg * kDeg;
    const double tilt = roof.tilt_deg * kDeg;
    const double cos_incidence = std::cos(zenith) * std::cos(tilt) +
                                 std::sin(zenith) * std::sin(tilt) * std::cos((sun.azimuth_deg - roof.azimuth_deg) * kDeg);
    const double beam = sun.zenith_deg < 90.0 ? record.dni * std::max(0.0, cos_incidence) : 0.0;
    const double sky = record.dhi * (1.0 + std::cos(tilt)) / 2.0;
    const double ground = record.ghi * albedo * (1.0 - std::cos(tilt)) / 2.0;
    return beam + sky + ground;
}

double pv_power(double poa_wm2, double ambient_temp_c, double capacity_kwp, const PvSystemParams& params) {
    if (capacity_kwp < 0.0) throw std::invalid_argument("pv_power: negative capacity");
    const double cell_temp = ambient_temp_c + (params.noct - 20.0) / 800.0 * poa_wm2;
    const double dc = capacity_kwp * (poa_wm2 / 1000.0) * (1.0 + params.temp_coefficient * (cell_temp - 25.0));
    const double ac = std::min(dc * params.inverter_efficiency,
                               capacity_kwp / params.dc_ac_ratio * params.inverter_efficiency);
    return std::max(0.0, ac);
}

std::vector<double> scale_penetration(std::span<const double> capacities_kwp, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("penetration fraction must be in [0, 1]");
    std::vector<double> out(capacities_kwp.begin(), capacities_kwp.end());
    for (double& c : out) c *= fraction;
    return out;
}

int select_worst_window(std::span<const double> surplus_kw, int window_hours) {
    if (window_hours < 1) throw std::invalid_argument("window must be at least one hour");
    if (surplus_kw.size() < static_cast<size_t>(window_hours))
        throw std::invalid_argument("series shorter than the window (" + std::to_string(surplus_kw.size()) + " < " +
                                    std::to_string(window_hours) + " hours)");
    std::vector<long double> prefix(surplus_kw.size() + 1, 0.0L);
    for (size_t i = 0; i < surplus_kw.size(); ++i) prefix[i + 1] = prefix[i] + surplus_kw[i];
    const size_t w = static_cast<size_t>(window_hours);
    size_t best = 0;
    long double best_sum = prefix[w];
    for (size_t s = 1; s + w <= surplus_kw.size(); ++s) {
        const long double sum = prefix[s + w] - prefix[s];
        if (sum > best_sum) {
            best_sum = sum;
            best = s;
        }
    }
    return static_cast<int>(best);
}

std::vector<double> bus_capacities(const std::vector<RoofSpec>& roofs, int bus_count, const PvSystemParams& params) {
    std::vector<double> capacity(static_cast<size_t>(bus_count), 0.0);
    for (const RoofSpec& roof : roofs) {
        if (roof.bus < 0 || roof.bus >= bus_count) throw GridError("roof references unknown bus " + std::to_string(roof.bus));
        capacity[static_cast<size_t>(roof.bus)] += max_pv_capacity(roof, params);
    }
    return capacity;
}

Eigen::MatrixXd generation_profile(const std::vector<IrradianceRecord>& weather, const std::vector<RoofSpec>& roofs,
                                   int bus_count, double latitude_deg, double longitude_deg,
                                   const PvSystemParams& params) {
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(weather.size()), bus_count);
    std::vector<double> capacity;
    capacity.reserve(roofs.size());
    for (const RoofSpec& roof : roofs) {
        if (roof.bus < 0 || roof.bus >= bus_count) throw GridError("roof references unknown bus " + std::to_string(roof.bus));
        capacity.push_back(max_pv_capacity(roof, params));
    }
    for (size_t t = 0; t < weather.size(); ++t) {
        const IrradianceRecord& rec = weather[t];
        const SunPosition sun = sun_position(rec.timestamp, latitude_deg, longitude_deg);
        for (size_t r = 0; r < roofs.size(); ++r) {
            const double poa = poa_irradiance(rec, sun, roofs[r], params.albedo);
            gen(static_cast<Eigen::Index>(t), roofs[r].bus) += pv_power(poa, rec.ambient_temp, capacity[r], params);
        }
    }
    return gen;
}

std::vector<IrradianceRecord> parse_irradiance(const std::string& csv_text) {
    const auto lines = detail::split_lines(csv_text);
    if (lines.empty()) throw GridError("parse error: empty irradiance CSV");
    const auto header = detail::split_fields(lines.front());
    const std::vector<std::string> expected{"timestamp", "ghi_wm2", "dni_wm2", "dhi_wm2", "temp_c"};
    if (header != expected) throw GridError("parse error: irradiance CSV header must be " + std::string("timestamp,ghi_wm2,dni_wm2,dhi_wm2,temp_c"));
    std::vector<IrradianceRecord> records;
    records.reserve(lines.size() - 1);
    for (size_t i = 1; i < lines.size(); ++i) {
        const auto f = detail::split_fields(lines[i]);
        const std::string ctx = "irradiance CSV row " + std::to_string(i + 1);
        if (f.size() != expected.size()) throw GridError("parse error: " + ctx + " has wrong field count");
        IrradianceRecord rec;
        rec.timestamp = parse_timestamp(f[0]);
        rec.ghi = detail::parse_double(f[1], ctx);
        rec.dni = detail::parse_double(f[2], ctx);
        rec.dhi = detail::parse_double(f[3], ctx);
        rec.ambient_temp = detail::parse_double(f[4], ctx);
        if (rec.ghi < 0.0 || rec.dni < 0.0 || rec.dhi < 0.0) throw GridError(ctx + ": negative irradiance");
        records.push_back(rec);
    }
    return records;
}

std::vector<IrradianceRecord> load_irradiance(const std::filesystem::path& path) {
    return parse_irradiance(detail::read_text_file(path));
}

std::string irradiance_to_csv(const std::vector<IrradianceRecord>& records) {
    std::ostringstream out;
    out << "timestamp,ghi_wm2,dni_wm2,dhi_wm2,temp_c\n";
    using detail::format_double;
    for (const IrradianceRecord& r : records)
        out << format_timestamp(r.timestamp) << ',' << format_double(r.ghi) << ',' << format_double(r.dni) << ','
            << format_double(r.dhi) << ',' << format_double(r.ambient_temp) << '\n';
    return out.str();
}

std::vector<RoofSpec> parse_roofs(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw GridError(std::string("parse error: ") + e.what());
    }
    if (!doc.is_array()) throw GridError("parse error: roof file must be a JSON array");
    std::vector<RoofSpec> roofs;
    for (const auto& r : doc) {
        RoofSpec roof;
        try {
            roof.bus = r.at("bus").get<int>();
            roof.area_m2 = r.at("area_m2").get<double>();
            roof.azimuth_deg = r.at("azimuth_deg").get<double>();
            roof.tilt_deg = r.at("tilt_deg").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw GridError(std::string("parse error: roof entry: ") + e.what());
        }
        try {
            check_roof(roof);
        } catch (const std::invalid_argument& e) {
            throw GridError(e.what());
        }
        roofs.push_back(roof);
    }
    return roofs;
}

std::vector<RoofSpec> load_roofs(const std::filesystem::path& path) { return parse_roofs(detail::read_text_file(path)); }

std::string roofs_to_json(const std::vector<RoofSpec>& roofs) {
    nlohmann::json doc = nlohmann::json::array();
    for (const RoofSpec& r : roofs)
        doc.push_back({{"bus", r.bus}, {"area_m2", r.area_m2}, {"azimuth_deg", r.azimuth_deg}, {"tilt_deg", r.tilt_deg}});
    return doc.dump(2) + "\n";
}

}  // namespace gridplan
