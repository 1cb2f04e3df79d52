#include "gridplan/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "json.hpp"
#include "text_io.hpp"

namespace gridplan {

namespace {

/// Uniform draws straight from the engine bits so the fixtures do not depend
/// on the standard library's distribution implementations.
class Draw {
public:
    explicit Draw(std::uint32_t seed) : engine_(seed) {}

    double unit() { return static_cast<double>(engine_() >> 5) / 134217728.0; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int index(int n) { return std::min(n - 1, static_cast<int>(unit() * n)); }

private:
    std::mt19937 engine_;
};

std::uint32_t substream(std::uint32_t seed, std::uint32_t stream) { return seed * 2654435761u + stream * 40503u + 1u; }

double clamp(double v, double lo, double hi) { return std::max(lo, std::min(hi, v)); }

double erbs_diffuse_fraction(double kt) {
    if (kt <= 0.22) return 1.0 - 0.09 * kt;
    if (kt <= 0.8) return 0.9511 - 0.1604 * kt + 4.388 * kt * kt - 16.638 * std::pow(kt, 3) + 12.336 * std::pow(kt, 4);
    return 0.165;
}

int day_of_year(Timestamp t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{day};
    return (day - std::chrono::sys_days{ymd.year() / std::chrono::January / 1}).count();
}

Timestamp year_start(int year) {
    return std::chrono::sys_days{std::chrono::year{year} / std::chrono::January / 1};
}

}  // namespace

std::vector<LineType> nayy_catalog() {
    return {{"NAYY 4x50 SE", 0.641, 0.083, 142.0, 3500.0},
            {"NAYY 4x120 SE", 0.253, 0.080, 242.0, 9900.0},
            {"NAYY 4x150 SE", 0.206, 0.080, 270.0, 12000.0}};
}

GridNetwork synth_feeder(const SynthOptions& o) {
    if (o.buses < 2 || o.feeders < 1 || o.feeders > o.buses - 1)
        throw std::invalid_argument("synth_feeder: need at least one bus per feeder");
    Draw draw(substream(o.seed, 1));

    std::vector<double> weights = o.feeder_weights;
    if (weights.empty()) weights.assign(static_cast<size_t>(o.feeders), 1.0);
    if (static_cast<int>(weights.size()) != o.feeders) throw std::invalid_argument("synth_feeder: one weight per feeder");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const int n_farm = o.farm_spurs * o.farm_spur_buses;
    const int n_total = o.buses - 1 - n_farm;
    if (o.farm_spurs < 0 || o.farm_spur_buses < 1 || n_total < o.feeders)
        throw std::invalid_argument("synth_feeder: farm spurs leave too few buses for the feeders");
    std::vector<int> counts;
    for (double w : weights) counts.push_back(std::max(1, static_cast<int>(w / total * n_total)));
    for (size_t f = 0; std::accumulate(counts.begin(), counts.end(), 0) < n_total; f = (f + 1) % counts.size())
        ++counts[f];
    for (size_t f = 0; std::accumulate(counts.begin(), counts.end(), 0) > n_total; f = (f + 1) % counts.size())
        if (counts[f] > 1) --counts[f];

    std::vector<Bus> buses{{0, "lv", BusKind::Slack, 400.0}};
    std::vector<LineSegment> segments;
    auto add_bus = [&](int parent, double km, const std::string& type, const std::string& name) {
        const int id = static_cast<int>(buses.size());
        buses.push_back({id, name, BusKind::Load, 400.0});
        segments.push_back({parent, id, km, type, 1});
        return id;
    };
    for (int f = 0; f < o.feeders; ++f) {
        const int n = counts[static_cast<size_t>(f)];
        const int trunk = std::max(1, static_cast<int>(std::lround(o.trunk_share * n)));
        std::vector<int> trunk_buses;
        int parent = 0;
        for (int k = 0; k < trunk; ++k) {
            parent = add_bus(parent, draw.uniform(o.trunk_km_min, o.trunk_km_max), o.trunk_type,
                             "f" + std::to_string(f + 1) + "_t" + std::to_string(k + 1));
            trunk_buses.push_back(parent);
        }
        int chain_end = -1, chain_len = 0;
        for (int k = 0; k < n - trunk; ++k) {
            int at;
            if (chain_end >= 0 && chain_len < 4 && draw.unit() < 0.5) {
                at = chain_end;
                ++chain_len;
            } else {
                at = trunk_buses[static_cast<size_t>(draw.index(static_cast<int>(trunk_buses.size())))];
                chain_len = 1;
            }
            chain_end = add_bus(at, draw.uniform(o.lateral_km_min, o.lateral_km_max), o.lateral_type,
                                "f" + std::to_string(f + 1) + "_l" + std::to_string(k + 1));
        }
        for (int spur = f; spur < o.farm_spurs; spur += o.feeders) {
            int at = trunk_buses.back();
            for (int k = 0; k < o.farm_spur_buses; ++k)
                at = add_bus(at, draw.uniform(o.farm_km_min, o.farm_km_max), o.lateral_type,
                             "f" + std::to_string(f + 1) + "_farm" + std::to_string(spur + 1) + "_" + std::to_string(k + 1));
        }
    }
    Transformer t;
    t.rating_kva = o.transformer_kva;
    t.impedance_ohm = o.transformer_ohm;
    return GridNetwork(std::move(buses), std::move(segments), t, nayy_catalog());
}

std::vector<RoofSpec> synth_roofs(const GridNetwork& grid, const SynthOptions& o) {
    Draw draw(substream(o.seed, 2));
    std::vector<RoofSpec> roofs;
    for (int b = 0; b < grid.bus_count(); ++b) {
        if (b == grid.slack()) continue;
        const bool farm = grid.bus(b).name.find("_farm") != std::string::npos;
        const bool has_roof = draw.unit() < o.roof_share || farm;
        const double area = farm ? draw.uniform(o.farm_roof_min, o.farm_roof_max)
                                 : draw.uniform(o.roof_area_min, o.roof_area_max);
        const double azimuth = 180.0 + draw.uniform(-70.0, 70.0);
        const double tilt = draw.uniform(15.0, 45.0);
        if (has_roof) roofs.push_back({b, area, azimuth, tilt});
    }
    return roofs;
}

std::vector<IrradianceRecord> synth_weather(const SynthOptions& o) {
    Draw draw(substream(o.seed, 3));
    std::vector<IrradianceRecord> out;
    out.reserve(static_cast<size_t>(o.hours));
    const Timestamp start = year_start(o.year);
    double clearness = 0.5;
    int current_day = -1;
    for (int h = 0; h < o.hours; ++h) {
        IrradianceRecord rec;
        rec.timestamp = start + std::chrono::hours(h);
        const int doy = day_of_year(rec.timestamp);
        const double season = std::sin(2.0 * std::numbers::pi * (doy - 80) / 365.0);
        if (h / 24 != current_day) {
            current_day = h / 24;
            const double mean = 0.5 + 0.18 * season;
            clearness = clamp(mean + 0.65 * (clearness - mean) + draw.uniform(-0.3, 0.3), 0.08, 1.0);
        }
        const int hour_of_day = h % 24;
        rec.ambient_temp = 10.0 + 9.0 * season + 5.0 * std::sin(2.0 * std::numbers::pi * (hour_of_day - 9) / 24.0) +
                           draw.uniform(-1.5, 1.5);
        const SunPosition sun = sun_position(rec.timestamp, o.latitude, o.longitude);
        const double cz = std::cos(sun.zenith_deg * std::numbers::pi / 180.0);
        const double jitter = draw.uniform(-0.08, 0.08);
        if (cz <= 0.0) {
            out.push_back(rec);
            continue;
        }
        const double clear = 1098.0 * cz * std::exp(-0.057 / cz);
        const double ghi = clear * clamp(clearness + jitter, 0.05, 1.0);
        if (cz < 0.065) {
            rec.ghi = rec.dhi = ghi;
        } else {
            const double kt = clamp(ghi / (1367.0 * cz), 0.0, 1.0);
            rec.ghi = ghi;
            rec.dhi = erbs_diffuse_fraction(kt) * ghi;
            rec.dni = (ghi - rec.dhi) / cz;
        }
        out.push_back(rec);
    }
    return out;
}

Eigen::MatrixXd synth_load(const GridNetwork& grid, const std::vector<Timestamp>& timestamps, const SynthOptions& o) {
    // Residential shape by local hour (UTC+1).
    static constexpr std::array<double, 24> shape{0.55, 0.45, 0.40, 0.38, 0.38, 0.45, 0.70, 0.95, 0.90, 0.85, 0.85, 0.90,
                                                  1.00, 0.95, 0.85, 0.80, 0.85, 1.00, 1.25, 1.40, 1.35, 1.20, 0.95, 0.70};
    Draw draw(substream(o.seed, 4));
    const Eigen::Index hours = static_cast<Eigen::Index>(timestamps.size());
    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(hours, grid.bus_count());
    for (int b = 0; b < grid.bus_count(); ++b) {
        const double annual = draw.uniform(o.annual_load_min_kwh, o.annual_load_max_kwh);
        if (b == grid.slack()) continue;
        double sum = 0.0;
        for (Eigen::Index t = 0; t < hours; ++t) {
            const Timestamp ts = timestamps[static_cast<size_t>(t)];
            const int local = static_cast<int>((ts.time_since_epoch().count() / 3600 + 1) % 24);
            const double season = 1.0 + 0.2 * std::cos(2.0 * std::numbers::pi * (day_of_year(ts) - 15) / 365.0);
            load(t, b) = shape[static_cast<size_t>(local)] * season * draw.uniform(0.6, 1.4);
            sum += load(t, b);
        }
        if (sum > 0.0) load.col(b) *= annual * (static_cast<double>(hours) / 8760.0) / sum;
    }
    return load;
}

SynthFixture synthesize(const SynthOptions& o) {
    GridNetwork grid = synth_feeder(o);
    std::vector<RoofSpec> roofs = synth_roofs(grid, o);
    std::vector<IrradianceRecord> weather = synth_weather(o);
    std::vector<Timestamp> stamps;
    stamps.reserve(weather.size());
    for (const auto& r : weather) stamps.push_back(r.timestamp);
    Eigen::MatrixXd load = synth_load(grid, stamps, o);
    Eigen::MatrixXd gen = generation_profile(weather, roofs, grid.bus_count(), o.latitude, o.longitude);
    InjectionSeries series(std::move(stamps), std::move(load), std::move(gen));
    return SynthFixture{std::move(grid), std::move(roofs), std::move(weather), std::move(series)};
}

SynthOptions study_options(std::uint32_t seed) {
    SynthOptions o;
    o.seed = seed;
    o.trunk_km_min = 0.012;
    o.trunk_km_max = 0.03;
    o.lateral_km_min = 0.008;
    o.lateral_km_max = 0.02;
    o.roof_area_min = 20.0;
    o.roof_area_max = 50.0;
    o.farm_spurs = 2;
    o.farm_spur_buses = 3;
    o.farm_km_min = 1.0;
    o.farm_km_max = 1.3;
    o.farm_roof_min = 16.0;
    o.farm_roof_max = 30.0;
    return o;
}

CostBook study_costs() {
    CostBook book;
    book.grid.parallel_in_existing_trench = false;
    return book;
}

void write_fixture(const SynthFixture& fixture, const SynthOptions& options, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    detail::write_text_file(dir / "grid.json", grid_to_json(fixture.grid));
    detail::write_text_file(dir / "roofs.json", roofs_to_json(fixture.roofs));
    detail::write_text_file(dir / "irradiance.csv", irradiance_to_csv(fixture.weather));
    detail::write_text_file(dir / "injections.csv", injections_to_csv(fixture.injections));
    detail::write_text_file(dir / "costs.json", costbook_to_json(study_costs()));

    nlohmann::ordered_json study;
    study["grid"] = "grid.json";
    study["injections"] = "injections.csv";
    study["costs"] = "costs.json";
    study["latitude"] = options.latitude;
    study["longitude"] = options.longitude;
    study["window_hours"] = 72;
    study["allow_curtailment"] = false;
    study["battery_variants"] = {"auto", "5", "10"};
    study["scenarios"] = nlohmann::ordered_json::array();
    for (double pen : {0.5, 0.8})
        for (double dev : {0.05, 0.03}) {
            const std::string name = std::to_string(static_cast<int>(pen * 100)) + "pct_" +
                                     std::to_string(static_cast<int>(std::lround(dev * 100))) + "pct";
            study["scenarios"].push_back({{"name", name}, {"pv_penetration", pen}, {"v_deviation_limit", dev}});
        }
    detail::write_text_file(dir / "study.json", study.dump(2) + "\n");
}

}  // namespace gridplan
