#include "gridplan/scenario.hpp"

#include <charconv>
#include <sstream>

#include "gridplan/pvgen.hpp"
#include "json.hpp"
#include "text_io.hpp"

namespace gridplan {

BatteryLimit BatteryLimit::parse(const std::string& text) {
    auto number = [&](std::string_view digits) {
        int n = 0;
        const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (ec != std::errc{} || end != digits.data() + digits.size() || n < 0)
            throw GridError("battery constraint must be auto, max-<n> or <n>, got '" + text + "'");
        return n;
    };
    if (text == "auto") return {};
    if (text.rfind("max-", 0) == 0) return {Kind::AtMost, number(std::string_view(text).substr(4))};
    return {Kind::Exactly, number(text)};
}

std::string BatteryLimit::label() const {
    switch (kind) {
        case Kind::Unconstrained: return "auto";
        case Kind::AtMost: return "max-" + std::to_string(n);
        case Kind::Exactly: return std::to_string(n);
    }
    return "auto";
}

void BatteryLimit::apply(BatteryOptions& options) const {
    options.max_batteries.reset();
    options.exact_batteries.reset();
    if (kind == Kind::AtMost) options.max_batteries = n;
    if (kind == Kind::Exactly) options.exact_batteries = n;
}

void ScenarioConfig::validate() const {
    if (!(pv_penetration >= 0.0 && pv_penetration <= 1.0))
        throw GridError("scenario " + name + ": pv_penetration must lie in [0, 1]");
    if (!(v_deviation_limit > 0.0)) throw GridError("scenario " + name + ": v_deviation_limit must be positive");
    if (window_hours < 1) throw GridError("scenario " + name + ": window_hours must be positive");
    if (grid.empty()) throw GridError("scenario " + name + ": grid path missing");
    if (injections.empty() && (irradiance.empty() || roofs.empty()))
        throw GridError("scenario " + name + ": injections or irradiance plus roofs required");
}

namespace {

void read_fields(const nlohmann::json& j, ScenarioConfig& c, const std::filesystem::path& base) {
    auto path = [&](const char* key, std::filesystem::path& out) {
        if (j.contains(key)) {
            const std::filesystem::path p = j.at(key).get<std::string>();
            out = p.is_absolute() ? p : base / p;
        }
    };
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    path("grid", c.grid);
    path("injections", c.injections);
    path("irradiance", c.irradiance);
    path("roofs", c.roofs);
    path("costs", c.costs);
    c.latitude = j.value("latitude", c.latitude);
    c.longitude = j.value("longitude", c.longitude);
    c.pv_penetration = j.value("pv_penetration", c.pv_penetration);
    c.v_deviation_limit = j.value("v_deviation_limit", c.v_deviation_limit);
    if (j.contains("batteries")) c.batteries = BatteryLimit::parse(j.at("batteries").get<std::string>());
    c.allow_curtailment = j.value("allow_curtailment", c.allow_curtailment);
    c.window_hours = j.value("window_hours", c.window_hours);
    c.power_factor = j.value("power_factor", c.power_factor);
    c.slack_v = j.value("slack_v", c.slack_v);
}

}  // namespace

StudyConfig parse_study(const std::string& json_text, const std::filesystem::path& base_dir) {
    StudyConfig study;
    try {
        const auto j = nlohmann::json::parse(json_text);
        ScenarioConfig base;
        read_fields(j, base, base_dir);
        if (j.contains("battery_variants")) {
            study.variants.clear();
            for (const auto& v : j.at("battery_variants")) study.variants.push_back(BatteryLimit::parse(v.get<std::string>()));
        }
        if (j.contains("scenarios")) {
            for (const auto& s : j.at("scenarios")) {
                ScenarioConfig c = base;
                read_fields(s, c, base_dir);
                study.scenarios.push_back(std::move(c));
            }
        } else {
            study.scenarios.push_back(base);
        }
    } catch (const nlohmann::json::exception& e) {
        throw GridError(std::string("parse error: scenario config: ") + e.what());
    }
    if (study.scenarios.empty()) throw GridError("scenario config lists no scenarios");
    for (const auto& s : study.scenarios) s.validate();
    return study;
}

StudyConfig load_study(const std::filesystem::path& path) {
    return parse_study(detail::read_text_file(path), path.parent_path());
}

InjectionSeries scenario_injections(const ScenarioConfig& config, const GridNetwork& grid) {
    const bool pv_chain = !config.irradiance.empty() && !config.roofs.empty();
    if (!pv_chain) return load_injections(config.injections, grid.bus_count());

    const auto weather = load_irradiance(config.irradiance);
    const auto roofs = load_roofs(config.roofs);
    Eigen::MatrixXd gen = generation_profile(weather, roofs, grid.bus_count(), config.latitude, config.longitude);
    if (config.injections.empty()) {
        std::vector<Timestamp> stamps;
        for (const auto& r : weather) stamps.push_back(r.timestamp);
        return InjectionSeries(std::move(stamps), Eigen::MatrixXd::Zero(gen.rows(), gen.cols()), std::move(gen));
    }
    const InjectionSeries load = load_injections(config.injections, grid.bus_count());
    if (load.hours() != static_cast<int>(weather.size()) || load.timestamps().front() != weather.front().timestamp)
        throw GridError("scenario " + config.name + ": injection and irradiance timestamps differ");
    return load.with_generation(std::move(gen));
}

ScenarioBundle make_bundle(const ScenarioConfig& config, const GridNetwork& grid, const CostBook& costs,
                           const InjectionSeries& full_potential) {
    config.validate();
    if (full_potential.buses() != grid.bus_count()) throw GridError("scenario " + config.name + ": bus count mismatch");
    const InjectionSeries scaled = full_potential.with_generation(full_potential.generation_kw() * config.pv_penetration);
    const Eigen::VectorXd surplus = scaled.total_surplus_kw();
    const int start = select_worst_window(std::span<const double>(surplus.data(), static_cast<size_t>(surplus.size())),
                                          config.window_hours);
    const InjectionSeries window = scaled.window(start, config.window_hours);

    ScenarioBundle b{config, grid, costs, VoltageLimits::from_deviation(config.v_deviation_limit), start,
                     window.timestamps(), window.load_kw(), window.generation_kw(), window.net_kw(), {}, {}};
    b.baseline = solve_window(grid, b.net_kw, config.power_factor, config.slack_v);
    if (!b.baseline.converged) throw std::runtime_error("scenario " + config.name + ": baseline load flow diverged");
    for (Eigen::Index t = 0; t < b.baseline.v.rows(); ++t)
        for (int bus = 0; bus < grid.bus_count(); ++bus)
            if (b.limits.excess(b.baseline.v(t, bus)) > 0.0) b.violations.emplace_back(bus, static_cast<int>(t));
    return b;
}

ScenarioBundle run_scenario(const ScenarioConfig& config) {
    config.validate();
    const GridNetwork grid = load_grid(config.grid);
    const CostBook costs = config.costs.empty() ? CostBook{} : load_costbook(config.costs);
    return make_bundle(config, grid, costs, scenario_injections(config, grid));
}

BatteryOptions battery_options(const ScenarioConfig& config) {
    BatteryOptions o;
    o.allow_curtailment = config.allow_curtailment;
    o.power_factor = config.power_factor;
    o.slack_v = config.slack_v;
    config.batteries.apply(o);
    return o;
}

namespace {

std::string profile_csv(const ScenarioBundle& bundle, const WindowFlow& flow) {
    if (!flow.converged) throw std::runtime_error("voltage profile: load flow diverged");
    std::ostringstream out;
    out << "timestamp";
    for (int b = 0; b < bundle.grid.bus_count(); ++b) out << ",bus_" << b;
    out << "\n";
    for (Eigen::Index t = 0; t < flow.v.rows(); ++t) {
        out << format_timestamp(bundle.timestamps[static_cast<size_t>(t)]);
        for (Eigen::Index b = 0; b < flow.v.cols(); ++b) out << ',' << detail::format_fixed(flow.v(t, b), 6);
        out << "\n";
    }
    return out.str();
}

}  // namespace

std::string voltage_profile_csv(const ScenarioBundle& bundle, const Eigen::MatrixXd* delta_kw) {
    if (!delta_kw) return profile_csv(bundle, bundle.baseline);
    if (delta_kw->rows() != bundle.net_kw.rows() || delta_kw->cols() != bundle.net_kw.cols())
        throw std::invalid_argument("voltage profile: plan does not cover the window");
    return profile_csv(bundle, solve_window(bundle.grid, bundle.net_kw + *delta_kw, bundle.config.power_factor,
                                            bundle.config.slack_v));
}

std::string voltage_profile_csv(const ScenarioBundle& bundle, const GridNetwork& grid) {
    return profile_csv(bundle, solve_window(grid, bundle.net_kw, bundle.config.power_factor, bundle.config.slack_v));
}

}  // namespace gridplan
