#include "gridplan/report.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "text_io.hpp"

namespace gridplan {

std::vector<std::string> ComparisonReport::failures() const {
    std::vector<std::string> out;
    for (const ScenarioRow& row : rows) {
        if (!row.reinforcement.ok) out.push_back(row.name + "/reinforcement: " + row.reinforcement.error);
        for (size_t v = 0; v < row.batteries.size(); ++v)
            if (!row.batteries[v].ok)
                out.push_back(row.name + "/batteries-" + variants[v].label() + ": " + row.batteries[v].error);
    }
    return out;
}

namespace {

CellResult run_reinforcement(const ScenarioBundle& b, std::optional<ReinforcementPlan>& plan_out) {
    CellResult cell;
    ReinforceOptions options;
    options.power_factor = b.config.power_factor;
    options.slack_v = b.config.slack_v;
    ReinforcementPlan plan = reinforce_grid(b.grid, b.net_kw, b.limits, b.costs, options);
    cell.capex = plan.total_capex;
    cell.annual_cost = plan.annual_cost;
    plan_out = std::move(plan);
    return cell;
}

CellResult run_batteries(const ScenarioBundle& b, const BatteryLimit& variant, std::optional<BatteryPlan>& plan_out) {
    CellResult cell;
    ScenarioConfig config = b.config;
    config.batteries = variant;
    BatteryPlan plan = place_batteries(b.grid, b.net_kw, b.gen_kw, b.limits, b.costs, battery_options(config));
    cell.capex = plan.capex;
    cell.annual_cost = plan.annual_cost;
    cell.batteries = plan.count();
    cell.capacity_kwh = plan.total_capacity();
    cell.proven_optimal = plan.proven_optimal;
    plan_out = std::move(plan);
    return cell;
}

std::string file_token(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return s;
}

double rounded(double v, double scale) { return std::round(v * scale) / scale; }

nlohmann::ordered_json envelope(const Eigen::VectorXd& v) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (Eigen::Index t = 0; t < v.size(); ++t) out.push_back(rounded(v(t), 1e6));
    return out;
}

}  // namespace

ComparisonReport compare(std::vector<ScenarioBundle> bundles, const std::vector<BatteryLimit>& variants, int threads) {
    ComparisonReport report;
    report.variants = variants;
    const size_t cells_per_row = 1 + variants.size();
    report.rows.resize(bundles.size());
    for (size_t r = 0; r < bundles.size(); ++r) {
        const ScenarioBundle& b = bundles[r];
        ScenarioRow& row = report.rows[r];
        row.name = b.config.name;
        row.pv_penetration = b.config.pv_penetration;
        row.v_deviation_limit = b.config.v_deviation_limit;
        row.window_start = b.window_start;
        row.baseline_violations = static_cast<int>(b.violations.size());
        row.baseline_max_v = b.baseline.v.rowwise().maxCoeff();
        row.baseline_min_v = b.baseline.v.rowwise().minCoeff();
        row.batteries.resize(variants.size());
        row.battery_plans.resize(variants.size());
    }

    const size_t total = bundles.size() * cells_per_row;
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t k = next.fetch_add(1); k < total; k = next.fetch_add(1)) {
            const size_t r = k / cells_per_row;
            const size_t c = k % cells_per_row;
            ScenarioRow& row = report.rows[r];
            CellResult& cell = c == 0 ? row.reinforcement : row.batteries[c - 1];
            try {
                cell = c == 0 ? run_reinforcement(bundles[r], row.reinforcement_plan)
                              : run_batteries(bundles[r], variants[c - 1], row.battery_plans[c - 1]);
            } catch (const std::exception& e) {
                cell = CellResult{};
                cell.ok = false;
                cell.error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(total)));
    {
        std::vector<std::jthread> pool;
        for (int i = 1; i < n; ++i) pool.emplace_back(worker);
        worker();
    }
    report.bundles = std::move(bundles);
    return report;
}

ComparisonReport compare(const StudyConfig& study, int threads) {
    std::map<std::string, GridNetwork> grids;
    std::map<std::string, InjectionSeries> series;
    std::vector<ScenarioBundle> bundles;
    for (const ScenarioConfig& config : study.scenarios) {
        auto g = grids.find(config.grid.string());
        if (g == grids.end()) g = grids.emplace(config.grid.string(), load_grid(config.grid)).first;
        const std::string key = config.injections.string() + "|" + config.irradiance.string() + "|" +
                                config.roofs.string() + "|" + std::to_string(config.latitude) + "|" +
                                std::to_string(config.longitude);
        auto s = series.find(key);
        if (s == series.end()) s = series.emplace(key, scenario_injections(config, g->second)).first;
        const CostBook costs = config.costs.empty() ? CostBook{} : load_costbook(config.costs);
        bundles.push_back(make_bundle(config, g->second, costs, s->second));
    }
    return compare(std::move(bundles), study.variants, threads);
}

std::string format_keur(double euro) { return detail::format_fixed(euro / 1000.0, 1); }

std::string report_to_csv(const ComparisonReport& report) {
    std::ostringstream out;
    out << "scenario,pv_penetration,v_deviation_limit,baseline_violations,reinforcement_capex_keur,"
           "reinforcement_annual_keur";
    for (const BatteryLimit& v : report.variants) {
        const std::string p = "batteries_" + v.label();
        out << ',' << p << "_count," << p << "_capacity_kwh," << p << "_capex_keur," << p << "_annual_keur";
    }
    out << "\n";
    for (const ScenarioRow& row : report.rows) {
        out << row.name << ',' << detail::format_fixed(row.pv_penetration, 2) << ','
            << detail::format_fixed(row.v_deviation_limit, 3) << ',' << row.baseline_violations;
        if (row.reinforcement.ok)
            out << ',' << format_keur(row.reinforcement.capex) << ',' << format_keur(row.reinforcement.annual_cost);
        else
            out << ",failed,failed";
        for (const CellResult& c : row.batteries) {
            if (c.ok)
                out << ',' << c.batteries << ',' << detail::format_fixed(c.capacity_kwh, 1) << ',' << format_keur(c.capex)
                    << ',' << format_keur(c.annual_cost);
            else
                out << ",failed,failed,failed,failed";
        }
        out << "\n";
    }
    return out.str();
}

std::string report_to_json(const ComparisonReport& report) {
    auto keur = [](double euro) { return std::stod(format_keur(euro)); };
    nlohmann::ordered_json doc;
    doc["variants"] = nlohmann::ordered_json::array();
    for (const auto& v : report.variants) doc["variants"].push_back(v.label());
    doc["scenarios"] = nlohmann::ordered_json::array();
    for (size_t r = 0; r < report.rows.size(); ++r) {
        const ScenarioRow& row = report.rows[r];
        nlohmann::ordered_json s;
        s["name"] = row.name;
        s["pv_penetration"] = row.pv_penetration;
        s["v_deviation_limit"] = row.v_deviation_limit;
        if (r < report.bundles.size() && !report.bundles[r].timestamps.empty())
            s["window_start"] = format_timestamp(report.bundles[r].timestamps.front());
        s["baseline_violations"] = row.baseline_violations;

        nlohmann::ordered_json re;
        re["status"] = row.reinforcement.ok ? "ok" : "failed";
        if (row.reinforcement.ok) {
            re["capex_keur"] = keur(row.reinforcement.capex);
            re["annual_keur"] = keur(row.reinforcement.annual_cost);
            re["actions"] = row.reinforcement_plan ? row.reinforcement_plan->actions.size() : 0;
            re["transformer_replaced"] = row.reinforcement_plan && row.reinforcement_plan->transformer_replaced;
        } else {
            re["error"] = row.reinforcement.error;
        }
        s["reinforcement"] = re;

        nlohmann::ordered_json bat;
        for (size_t v = 0; v < report.variants.size(); ++v) {
            const CellResult& c = row.batteries[v];
            nlohmann::ordered_json cell;
            cell["status"] = c.ok ? "ok" : "failed";
            if (c.ok) {
                cell["count"] = c.batteries;
                cell["capacity_kwh"] = rounded(c.capacity_kwh, 10.0);
                cell["capex_keur"] = keur(c.capex);
                cell["annual_keur"] = keur(c.annual_cost);
                cell["proven_optimal"] = c.proven_optimal;
            } else {
                cell["error"] = c.error;
            }
            bat[report.variants[v].label()] = cell;
        }
        s["batteries"] = bat;

        nlohmann::ordered_json env;
        env["baseline_max"] = envelope(row.baseline_max_v);
        env["baseline_min"] = envelope(row.baseline_min_v);
        if (row.reinforcement_plan) {
            env["reinforced_max"] = envelope(row.reinforcement_plan->final_max_voltage);
            env["reinforced_min"] = envelope(row.reinforcement_plan->final_min_voltage);
        }
        s["voltage_envelope"] = env;
        doc["scenarios"].push_back(s);
    }
    return doc.dump(2) + "\n";
}

void write_report(const ComparisonReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    detail::write_text_file(out_dir / "report.csv", report_to_csv(report));
    detail::write_text_file(out_dir / "report.json", report_to_json(report));

    nlohmann::ordered_json reinforcement = nlohmann::ordered_json::object();
    nlohmann::ordered_json batteries = nlohmann::ordered_json::object();
    for (size_t r = 0; r < report.rows.size(); ++r) {
        const ScenarioRow& row = report.rows[r];
        const ScenarioBundle& bundle = report.bundles[r];
        const std::string token = file_token(row.name);
        detail::write_text_file(out_dir / ("voltages_" + token + "_baseline.csv"), voltage_profile_csv(bundle));
        if (row.reinforcement_plan) {
            reinforcement[row.name] =
                nlohmann::ordered_json::parse(plan_to_json(bundle.grid, *row.reinforcement_plan));
            detail::write_text_file(out_dir / ("voltages_" + token + "_reinforced.csv"),
                                    voltage_profile_csv(bundle, row.reinforcement_plan->grid));
        }
        nlohmann::ordered_json per_variant = nlohmann::ordered_json::object();
        for (size_t v = 0; v < report.variants.size(); ++v) {
            if (!row.battery_plans[v]) continue;
            const BatteryPlan& plan = *row.battery_plans[v];
            const std::string label = report.variants[v].label();
            per_variant[label] = nlohmann::ordered_json::parse(battery_plan_to_json(plan));
            const Eigen::MatrixXd delta = plan.injection_delta(bundle.grid.bus_count());
            const std::string suffix = token + "_batteries-" + file_token(label) + ".csv";
            detail::write_text_file(out_dir / ("voltages_" + suffix), voltage_profile_csv(bundle, &delta));
            detail::write_text_file(out_dir / ("trajectories_" + suffix), trajectories_to_csv(plan));
        }
        batteries[row.name] = per_variant;
    }
    detail::write_text_file(out_dir / "reinforcement.json", reinforcement.dump(2) + "\n");
    detail::write_text_file(out_dir / "batteries.json", batteries.dump(2) + "\n");
}

}  // namespace gridplan
