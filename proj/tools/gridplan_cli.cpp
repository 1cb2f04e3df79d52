#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gridplan/battopt.hpp"
#include "gridplan/pvgen.hpp"
#include "gridplan/reinforce.hpp"
#include "gridplan/report.hpp"
#include "gridplan/scenario.hpp"
#include "gridplan/synth.hpp"

namespace fs = std::filesystem;
using namespace gridplan;

namespace {

struct Args {
    std::string grid;
    std::string scenario;
    std::string name;
    std::string out_dir;
    std::string costs;
    std::optional<double> penetration;
    std::optional<double> v_limit;
    std::string batteries;
    bool curtailment = false;
    std::uint32_t seed = 7;
    int threads = 1;
    std::string plan;
};

void write_out(const Args& a, const std::string& file, const std::string& text) {
    if (a.out_dir.empty()) {
        std::cout << text;
        return;
    }
    fs::create_directories(a.out_dir);
    std::ofstream out(fs::path(a.out_dir) / file, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + (fs::path(a.out_dir) / file).string());
}

StudyConfig study_from(const Args& a) {
    StudyConfig study;
    if (!a.scenario.empty()) {
        study = load_study(a.scenario);
    } else {
        if (a.grid.empty()) throw GridError("either --scenario or --grid is required");
        study.scenarios.push_back(ScenarioConfig{});
    }
    for (auto& s : study.scenarios) {
        if (!a.grid.empty()) s.grid = a.grid;
        if (!a.costs.empty()) s.costs = a.costs;
        if (a.penetration) s.pv_penetration = *a.penetration;
        if (a.v_limit) s.v_deviation_limit = *a.v_limit;
        if (!a.batteries.empty()) s.batteries = BatteryLimit::parse(a.batteries);
        if (a.curtailment) s.allow_curtailment = true;
        s.validate();
    }
    if (!a.batteries.empty()) study.variants = {BatteryLimit::parse(a.batteries)};
    return study;
}

ScenarioConfig one_scenario(const Args& a) {
    const StudyConfig study = study_from(a);
    if (a.name.empty()) return study.scenarios.front();
    for (const auto& s : study.scenarios)
        if (s.name == a.name) return s;
    throw GridError("no scenario named " + a.name);
}

int run_validate(const Args& a) {
    if (!a.scenario.empty()) {
        const StudyConfig study = study_from(a);
        for (const auto& s : study.scenarios) {
            const GridNetwork grid = load_grid(s.grid);
            const InjectionSeries series = scenario_injections(s, grid);
            if (!s.costs.empty()) load_costbook(s.costs);
            std::cout << s.name << ": " << grid.bus_count() << " buses, " << series.hours() << " hours\n";
        }
        return 0;
    }
    if (a.grid.empty()) throw GridError("validate needs --grid or --scenario");
    const GridNetwork grid = load_grid(a.grid);
    std::cout << grid.bus_count() << " buses, " << grid.segment_count() << " segments, " << branches(grid).size()
              << " branches\n";
    return 0;
}

int run_pv_profile(const Args& a) {
    const ScenarioConfig s = one_scenario(a);
    const GridNetwork grid = load_grid(s.grid);
    const InjectionSeries series = scenario_injections(s, grid);
    const InjectionSeries scaled = series.with_generation(series.generation_kw() * s.pv_penetration);
    const InjectionSeries gen_only(scaled.timestamps(), Eigen::MatrixXd::Zero(scaled.hours(), scaled.buses()),
                                   scaled.generation_kw());
    write_out(a, "pv_profile.csv", injections_to_csv(gen_only));
    return 0;
}

int run_select_window(const Args& a) {
    const ScenarioBundle b = run_scenario(one_scenario(a));
    std::cout << "start_hour," << b.window_start << "\nstart," << format_timestamp(b.timestamps.front())
              << "\nhours," << b.timestamps.size() << "\n";
    return 0;
}

int run_loadflow(const Args& a) {
    const ScenarioBundle b = run_scenario(one_scenario(a));
    std::cout << "max_v," << b.baseline.v.maxCoeff() << "\nmin_v," << b.baseline.v.minCoeff() << "\nviolations,"
              << b.violations.size() << "\nmax_transformer_loading," << b.baseline.transformer_loading.maxCoeff()
              << "\n";
    if (!a.out_dir.empty()) write_out(a, "voltages_" + b.config.name + "_baseline.csv", voltage_profile_csv(b));
    return 0;
}

int run_reinforce(const Args& a) {
    const ScenarioBundle b = run_scenario(one_scenario(a));
    ReinforceOptions o;
    o.power_factor = b.config.power_factor;
    o.slack_v = b.config.slack_v;
    const ReinforcementPlan plan = reinforce_grid(b.grid, b.net_kw, b.limits, b.costs, o);
    write_out(a, "reinforcement.json", plan_to_json(b.grid, plan));
    std::cerr << "capex " << format_keur(plan.total_capex) << " k euro\n";
    return 0;
}

int run_place(const Args& a) {
    const ScenarioBundle b = run_scenario(one_scenario(a));
    const BatteryPlan plan =
        place_batteries(b.grid, b.net_kw, b.gen_kw, b.limits, b.costs, battery_options(b.config));
    write_out(a, "batteries.json", battery_plan_to_json(plan));
    if (!a.out_dir.empty()) write_out(a, "trajectories.csv", trajectories_to_csv(plan));
    for (const auto& w : plan.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << plan.count() << " batteries, capex " << format_keur(plan.capex) << " k euro\n";
    return 0;
}

int run_compare(const Args& a) {
    if (a.out_dir.empty()) throw GridError("compare needs --out-dir");
    const ComparisonReport report = compare(study_from(a), a.threads);
    write_report(report, a.out_dir);
    const auto failed = report.failures();
    for (const auto& f : failed) std::cerr << "failed: " << f << "\n";
    return failed.empty() ? 0 : 1;
}

int run_voltage_profile(const Args& a) {
    const ScenarioBundle b = run_scenario(one_scenario(a));
    if (a.plan.empty()) {
        write_out(a, "voltages_" + b.config.name + "_baseline.csv", voltage_profile_csv(b));
        return 0;
    }
    std::ifstream in(a.plan);
    if (!in) throw GridError("cannot open " + a.plan);
    std::stringstream text;
    text << in.rdbuf();
    const BatteryPlan plan = parse_battery_plan(text.str());
    const Eigen::MatrixXd delta = plan.injection_delta(b.grid.bus_count());
    write_out(a, "voltages_" + b.config.name + "_batteries.csv", voltage_profile_csv(b, &delta));
    return 0;
}

int run_synth(const Args& a) {
    if (a.out_dir.empty()) throw GridError("synth-feeder needs --out-dir");
    const SynthOptions o = study_options(a.seed);
    write_fixture(synthesize(o), o, a.out_dir);
    std::cout << "wrote " << (fs::path(a.out_dir) / "study.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distribution grid reinforcement versus battery storage planning"};
    app.require_subcommand(1);
    Args a;

    auto scenario_flags = [&](CLI::App* sub) {
        sub->add_option("--grid", a.grid, "Grid JSON");
        sub->add_option("--scenario", a.scenario, "Scenario or study JSON");
        sub->add_option("--name", a.name, "Scenario to run from a study");
        sub->add_option("--out-dir", a.out_dir, "Output directory (stdout when omitted)");
        sub->add_option("--costs", a.costs, "Cost book JSON");
        sub->add_option("--penetration", a.penetration, "PV penetration in [0, 1]");
        sub->add_option("--v-limit", a.v_limit, "Voltage deviation limit, fraction of nominal");
        sub->add_option("--batteries", a.batteries, "auto, max-<n> or <n>");
        sub->add_flag("--curtailment", a.curtailment, "Allow PV curtailment");
    };

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Args&);
    };
    const Command commands[] = {
        {"validate", "Check grid, injection and cost files", run_validate},
        {"pv-profile", "PV generation per bus and hour", run_pv_profile},
        {"select-window", "Worst surplus window", run_select_window},
        {"loadflow", "Baseline load flow over the worst window", run_loadflow},
        {"reinforce", "Conventional reinforcement plan", run_reinforce},
        {"place", "Battery siting and sizing", run_place},
        {"compare", "Reinforcement versus battery variants for every scenario", run_compare},
        {"voltage-profile", "Per-hour bus voltages, optionally with a battery plan", run_voltage_profile},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        scenario_flags(sub);
        if (std::string(c.name) == "compare") sub->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
        if (std::string(c.name) == "voltage-profile") sub->add_option("--plan", a.plan, "Battery plan JSON");
        subs.emplace_back(sub, &c);
    }
    CLI::App* synth = app.add_subcommand("synth-feeder", "Write the seeded synthetic study fixture");
    synth->add_option("--seed", a.seed, "Fixture seed");
    synth->add_option("--out-dir", a.out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*synth) return run_synth(a);
        for (const auto& [sub, c] : subs)
            if (*sub) return c->run(a);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
