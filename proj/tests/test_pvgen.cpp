#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gridplan/pvgen.hpp"

using namespace gridplan;

namespace {

double min_zenith_of_day(const std::string& date, double lat, double lon) {
    const Timestamp start = parse_timestamp(date + "T00:00:00Z");
    double best = 180.0;
    for (int minute = 0; minute < 24 * 60; ++minute)
        best = std::min(best, sun_position(start + std::chrono::minutes(minute), lat, lon).zenith_deg);
    return best;
}

int brute_force_window(const std::vector<double>& s, int w) {
    int best = 0;
    double best_sum = -1e300;
    for (int start = 0; start + w <= static_cast<int>(s.size()); ++start) {
        long double sum = 0.0L;
        for (int k = 0; k < w; ++k) sum += s[static_cast<size_t>(start + k)];
        if (static_cast<double>(sum) > best_sum) {
            best_sum = static_cast<double>(sum);
            best = start;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("rooftop potential") {
    CHECK(max_pv_capacity({1, 100.0, 180.0, 30.0}) == doctest::Approx(16.0));
    PvSystemParams none;
    none.usable_fraction = 0.0;
    CHECK_THROWS_AS(max_pv_capacity({1, 100.0, 180.0, 30.0}, none), std::invalid_argument);
    CHECK_THROWS_AS(max_pv_capacity({1, 0.0, 180.0, 30.0}), std::invalid_argument);
    CHECK_THROWS_AS(max_pv_capacity({1, 50.0, 360.0, 30.0}), std::invalid_argument);
}

TEST_CASE("solar geometry") {
    CHECK(min_zenith_of_day("2019-03-20", 0.0, 0.0) < 1.0);
    CHECK(std::abs(min_zenith_of_day("2019-06-21", 48.8, 9.18) - 25.36) < 1.0);
    CHECK(sun_position(parse_timestamp("2019-06-21T23:00:00Z"), 48.8, 9.18).zenith_deg > 90.0);
    const SunPosition morning = sun_position(parse_timestamp("2019-06-21T06:00:00Z"), 48.8, 9.18);
    CHECK(morning.azimuth_deg > 45.0);
    CHECK(morning.azimuth_deg < 135.0);
}

TEST_CASE("plane-of-array irradiance") {
    const SunPosition sun{35.0, 170.0};
    const double dni = 700.0, dhi = 120.0;
    const double ghi = dni * std::cos(35.0 * std::numbers::pi / 180.0) + dhi;
    const IrradianceRecord rec{parse_timestamp("2019-06-21T11:00:00Z"), ghi, dni, dhi, 25.0};
    CHECK(poa_irradiance(rec, sun, {0, 10.0, 180.0, 0.0}, 0.2) == doctest::Approx(ghi));

    const double d = std::numbers::pi / 180.0;
    const double cos_inc = std::cos(35 * d) * std::cos(30 * d) + std::sin(35 * d) * std::sin(30 * d) * std::cos(-10 * d);
    const double expected = dni * cos_inc + dhi * (1 + std::cos(30 * d)) / 2 + ghi * 0.2 * (1 - std::cos(30 * d)) / 2;
    CHECK(poa_irradiance(rec, sun, {0, 10.0, 180.0, 30.0}, 0.2) == doctest::Approx(expected));

    const SunPosition night{120.0, 0.0};
    const IrradianceRecord dark{rec.timestamp, 0.0, 500.0, 0.0, 10.0};
    CHECK(poa_irradiance(dark, night, {0, 10.0, 180.0, 30.0}, 0.2) == 0.0);
}

TEST_CASE("inverter output chain") {
    CHECK(pv_power(0.0, 20.0, 10.0) == 0.0);
    CHECK(pv_power(1000.0, 20.0, 10.0) == doctest::Approx(8.592).epsilon(1e-12));
    PvSystemParams oversized;
    oversized.dc_ac_ratio = 1.2;
    const double clipped = pv_power(1200.0, 0.0, 10.0, oversized);
    CHECK(clipped == doctest::Approx(10.0 / 1.2 * 0.96));
    double last = 0.0;
    for (double poa = 0.0; poa <= 1000.0; poa += 10.0) {
        const double p = pv_power(poa, 15.0, 10.0);
        CHECK(p >= last);
        last = p;
    }
}

TEST_CASE("penetration scaling") {
    const std::vector<double> caps{4.0, 0.0, 12.5};
    CHECK(scale_penetration(caps, 1.0) == caps);
    const auto half = scale_penetration(caps, 0.5);
    const auto high = scale_penetration(caps, 0.8);
    for (size_t i = 0; i < caps.size(); ++i) {
        CHECK(half[i] == caps[i] * 0.5);
        CHECK(high[i] == doctest::Approx(1.6 * half[i]));
    }
    CHECK_THROWS_AS(scale_penetration(caps, 1.2), std::invalid_argument);
}

TEST_CASE("worst window") {
    CHECK(select_worst_window(std::vector<double>(200, 3.0), 72) == 0);
    std::vector<double> spike(300, 0.0);
    spike[100] = 50.0;
    CHECK(select_worst_window(spike, 72) == 29);
    CHECK_THROWS_AS(select_worst_window(std::vector<double>(10, 1.0), 72), std::invalid_argument);

    std::mt19937 rng(8760);
    std::normal_distribution<double> noise(0.0, 40.0);
    std::vector<double> year(8760);
    for (size_t h = 0; h < year.size(); ++h)
        year[h] = 30.0 * std::sin(2 * std::numbers::pi * static_cast<double>(h) / 24.0) + noise(rng);
    CHECK(select_worst_window(year, 72) == brute_force_window(year, 72));
}

TEST_CASE("irradiance and roof files round trip") {
    std::vector<IrradianceRecord> recs{{parse_timestamp("2019-06-21T10:00:00Z"), 812.5, 640.25, 150.0, 24.3},
                                       {parse_timestamp("2019-06-21T11:00:00Z"), 0.0, 0.0, 0.0, -1.5}};
    const auto back = parse_irradiance(irradiance_to_csv(recs));
    REQUIRE(back.size() == 2);
    CHECK(back[0].dni == 640.25);
    CHECK(back[1].ambient_temp == -1.5);
    CHECK_THROWS_AS(parse_irradiance("time,ghi\n"), GridError);

    const std::vector<RoofSpec> roofs{{3, 120.0, 170.0, 35.0}, {4, 60.0, 250.0, 20.0}};
    const auto rb = parse_roofs(roofs_to_json(roofs));
    REQUIRE(rb.size() == 2);
    CHECK(rb[1].azimuth_deg == 250.0);
    CHECK(bus_capacities(roofs, 6)[3] == doctest::Approx(19.2));
}

TEST_CASE("generation profile peaks around noon") {
    std::vector<IrradianceRecord> day;
    const Timestamp start = parse_timestamp("2019-06-21T00:00:00Z");
    for (int h = 0; h < 24; ++h) {
        const Timestamp t = start + std::chrono::hours(h);
        const SunPosition sun = sun_position(t, 48.8, 9.18);
        const double cz = std::max(0.0, std::cos(sun.zenith_deg * std::numbers::pi / 180.0));
        day.push_back({t, 900.0 * cz + 100.0 * (cz > 0), 800.0 * (cz > 0), 100.0 * (cz > 0), 25.0});
    }
    const Eigen::MatrixXd gen = generation_profile(day, {{1, 100.0, 180.0, 30.0}}, 2, 48.8, 9.18);
    Eigen::Index peak = 0;
    gen.col(1).maxCoeff(&peak);
    CHECK(peak >= 10);
    CHECK(peak <= 12);
    CHECK(gen.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(gen(0, 1) == 0.0);
}
