// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <algorithm>
#include <fstream>
#include <set>

#include "evfair/json_io.hpp"
#include "evfair/scenario_gen.hpp"

using namespace evfair;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/evfair_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::string half_hourly_csv(int rows, double price_mwh, int skip_row = -1) {
    std::string text = "timestamp,price_per_mwh\n";
    int minutes = 0;
    for (int i = 0; i < rows; ++i) {
        if (i == skip_row) minutes += 30;  // introduce a gap
        char line[64];
        std::snprintf(line, sizeof(line), "2023-06-01T%02d:%02d,%g\n", minutes / 60, minutes % 60,
                      price_mwh);
        text += line;
        minutes += 30;
    }
    return text;
}

}  // namespace

TEST_CASE("residential generation: fleet split, horizon and determinism") {
    GenConfig cfg = GenConfig::defaults_for(SiteCase::Residential);
    cfg.seed = 1;
    Scenario s = generate_residential(cfg);
    CHECK(s.grid.slot_count == 48);
    CHECK(s.grid.slot_hours == 0.5);
    CHECK(s.fleet.size() == 100);
    int full = 0;
    for (const auto& ev : s.fleet)
        if (ev.arrival == 0 && ev.departure == 47) ++full;
    CHECK(full >= 50);  // 50 fixed EVs, random ones may span the horizon too
    CHECK(validate_scenario(s).empty());
    for (const auto& ev : s.fleet) CHECK(reachability_check(ev, s.grid) >= 0.0);
    // 7 kW charger on half-hour slots is exactly 3.5 kWh/slot
    CHECK(s.fleet[0].max_charge_kwh_per_slot == 3.5);

    Scenario again = generate_residential(cfg);
    CHECK(scenario_to_json(s) == scenario_to_json(again));

    cfg.seed = 2;
    Scenario other = generate_residential(cfg);
    CHECK(scenario_to_json(s) != scenario_to_json(other));
}

TEST_CASE("all-fixed fleets have full-horizon windows only") {
    GenConfig cfg = GenConfig::defaults_for(SiteCase::Residential);
    cfg.n_fixed = 5;
    cfg.n_random = 0;
    Scenario s = generate_residential(cfg);
    for (const auto& ev : s.fleet) {
        CHECK(ev.arrival == 0);
        CHECK(ev.departure == 47);
    }
}

TEST_CASE("shopping generation: 18 half-hour slots, staff/customer split") {
    GenConfig cfg = GenConfig::defaults_for(SiteCase::Shopping);
    cfg.seed = 7;
    Scenario s = generate_shopping(cfg);
    CHECK(s.grid.slot_count == 18);
    CHECK(s.fleet.size() == 100);
    int staff = 0;
    for (const auto& ev : s.fleet) {
        CHECK(ev.departure <= 17);
        CHECK(ev.arrival >= 0);
        if (ev.arrival == 0 && ev.departure == 17) ++staff;
    }
    CHECK(staff >= 30);
    CHECK(validate_scenario(s).empty());
}

TEST_CASE("TOU builder covers windows exactly once") {
    TimeGrid grid{48, 0.5, "00:00"};
    std::map<std::string, double> levels{{"offpeak", 0.1}, {"shoulder", 0.2}, {"peak", 0.35}};

    SUBCASE("single level everywhere") {
        auto series = build_tou_tariff({{"offpeak", 0.1}}, {{0, 48, "offpeak"}}, grid);
        for (double v : series) CHECK(v == doctest::Approx(0.1));
    }
    SUBCASE("three-level day has exactly three distinct prices") {
        auto series = build_tou_tariff(levels,
                                       {{0, 14, "offpeak"},
                                        {14, 34, "shoulder"},
                                        {34, 44, "peak"},
                                        {44, 48, "offpeak"}},
                                       grid);
        std::set<double> distinct(series.begin(), series.end());
        CHECK(distinct.size() == 3);
        CHECK(series[40] == doctest::Approx(0.35));
        CHECK(series[20] == doctest::Approx(0.2));
        CHECK(series[0] == doctest::Approx(0.1));
    }
    SUBCASE("overlap and holes are coverage errors") {
        CHECK_THROWS_AS(build_tou_tariff(levels, {{0, 30, "offpeak"}, {20, 48, "peak"}}, grid),
                        CoverageError);
        CHECK_THROWS_AS(build_tou_tariff(levels, {{0, 30, "offpeak"}}, grid), CoverageError);
    }
    SUBCASE("default residential layout matches the hand-built one") {
        auto byhand = build_tou_tariff(levels,
                                       {{0, 14, "offpeak"},
                                        {14, 34, "shoulder"},
                                        {34, 44, "peak"},
                                        {44, 48, "offpeak"}},
                                       grid);
        CHECK(default_tou(SiteCase::Residential, grid) == byhand);
    }
}

TEST_CASE("price loader converts, pools and rejects misalignment") {
    TimeGrid half{48, 0.5, ""};
    SUBCASE("48 rows of 100 $/MWh become a constant 0.1 $/kWh") {
        TempFile f("prices_const.csv", half_hourly_csv(48, 100.0));
        auto series = load_sell_prices(f.path, half);
        REQUIRE(series.size() == 48);
        for (double v : series) CHECK(v == doctest::Approx(0.1));
    }
    SUBCASE("half-hourly rows pool pairwise onto an hourly grid") {
        std::string text = "timestamp,price_per_mwh\n";
        int minutes = 0;
        for (int i = 0; i < 48; ++i) {
            char line[64];
            std::snprintf(line, sizeof(line), "2023-06-01T%02d:%02d,%d\n", minutes / 60,
                          minutes % 60, (i % 2 == 0 ? 100 : 300));
            text += line;
            minutes += 30;
        }
        TempFile f("prices_pool.csv", text);
        TimeGrid hourly{24, 1.0, ""};
        auto series = load_sell_prices(f.path, hourly);
        REQUIRE(series.size() == 24);
        for (double v : series) CHECK(v == doctest::Approx(0.2));  // mean of 0.1 and 0.3
        // pooling preserves the horizon mean
        double mean = 0.0;
        for (double v : series) mean += v;
        CHECK(mean / 24 == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("47 rows cannot tile 48 slots") {
        TempFile f("prices_short.csv", half_hourly_csv(47, 100.0));
        CHECK_THROWS_AS(load_sell_prices(f.path, half), AlignmentError);
    }
    SUBCASE("a missing half hour is a gap") {
        TempFile f("prices_gap.csv", half_hourly_csv(48, 100.0, 10));
        CHECK_THROWS_AS(load_sell_prices(f.path, half), AlignmentError);
    }
    SUBCASE("malformed rows cite their line number") {
        TempFile f("prices_bad.csv", "timestamp,price_per_mwh\n2023-06-01T00:00,abc\n");
        try {
            load_sell_prices(f.path, half);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
}

TEST_CASE("bell renewable profile is nonnegative and peaks mid-horizon") {
    TimeGrid grid{48, 0.5, ""};
    auto profile = bell_renewable_profile(grid, 10.0);
    REQUIRE(profile.size() == 48);
    for (double v : profile) CHECK(v >= 0.0);
    CHECK(*std::max_element(profile.begin(), profile.end()) == doctest::Approx(10.0).epsilon(0.01));
    CHECK(profile[0] < 0.1);
}
