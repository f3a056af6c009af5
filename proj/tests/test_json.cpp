// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "evfair/json_io.hpp"
#include "evfair/metrics.hpp"
#include "test_helpers.hpp"

using namespace evfair;

TEST_CASE("scenario serialization round-trips bit-identically") {
    Scenario s = testing::tiny_scenario(3, 4);
    s.fairness = FairnessPolicy::budget(0.5, 2.0);
    s.fairness.budget_overrides["ev1"] = 1.0;
    s.v2v_cap_overrides.push_back({"ev0", "ev2", 0.4});
    s.solver.mode = "heuristic";
    const std::string once = scenario_to_json(s);
    Scenario loaded = scenario_from_json_text(once);
    CHECK(scenario_to_json(loaded) == once);
    CHECK(loaded.fairness.budget_for("ev1") == 1.0);
    CHECK(loaded.fairness.budget_for("ev0") == 2.0);
    CHECK(loaded.pair_cap(0, 2) == 0.4);
    CHECK(loaded.solver.mode == "heuristic");
}

TEST_CASE("fingerprints are stable across re-serialization and sensitive to content") {
    Scenario s = testing::tiny_scenario(2, 4);
    const std::string fp = fingerprint(s);
    Scenario reloaded = scenario_from_json_text(scenario_to_json(s));
    CHECK(fingerprint(reloaded) == fp);
    s.fleet[1].target_kwh += 0.5;
    CHECK(fingerprint(s) != fp);
}

TEST_CASE("malformed scenario text raises ParseError") {
    CHECK_THROWS_AS(scenario_from_json_text("{not json"), ParseError);
    CHECK_THROWS_AS(scenario_from_json_text("{\"grid\": {}}"), ParseError);
}

TEST_CASE("schedule artifacts round-trip against their scenario") {
    Scenario s = testing::tiny_scenario(2, 3);
    s.fleet[0].target_kwh = 12.0;
    auto [p, m] = build_problem(s);
    auto sol = solve_exact(p);
    REQUIRE(sol.status == MiqpStatus::Optimal);
    Schedule sched = extract_schedule(sol, m, s);
    const std::string fp = fingerprint(s);
    const std::string text = schedule_to_json(sched, fp);

    std::string fp_read;
    Schedule loaded = schedule_from_json_text(text, s, &fp_read);
    CHECK(fp_read == fp);
    CHECK(loaded.objective == sched.objective);
    REQUIRE(loaded.evs.size() == sched.evs.size());
    for (size_t i = 0; i < sched.evs.size(); ++i)
        for (size_t k = 0; k < sched.evs[i].slots.size(); ++k) {
            CHECK(loaded.evs[i].slots[k].soc_kwh == sched.evs[i].slots[k].soc_kwh);
            CHECK(loaded.evs[i].slots[k].charge_kwh == sched.evs[i].slots[k].charge_kwh);
        }
    // the reloaded schedule still audits clean
    CHECK(feasibility_audit(loaded, s).pass(1e-6));
}

TEST_CASE("schedules referencing unknown EVs are rejected") {
    Scenario s = testing::tiny_scenario(2, 3);
    auto [p, m] = build_problem(s);
    auto sol = solve_exact(p);
    Schedule sched = extract_schedule(sol, m, s);
    const std::string text = schedule_to_json(sched, fingerprint(s));
    Scenario other = testing::tiny_scenario(3, 3);  // different fleet
    CHECK_THROWS_AS(schedule_from_json_text(text, other), ParseError);
}
