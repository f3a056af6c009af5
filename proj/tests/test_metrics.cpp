// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "evfair/metrics.hpp"
#include "evfair/solver.hpp"
#include "test_helpers.hpp"

using namespace evfair;

namespace {

// Hand-built schedule skeleton over the tiny scenario: all zeros, SOC flat at
// the initial level, targets set to match.
Schedule flat_schedule(Scenario& s) {
    for (auto& ev : s.fleet) ev.target_kwh = ev.initial_kwh;
    Schedule sched;
    sched.slot_count = s.grid.slot_count;
    sched.slot_hours = s.grid.slot_hours;
    sched.objective = 0.0;
    for (const auto& ev : s.fleet) {
        Schedule::EvTrack track;
        track.id = ev.id;
        track.arrival = ev.arrival;
        track.departure = ev.departure;
        track.slots.resize(ev.window_slots());
        for (auto& v : track.slots) v.soc_kwh = ev.initial_kwh;
        sched.evs.push_back(std::move(track));
    }
    return sched;
}

void send_flow(Schedule& sched, Scenario& s, int from, int to, int slot, double kwh) {
    // book a lossless transfer and keep both EVs' recurrences consistent
    sched.flows.push_back({from, to, slot, kwh});
    auto& sender = sched.evs[from];
    auto& receiver = sched.evs[to];
    sender.at(slot).discharge_kwh += kwh;
    receiver.at(slot).charge_kwh += kwh;
    for (int t = slot; t <= sender.departure; ++t)
        sender.at(t).soc_kwh -= kwh / s.fleet[from].eff_discharge;
    for (int t = slot; t <= receiver.departure; ++t)
        receiver.at(t).soc_kwh += kwh * s.fleet[to].eff_charge;
    s.fleet[from].target_kwh = sender.at(sender.departure).soc_kwh;
    s.fleet[to].target_kwh = receiver.at(receiver.departure).soc_kwh;
}

}  // namespace

TEST_CASE("four equal senders score a perfect Jain index") {
    Scenario s = testing::tiny_scenario(5, 4);
    Schedule sched = flat_schedule(s);
    for (int i = 0; i < 4; ++i) send_flow(sched, s, i, 4, i, 1.0);
    FairnessReport r = jain_index(sched);
    CHECK(r.participant_count == 4);
    CHECK(r.jfi == doctest::Approx(1.0));
}

TEST_CASE("zero-flow EVs do not count as participants") {
    Scenario s = testing::tiny_scenario(3, 4);
    Schedule sched = flat_schedule(s);
    send_flow(sched, s, 0, 2, 0, 2.0);
    FairnessReport r = jain_index(sched);
    CHECK(r.participant_count == 1);
    CHECK(r.jfi == 1.0);
}

TEST_CASE("sender means (2,1) give jfi exactly 0.9") {
    Scenario s = testing::tiny_scenario(3, 4);
    Schedule sched = flat_schedule(s);
    send_flow(sched, s, 0, 2, 0, 3.5);
    send_flow(sched, s, 0, 2, 1, 3.5);
    send_flow(sched, s, 0, 2, 2, 1.0);   // ev0 sends 8 over 4 slots: mean 2
    send_flow(sched, s, 1, 2, 3, 3.5);
    send_flow(sched, s, 1, 2, 2, 0.5);   // ev1 sends 4 over 4 slots: mean 1
    FairnessReport r = jain_index(sched);
    REQUIRE(r.participant_count == 2);
    CHECK(r.jfi == 0.9);  // (2+1)^2 / (2 * (4+1)), exact in doubles
}

TEST_CASE("jain index is scale-invariant") {
    Scenario s = testing::tiny_scenario(4, 4);
    Schedule a = flat_schedule(s);
    send_flow(a, s, 0, 3, 0, 2.0);
    send_flow(a, s, 1, 3, 1, 0.5);
    send_flow(a, s, 2, 3, 2, 1.25);
    Schedule b = a;
    for (auto& f : b.flows) f.kwh *= 3.0;
    CHECK(jain_index(a).jfi == doctest::Approx(jain_index(b).jfi).epsilon(1e-12));
}

TEST_CASE("two-participant epsilon/M pair approaches jfi = 1/2") {
    Scenario s = testing::tiny_scenario(3, 4);
    Schedule sched = flat_schedule(s);
    send_flow(sched, s, 0, 2, 0, 3.0);
    send_flow(sched, s, 1, 2, 0, 1e-6);
    FairnessReport r = jain_index(sched);
    CHECK(r.participant_count == 2);
    CHECK(r.jfi == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(r.jfi > 0.0);
    CHECK(r.jfi <= 1.0);
}

TEST_CASE("cost breakdown sums the defining formulas") {
    Scenario s = testing::tiny_scenario(1, 2);
    Schedule sched = flat_schedule(s);
    SUBCASE("all zeros cost nothing") {
        CostBreakdown c = cost_breakdown(sched, s.tariff, s.fleet);
        CHECK(c.total == 0.0);
    }
    SUBCASE("4 kWh at flat 0.2 costs 0.8") {
        auto& v0 = sched.evs[0].at(0);
        auto& v1 = sched.evs[0].at(1);
        v0.grid_kwh = 2.5;
        v1.grid_kwh = 1.5;
        CostBreakdown c = cost_breakdown(sched, s.tariff, s.fleet);
        CHECK(c.total == doctest::Approx(0.8));
        CHECK(c.grid_cost == doctest::Approx(0.8));
    }
    SUBCASE("degradation is quadratic and V2G revenue is price times energy") {
        s.fleet[0].degradation_coeff = 0.01;
        s.tariff.sell_price = {0.3, 0.3};
        sched.evs[0].at(0).discharge_kwh = 1.0;
        sched.evs[0].at(1).discharge_kwh = 1.0;
        sched.evs[0].at(0).v2g_kwh = 1.0;
        sched.evs[0].at(1).v2g_kwh = 1.0;
        CostBreakdown c = cost_breakdown(sched, s.tariff, s.fleet);
        CHECK(c.degradation_cost == doctest::Approx(0.02));
        CHECK(c.v2g_revenue == doctest::Approx(0.6));
        CHECK(c.total == doctest::Approx(0.02 - 0.6));
    }
}

TEST_CASE("cost breakdown total equals components to relative 1e-9") {
    Scenario s = testing::tiny_scenario(3, 4);
    Schedule sched = flat_schedule(s);
    send_flow(sched, s, 0, 2, 1, 1.5);
    sched.evs[1].at(0).grid_kwh = 2.0;
    sched.evs[1].at(0).charge_kwh = 2.0;
    CostBreakdown c = cost_breakdown(sched, s.tariff, s.fleet);
    double per_ev_total = 0.0;
    for (const auto& row : c.per_ev) per_ev_total += row.net();
    CHECK(c.total == doctest::Approx(per_ev_total).epsilon(1e-9));
}

TEST_CASE("audit accepts solver output and pinpoints injected corruption") {
    Scenario s = testing::tiny_scenario(2, 3);
    s.fleet[0].target_kwh = 14.0;
    auto [p, m] = build_problem(s);
    auto sol = solve_exact(p);
    REQUIRE(sol.status == MiqpStatus::Optimal);
    Schedule sched = extract_schedule(sol, m, s);
    AuditReport ok = feasibility_audit(sched, s);
    CHECK(ok.pass(1e-6));

    sched.evs[0].at(1).soc_kwh += 0.25;
    AuditReport bad = feasibility_audit(sched, s);
    CHECK(!bad.pass(1e-6));
    // the perturbation shows up in the dynamics family at its injected size
    CHECK(bad.max_violation.at("dynamics") == doctest::Approx(0.25));
}

TEST_CASE("budget hinge sums are audited directly from discharges") {
    Scenario s = testing::tiny_scenario(1, 3);
    s.fairness = FairnessPolicy::budget(0.5, 2.0);
    Schedule sched = flat_schedule(s);
    auto& track = sched.evs[0];
    // discharge profile (1.5, 0.5, 0): hinge sum = 1.0 <= 2.0
    const double dis[3] = {1.5, 0.5, 0.0};
    double soc = s.fleet[0].initial_kwh;
    for (int t = 0; t < 3; ++t) {
        track.at(t).discharge_kwh = dis[t];
        track.at(t).v2g_kwh = dis[t];
        soc -= dis[t];
        track.at(t).soc_kwh = soc;
    }
    s.fleet[0].target_kwh = soc;
    AuditReport r = feasibility_audit(sched, s);
    CHECK(r.max_violation.at("fairness") == 0.0);
    CHECK(r.pass(1e-6));

    // tighter budget now fails by the excess over it: 1.0 - 0.8 = 0.2
    s.fairness = FairnessPolicy::budget(0.5, 0.8);
    AuditReport worse = feasibility_audit(sched, s);
    CHECK(worse.max_violation.at("fairness") == doctest::Approx(0.2));
    CHECK(!worse.pass(1e-6));
}

TEST_CASE("cost comparisons reproduce their defining arithmetic") {
    auto with_total = [](double v) {
        CostBreakdown c;
        c.total = v;
        return c;
    };
    CHECK(compare_costs(with_total(100.0), with_total(90.83)) == doctest::Approx(9.17));
    CHECK(compare_costs(with_total(289.01), with_total(252.65)) ==
          doctest::Approx(12.58).epsilon(0.001));
    CHECK(compare_costs(with_total(5.0), with_total(5.0)) == 0.0);
    CHECK_THROWS_AS(compare_costs(with_total(0.0), with_total(1.0)), ZeroBaselineError);
}
