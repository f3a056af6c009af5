// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "evfair/model.hpp"
#include "test_helpers.hpp"

using namespace evfair;

TEST_CASE("charging-only layout: 4 kinds x 2 slots = 8 columns, no binaries") {
    Scenario s = testing::tiny_scenario(1, 2);
    s.mode = SolveMode::ChargingOnly;
    auto [p, m] = assemble(s);
    CHECK(p.num_cols == 8);
    CHECK(p.binary_cols.empty());
    CHECK(m.find(VarKind::Discharge, 0, 0) == std::nullopt);
    CHECK(m.find(VarKind::V2g, 0, 0) == std::nullopt);
    CHECK(m.find(VarKind::Charge, 0, 1).has_value());
    CHECK(m.find(VarKind::Soc, 0, 1).has_value());
}

TEST_CASE("joint layout: two co-present EVs in one slot get 2 flows and 2 binaries") {
    Scenario s = testing::tiny_scenario(2, 1);
    auto [p, m] = assemble(s);
    CHECK(m.flows().size() == 2);
    CHECK(p.binary_cols.size() == 2);
    CHECK(m.find_flow(0, 1, 0).has_value());
    CHECK(m.find_flow(1, 0, 0).has_value());
    // columns are a contiguous range with no gaps
    CHECK(p.num_cols == 2 * 6 + 2 + 2);
    std::vector<bool> seen(p.num_cols, false);
    for (int c = 0; c < p.num_cols; ++c) {
        const auto& info = m.col_info(c);
        (void)info;
        seen[c] = true;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST_CASE("unreachable target fails assembly naming the EV") {
    Scenario s = testing::tiny_scenario(1, 10);
    s.fleet[0].initial_kwh = 10.0;
    s.fleet[0].target_kwh = 45.0;
    s.fleet[0].eff_charge = 0.95;  // surplus -1.75
    try {
        assemble(s);
        FAIL("expected InfeasibleTargetError");
    } catch (const InfeasibleTargetError& e) {
        REQUIRE(e.ev_ids.size() == 1);
        CHECK(e.ev_ids[0] == "ev0");
    }
}

TEST_CASE("series length mismatch raises DimensionError") {
    Scenario s = testing::tiny_scenario(1, 4);
    s.tariff.sell_price.pop_back();
    CHECK_THROWS_AS(assemble(s), DimensionError);
    Scenario s2 = testing::tiny_scenario(1, 4);
    s2.supply.renewable_kwh.resize(2);
    CHECK_THROWS_AS(assemble(s2), DimensionError);
}

TEST_CASE("quadratic diagonal carries 2*alpha on discharge columns") {
    Scenario s = testing::tiny_scenario(1, 2);
    s.fleet[0].degradation_coeff = 0.01;
    auto [p, m] = assemble(s);
    const int dis = m.lookup(VarKind::Discharge, 0, 0);
    CHECK(p.quad_diag[dis] == doctest::Approx(0.02));
    const int ch = m.lookup(VarKind::Charge, 0, 0);
    CHECK(p.quad_diag[ch] == 0.0);
}

TEST_CASE("binaries are skipped when either rate cap is zero") {
    Scenario s = testing::tiny_scenario(1, 2);
    s.fleet[0].max_discharge_kwh_per_slot = 0.0;
    auto [p, m] = assemble(s);
    CHECK(p.binary_cols.empty());
    CHECK(m.find(VarKind::ModeFlag, 0, 0) == std::nullopt);
    // discharge column still exists, pinned to zero
    const int dis = m.lookup(VarKind::Discharge, 0, 0);
    CHECK(p.upper[dis] == 0.0);
}

TEST_CASE("hard per-slot fairness tightens discharge upper bounds") {
    Scenario s = testing::tiny_scenario(1, 3);
    auto [p, m] = assemble(s);
    QpProblem q = add_fairness(p, m, FairnessPolicy::hard(0.5), s);
    for (int t = 0; t < 3; ++t) {
        const int dis = m.lookup(VarKind::Discharge, 0, t);
        CHECK(q.upper[dis] == doctest::Approx(0.5));
    }
    // and never loosens an already tighter cap
    Scenario s2 = testing::tiny_scenario(1, 1);
    s2.fleet[0].max_discharge_kwh_per_slot = 0.2;
    auto [p2, m2] = assemble(s2);
    QpProblem q2 = add_fairness(p2, m2, FairnessPolicy::hard(0.5), s2);
    CHECK(q2.upper[m2.lookup(VarKind::Discharge, 0, 0)] == doctest::Approx(0.2));
}

TEST_CASE("soft cumulative fairness adds one unit-coefficient row per EV") {
    Scenario s = testing::tiny_scenario(1, 10);
    auto [p, m] = assemble(s);
    const size_t before = p.ineq_rows.size();
    QpProblem q = add_fairness(p, m, FairnessPolicy::soft(4.0), s);
    REQUIRE(q.ineq_rows.size() == before + 1);
    const LinearRow& row = q.ineq_rows.back();
    CHECK(row.info.tag == RowTag::SoftCumulative);
    CHECK(row.terms.size() == 10);
    for (const auto& [col, coef] : row.terms) CHECK(coef == 1.0);
    CHECK(row.rhs == doctest::Approx(4.0));
}

TEST_CASE("budget fairness adds slacks, hinge rows and one budget row per EV") {
    Scenario s = testing::tiny_scenario(1, 3);
    auto [p, m] = assemble(s);
    const int cols_before = p.num_cols;
    const size_t rows_before = p.ineq_rows.size();
    QpProblem q = add_fairness(p, m, FairnessPolicy::budget(0.5, 2.0), s);
    CHECK(q.num_cols == cols_before + 3);
    CHECK(q.ineq_rows.size() == rows_before + 4);  // 3 hinges + 1 budget
    int hinges = 0, budgets = 0;
    for (const auto& row : q.ineq_rows) {
        if (row.info.tag == RowTag::BudgetHinge) ++hinges;
        if (row.info.tag == RowTag::BudgetTotal) ++budgets;
    }
    CHECK(hinges == 3);
    CHECK(budgets == 1);
    CHECK(m.find(VarKind::BudgetSlack, 0, 2).has_value());
}

TEST_CASE("fairness on a charging-only model is a warned no-op") {
    Scenario s = testing::tiny_scenario(1, 3);
    s.mode = SolveMode::ChargingOnly;
    auto [p, m] = assemble(s);
    std::vector<std::string> warnings;
    QpProblem q = add_fairness(p, m, FairnessPolicy::hard(0.5), s, &warnings);
    CHECK(q.num_cols == p.num_cols);
    CHECK(q.ineq_rows.size() == p.ineq_rows.size());
    REQUIRE(warnings.size() == 1);
}

TEST_CASE("var_lookup is total over the allocated set and throws otherwise") {
    Scenario s = testing::tiny_scenario(2, 2);
    auto [p, m] = assemble(s);
    CHECK_NOTHROW(m.lookup(VarKind::Soc, 0, 0));
    CHECK_THROWS_AS(m.lookup_flow(1, 1, 0), NotAllocatedError);  // self-flow
    CHECK_THROWS_AS(m.lookup(VarKind::Charge, 0, 5), NotAllocatedError);

    Scenario s2 = testing::tiny_scenario(1, 2);
    s2.mode = SolveMode::ChargingOnly;
    auto [p2, m2] = assemble(s2);
    CHECK_THROWS_AS(m2.lookup(VarKind::ModeFlag, 0, 0), NotAllocatedError);
}

TEST_CASE("flows exist only while both EVs are parked") {
    Scenario s = testing::tiny_scenario(2, 4);
    s.fleet[1].arrival = 2;  // co-present only on slots 2..3
    auto [p, m] = assemble(s);
    CHECK(m.find_flow(0, 1, 0) == std::nullopt);
    CHECK(m.find_flow(0, 1, 1) == std::nullopt);
    CHECK(m.find_flow(0, 1, 2).has_value());
    CHECK(m.find_flow(1, 0, 3).has_value());
    CHECK(m.flows().size() == 4);
}

TEST_CASE("the audit dump covers every row with an equation tag") {
    Scenario s = testing::tiny_scenario(2, 2);
    auto [p0, m] = assemble(s);
    QpProblem p = add_fairness(p0, m, FairnessPolicy::budget(0.5, 2.0), s);
    std::ostringstream os;
    dump_problem(os, p, m);
    const std::string text = os.str();

    size_t row_lines = 0;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("cols ", 0) == 0 || line.rfind("col ", 0) == 0) continue;
        ++row_lines;
        const bool tagged = line.find("dynamics") == 0 || line.find("departure") == 0 ||
                            line.find("charge_exclusive") == 0 ||
                            line.find("discharge_exclusive") == 0 || line.find("grid_cap") == 0 ||
                            line.find("renewable_cap") == 0 || line.find("charge_balance") == 0 ||
                            line.find("discharge_balance") == 0 ||
                            line.find("soft_cumulative") == 0 || line.find("budget_hinge") == 0 ||
                            line.find("budget_total") == 0;
        CHECK(tagged);
    }
    CHECK(row_lines == p.eq_rows.size() + p.ineq_rows.size());
}

TEST_CASE("pair cap overrides reach the flow bounds") {
    Scenario s = testing::tiny_scenario(2, 1);
    s.v2v_cap_overrides.push_back({"ev0", "ev1", 0.75});
    auto [p, m] = assemble(s);
    CHECK(p.upper[m.lookup_flow(0, 1, 0)] == doctest::Approx(0.75));
    CHECK(p.upper[m.lookup_flow(1, 0, 0)] == doctest::Approx(3.5));
}
