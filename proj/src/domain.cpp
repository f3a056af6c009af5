// SPDX-License-Identifier: Apache-2.0
#include "evfair/domain.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace evfair {

int Scenario::ev_index(const std::string& id) const {
    for (size_t i = 0; i < fleet.size(); ++i)
        if (fleet[i].id == id) return static_cast<int>(i);
    return -1;
}

double Scenario::pair_cap(int from_idx, int to_idx) const {
    const std::string& from = fleet.at(from_idx).id;
    const std::string& to = fleet.at(to_idx).id;
    for (const auto& ov : v2v_cap_overrides)
        if (ov.from == from && ov.to == to) return ov.cap_kwh_per_slot;
    return fleet[from_idx].v2v_pair_cap_kwh_per_slot;
}

namespace {

void add(ValidationReport& r, std::string ev, std::string field, std::string msg) {
    r.push_back({std::move(ev), std::move(field), std::move(msg)});
}

std::string at_slot(int slot) {
    std::ostringstream os;
    os << " (slot " << slot << ")";
    return os.str();
}

}  // namespace

ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport r;
    const int H = s.grid.slot_count;

    if (H < 1) add(r, "", "grid.slot_count", "slot_count must be at least 1");
    if (!(s.grid.slot_hours > 0.0))
        add(r, "", "grid.slot_hours", "slot_hours must be positive");

    if (static_cast<int>(s.tariff.buy_price.size()) != H)
        add(r, "", "tariff.buy_price", "series length does not match slot_count");
    if (static_cast<int>(s.tariff.sell_price.size()) != H)
        add(r, "", "tariff.sell_price", "series length does not match slot_count");
    for (size_t t = 0; t < s.tariff.buy_price.size(); ++t)
        if (s.tariff.buy_price[t] < 0.0)
            add(r, "", "tariff.buy_price", "negative buy price" + at_slot(static_cast<int>(t)));

    if (s.supply.grid_cap_kwh_per_slot < 0.0)
        add(r, "", "supply.grid_cap_kwh_per_slot", "grid cap must be nonnegative");
    if (static_cast<int>(s.supply.renewable_kwh.size()) != H)
        add(r, "", "supply.renewable_kwh", "series length does not match slot_count");
    for (size_t t = 0; t < s.supply.renewable_kwh.size(); ++t)
        if (s.supply.renewable_kwh[t] < 0.0)
            add(r, "", "supply.renewable_kwh", "negative renewable cap" + at_slot(static_cast<int>(t)));

    switch (s.fairness.variant) {
        case FairnessVariant::HardPerSlot:
            if (s.fairness.zbar < 0.0) add(r, "", "fairness.zbar", "threshold must be nonnegative");
            break;
        case FairnessVariant::SoftCumulative:
            if (s.fairness.zbar_c < 0.0) add(r, "", "fairness.zbar_c", "threshold must be nonnegative");
            break;
        case FairnessVariant::Budget:
            if (s.fairness.theta < 0.0) add(r, "", "fairness.theta", "threshold must be nonnegative");
            if (s.fairness.budget_per_ev < 0.0)
                add(r, "", "fairness.budget_per_ev", "budget must be nonnegative");
            for (const auto& [id, d] : s.fairness.budget_overrides)
                if (d < 0.0) add(r, id, "fairness.budget_overrides", "budget must be nonnegative");
            break;
        case FairnessVariant::Unconstrained:
            break;
    }

    std::set<std::string> seen;
    for (const auto& ev : s.fleet) {
        if (!seen.insert(ev.id).second)
            add(r, ev.id, "id", "duplicate EV id");

        if (ev.arrival > ev.departure)
            add(r, ev.id, "arrival", "arrival after departure");
        if (ev.arrival < 0 || ev.arrival >= H)
            add(r, ev.id, "arrival", "arrival outside the time grid");
        if (ev.departure < 0 || ev.departure >= H)
            add(r, ev.id, "departure", "departure outside the time grid");

        if (ev.min_kwh > ev.initial_kwh)
            add(r, ev.id, "initial_kwh", "initial below minimum stored energy");
        if (ev.initial_kwh > ev.capacity_kwh)
            add(r, ev.id, "initial_kwh", "initial exceeds capacity");
        if (ev.min_kwh > ev.target_kwh)
            add(r, ev.id, "target_kwh", "target below minimum stored energy");
        if (ev.target_kwh > ev.capacity_kwh)
            add(r, ev.id, "target_kwh", "target exceeds capacity");

        if (ev.max_charge_kwh_per_slot < 0.0)
            add(r, ev.id, "max_charge_kwh_per_slot", "rate must be nonnegative");
        if (ev.max_discharge_kwh_per_slot < 0.0)
            add(r, ev.id, "max_discharge_kwh_per_slot", "rate must be nonnegative");
        if (ev.v2g_cap_kwh_per_slot < 0.0)
            add(r, ev.id, "v2g_cap_kwh_per_slot", "cap must be nonnegative");
        if (ev.v2v_pair_cap_kwh_per_slot < 0.0)
            add(r, ev.id, "v2v_pair_cap_kwh_per_slot", "cap must be nonnegative");
        if (ev.capacity_kwh < 0.0)
            add(r, ev.id, "capacity_kwh", "capacity must be nonnegative");

        if (ev.eff_charge < 0.0 || ev.eff_charge > 1.0)
            add(r, ev.id, "eff_charge", "efficiency must lie in [0,1]");
        if (!(ev.eff_discharge > 0.0) || ev.eff_discharge > 1.0)
            add(r, ev.id, "eff_discharge", "efficiency must lie in (0,1]");
        if (ev.degradation_coeff < 0.0)
            add(r, ev.id, "degradation_coeff", "coefficient must be nonnegative");
    }

    for (const auto& ov : s.v2v_cap_overrides) {
        if (ov.from == ov.to)
            add(r, ov.from, "v2v_cap_overrides", "self-flow override is meaningless");
        if (s.ev_index(ov.from) < 0)
            add(r, ov.from, "v2v_cap_overrides", "unknown sender id");
        if (s.ev_index(ov.to) < 0)
            add(r, ov.to, "v2v_cap_overrides", "unknown receiver id");
        if (ov.cap_kwh_per_slot < 0.0)
            add(r, ov.from, "v2v_cap_overrides", "cap must be nonnegative");
    }

    std::stable_sort(r.begin(), r.end(), [](const Violation& a, const Violation& b) {
        if (a.ev_id != b.ev_id) return a.ev_id < b.ev_id;
        return a.field < b.field;
    });
    return r;
}

double reachability_check(const EvSpec& ev, const TimeGrid&) {
    const int window = ev.departure - ev.arrival + 1;
    return ev.initial_kwh + ev.eff_charge * ev.max_charge_kwh_per_slot * window - ev.target_kwh;
}

const char* to_string(SolveMode m) {
    switch (m) {
        case SolveMode::ChargingOnly: return "charging_only";
        case SolveMode::V2gOnly: return "v2g_only";
        case SolveMode::Joint: return "joint";
    }
    return "joint";
}

const char* to_string(FairnessVariant v) {
    switch (v) {
        case FairnessVariant::Unconstrained: return "unconstrained";
        case FairnessVariant::HardPerSlot: return "hard_per_slot";
        case FairnessVariant::SoftCumulative: return "soft_cumulative";
        case FairnessVariant::Budget: return "budget";
    }
    return "unconstrained";
}

SolveMode mode_from_string(const std::string& s) {
    if (s == "charging_only" || s == "charging-only") return SolveMode::ChargingOnly;
    if (s == "v2g_only" || s == "v2g") return SolveMode::V2gOnly;
    if (s == "joint") return SolveMode::Joint;
    throw ParseError("unknown solve mode: " + s);
}

FairnessVariant fairness_variant_from_string(const std::string& s) {
    if (s == "unconstrained") return FairnessVariant::Unconstrained;
    if (s == "hard_per_slot") return FairnessVariant::HardPerSlot;
    if (s == "soft_cumulative") return FairnessVariant::SoftCumulative;
    if (s == "budget") return FairnessVariant::Budget;
    throw ParseError("unknown fairness variant: " + s);
}

}  // namespace evfair
