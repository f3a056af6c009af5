// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "evfair/errors.hpp"

namespace evfair {

/// Uniform slot grid over the operating horizon. All per-slot quantities in
/// the library are energies (kWh per slot); power ratings are converted via
/// slot_hours when a scenario is built.
struct TimeGrid {
    int slot_count = 0;
    double slot_hours = 0.0;
    std::string start_label;  // clock time of slot 0, informational

    double horizon_hours() const { return slot_count * slot_hours; }
    bool contains(int slot) const { return slot >= 0 && slot < slot_count; }
};

/// One EV's stay, battery limits and economics. All energies in kWh, all
/// rates in kWh per slot, degradation_coeff in $ per kWh^2.
struct EvSpec {
    std::string id;
    int arrival = 0;
    int departure = 0;
    double capacity_kwh = 0.0;
    double min_kwh = 0.0;
    double initial_kwh = 0.0;
    double target_kwh = 0.0;
    double max_charge_kwh_per_slot = 0.0;
    double max_discharge_kwh_per_slot = 0.0;
    double v2g_cap_kwh_per_slot = 0.0;
    double v2v_pair_cap_kwh_per_slot = 0.0;
    double eff_charge = 1.0;
    double eff_discharge = 1.0;
    double degradation_coeff = 0.0;

    int window_slots() const { return departure - arrival + 1; }
    bool parked_at(int slot) const { return slot >= arrival && slot <= departure; }
};

/// Buy prices come from the site's TOU tariff, sell prices from the wholesale
/// market. Sell prices may go negative; buy prices may not.
struct Tariff {
    std::vector<double> buy_price;   // $/kWh per slot
    std::vector<double> sell_price;  // $/kWh per slot
};

struct SupplyLimits {
    double grid_cap_kwh_per_slot = 0.0;   // aggregate over the fleet
    std::vector<double> renewable_kwh;    // aggregate cap per slot
};

enum class FairnessVariant { Unconstrained, HardPerSlot, SoftCumulative, Budget };

struct FairnessPolicy {
    FairnessVariant variant = FairnessVariant::Unconstrained;
    double zbar = 0.0;           // per-slot discharge cap (HardPerSlot)
    double zbar_c = 0.0;         // cumulative discharge cap (SoftCumulative)
    double theta = 0.0;          // per-slot soft threshold (Budget)
    double budget_per_ev = 0.0;  // cap on cumulative excess over theta (Budget)
    std::map<std::string, double> budget_overrides;  // per-EV budget, by id

    double budget_for(const std::string& ev_id) const {
        auto it = budget_overrides.find(ev_id);
        return it == budget_overrides.end() ? budget_per_ev : it->second;
    }

    static FairnessPolicy unconstrained() { return {}; }
    static FairnessPolicy hard(double z) {
        FairnessPolicy p;
        p.variant = FairnessVariant::HardPerSlot;
        p.zbar = z;
        return p;
    }
    static FairnessPolicy soft(double zc) {
        FairnessPolicy p;
        p.variant = FairnessVariant::SoftCumulative;
        p.zbar_c = zc;
        return p;
    }
    static FairnessPolicy budget(double theta, double per_ev) {
        FairnessPolicy p;
        p.variant = FairnessVariant::Budget;
        p.theta = theta;
        p.budget_per_ev = per_ev;
        return p;
    }
};

enum class SolveMode { ChargingOnly, V2gOnly, Joint };

/// Optional pair-specific V2V cap; absent pairs fall back to the sender's
/// scalar v2v_pair_cap_kwh_per_slot.
struct V2vOverride {
    std::string from;
    std::string to;
    double cap_kwh_per_slot = 0.0;
};

struct SolverConfig {
    double gap_tol = 1e-4;
    long node_limit = 100000;
    double tol = 1e-6;
    std::string mode = "exact";  // "exact" or "heuristic"
};

/// A full problem instance. Immutable by convention once built; every module
/// downstream treats it as a read-only value.
struct Scenario {
    TimeGrid grid;
    std::vector<EvSpec> fleet;
    Tariff tariff;
    SupplyLimits supply;
    FairnessPolicy fairness;
    SolveMode mode = SolveMode::Joint;
    std::vector<V2vOverride> v2v_cap_overrides;
    SolverConfig solver;

    /// Index of an EV id in fleet order, -1 if unknown.
    int ev_index(const std::string& id) const;

    /// Directed cap for sender -> receiver, honoring overrides.
    double pair_cap(int from_idx, int to_idx) const;
};

struct Violation {
    std::string ev_id;  // empty for scenario-level violations
    std::string field;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Checks every type invariant; violations are data, not failures. The report
/// is deterministically ordered by (ev id, field).
ValidationReport validate_scenario(const Scenario& s);

/// Surplus of the pure-charging reachability bound:
///   initial + eff_charge * max_charge * window - target.
/// Negative means the departure target cannot be met even charging flat out.
double reachability_check(const EvSpec& ev, const TimeGrid& grid);

const char* to_string(SolveMode m);
const char* to_string(FairnessVariant v);
SolveMode mode_from_string(const std::string& s);
FairnessVariant fairness_variant_from_string(const std::string& s);

}  // namespace evfair
