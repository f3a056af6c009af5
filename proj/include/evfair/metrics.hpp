// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "evfair/solver.hpp"

namespace evfair {

/// Objective decomposition over a schedule: grid purchase cost, quadratic
/// battery degradation cost and V2G revenue, per EV and in total.
struct CostBreakdown {
    struct PerEv {
        std::string id;
        double grid_cost = 0.0;
        double degradation_cost = 0.0;
        double v2g_revenue = 0.0;
        double net() const { return grid_cost + degradation_cost - v2g_revenue; }
    };
    std::vector<PerEv> per_ev;
    double grid_cost = 0.0;
    double degradation_cost = 0.0;
    double v2g_revenue = 0.0;
    double total = 0.0;  // grid + degradation - revenue
};

/// Jain's index over mean V2V sends. An EV participates when its total sends
/// exceed 1e-9 kWh; the mean divides by the full horizon slot count.
struct FairnessReport {
    double jfi = 1.0;
    int participant_count = 0;
    std::vector<std::pair<std::string, double>> per_ev_mean_v2v;  // participants only
    std::string policy;
};

FairnessReport jain_index(const Schedule& sched);

CostBreakdown cost_breakdown(const Schedule& sched, const Tariff& tariff,
                             const std::vector<EvSpec>& fleet);

/// Re-checks a schedule against the raw constraints, outside the solver.
/// Residuals are energies in kWh (prices never enter); exclusivity is
/// measured as min(charge, discharge) per (ev, slot).
struct AuditReport {
    std::map<std::string, double> max_violation;  // family -> worst residual
    std::string worst_family;
    double worst = 0.0;

    bool pass(double tol) const { return worst <= tol; }
};

AuditReport feasibility_audit(const Schedule& sched, const Scenario& s, double tol = 1e-6);

/// Signed percentage reduction from a to b; positive when b is cheaper.
/// Throws ZeroBaselineError when a.total is zero.
double compare_costs(const CostBreakdown& a, const CostBreakdown& b);

}  // namespace evfair
