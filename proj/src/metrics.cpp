// SPDX-License-Identifier: Apache-2.0
#include "evfair/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace evfair {

FairnessReport jain_index(const Schedule& sched) {
    FairnessReport report;
    const int N = static_cast<int>(sched.evs.size());
    for (int i = 0; i < N; ++i) {
        const double sent = sched.total_sent(i);
        if (sent > 1e-9)
            report.per_ev_mean_v2v.push_back({sched.evs[i].id, sent / sched.slot_count});
    }
    report.participant_count = static_cast<int>(report.per_ev_mean_v2v.size());
    if (report.participant_count <= 1) {
        report.jfi = 1.0;
        return report;
    }
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& [id, x] : report.per_ev_mean_v2v) {
        sum += x;
        sum_sq += x * x;
    }
    report.jfi = (sum * sum) / (report.participant_count * sum_sq);
    return report;
}

CostBreakdown cost_breakdown(const Schedule& sched, const Tariff& tariff,
                             const std::vector<EvSpec>& fleet) {
    if (static_cast<int>(tariff.buy_price.size()) < sched.slot_count ||
        static_cast<int>(tariff.sell_price.size()) < sched.slot_count)
        throw DimensionError("tariff series shorter than the schedule horizon");
    if (fleet.size() != sched.evs.size())
        throw DimensionError("fleet size does not match the schedule");

    CostBreakdown out;
    for (size_t i = 0; i < sched.evs.size(); ++i) {
        const auto& track = sched.evs[i];
        const EvSpec& ev = fleet[i];
        CostBreakdown::PerEv row;
        row.id = track.id;
        for (int t = track.arrival; t <= track.departure; ++t) {
            const SlotValues& v = track.at(t);
            row.grid_cost += tariff.buy_price[t] * v.grid_kwh;
            row.degradation_cost += ev.degradation_coeff * v.discharge_kwh * v.discharge_kwh;
            row.v2g_revenue += tariff.sell_price[t] * v.v2g_kwh;
        }
        out.grid_cost += row.grid_cost;
        out.degradation_cost += row.degradation_cost;
        out.v2g_revenue += row.v2g_revenue;
        out.per_ev.push_back(std::move(row));
    }
    out.total = out.grid_cost + out.degradation_cost - out.v2g_revenue;
    return out;
}

namespace {

struct AuditAccum {
    AuditReport report;
    void hit(const std::string& family, double residual) {
        double& cur = report.max_violation[family];
        cur = std::max(cur, residual);
        if (residual > report.worst) {
            report.worst = residual;
            report.worst_family = family;
        }
    }
};

}  // namespace

AuditReport feasibility_audit(const Schedule& sched, const Scenario& s, double /*tol*/) {
    AuditAccum acc;
    const int N = static_cast<int>(s.fleet.size());
    const int H = s.grid.slot_count;

    // named so every family shows up in the report even at zero residual
    for (const char* family :
         {"dynamics", "bounds", "target", "supply", "v2g_cap", "v2v_cap", "charge_balance",
          "discharge_balance", "exclusivity", "fairness", "window"})
        acc.report.max_violation[family] = 0.0;

    std::vector<double> grid_sum(H, 0.0), renew_sum(H, 0.0);

    // one pass over the sparse flow table instead of per-(ev, slot) scans
    std::vector<double> in_sum(static_cast<size_t>(N) * H, 0.0);
    std::vector<double> out_sum(static_cast<size_t>(N) * H, 0.0);
    for (const auto& f : sched.flows) {
        if (f.slot < 0 || f.slot >= H) continue;
        if (f.to_ev >= 0 && f.to_ev < N) in_sum[static_cast<size_t>(f.to_ev) * H + f.slot] += f.kwh;
        if (f.from_ev >= 0 && f.from_ev < N)
            out_sum[static_cast<size_t>(f.from_ev) * H + f.slot] += f.kwh;
    }

    for (int i = 0; i < N && i < static_cast<int>(sched.evs.size()); ++i) {
        const EvSpec& ev = s.fleet[i];
        const auto& track = sched.evs[i];
        double prev = ev.initial_kwh;
        double cum_dis = 0.0, cum_excess = 0.0;
        for (int t = track.arrival; t <= track.departure; ++t) {
            const SlotValues& v = track.at(t);
            const double expected =
                prev + ev.eff_charge * v.charge_kwh - v.discharge_kwh / ev.eff_discharge;
            acc.hit("dynamics", std::abs(v.soc_kwh - expected));
            prev = v.soc_kwh;

            acc.hit("bounds", std::max({0.0, ev.min_kwh - v.soc_kwh, v.soc_kwh - ev.capacity_kwh}));
            acc.hit("bounds", std::max(0.0, v.charge_kwh - ev.max_charge_kwh_per_slot));
            acc.hit("bounds", std::max(0.0, v.discharge_kwh - ev.max_discharge_kwh_per_slot));
            acc.hit("bounds", std::max({0.0, -v.charge_kwh, -v.discharge_kwh, -v.grid_kwh,
                                        -v.renewable_kwh, -v.v2g_kwh}));
            acc.hit("v2g_cap", std::max(0.0, v.v2g_kwh - ev.v2g_cap_kwh_per_slot));

            grid_sum[t] += v.grid_kwh;
            renew_sum[t] += v.renewable_kwh;

            acc.hit("charge_balance",
                    std::abs(v.charge_kwh - v.grid_kwh - v.renewable_kwh -
                             in_sum[static_cast<size_t>(i) * H + t]));
            acc.hit("discharge_balance",
                    std::abs(v.discharge_kwh - v.v2g_kwh -
                             out_sum[static_cast<size_t>(i) * H + t]));
            acc.hit("exclusivity", std::min(v.charge_kwh, v.discharge_kwh));

            if (s.fairness.variant == FairnessVariant::HardPerSlot)
                acc.hit("fairness", std::max(0.0, v.discharge_kwh - s.fairness.zbar));
            cum_dis += v.discharge_kwh;
            cum_excess += std::max(v.discharge_kwh - s.fairness.theta, 0.0);
        }
        acc.hit("target", std::abs(prev - ev.target_kwh));
        if (s.fairness.variant == FairnessVariant::SoftCumulative)
            acc.hit("fairness", std::max(0.0, cum_dis - s.fairness.zbar_c));
        if (s.fairness.variant == FairnessVariant::Budget)
            acc.hit("fairness", std::max(0.0, cum_excess - s.fairness.budget_for(ev.id)));
    }

    for (int t = 0; t < H; ++t) {
        acc.hit("supply", std::max(0.0, grid_sum[t] - s.supply.grid_cap_kwh_per_slot));
        acc.hit("supply", std::max(0.0, renew_sum[t] - s.supply.renewable_kwh[t]));
    }

    for (const auto& f : sched.flows) {
        if (f.from_ev < 0 || f.from_ev >= N || f.to_ev < 0 || f.to_ev >= N ||
            f.from_ev == f.to_ev) {
            acc.hit("window", std::abs(f.kwh));
            continue;
        }
        const bool both_parked =
            s.fleet[f.from_ev].parked_at(f.slot) && s.fleet[f.to_ev].parked_at(f.slot);
        if (!both_parked) acc.hit("window", std::abs(f.kwh));
        acc.hit("v2v_cap", std::max(0.0, f.kwh - s.pair_cap(f.from_ev, f.to_ev)));
        acc.hit("v2v_cap", std::max(0.0, -f.kwh));
    }

    return acc.report;
}

double compare_costs(const CostBreakdown& a, const CostBreakdown& b) {
    if (a.total == 0.0) throw ZeroBaselineError("baseline total cost is zero");
    return 100.0 * (a.total - b.total) / a.total;
}

}  // namespace evfair
