// SPDX-License-Identifier: Apache-2.0
#include "evfair/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace evfair {

namespace {

constexpr double kEps = 1e-9;

std::vector<double> level_set(double cap, double step) {
    std::vector<double> v{0.0};
    if (cap > 1e-12) {
        for (int k = 1; k * step < cap - 1e-12; ++k) v.push_back(k * step);
        v.push_back(cap);
    }
    return v;
}

bool in_level_set(const std::vector<double>& levels, double value) {
    for (double l : levels)
        if (std::abs(l - value) <= kEps) return true;
    return false;
}

struct Action {
    double charge = 0.0;
    double renew = 0.0;
    double discharge = 0.0;
    double v2g = 0.0;
    std::vector<std::pair<int, double>> flows;  // (receiver fleet index, kwh)
};

struct Enumerator {
    const Scenario& s;
    double step;
    std::vector<std::vector<int>> present;
    // actions[i][t - arrival] = feasible per-EV choices at slot t
    std::vector<std::vector<std::vector<Action>>> actions;

    explicit Enumerator(const Scenario& scenario, double step_kwh)
        : s(scenario), step(step_kwh), present(scenario.grid.slot_count) {
        const int N = static_cast<int>(s.fleet.size());
        for (int i = 0; i < N; ++i)
            for (int t = s.fleet[i].arrival; t <= s.fleet[i].departure; ++t)
                present[t].push_back(i);

        actions.resize(N);
        double product = 1.0;
        for (int i = 0; i < N; ++i) {
            const EvSpec& ev = s.fleet[i];
            actions[i].resize(ev.window_slots());
            for (int t = ev.arrival; t <= ev.departure; ++t) {
                auto& list = actions[i][t - ev.arrival];
                build_actions(i, t, list);
                product *= static_cast<double>(list.size());
                if (product > 1e7)
                    throw TooLargeError("oracle enumeration exceeds 1e7 discrete choices");
            }
        }
    }

    void build_actions(int i, int t, std::vector<Action>& out) {
        const EvSpec& ev = s.fleet[i];
        out.push_back({});  // idle

        // charging choices: total charge plus the renewable share of it
        for (double c : level_set(ev.max_charge_kwh_per_slot, step)) {
            if (c <= 0.0) continue;
            for (double r : level_set(std::min(c, s.supply.renewable_kwh[t]), step)) {
                Action a;
                a.charge = c;
                a.renew = r;
                out.push_back(std::move(a));
            }
        }

        if (s.mode == SolveMode::ChargingOnly) return;

        std::vector<int> partners;
        if (s.mode == SolveMode::Joint)
            for (int j : present[t])
                if (j != i) partners.push_back(j);

        for (double d : level_set(ev.max_discharge_kwh_per_slot, step)) {
            if (d <= 0.0) continue;
            if (s.fairness.variant == FairnessVariant::HardPerSlot &&
                d > s.fairness.zbar + kEps)
                continue;
            for (double g : level_set(std::min(ev.v2g_cap_kwh_per_slot, d), step)) {
                const double flow_total = d - g;
                Action base;
                base.discharge = d;
                base.v2g = g;
                if (flow_total <= kEps) {
                    if (flow_total >= -kEps) out.push_back(base);
                    continue;
                }
                if (partners.empty()) continue;  // nobody to receive the rest
                distribute(base, partners, 0, flow_total, i, t, out);
            }
        }
    }

    // Assign flow_total over partners on the level grid; the last partner must
    // absorb the exact remainder.
    void distribute(const Action& base, const std::vector<int>& partners, size_t k,
                    double remaining, int sender, int t, std::vector<Action>& out) {
        const int receiver = partners[k];
        const double cap = std::min(s.pair_cap(sender, receiver),
                                    s.fleet[receiver].max_charge_kwh_per_slot);
        const auto levels = level_set(cap, step);
        if (k + 1 == partners.size()) {
            if (remaining <= cap + kEps && in_level_set(levels, remaining)) {
                Action a = base;
                if (remaining > kEps) a.flows.push_back({receiver, remaining});
                out.push_back(std::move(a));
            }
            return;
        }
        for (double f : levels) {
            if (f > remaining + kEps) break;
            Action a = base;
            if (f > kEps) a.flows.push_back({receiver, f});
            distribute(a, partners, k + 1, remaining - f, sender, t, out);
        }
    }
};

struct Search {
    const Scenario& s;
    const Enumerator& en;
    double step;
    std::vector<double> soc;
    std::vector<double> cum_dis;
    std::vector<double> cum_excess;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;

    Search(const Scenario& scenario, const Enumerator& enumerator)
        : s(scenario), en(enumerator), step(enumerator.step) {
        const int N = static_cast<int>(s.fleet.size());
        soc.resize(N);
        for (int i = 0; i < N; ++i) soc[i] = s.fleet[i].initial_kwh;
        cum_dis.assign(N, 0.0);
        cum_excess.assign(N, 0.0);
    }

    void run() { recurse_slot(0, 0.0); }

    void recurse_slot(int t, double cost) {
        if (t == s.grid.slot_count) {
            if (cost < best) {
                best = cost;
                found = true;
            }
            return;
        }
        std::vector<const Action*> sel(en.present[t].size(), nullptr);
        pick_ev(t, 0, cost, sel);
    }

    void pick_ev(int t, size_t k, double cost, std::vector<const Action*>& sel) {
        const auto& ids = en.present[t];
        if (k == ids.size()) {
            finalize_slot(t, cost, sel);
            return;
        }
        const int i = ids[k];
        const auto& list = en.actions[i][t - s.fleet[i].arrival];
        for (const Action& a : list) {
            sel[k] = &a;
            pick_ev(t, k + 1, cost, sel);
        }
    }

    void finalize_slot(int t, double cost, const std::vector<const Action*>& sel) {
        const auto& ids = en.present[t];
        const int n = static_cast<int>(ids.size());

        double grid_sum = 0.0, renew_sum = 0.0, slot_cost = 0.0;
        std::vector<double> inflow(n, 0.0);
        for (int k = 0; k < n; ++k)
            for (const auto& [to, f] : sel[k]->flows) {
                for (int k2 = 0; k2 < n; ++k2)
                    if (ids[k2] == to) inflow[k2] += f;
            }

        std::vector<double> new_soc(n), new_dis(n), new_excess(n);
        for (int k = 0; k < n; ++k) {
            const int i = ids[k];
            const EvSpec& ev = s.fleet[i];
            const Action& a = *sel[k];

            const double p_grid = a.charge - a.renew - inflow[k];
            if (p_grid < -kEps) return;
            grid_sum += p_grid;
            renew_sum += a.renew;

            const double next = soc[i] + ev.eff_charge * a.charge - a.discharge / ev.eff_discharge;
            if (next < ev.min_kwh - kEps || next > ev.capacity_kwh + kEps) return;
            new_soc[k] = next;

            new_dis[k] = cum_dis[i] + a.discharge;
            if (s.fairness.variant == FairnessVariant::SoftCumulative &&
                new_dis[k] > s.fairness.zbar_c + kEps)
                return;
            new_excess[k] = cum_excess[i] + std::max(a.discharge - s.fairness.theta, 0.0);
            if (s.fairness.variant == FairnessVariant::Budget &&
                new_excess[k] > s.fairness.budget_for(ev.id) + kEps)
                return;

            if (ev.departure == t && std::abs(next - ev.target_kwh) > step / 2.0 + kEps) return;

            slot_cost += s.tariff.buy_price[t] * p_grid +
                         ev.degradation_coeff * a.discharge * a.discharge -
                         s.tariff.sell_price[t] * a.v2g;
        }
        if (grid_sum > s.supply.grid_cap_kwh_per_slot + kEps) return;
        if (renew_sum > s.supply.renewable_kwh[t] + kEps) return;

        std::vector<double> soc_save(n), dis_save(n), excess_save(n);
        for (int k = 0; k < n; ++k) {
            const int i = ids[k];
            soc_save[k] = soc[i];
            dis_save[k] = cum_dis[i];
            excess_save[k] = cum_excess[i];
            soc[i] = new_soc[k];
            cum_dis[i] = new_dis[k];
            cum_excess[i] = new_excess[k];
        }
        recurse_slot(t + 1, cost + slot_cost);
        for (int k = 0; k < n; ++k) {
            const int i = ids[k];
            soc[i] = soc_save[k];
            cum_dis[i] = dis_save[k];
            cum_excess[i] = excess_save[k];
        }
    }
};

}  // namespace

double brute_force_oracle(const Scenario& s, double step_kwh) {
    if (step_kwh <= 0.0) throw Error("oracle step must be positive");
    Enumerator en(s, step_kwh);
    Search search(s, en);
    search.run();
    if (!search.found) throw NoFeasiblePointError("oracle found no feasible assignment");
    return search.best;
}

}  // namespace evfair
