// SPDX-License-Identifier: Apache-2.0
#include "evfair/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace evfair {

const char* to_string(VarKind k) {
    switch (k) {
        case VarKind::Charge: return "charge";
        case VarKind::Discharge: return "discharge";
        case VarKind::Grid: return "grid";
        case VarKind::Renewable: return "renewable";
        case VarKind::V2g: return "v2g";
        case VarKind::Soc: return "soc";
        case VarKind::ModeFlag: return "mode_flag";
        case VarKind::Flow: return "flow";
        case VarKind::BudgetSlack: return "budget_slack";
    }
    return "?";
}

const char* to_string(RowTag t) {
    switch (t) {
        case RowTag::Dynamics: return "dynamics";
        case RowTag::Departure: return "departure";
        case RowTag::ChargeExclusive: return "charge_exclusive";
        case RowTag::DischargeExclusive: return "discharge_exclusive";
        case RowTag::GridCap: return "grid_cap";
        case RowTag::RenewableCap: return "renewable_cap";
        case RowTag::ChargeBalance: return "charge_balance";
        case RowTag::DischargeBalance: return "discharge_balance";
        case RowTag::SoftCumulative: return "soft_cumulative";
        case RowTag::BudgetHinge: return "budget_hinge";
        case RowTag::BudgetTotal: return "budget_total";
    }
    return "?";
}

namespace {

int64_t flow_key(int from_ev, int to_ev, int slot) {
    return (static_cast<int64_t>(slot) << 40) | (static_cast<int64_t>(from_ev) << 20) |
           static_cast<int64_t>(to_ev);
}

}  // namespace

int VarMap::register_col(VarKind kind, int ev, int slot, int ev2) {
    const int col = num_cols_++;
    if (kind == VarKind::Flow) {
        flows_.push_back({ev, ev2, slot, col});
        flow_index_[flow_key(ev, ev2, slot)] = col;
    } else {
        per_ev_[(static_cast<size_t>(ev) * slot_count_ + slot) * kPerEvKinds + kind_index(kind)] =
            col;
    }
    col_info_.push_back({kind, ev, slot, ev2});
    if (kind == VarKind::ModeFlag) binary_cols_.push_back(col);
    return col;
}

std::optional<int> VarMap::find(VarKind kind, int ev, int slot) const {
    if (kind == VarKind::Flow) return std::nullopt;
    if (ev < 0 || ev >= num_evs_ || slot < 0 || slot >= slot_count_) return std::nullopt;
    const int col =
        per_ev_[(static_cast<size_t>(ev) * slot_count_ + slot) * kPerEvKinds + kind_index(kind)];
    if (col < 0) return std::nullopt;
    return col;
}

std::optional<int> VarMap::find_flow(int from_ev, int to_ev, int slot) const {
    auto it = flow_index_.find(flow_key(from_ev, to_ev, slot));
    if (it == flow_index_.end()) return std::nullopt;
    return it->second;
}

int VarMap::lookup(VarKind kind, int ev, int slot) const {
    auto col = find(kind, ev, slot);
    if (!col) {
        std::ostringstream os;
        os << "variable " << to_string(kind) << " not allocated for ev " << ev << " slot " << slot;
        throw NotAllocatedError(os.str());
    }
    return *col;
}

int VarMap::lookup_flow(int from_ev, int to_ev, int slot) const {
    auto col = find_flow(from_ev, to_ev, slot);
    if (!col) {
        std::ostringstream os;
        os << "flow " << from_ev << "->" << to_ev << " not allocated at slot " << slot;
        throw NotAllocatedError(os.str());
    }
    return *col;
}

double QpProblem::objective_value(const std::vector<double>& x) const {
    double obj = 0.0;
    for (int j = 0; j < num_cols; ++j)
        obj += linear[j] * x[j] + 0.5 * quad_diag[j] * x[j] * x[j];
    return obj;
}

struct ModelBuilder {
    static VarMap make_map(const Scenario& s) {
        VarMap m;
        m.num_evs_ = static_cast<int>(s.fleet.size());
        m.slot_count_ = s.grid.slot_count;
        m.per_ev_.assign(static_cast<size_t>(m.num_evs_) * m.slot_count_ * VarMap::kPerEvKinds, -1);
        return m;
    }
    static int reg(VarMap& m, VarKind k, int ev, int slot, int ev2 = -1) {
        return m.register_col(k, ev, slot, ev2);
    }
    static void register_budget_slacks(VarMap& m, const Scenario& s) {
        for (int i = 0; i < m.num_evs_; ++i)
            for (int t = s.fleet[i].arrival; t <= s.fleet[i].departure; ++t)
                m.register_col(VarKind::BudgetSlack, i, t);
    }
};

std::pair<QpProblem, VarMap> assemble(const Scenario& s) {
    const int H = s.grid.slot_count;
    const int N = static_cast<int>(s.fleet.size());
    const bool has_discharge = s.mode != SolveMode::ChargingOnly;
    const bool has_v2v = s.mode == SolveMode::Joint;

    if (static_cast<int>(s.tariff.buy_price.size()) != H ||
        static_cast<int>(s.tariff.sell_price.size()) != H)
        throw DimensionError("tariff series length does not match the time grid");
    if (static_cast<int>(s.supply.renewable_kwh.size()) != H)
        throw DimensionError("renewable series length does not match the time grid");

    {
        std::vector<std::string> unreachable;
        for (const auto& ev : s.fleet)
            if (reachability_check(ev, s.grid) < -1e-9) unreachable.push_back(ev.id);
        if (!unreachable.empty()) {
            std::string msg = "departure target unreachable by pure charging for:";
            for (const auto& id : unreachable) msg += " " + id;
            throw InfeasibleTargetError(msg, std::move(unreachable));
        }
    }

    VarMap m = ModelBuilder::make_map(s);
    QpProblem p;

    auto push_col = [&p](double lo, double hi, double lin = 0.0, double quad = 0.0) {
        p.lower.push_back(lo);
        p.upper.push_back(hi);
        p.linear.push_back(lin);
        p.quad_diag.push_back(quad);
    };

    // Per-EV columns, fleet order then slot order inside the window.
    for (int i = 0; i < N; ++i) {
        const EvSpec& ev = s.fleet[i];
        for (int t = ev.arrival; t <= ev.departure; ++t) {
            const double buy = s.tariff.buy_price[t];
            const double sell = s.tariff.sell_price[t];

            ModelBuilder::reg(m, VarKind::Charge, i, t);
            push_col(0.0, ev.max_charge_kwh_per_slot);

            if (has_discharge) {
                ModelBuilder::reg(m, VarKind::Discharge, i, t);
                push_col(0.0, ev.max_discharge_kwh_per_slot, 0.0, 2.0 * ev.degradation_coeff);
            }

            ModelBuilder::reg(m, VarKind::Grid, i, t);
            push_col(0.0, std::min(ev.max_charge_kwh_per_slot, s.supply.grid_cap_kwh_per_slot), buy);

            ModelBuilder::reg(m, VarKind::Renewable, i, t);
            push_col(0.0, std::min(ev.max_charge_kwh_per_slot, s.supply.renewable_kwh[t]));

            if (has_discharge) {
                ModelBuilder::reg(m, VarKind::V2g, i, t);
                push_col(0.0, std::min(ev.v2g_cap_kwh_per_slot, ev.max_discharge_kwh_per_slot),
                         -sell);
            }

            ModelBuilder::reg(m, VarKind::Soc, i, t);
            push_col(ev.min_kwh, ev.capacity_kwh);

            // Exclusivity binaries only where both directions are usable.
            if (has_discharge && ev.max_charge_kwh_per_slot > 0.0 &&
                ev.max_discharge_kwh_per_slot > 0.0) {
                ModelBuilder::reg(m, VarKind::ModeFlag, i, t);
                push_col(0.0, 1.0);
            }
        }
    }

    // Co-presence per slot, fleet order.
    std::vector<std::vector<int>> present(H);
    for (int i = 0; i < N; ++i)
        for (int t = s.fleet[i].arrival; t <= s.fleet[i].departure; ++t) present[t].push_back(i);

    if (has_v2v) {
        for (int t = 0; t < H; ++t)
            for (int from : present[t])
                for (int to : present[t]) {
                    if (from == to) continue;
                    ModelBuilder::reg(m, VarKind::Flow, from, t, to);
                    const double cap =
                        std::min({s.pair_cap(from, to),
                                  s.fleet[from].max_discharge_kwh_per_slot,
                                  s.fleet[to].max_charge_kwh_per_slot});
                    push_col(0.0, cap);
                }
    }

    p.num_cols = m.num_cols();
    p.binary_cols = m.binary_cols();

    // Battery dynamics and the departure target.
    for (int i = 0; i < N; ++i) {
        const EvSpec& ev = s.fleet[i];
        for (int t = ev.arrival; t <= ev.departure; ++t) {
            LinearRow row;
            row.info = {RowTag::Dynamics, i, t};
            row.terms.push_back({m.lookup(VarKind::Soc, i, t), 1.0});
            row.terms.push_back({m.lookup(VarKind::Charge, i, t), -ev.eff_charge});
            if (has_discharge)
                row.terms.push_back({m.lookup(VarKind::Discharge, i, t), 1.0 / ev.eff_discharge});
            if (t == ev.arrival) {
                row.rhs = ev.initial_kwh;
            } else {
                row.terms.push_back({m.lookup(VarKind::Soc, i, t - 1), -1.0});
                row.rhs = 0.0;
            }
            p.eq_rows.push_back(std::move(row));
        }
        LinearRow dep;
        dep.info = {RowTag::Departure, i, ev.departure};
        dep.terms.push_back({m.lookup(VarKind::Soc, i, ev.departure), 1.0});
        dep.rhs = ev.target_kwh;
        p.eq_rows.push_back(std::move(dep));
    }

    // Charge balance: p_ch = p_grid + p_renew + inflow.
    for (int i = 0; i < N; ++i) {
        const EvSpec& ev = s.fleet[i];
        for (int t = ev.arrival; t <= ev.departure; ++t) {
            LinearRow row;
            row.info = {RowTag::ChargeBalance, i, t};
            row.terms.push_back({m.lookup(VarKind::Charge, i, t), 1.0});
            row.terms.push_back({m.lookup(VarKind::Grid, i, t), -1.0});
            row.terms.push_back({m.lookup(VarKind::Renewable, i, t), -1.0});
            if (has_v2v)
                for (int j : present[t])
                    if (j != i) row.terms.push_back({m.lookup_flow(j, i, t), -1.0});
            row.rhs = 0.0;
            p.eq_rows.push_back(std::move(row));
        }
    }

    // Discharge balance: p_dis = p_v2g + outflow.
    if (has_discharge) {
        for (int i = 0; i < N; ++i) {
            const EvSpec& ev = s.fleet[i];
            for (int t = ev.arrival; t <= ev.departure; ++t) {
                LinearRow row;
                row.info = {RowTag::DischargeBalance, i, t};
                row.terms.push_back({m.lookup(VarKind::Discharge, i, t), 1.0});
                row.terms.push_back({m.lookup(VarKind::V2g, i, t), -1.0});
                if (has_v2v)
                    for (int j : present[t])
                        if (j != i) row.terms.push_back({m.lookup_flow(i, j, t), -1.0});
                row.rhs = 0.0;
                p.eq_rows.push_back(std::move(row));
            }
        }
    }

    // Exclusivity in indicator-free form; the rate caps are the big-M values.
    for (int i = 0; i < N && has_discharge; ++i) {
        const EvSpec& ev = s.fleet[i];
        for (int t = ev.arrival; t <= ev.departure; ++t) {
            auto flag = m.find(VarKind::ModeFlag, i, t);
            if (!flag) continue;
            LinearRow ch;
            ch.info = {RowTag::ChargeExclusive, i, t};
            ch.terms.push_back({m.lookup(VarKind::Charge, i, t), 1.0});
            ch.terms.push_back({*flag, ev.max_charge_kwh_per_slot});
            ch.rhs = ev.max_charge_kwh_per_slot;
            p.ineq_rows.push_back(std::move(ch));

            LinearRow dis;
            dis.info = {RowTag::DischargeExclusive, i, t};
            dis.terms.push_back({m.lookup(VarKind::Discharge, i, t), 1.0});
            dis.terms.push_back({*flag, -ev.max_discharge_kwh_per_slot});
            dis.rhs = 0.0;
            p.ineq_rows.push_back(std::move(dis));
        }
    }

    // Aggregate supply caps per slot with at least one EV present.
    for (int t = 0; t < H; ++t) {
        if (present[t].empty()) continue;
        LinearRow grid;
        grid.info = {RowTag::GridCap, -1, t};
        for (int i : present[t]) grid.terms.push_back({m.lookup(VarKind::Grid, i, t), 1.0});
        grid.rhs = s.supply.grid_cap_kwh_per_slot;
        p.ineq_rows.push_back(std::move(grid));

        LinearRow renew;
        renew.info = {RowTag::RenewableCap, -1, t};
        for (int i : present[t]) renew.terms.push_back({m.lookup(VarKind::Renewable, i, t), 1.0});
        renew.rhs = s.supply.renewable_kwh[t];
        p.ineq_rows.push_back(std::move(renew));
    }

    return {std::move(p), std::move(m)};
}

QpProblem add_fairness(QpProblem p, VarMap& m, const FairnessPolicy& policy, const Scenario& s,
                       std::vector<std::string>* warnings) {
    if (policy.variant == FairnessVariant::Unconstrained) return p;
    if (s.mode == SolveMode::ChargingOnly) {
        if (warnings)
            warnings->push_back(
                "fairness policy ignored: charging_only mode has no discharge to constrain");
        return p;
    }

    const int N = static_cast<int>(s.fleet.size());

    switch (policy.variant) {
        case FairnessVariant::HardPerSlot: {
            for (int i = 0; i < N; ++i)
                for (int t = s.fleet[i].arrival; t <= s.fleet[i].departure; ++t) {
                    const int col = m.lookup(VarKind::Discharge, i, t);
                    p.upper[col] = std::min(p.upper[col], policy.zbar);
                }
            break;
        }
        case FairnessVariant::SoftCumulative: {
            for (int i = 0; i < N; ++i) {
                LinearRow row;
                row.info = {RowTag::SoftCumulative, i, -1};
                for (int t = s.fleet[i].arrival; t <= s.fleet[i].departure; ++t)
                    row.terms.push_back({m.lookup(VarKind::Discharge, i, t), 1.0});
                row.rhs = policy.zbar_c;
                p.ineq_rows.push_back(std::move(row));
            }
            break;
        }
        case FairnessVariant::Budget: {
            ModelBuilder::register_budget_slacks(m, s);
            p.num_cols = m.num_cols();
            for (int i = 0; i < N; ++i) {
                const EvSpec& ev = s.fleet[i];
                for (int t = ev.arrival; t <= ev.departure; ++t) {
                    p.lower.push_back(0.0);
                    p.upper.push_back(ev.max_discharge_kwh_per_slot);
                    p.linear.push_back(0.0);
                    p.quad_diag.push_back(0.0);
                }
            }
            for (int i = 0; i < N; ++i) {
                const EvSpec& ev = s.fleet[i];
                LinearRow total;
                total.info = {RowTag::BudgetTotal, i, -1};
                for (int t = ev.arrival; t <= ev.departure; ++t) {
                    const int slack = m.lookup(VarKind::BudgetSlack, i, t);
                    LinearRow hinge;
                    hinge.info = {RowTag::BudgetHinge, i, t};
                    hinge.terms.push_back({m.lookup(VarKind::Discharge, i, t), 1.0});
                    hinge.terms.push_back({slack, -1.0});
                    hinge.rhs = policy.theta;
                    p.ineq_rows.push_back(std::move(hinge));
                    total.terms.push_back({slack, 1.0});
                }
                total.rhs = policy.budget_for(ev.id);
                p.ineq_rows.push_back(std::move(total));
            }
            break;
        }
        case FairnessVariant::Unconstrained:
            break;
    }
    return p;
}

std::pair<QpProblem, VarMap> build_problem(const Scenario& s, std::vector<std::string>* warnings) {
    auto [p, m] = assemble(s);
    QpProblem with_fairness = add_fairness(std::move(p), m, s.fairness, s, warnings);
    return {std::move(with_fairness), std::move(m)};
}

namespace {

void dump_row(std::ostream& os, const LinearRow& row, const VarMap& m, bool equality) {
    os << to_string(row.info.tag);
    if (row.info.ev >= 0) os << " ev=" << row.info.ev;
    if (row.info.slot >= 0) os << " slot=" << row.info.slot;
    os << " :";
    for (const auto& [col, coef] : row.terms) {
        const auto& info = m.col_info(col);
        os << ' ' << coef << '*' << to_string(info.kind) << '[' << info.ev;
        if (info.kind == VarKind::Flow) os << "->" << info.ev2;
        os << ',' << info.slot << ']';
    }
    os << (equality ? " = " : " <= ") << row.rhs << '\n';
}

}  // namespace

void dump_problem(std::ostream& os, const QpProblem& p, const VarMap& m) {
    os << "cols " << p.num_cols << " eq_rows " << p.eq_rows.size() << " ineq_rows "
       << p.ineq_rows.size() << " binaries " << p.binary_cols.size() << '\n';
    for (int j = 0; j < p.num_cols; ++j) {
        const auto& info = m.col_info(j);
        os << "col " << j << ' ' << to_string(info.kind) << '[' << info.ev;
        if (info.kind == VarKind::Flow) os << "->" << info.ev2;
        os << ',' << info.slot << "] bounds [" << p.lower[j] << ", " << p.upper[j] << "]";
        if (p.linear[j] != 0.0) os << " lin " << p.linear[j];
        if (p.quad_diag[j] != 0.0) os << " quad " << p.quad_diag[j];
        os << '\n';
    }
    for (const auto& row : p.eq_rows) dump_row(os, row, m, true);
    for (const auto& row : p.ineq_rows) dump_row(os, row, m, false);
}

}  // namespace evfair
