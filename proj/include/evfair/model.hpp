// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "evfair/domain.hpp"

namespace evfair {

enum class VarKind : uint8_t {
    Charge,       // p_ch
    Discharge,    // p_dis
    Grid,         // p_grid
    Renewable,    // p_renew
    V2g,          // p_v2g
    Soc,          // stored energy at the end of the slot
    ModeFlag,     // binary: 1 = discharging, 0 = charging
    Flow,         // directed V2V transfer
    BudgetSlack,  // excess discharge over theta (budget fairness)
};

const char* to_string(VarKind k);

/// Column layout of the assembled problem. Columns are a contiguous 0-based
/// range; per-EV variables exist only for in-window slots, flows only for
/// ordered co-present pairs, slacks only under budget fairness.
class VarMap {
public:
    VarMap() = default;

    int num_cols() const { return num_cols_; }
    int num_evs() const { return num_evs_; }
    int slot_count() const { return slot_count_; }

    /// Column of a per-EV variable; throws NotAllocatedError when the layout
    /// has no such column (out of window, wrong mode, vacuous binary, ...).
    int lookup(VarKind kind, int ev, int slot) const;
    /// Column of a directed flow; throws NotAllocatedError for self-flows and
    /// pairs that are not co-present at the slot.
    int lookup_flow(int from_ev, int to_ev, int slot) const;

    std::optional<int> find(VarKind kind, int ev, int slot) const;
    std::optional<int> find_flow(int from_ev, int to_ev, int slot) const;

    struct FlowVar {
        int from_ev;
        int to_ev;
        int slot;
        int col;
    };
    const std::vector<FlowVar>& flows() const { return flows_; }

    /// Reverse lookup for dumps and schedule extraction.
    struct ColInfo {
        VarKind kind;
        int ev;    // sender for flows
        int slot;
        int ev2;   // receiver for flows, -1 otherwise
    };
    const ColInfo& col_info(int col) const { return col_info_.at(col); }

    const std::vector<int>& binary_cols() const { return binary_cols_; }

private:
    friend struct ModelBuilder;

    int register_col(VarKind kind, int ev, int slot, int ev2 = -1);

    int num_cols_ = 0;
    int num_evs_ = 0;
    int slot_count_ = 0;
    // dense (ev, slot) -> column per kind, -1 when absent
    std::vector<int> per_ev_;  // [ev * slot_count * kKinds + slot * kKinds + kind_index]
    std::vector<FlowVar> flows_;
    std::unordered_map<int64_t, int> flow_index_;
    std::vector<ColInfo> col_info_;
    std::vector<int> binary_cols_;

    // Flow never lives in the dense table, so BudgetSlack reuses its slot.
    static constexpr int kPerEvKinds = 8;
    static int kind_index(VarKind k) {
        return k == VarKind::BudgetSlack ? static_cast<int>(VarKind::Flow) : static_cast<int>(k);
    }
};

/// Constraint-row provenance, used by the audit listing and the debug dump.
enum class RowTag : uint8_t {
    Dynamics,            // battery recurrence
    Departure,           // stored energy pinned to the target
    ChargeExclusive,     // p_ch <= cap * (1 - X)
    DischargeExclusive,  // p_dis <= cap * X
    GridCap,             // sum_i p_grid <= G
    RenewableCap,        // sum_i p_renew <= R_t
    ChargeBalance,       // p_ch = p_grid + p_renew + inflow
    DischargeBalance,    // p_dis = p_v2g + outflow
    SoftCumulative,      // sum_t p_dis <= zbar_c
    BudgetHinge,         // p_dis - slack <= theta
    BudgetTotal,         // sum_t slack <= budget
};

const char* to_string(RowTag t);

struct RowInfo {
    RowTag tag;
    int ev = -1;    // -1 when the row aggregates the fleet
    int slot = -1;  // -1 when the row aggregates the horizon
};

struct LinearRow {
    std::vector<std::pair<int, double>> terms;  // (column, coefficient)
    double rhs = 0.0;
    RowInfo info;
};

/// Standard-form convex MIQP:
///   minimize 1/2 x'Qx + c'x
///   s.t. eq rows (= rhs), ineq rows (<= rhs), lower <= x <= upper,
///        x_b binary for b in binary_cols.
/// Q is diagonal (stored as its diagonal); entries are 2*alpha on discharge
/// columns and zero elsewhere, which keeps it PSD by construction.
struct QpProblem {
    int num_cols = 0;
    std::vector<double> quad_diag;
    std::vector<double> linear;
    std::vector<LinearRow> eq_rows;
    std::vector<LinearRow> ineq_rows;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<int> binary_cols;  // ascending

    double objective_value(const std::vector<double>& x) const;
};

/// Emits variables, all operational constraint rows and the cost vector for
/// the scenario's mode. Fairness rows are layered on by add_fairness.
/// Throws InfeasibleTargetError when any EV fails the reachability screen and
/// DimensionError when series lengths mismatch the grid.
std::pair<QpProblem, VarMap> assemble(const Scenario& s);

/// Applies the policy on top of an assembled problem. HardPerSlot tightens
/// discharge bounds, SoftCumulative adds one row per EV, Budget allocates
/// slack columns plus hinge and budget rows. A non-trivial policy on a
/// ChargingOnly model is a mode mismatch: the problem is returned unchanged
/// and a warning is appended to `warnings` when provided.
QpProblem add_fairness(QpProblem p, VarMap& m, const FairnessPolicy& policy,
                       const Scenario& s, std::vector<std::string>* warnings = nullptr);

/// assemble + add_fairness in one step.
std::pair<QpProblem, VarMap> build_problem(const Scenario& s,
                                           std::vector<std::string>* warnings = nullptr);

/// Row -> equation-tag audit listing; covers every row by construction.
/// Sparse text format, one line per row: tag [ev=..] [slot=..] : col*coef ... (= | <=) rhs
void dump_problem(std::ostream& os, const QpProblem& p, const VarMap& m);

}  // namespace evfair
