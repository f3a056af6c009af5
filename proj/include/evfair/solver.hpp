// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "evfair/qp.hpp"

namespace evfair {

struct MiqpParams {
    double gap_tol = 1e-4;
    long node_limit = 100000;
    double int_tol = 1e-5;   // integrality tolerance on binaries
    int flip_budget = -1;    // heuristic repair budget; -1 = one flip per binary
    QpSettings qp;
};

enum class MiqpStatus { Optimal, Feasible, Infeasible, NodeLimit };

const char* to_string(MiqpStatus s);

struct MiqpSolution {
    Eigen::VectorXd x;
    double objective = 0.0;
    double bound = 0.0;      // best proven lower bound
    double rel_gap = 0.0;    // (objective - bound) / max(1, |objective|)
    long nodes_explored = 0;
    MiqpStatus status = MiqpStatus::Infeasible;
};

/// Best-first branch-and-bound over the exclusivity binaries. Node bounds come
/// from the QP relaxation; branching picks the most fractional binary with
/// ties broken by lowest column (= lowest (ev, slot)); the incumbent is seeded
/// by rounding the root relaxation. Deterministic: identical inputs produce
/// identical node counts and objectives.
MiqpSolution solve_exact(const QpProblem& p, const MiqpParams& params = {});

/// Relax-and-repair: round the root relaxation's binaries, re-solve with them
/// fixed, and flip rounded binaries in fractionality order if that leaves the
/// problem infeasible. bound is the root relaxation value, so rel_gap is an
/// honest optimality certificate.
MiqpSolution solve_heuristic(const QpProblem& p, const MiqpParams& params = {});

struct SlotValues {
    double charge_kwh = 0.0;
    double discharge_kwh = 0.0;
    double grid_kwh = 0.0;
    double renewable_kwh = 0.0;
    double v2g_kwh = 0.0;
    double soc_kwh = 0.0;
    double mode_flag = 0.0;
};

/// Realized per-EV trajectories plus the directed V2V flow table.
struct Schedule {
    struct EvTrack {
        std::string id;
        int arrival = 0;
        int departure = 0;
        std::vector<SlotValues> slots;  // indexed by slot - arrival

        const SlotValues& at(int slot) const { return slots.at(slot - arrival); }
        SlotValues& at(int slot) { return slots.at(slot - arrival); }
    };
    struct FlowEntry {
        int from_ev = 0;
        int to_ev = 0;
        int slot = 0;
        double kwh = 0.0;
    };

    int slot_count = 0;
    double slot_hours = 0.0;
    std::vector<EvTrack> evs;
    std::vector<FlowEntry> flows;  // sparse: nonzero flows only
    double objective = 0.0;

    double inflow(int ev, int slot) const;
    double outflow(int ev, int slot) const;
    double total_sent(int ev) const;
};

/// Maps solver columns back to named trajectories, clamps |v| < 1e-9 to zero,
/// and re-checks the Schedule invariants (battery recurrence to 1e-6 kWh,
/// departure target to 1e-6 kWh, charge/discharge exclusivity) before
/// returning. Throws InvariantViolationError naming the offending (ev, slot).
Schedule extract_schedule(const MiqpSolution& sol, const VarMap& m, const Scenario& s);

}  // namespace evfair
