// SPDX-License-Identifier: Apache-2.0
#include "evfair/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace evfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BnbContext {
    QpEngine engine;
    const QpProblem& p;
    MiqpParams params;
    Eigen::VectorXd base_l, base_u;
    WarmStart root_warm;

    BnbContext(const QpProblem& prob, const MiqpParams& par)
        : engine(stack_problem(prob), par.qp), p(prob), params(par) {
        base_l = engine.form().l;
        base_u = engine.form().u;
    }

    int box_row(int col) const { return engine.form().box_offset + col; }
};

using Fix = std::pair<int, int>;  // (binary column, value)

ContinuousSolution solve_with_fixes(BnbContext& ctx, const std::vector<Fix>& fixes,
                                    bool lock_rho) {
    Eigen::VectorXd l = ctx.base_l;
    Eigen::VectorXd u = ctx.base_u;
    for (const auto& [col, val] : fixes) {
        l[ctx.box_row(col)] = static_cast<double>(val);
        u[ctx.box_row(col)] = static_cast<double>(val);
    }
    return ctx.engine.solve(l, u, lock_rho ? &ctx.root_warm : nullptr, lock_rho);
}

/// Most fractional free binary; ties by lowest column index. Returns -1 when
/// every free binary sits within int_tol of an integer.
int pick_branch_var(const Eigen::VectorXd& x, const std::vector<int>& binaries,
                    const std::vector<Fix>& fixes, double int_tol) {
    int best = -1;
    double best_frac = int_tol;
    for (int b : binaries) {
        bool fixed = false;
        for (const auto& [col, val] : fixes)
            if (col == b) {
                fixed = true;
                break;
            }
        if (fixed) continue;
        const double frac = std::abs(x[b] - std::round(x[b]));
        if (frac > best_frac) {
            best_frac = frac;
            best = b;
        }
    }
    return best;
}

std::vector<Fix> round_free(const Eigen::VectorXd& x, const std::vector<int>& binaries,
                            const std::vector<Fix>& fixes) {
    std::vector<Fix> all = fixes;
    for (int b : binaries) {
        bool fixed = false;
        for (const auto& [col, val] : fixes)
            if (col == b) {
                fixed = true;
                break;
            }
        if (!fixed) all.push_back({b, x[b] >= 0.5 ? 1 : 0});
    }
    return all;
}

MiqpSolution wrap_continuous(const ContinuousSolution& c) {
    MiqpSolution s;
    s.x = c.x;
    s.objective = c.objective;
    s.bound = c.objective;
    s.rel_gap = 0.0;
    s.nodes_explored = 1;
    switch (c.status) {
        case QpStatus::Optimal: s.status = MiqpStatus::Optimal; break;
        case QpStatus::Infeasible: s.status = MiqpStatus::Infeasible; break;
        case QpStatus::IterLimit: s.status = MiqpStatus::Feasible; break;
    }
    return s;
}

double relative_gap(double objective, double bound) {
    return std::max(0.0, (objective - bound) / std::max(1.0, std::abs(objective)));
}

}  // namespace

const char* to_string(MiqpStatus s) {
    switch (s) {
        case MiqpStatus::Optimal: return "optimal";
        case MiqpStatus::Feasible: return "feasible";
        case MiqpStatus::Infeasible: return "infeasible";
        case MiqpStatus::NodeLimit: return "node_limit";
    }
    return "?";
}

MiqpSolution solve_exact(const QpProblem& p, const MiqpParams& params) {
    BnbContext ctx(p, params);

    ContinuousSolution root = ctx.engine.solve();
    long nodes = 1;
    if (root.status == QpStatus::Infeasible) {
        MiqpSolution s;
        s.status = MiqpStatus::Infeasible;
        s.nodes_explored = nodes;
        s.objective = kInf;
        s.bound = kInf;
        return s;
    }
    ctx.root_warm = ctx.engine.last_iterate();

    if (p.binary_cols.empty()) {
        MiqpSolution s = wrap_continuous(root);
        s.nodes_explored = nodes;
        return s;
    }

    const double int_tol = params.int_tol;
    bool have_inc = false;
    Eigen::VectorXd inc_x;
    double inc_obj = kInf;
    long unresolved_leaves = 0;

    auto prune_eps = [&]() { return params.gap_tol * std::max(1.0, std::abs(inc_obj)); };

    // Candidate incumbent: re-solve with the node's binaries pinned to exact
    // integers so downstream schedules carry clean 0/1 flags.
    auto try_incumbent = [&](const Eigen::VectorXd& x, const std::vector<Fix>& fixes,
                             double node_bound) -> bool {
        std::vector<Fix> all = round_free(x, p.binary_cols, fixes);
        ContinuousSolution fixed = solve_with_fixes(ctx, all, true);
        if (fixed.status == QpStatus::Infeasible) return false;
        if (fixed.status == QpStatus::IterLimit) return false;
        if (fixed.objective < inc_obj) {
            inc_obj = fixed.objective;
            inc_x = fixed.x;
            have_inc = true;
        }
        // Closed only when pinning cost is negligible against the gap budget;
        // otherwise the subtree may still hide a better assignment.
        return fixed.objective - node_bound <= 0.25 * prune_eps();
    };

    struct Node {
        double bound;
        long id;
        std::vector<Fix> fixes;
    };
    struct NodeOrder {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound > b.bound;
            return a.id > b.id;
        }
    };
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 0;

    // Root handling: integral relaxations close at the root; otherwise seed
    // the incumbent by rounding and branch.
    {
        const int branch_col = pick_branch_var(root.x, p.binary_cols, {}, int_tol);
        if (branch_col < 0) {
            try_incumbent(root.x, {}, root.objective);
            MiqpSolution s;
            s.x = have_inc ? inc_x : root.x;
            s.objective = have_inc ? inc_obj : root.objective;
            s.bound = root.objective;
            s.rel_gap = relative_gap(s.objective, s.bound);
            s.nodes_explored = nodes;
            s.status = s.rel_gap <= params.gap_tol ? MiqpStatus::Optimal : MiqpStatus::Feasible;
            return s;
        }
        try_incumbent(root.x, {}, root.objective);
        for (int v : {0, 1}) {
            Node child{root.objective, next_id++, {{branch_col, v}}};
            open.push(std::move(child));
        }
    }

    double final_bound = root.objective;
    bool node_limit_hit = false;

    while (!open.empty()) {
        if (nodes >= params.node_limit) {
            node_limit_hit = true;
            final_bound = open.top().bound;
            break;
        }
        Node node = open.top();
        open.pop();
        if (have_inc && node.bound >= inc_obj - prune_eps()) {
            // Best-first: every remaining node is at least as bad.
            final_bound = node.bound;
            while (!open.empty()) open.pop();
            break;
        }

        ContinuousSolution sol = solve_with_fixes(ctx, node.fixes, true);
        ++nodes;
        if (sol.status == QpStatus::Infeasible) continue;

        if (sol.status == QpStatus::IterLimit) {
            const int bc = pick_branch_var(sol.x, p.binary_cols, node.fixes, int_tol);
            if (bc < 0) {
                ++unresolved_leaves;
                continue;
            }
            for (int v : {0, 1}) {
                std::vector<Fix> fixes = node.fixes;
                fixes.push_back({bc, v});
                open.push({node.bound, next_id++, std::move(fixes)});
            }
            continue;
        }

        if (have_inc && sol.objective >= inc_obj - prune_eps()) continue;

        const int branch_col = pick_branch_var(sol.x, p.binary_cols, node.fixes, int_tol);
        if (branch_col < 0) {
            if (try_incumbent(sol.x, node.fixes, sol.objective)) continue;
            // fall through to branch on the most fractional free binary even
            // if it is nearly integral, so the subtree is not lost
            int bc = -1;
            double best_frac = -1.0;
            for (int b : p.binary_cols) {
                bool fixed = false;
                for (const auto& [col, val] : node.fixes)
                    if (col == b) fixed = true;
                if (fixed) continue;
                const double frac = std::abs(sol.x[b] - std::round(sol.x[b]));
                if (frac > best_frac) {
                    best_frac = frac;
                    bc = b;
                }
            }
            if (bc < 0) {
                ++unresolved_leaves;  // fully fixed yet not accepted
                continue;
            }
            for (int v : {0, 1}) {
                std::vector<Fix> fixes = node.fixes;
                fixes.push_back({bc, v});
                open.push({sol.objective, next_id++, std::move(fixes)});
            }
            continue;
        }
        for (int v : {0, 1}) {
            std::vector<Fix> fixes = node.fixes;
            fixes.push_back({branch_col, v});
            open.push({sol.objective, next_id++, std::move(fixes)});
        }
    }

    if (!node_limit_hit) {
        if (open.empty() && !have_inc) {
            MiqpSolution s;
            s.status = MiqpStatus::Infeasible;
            s.nodes_explored = nodes;
            s.objective = kInf;
            s.bound = kInf;
            return s;
        }
        if (open.empty() && have_inc) final_bound = inc_obj;
    } else if (!open.empty()) {
        final_bound = open.top().bound;
    }

    MiqpSolution s;
    s.nodes_explored = nodes;
    s.bound = std::min(final_bound, inc_obj);
    if (have_inc) {
        s.x = inc_x;
        s.objective = inc_obj;
        s.rel_gap = relative_gap(inc_obj, s.bound);
        if (node_limit_hit)
            s.status = MiqpStatus::NodeLimit;
        else if (s.rel_gap <= params.gap_tol && unresolved_leaves == 0)
            s.status = MiqpStatus::Optimal;
        else
            s.status = MiqpStatus::Feasible;
    } else {
        s.objective = kInf;
        s.rel_gap = kInf;
        s.status = node_limit_hit ? MiqpStatus::NodeLimit : MiqpStatus::Infeasible;
    }
    return s;
}

MiqpSolution solve_heuristic(const QpProblem& p, const MiqpParams& params) {
    BnbContext ctx(p, params);

    ContinuousSolution root = ctx.engine.solve();
    long solves = 1;
    if (root.status == QpStatus::Infeasible) {
        MiqpSolution s;
        s.status = MiqpStatus::Infeasible;
        s.nodes_explored = solves;
        s.objective = kInf;
        s.bound = kInf;
        return s;
    }
    ctx.root_warm = ctx.engine.last_iterate();

    if (p.binary_cols.empty()) {
        MiqpSolution s = wrap_continuous(root);
        s.nodes_explored = solves;
        return s;
    }

    std::vector<Fix> fixes = round_free(root.x, p.binary_cols, {});
    ContinuousSolution fixed = solve_with_fixes(ctx, fixes, true);
    ++solves;

    if (fixed.status == QpStatus::Infeasible) {
        // Repair: flip rounded binaries in descending fractionality order.
        std::vector<int> order = p.binary_cols;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double fa = std::abs(root.x[a] - std::round(root.x[a]));
            const double fb = std::abs(root.x[b] - std::round(root.x[b]));
            if (fa != fb) return fa > fb;
            return a < b;
        });
        const long budget =
            params.flip_budget < 0 ? static_cast<long>(order.size()) : params.flip_budget;
        long flips = 0;
        for (int b : order) {
            if (flips >= budget) break;
            for (auto& [col, val] : fixes)
                if (col == b) val = 1 - val;
            ++flips;
            fixed = solve_with_fixes(ctx, fixes, true);
            ++solves;
            if (fixed.status != QpStatus::Infeasible) break;
        }
        if (fixed.status == QpStatus::Infeasible) {
            MiqpSolution s;
            s.status = MiqpStatus::Infeasible;
            s.nodes_explored = solves;
            s.objective = kInf;
            s.bound = root.objective;
            return s;
        }
    }

    MiqpSolution s;
    s.x = fixed.x;
    s.objective = fixed.objective;
    s.bound = root.objective;
    s.rel_gap = relative_gap(s.objective, s.bound);
    s.nodes_explored = solves;
    s.status = s.rel_gap <= params.gap_tol ? MiqpStatus::Optimal : MiqpStatus::Feasible;
    return s;
}

double Schedule::inflow(int ev, int slot) const {
    double total = 0.0;
    for (const auto& f : flows)
        if (f.to_ev == ev && f.slot == slot) total += f.kwh;
    return total;
}

double Schedule::outflow(int ev, int slot) const {
    double total = 0.0;
    for (const auto& f : flows)
        if (f.from_ev == ev && f.slot == slot) total += f.kwh;
    return total;
}

double Schedule::total_sent(int ev) const {
    double total = 0.0;
    for (const auto& f : flows)
        if (f.from_ev == ev) total += f.kwh;
    return total;
}

Schedule extract_schedule(const MiqpSolution& sol, const VarMap& m, const Scenario& s) {
    if (sol.status != MiqpStatus::Optimal && sol.status != MiqpStatus::Feasible)
        throw Error("extract_schedule requires an optimal or feasible solution");

    auto clamp0 = [](double v) { return std::abs(v) < 1e-9 ? 0.0 : v; };

    Schedule sched;
    sched.slot_count = s.grid.slot_count;
    sched.slot_hours = s.grid.slot_hours;
    sched.objective = sol.objective;

    const int N = static_cast<int>(s.fleet.size());
    for (int i = 0; i < N; ++i) {
        const EvSpec& ev = s.fleet[i];
        Schedule::EvTrack track;
        track.id = ev.id;
        track.arrival = ev.arrival;
        track.departure = ev.departure;
        track.slots.resize(ev.window_slots());
        for (int t = ev.arrival; t <= ev.departure; ++t) {
            SlotValues& v = track.slots[t - ev.arrival];
            auto get = [&](VarKind k) {
                auto col = m.find(k, i, t);
                return col ? clamp0(sol.x[*col]) : 0.0;
            };
            v.charge_kwh = get(VarKind::Charge);
            v.discharge_kwh = get(VarKind::Discharge);
            v.grid_kwh = get(VarKind::Grid);
            v.renewable_kwh = get(VarKind::Renewable);
            v.v2g_kwh = get(VarKind::V2g);
            v.soc_kwh = get(VarKind::Soc);
            if (auto col = m.find(VarKind::ModeFlag, i, t))
                v.mode_flag = std::round(sol.x[*col]);
            else
                v.mode_flag = v.discharge_kwh > 1e-9 ? 1.0 : 0.0;
        }
        sched.evs.push_back(std::move(track));
    }

    for (const auto& f : m.flows()) {
        const double v = clamp0(sol.x[f.col]);
        if (v > 0.0) sched.flows.push_back({f.from_ev, f.to_ev, f.slot, v});
    }

    // Invariant checks before handing the schedule out.
    for (int i = 0; i < N; ++i) {
        const EvSpec& ev = s.fleet[i];
        const auto& track = sched.evs[i];
        double prev = ev.initial_kwh;
        for (int t = ev.arrival; t <= ev.departure; ++t) {
            const SlotValues& v = track.at(t);
            const double expected =
                prev + ev.eff_charge * v.charge_kwh - v.discharge_kwh / ev.eff_discharge;
            const double resid = std::abs(v.soc_kwh - expected);
            if (resid > 1e-6) {
                std::ostringstream os;
                os << "battery recurrence violated for " << ev.id << " at slot " << t
                   << " (residual " << resid << ")";
                throw InvariantViolationError(os.str(), ev.id, t, resid);
            }
            const double excl_bound = 1e-5 * ev.max_charge_kwh_per_slot *
                                          ev.max_discharge_kwh_per_slot +
                                      1e-12;
            if (v.charge_kwh * v.discharge_kwh > excl_bound) {
                std::ostringstream os;
                os << "simultaneous charge and discharge for " << ev.id << " at slot " << t;
                throw InvariantViolationError(os.str(), ev.id, t,
                                              v.charge_kwh * v.discharge_kwh);
            }
            prev = v.soc_kwh;
        }
        const double dep_resid = std::abs(prev - ev.target_kwh);
        if (dep_resid > 1e-6) {
            std::ostringstream os;
            os << "departure target missed for " << ev.id << " (residual " << dep_resid << ")";
            throw InvariantViolationError(os.str(), ev.id, ev.departure, dep_resid);
        }
    }

    return sched;
}

}  // namespace evfair
