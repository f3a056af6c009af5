// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evfair/metrics.hpp"
#include "evfair/scenario_gen.hpp"

namespace evfair {

// Exit-code contract shared by all subcommands, so experiment scripts can
// branch on feasibility: 0 solved, 1 verification failed, 2 infeasible,
// 3 parse/validation failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitBadInput = 3;

/// Parses the flat fairness flag: none | hard:<zbar> | soft:<zbarc> |
/// budget:<theta>,<budget>. Throws ParseError on anything else.
FairnessPolicy parse_fairness_flag(const std::string& text);

struct GenerateOptions {
    SiteCase site = SiteCase::Residential;
    uint64_t seed = 1;
    std::string out_path;
    std::optional<int> n_fixed;
    std::optional<int> n_random;
    std::optional<int> slot_count;
    std::optional<double> capacity_kwh;
    std::optional<std::pair<double, double>> target_range;  // fractions of capacity
    std::optional<double> grid_cap;
    std::optional<double> renewable_peak;  // bell profile peak, kWh/slot
    std::string sell_csv_path;             // wholesale prices; default derives from TOU
};

int run_generate(const GenerateOptions& opt, std::ostream& err);

struct SolveOptions {
    std::string scenario_path;
    std::string out_path;  // run artifact; empty = don't write
    std::optional<SolveMode> mode;
    std::optional<FairnessPolicy> fairness;
    std::optional<double> gap_tol;
    std::optional<double> tol;
    std::optional<long> node_limit;
    std::optional<std::string> solver_mode;  // exact | heuristic
    std::string dump_model_path;
};

struct RunRecord {
    std::string fingerprint;
    std::string mode;
    std::string fairness;
    std::string solver_mode;
    double gap_tol = 0.0;
    double tol = 0.0;
    long node_limit = 0;
    std::string status;
    double objective = 0.0;
    double bound = 0.0;
    double rel_gap = 0.0;
    long nodes_explored = 0;
    double total_cost = 0.0;
    double jfi = 1.0;
    double wall_ms = 0.0;
};

struct SolveOutcome {
    int exit_code = kExitOk;
    RunRecord record;
    std::string run_json;  // full artifact text; empty on failure
};

/// Solves one scenario end to end (build, solve, extract, metrics) and writes
/// the run artifact. Solver parameter precedence: flags > environment
/// (EVFAIR_GAP_TOL, EVFAIR_TOL, EVFAIR_NODE_LIMIT, EVFAIR_SOLVER_MODE) >
/// scenario JSON > defaults. Errors are reported as machine-readable JSON on
/// `err`.
SolveOutcome run_solve(const SolveOptions& opt, std::ostream& err);

enum class SweepParam { Zbar, ZbarC, Theta, Budget };

SweepParam sweep_param_from_string(const std::string& s);

struct SweepSpec {
    SweepParam param = SweepParam::Zbar;
    std::vector<double> values;  // strictly increasing
    // second axis for (theta x budget)-style grids
    std::optional<SweepParam> param2;
    std::vector<double> values2;
    // companion values when sweeping one budget axis alone
    double fixed_theta = 0.5;
    double fixed_budget = 2.0;
};

/// Expands "start:stop:step" into a strictly increasing inclusive list.
std::vector<double> expand_range(const std::string& text);

struct SweepOptions {
    std::string scenario_path;
    std::string out_csv;
    SweepSpec spec;
    bool keep_going = false;
    int threads = 1;
    std::optional<SolveMode> mode;
    std::optional<double> gap_tol;
    std::optional<double> tol;
    std::optional<long> node_limit;
    std::optional<std::string> solver_mode;
};

/// One CSV row per sweep point (threshold,total_cost,jfi,rel_gap,wall_ms; the
/// two-axis form emits theta,budget,...). Rows are emitted in sweep order
/// regardless of worker completion order. Warns on stderr when the cost
/// column rises beyond twice the solver gap.
int run_sweep(const SweepOptions& opt, std::ostream& err);

struct VerifyOptions {
    std::string schedule_path;
    std::string scenario_path;
    double tol = 1e-6;
};

/// Prints the audit residual table on `out`; exit 0 iff every family passes.
int run_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace evfair
