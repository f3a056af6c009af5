// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "evfair/cli.hpp"
#include "evfair/errors.hpp"

using namespace evfair;

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware EV charging / V2G / V2V schedule optimizer"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a scenario JSON file");
    std::string gen_case = "residential";
    GenerateOptions gen_opt;
    int gen_seed = 1;
    int gen_n_fixed = -1, gen_n_random = -1, gen_slots = 0;
    double gen_grid_cap = 0.0, gen_renewable_peak = 0.0;
    gen->add_option("--case", gen_case, "residential | shopping")
        ->check(CLI::IsMember({"residential", "shopping"}));
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--n-fixed", gen_n_fixed, "EVs parked for the whole horizon");
    gen->add_option("--n-random", gen_n_random, "EVs with random windows");
    gen->add_option("--slots", gen_slots, "override the slot count");
    double gen_capacity = 0.0;
    std::string gen_target_range;
    gen->add_option("--capacity", gen_capacity, "battery capacity, kWh");
    gen->add_option("--target-range", gen_target_range,
                    "departure target as lo:hi fractions of capacity");
    gen->add_option("--grid-cap", gen_grid_cap, "aggregate grid cap, kWh/slot");
    gen->add_option("--renewable-peak", gen_renewable_peak,
                    "bell-shaped renewable profile peak, kWh/slot");
    gen->add_option("--sell-csv", gen_opt.sell_csv_path,
                    "half-hourly wholesale price CSV (timestamp,price_per_mwh)");
    gen->add_option("-o,--out", gen_opt.out_path, "output scenario path")->required();

    // solve
    auto* solve = app.add_subcommand("solve", "Solve one scenario and write a run artifact");
    SolveOptions solve_opt;
    std::string solve_mode_flag, solve_fairness_flag, solve_solver_flag;
    double solve_gap = -1.0, solve_tol = -1.0;
    long solve_nodes = -1;
    solve->add_option("scenario", solve_opt.scenario_path, "scenario JSON")->required();
    solve->add_option("-o,--out", solve_opt.out_path, "run artifact output path");
    solve->add_option("--mode", solve_mode_flag, "charging-only | v2g | joint")
        ->check(CLI::IsMember({"charging-only", "charging_only", "v2g", "v2g_only", "joint"}));
    solve->add_option("--fairness", solve_fairness_flag,
                      "none | hard:<zbar> | soft:<zbarc> | budget:<theta>,<D>");
    solve->add_option("--gap-tol", solve_gap, "branch-and-bound relative gap tolerance");
    solve->add_option("--tol", solve_tol, "QP residual tolerance");
    solve->add_option("--node-limit", solve_nodes, "branch-and-bound node limit");
    solve->add_option("--solver", solve_solver_flag, "exact | heuristic")
        ->check(CLI::IsMember({"exact", "heuristic"}));
    solve->add_option("--dump-model", solve_opt.dump_model_path,
                      "write the assembled problem in sparse text form");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Sweep a fairness threshold, write CSV");
    SweepOptions sweep_opt;
    std::string sw_param = "zbar", sw_range, sw_values;
    std::string sw_param2, sw_range2, sw_values2;
    std::string sw_mode_flag, sw_solver_flag;
    double sw_fixed_theta = 0.5, sw_fixed_budget = 2.0, sw_gap = -1.0, sw_tol = -1.0;
    long sw_nodes = -1;
    sweep->add_option("scenario", sweep_opt.scenario_path, "scenario JSON")->required();
    sweep->add_option("-o,--out", sweep_opt.out_csv, "output CSV path")->required();
    sweep->add_option("--param", sw_param, "zbar | zbarc | theta | budget");
    sweep->add_option("--range", sw_range, "start:stop:step");
    sweep->add_option("--values", sw_values, "comma-separated explicit points");
    sweep->add_option("--param2", sw_param2, "second axis for grid sweeps");
    sweep->add_option("--range2", sw_range2, "second axis range");
    sweep->add_option("--values2", sw_values2, "second axis explicit points");
    sweep->add_option("--fixed-theta", sw_fixed_theta, "companion theta when sweeping budget");
    sweep->add_option("--fixed-budget", sw_fixed_budget, "companion budget when sweeping theta");
    sweep->add_flag("--keep-going", sweep_opt.keep_going, "continue past infeasible points");
    sweep->add_option("--threads", sweep_opt.threads, "worker pool size");
    sweep->add_option("--mode", sw_mode_flag, "charging-only | v2g | joint");
    sweep->add_option("--gap-tol", sw_gap, "");
    sweep->add_option("--tol", sw_tol, "");
    sweep->add_option("--node-limit", sw_nodes, "");
    sweep->add_option("--solver", sw_solver_flag, "exact | heuristic")
        ->check(CLI::IsMember({"exact", "heuristic"}));

    // verify
    auto* verify = app.add_subcommand("verify", "Audit a schedule against its scenario");
    VerifyOptions verify_opt;
    verify->add_option("schedule", verify_opt.schedule_path, "run artifact or schedule JSON")
        ->required();
    verify->add_option("scenario", verify_opt.scenario_path, "scenario JSON")->required();
    verify->add_option("--tol", verify_opt.tol, "audit tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            gen_opt.site = gen_case == "shopping" ? SiteCase::Shopping : SiteCase::Residential;
            gen_opt.seed = static_cast<uint64_t>(gen_seed);
            if (gen_n_fixed >= 0) gen_opt.n_fixed = gen_n_fixed;
            if (gen_n_random >= 0) gen_opt.n_random = gen_n_random;
            if (gen_slots > 0) gen_opt.slot_count = gen_slots;
            if (gen_capacity > 0.0) gen_opt.capacity_kwh = gen_capacity;
            if (!gen_target_range.empty()) {
                double lo = 0.0, hi = 0.0;
                if (std::sscanf(gen_target_range.c_str(), "%lf:%lf", &lo, &hi) != 2)
                    throw ParseError("--target-range must be lo:hi");
                gen_opt.target_range = {lo, hi};
            }
            if (gen_grid_cap > 0.0) gen_opt.grid_cap = gen_grid_cap;
            if (gen_renewable_peak > 0.0) gen_opt.renewable_peak = gen_renewable_peak;
            return run_generate(gen_opt, std::cerr);
        }
        if (solve->parsed()) {
            if (!solve_mode_flag.empty()) solve_opt.mode = mode_from_string(solve_mode_flag);
            if (!solve_fairness_flag.empty())
                solve_opt.fairness = parse_fairness_flag(solve_fairness_flag);
            if (solve_gap >= 0.0) solve_opt.gap_tol = solve_gap;
            if (solve_tol >= 0.0) solve_opt.tol = solve_tol;
            if (solve_nodes >= 0) solve_opt.node_limit = solve_nodes;
            if (!solve_solver_flag.empty()) solve_opt.solver_mode = solve_solver_flag;
            SolveOutcome outcome = run_solve(solve_opt, std::cerr);
            if (outcome.exit_code == kExitOk && solve_opt.out_path.empty())
                std::cout << outcome.run_json;
            return outcome.exit_code;
        }
        if (sweep->parsed()) {
            sweep_opt.spec.param = sweep_param_from_string(sw_param);
            auto parse_points = [](const std::string& range,
                                   const std::string& values) -> std::vector<double> {
                if (!range.empty()) return expand_range(range);
                std::vector<double> out;
                std::stringstream ss(values);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) out.push_back(std::stod(item));
                return out;
            };
            sweep_opt.spec.values = parse_points(sw_range, sw_values);
            if (sweep_opt.spec.values.empty()) {
                // case defaults matching the published axis ranges
                switch (sweep_opt.spec.param) {
                    case SweepParam::Zbar: sweep_opt.spec.values = expand_range("0.1:1.5:0.1"); break;
                    case SweepParam::ZbarC: sweep_opt.spec.values = expand_range("1:14:1"); break;
                    case SweepParam::Theta: sweep_opt.spec.values = expand_range("0.1:1.0:0.1"); break;
                    case SweepParam::Budget: sweep_opt.spec.values = expand_range("1:5:0.5"); break;
                }
            }
            if (!sw_param2.empty()) {
                sweep_opt.spec.param2 = sweep_param_from_string(sw_param2);
                sweep_opt.spec.values2 = parse_points(sw_range2, sw_values2);
                if (sweep_opt.spec.values2.empty())
                    throw ParseError("--param2 requires --range2 or --values2");
            }
            sweep_opt.spec.fixed_theta = sw_fixed_theta;
            sweep_opt.spec.fixed_budget = sw_fixed_budget;
            if (!sw_mode_flag.empty()) sweep_opt.mode = mode_from_string(sw_mode_flag);
            if (sw_gap >= 0.0) sweep_opt.gap_tol = sw_gap;
            if (sw_tol >= 0.0) sweep_opt.tol = sw_tol;
            if (sw_nodes >= 0) sweep_opt.node_limit = sw_nodes;
            if (!sw_solver_flag.empty()) sweep_opt.solver_mode = sw_solver_flag;
            return run_sweep(sweep_opt, std::cerr);
        }
        if (verify->parsed()) return run_verify(verify_opt, std::cout, std::cerr);
    } catch (const Error& e) {
        std::cerr << "{\"kind\":\"parse\",\"error\":\"" << e.what() << "\"}\n";
        return kExitBadInput;
    }
    return kExitBadInput;
}
