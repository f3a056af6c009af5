// SPDX-License-Identifier: Apache-2.0
#include "evfair/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "evfair/json_io.hpp"
#include "evfair/oracle.hpp"

namespace evfair {

using nlohmann::json;

namespace {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message) {
    json j{{"kind", kind}, {"error", message}};
    err << j.dump() << "\n";
}

double wall_ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string fairness_flag_text(const FairnessPolicy& p) {
    switch (p.variant) {
        case FairnessVariant::Unconstrained: return "none";
        case FairnessVariant::HardPerSlot: return "hard:" + fmt_g17(p.zbar);
        case FairnessVariant::SoftCumulative: return "soft:" + fmt_g17(p.zbar_c);
        case FairnessVariant::Budget:
            return "budget:" + fmt_g17(p.theta) + "," + fmt_g17(p.budget_per_ev);
    }
    return "none";
}

void apply_env_overrides(SolverConfig& cfg) {
    if (const char* v = std::getenv("EVFAIR_GAP_TOL")) cfg.gap_tol = std::stod(v);
    if (const char* v = std::getenv("EVFAIR_TOL")) cfg.tol = std::stod(v);
    if (const char* v = std::getenv("EVFAIR_NODE_LIMIT")) cfg.node_limit = std::stol(v);
    if (const char* v = std::getenv("EVFAIR_SOLVER_MODE")) {
        const std::string m = v;
        if (m != "exact" && m != "heuristic")
            throw ParseError("EVFAIR_SOLVER_MODE must be 'exact' or 'heuristic'");
        cfg.mode = m;
    }
}

struct PointResult {
    bool infeasible = false;
    double objective = 0.0;
    double total_cost = 0.0;
    double jfi = 1.0;
    double rel_gap = 0.0;
    double wall_ms = 0.0;
};

PointResult solve_point(const Scenario& scenario) {
    const auto t0 = std::chrono::steady_clock::now();
    PointResult r;

    MiqpParams params;
    params.gap_tol = scenario.solver.gap_tol;
    params.node_limit = scenario.solver.node_limit;
    params.qp.tol = scenario.solver.tol;

    auto [problem, varmap] = build_problem(scenario);
    MiqpSolution sol = scenario.solver.mode == "heuristic" ? solve_heuristic(problem, params)
                                                           : solve_exact(problem, params);
    if (sol.status == MiqpStatus::Infeasible ||
        (sol.status == MiqpStatus::NodeLimit && !sol.x.size())) {
        r.infeasible = true;
        r.wall_ms = wall_ms_since(t0);
        return r;
    }
    // NodeLimit with an incumbent still extracts
    MiqpSolution printable = sol;
    if (printable.status == MiqpStatus::NodeLimit) printable.status = MiqpStatus::Feasible;
    Schedule sched = extract_schedule(printable, varmap, scenario);
    CostBreakdown costs = cost_breakdown(sched, scenario.tariff, scenario.fleet);
    FairnessReport fr = jain_index(sched);
    r.objective = sol.objective;
    r.total_cost = costs.total;
    r.jfi = fr.jfi;
    r.rel_gap = sol.rel_gap;
    r.wall_ms = wall_ms_since(t0);
    return r;
}

}  // namespace

FairnessPolicy parse_fairness_flag(const std::string& text) {
    if (text == "none") return FairnessPolicy::unconstrained();
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ParseError("fairness flag must be none|hard:<zbar>|soft:<zbarc>|budget:<theta>,<D>");
    const std::string kind = text.substr(0, colon);
    const std::string args = text.substr(colon + 1);
    try {
        if (kind == "hard") return FairnessPolicy::hard(std::stod(args));
        if (kind == "soft") return FairnessPolicy::soft(std::stod(args));
        if (kind == "budget") {
            const auto comma = args.find(',');
            if (comma == std::string::npos)
                throw ParseError("budget fairness needs theta,<D>: got '" + args + "'");
            return FairnessPolicy::budget(std::stod(args.substr(0, comma)),
                                          std::stod(args.substr(comma + 1)));
        }
    } catch (const std::invalid_argument&) {
        throw ParseError("bad number in fairness flag '" + text + "'");
    }
    throw ParseError("unknown fairness kind '" + kind + "'");
}

int run_generate(const GenerateOptions& opt, std::ostream& err) {
    try {
        GenConfig cfg = GenConfig::defaults_for(opt.site);
        cfg.seed = opt.seed;
        if (opt.n_fixed) cfg.n_fixed = *opt.n_fixed;
        if (opt.n_random) cfg.n_random = *opt.n_random;
        if (opt.slot_count) cfg.slot_count_override = *opt.slot_count;
        if (opt.capacity_kwh) cfg.capacity_kwh = *opt.capacity_kwh;
        if (opt.target_range) {
            cfg.target_fraction_lo = opt.target_range->first;
            cfg.target_fraction_hi = opt.target_range->second;
        }
        if (opt.grid_cap) cfg.grid_cap_kwh_per_slot = *opt.grid_cap;

        Scenario s;
        if (opt.site == SiteCase::Residential) {
            if (opt.renewable_peak) {
                TimeGrid g{cfg.slot_count_override > 0 ? cfg.slot_count_override : 48, 0.5, ""};
                cfg.renewable_profile = bell_renewable_profile(g, *opt.renewable_peak);
            }
            s = generate_residential(cfg);
        } else {
            if (opt.renewable_peak) {
                TimeGrid g{cfg.slot_count_override > 0 ? cfg.slot_count_override : 18, 0.5, ""};
                cfg.renewable_profile = bell_renewable_profile(g, *opt.renewable_peak);
            }
            s = generate_shopping(cfg);
        }

        if (!opt.sell_csv_path.empty())
            s.tariff.sell_price = load_sell_prices(opt.sell_csv_path, s.grid);

        save_scenario(s, opt.out_path);
        return kExitOk;
    } catch (const IoError& e) {
        emit_error(err, "io", e.what());
        return kExitBadInput;
    } catch (const Error& e) {
        emit_error(err, "generate", e.what());
        return kExitBadInput;
    }
}

SolveOutcome run_solve(const SolveOptions& opt, std::ostream& err) {
    SolveOutcome out;
    Scenario scenario;
    try {
        scenario = load_scenario(opt.scenario_path);
        apply_env_overrides(scenario.solver);
        if (opt.mode) scenario.mode = *opt.mode;
        if (opt.fairness) scenario.fairness = *opt.fairness;
        if (opt.gap_tol) scenario.solver.gap_tol = *opt.gap_tol;
        if (opt.tol) scenario.solver.tol = *opt.tol;
        if (opt.node_limit) scenario.solver.node_limit = *opt.node_limit;
        if (opt.solver_mode) scenario.solver.mode = *opt.solver_mode;

        ValidationReport violations = validate_scenario(scenario);
        if (!violations.empty()) {
            json list = json::array();
            for (const auto& v : violations)
                list.push_back({{"ev", v.ev_id}, {"field", v.field}, {"message", v.message}});
            json j{{"kind", "validation"}, {"error", "scenario violates invariants"},
                   {"violations", list}};
            err << j.dump() << "\n";
            out.exit_code = kExitBadInput;
            return out;
        }
    } catch (const Error& e) {
        emit_error(err, "parse", e.what());
        out.exit_code = kExitBadInput;
        return out;
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<std::string> warnings;
        auto [problem, varmap] = build_problem(scenario, &warnings);
        for (const auto& w : warnings) err << "warning: " << w << "\n";

        if (!opt.dump_model_path.empty()) {
            std::ostringstream os;
            dump_problem(os, problem, varmap);
            write_text_file(opt.dump_model_path, os.str());
        }

        MiqpParams params;
        params.gap_tol = scenario.solver.gap_tol;
        params.node_limit = scenario.solver.node_limit;
        params.qp.tol = scenario.solver.tol;

        MiqpSolution sol = scenario.solver.mode == "heuristic"
                               ? solve_heuristic(problem, params)
                               : solve_exact(problem, params);

        RunRecord& rec = out.record;
        rec.fingerprint = fingerprint(scenario);
        rec.mode = to_string(scenario.mode);
        rec.fairness = fairness_flag_text(scenario.fairness);
        rec.solver_mode = scenario.solver.mode;
        rec.gap_tol = scenario.solver.gap_tol;
        rec.tol = scenario.solver.tol;
        rec.node_limit = scenario.solver.node_limit;
        rec.status = to_string(sol.status);
        rec.nodes_explored = sol.nodes_explored;

        if (sol.status == MiqpStatus::Infeasible ||
            (sol.status == MiqpStatus::NodeLimit && !sol.x.size())) {
            rec.wall_ms = wall_ms_since(t0);
            emit_error(err, "infeasible", "no feasible schedule exists for this scenario");
            out.exit_code = kExitInfeasible;
            return out;
        }

        MiqpSolution extractable = sol;
        if (extractable.status == MiqpStatus::NodeLimit)
            extractable.status = MiqpStatus::Feasible;
        Schedule sched = extract_schedule(extractable, varmap, scenario);
        CostBreakdown costs = cost_breakdown(sched, scenario.tariff, scenario.fleet);
        FairnessReport fr = jain_index(sched);

        rec.objective = sol.objective;
        rec.bound = sol.bound;
        rec.rel_gap = sol.rel_gap;
        rec.total_cost = costs.total;
        rec.jfi = fr.jfi;
        rec.wall_ms = wall_ms_since(t0);

        json costs_json;
        {
            json per = json::array();
            for (const auto& row : costs.per_ev)
                per.push_back({{"id", row.id},
                               {"grid_cost", row.grid_cost},
                               {"degradation_cost", row.degradation_cost},
                               {"v2g_revenue", row.v2g_revenue},
                               {"net", row.net()}});
            costs_json = {{"per_ev", per},
                          {"grid_cost", costs.grid_cost},
                          {"degradation_cost", costs.degradation_cost},
                          {"v2g_revenue", costs.v2g_revenue},
                          {"total", costs.total}};
        }
        json fairness_json;
        {
            json per = json::object();
            for (const auto& [id, x] : fr.per_ev_mean_v2v) per[id] = x;
            fairness_json = {{"jfi", fr.jfi},
                             {"participant_count", fr.participant_count},
                             {"per_ev_mean_v2v", per},
                             {"policy", rec.fairness}};
        }
        json record_json{{"fingerprint", rec.fingerprint},
                         {"mode", rec.mode},
                         {"fairness", rec.fairness},
                         {"solver", {{"mode", rec.solver_mode},
                                     {"gap_tol", rec.gap_tol},
                                     {"tol", rec.tol},
                                     {"node_limit", rec.node_limit}}},
                         {"status", rec.status},
                         {"objective", rec.objective},
                         {"bound", rec.bound},
                         {"rel_gap", rec.rel_gap},
                         {"nodes_explored", rec.nodes_explored},
                         {"total_cost", rec.total_cost},
                         {"jfi", rec.jfi},
                         {"wall_ms", rec.wall_ms}};

        json run{{"record", record_json},
                 {"schedule", json::parse(schedule_to_json(sched, rec.fingerprint))},
                 {"costs", costs_json},
                 {"fairness_report", fairness_json}};
        out.run_json = run.dump(2) + "\n";
        if (!opt.out_path.empty()) write_text_file(opt.out_path, out.run_json);
        out.exit_code = kExitOk;
        return out;
    } catch (const InfeasibleTargetError& e) {
        emit_error(err, "infeasible", e.what());
        out.exit_code = kExitInfeasible;
        return out;
    } catch (const IoError& e) {
        emit_error(err, "io", e.what());
        out.exit_code = kExitBadInput;
        return out;
    } catch (const Error& e) {
        emit_error(err, "error", e.what());
        out.exit_code = kExitBadInput;
        return out;
    }
}

SweepParam sweep_param_from_string(const std::string& s) {
    if (s == "zbar") return SweepParam::Zbar;
    if (s == "zbarc" || s == "zbar_c") return SweepParam::ZbarC;
    if (s == "theta") return SweepParam::Theta;
    if (s == "budget") return SweepParam::Budget;
    throw ParseError("unknown sweep parameter '" + s + "' (zbar|zbarc|theta|budget)");
}

std::vector<double> expand_range(const std::string& text) {
    double start = 0.0, stop = 0.0, step = 0.0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3)
        throw ParseError("range must be start:stop:step, got '" + text + "'");
    if (step <= 0.0 || stop < start) throw ParseError("range must be increasing: '" + text + "'");
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double v = start + k * step;
        if (v > stop + 1e-12) break;
        out.push_back(v);
    }
    if (out.empty()) throw ParseError("range '" + text + "' is empty");
    return out;
}

namespace {

FairnessPolicy policy_for_point(const SweepSpec& spec, double v1, double v2) {
    const bool grid2 = spec.param2.has_value();
    switch (spec.param) {
        case SweepParam::Zbar: return FairnessPolicy::hard(v1);
        case SweepParam::ZbarC: return FairnessPolicy::soft(v1);
        case SweepParam::Theta:
            return FairnessPolicy::budget(v1, grid2 ? v2 : spec.fixed_budget);
        case SweepParam::Budget:
            return FairnessPolicy::budget(grid2 ? v2 : spec.fixed_theta, v1);
    }
    return FairnessPolicy::unconstrained();
}

}  // namespace

int run_sweep(const SweepOptions& opt, std::ostream& err) {
    Scenario base;
    try {
        base = load_scenario(opt.scenario_path);
        apply_env_overrides(base.solver);
        if (opt.mode) base.mode = *opt.mode;
        if (opt.gap_tol) base.solver.gap_tol = *opt.gap_tol;
        if (opt.tol) base.solver.tol = *opt.tol;
        if (opt.node_limit) base.solver.node_limit = *opt.node_limit;
        if (opt.solver_mode) base.solver.mode = *opt.solver_mode;
        if (opt.spec.values.empty()) throw ParseError("sweep has no points");
        for (size_t i = 1; i < opt.spec.values.size(); ++i)
            if (opt.spec.values[i] <= opt.spec.values[i - 1])
                throw ParseError("sweep points must be strictly increasing");
    } catch (const Error& e) {
        emit_error(err, "parse", e.what());
        return kExitBadInput;
    }

    struct Point {
        double v1, v2;
        bool has_v2;
    };
    std::vector<Point> points;
    if (opt.spec.param2) {
        for (double a : opt.spec.values)
            for (double b : opt.spec.values2) points.push_back({a, b, true});
    } else {
        for (double a : opt.spec.values) points.push_back({a, 0.0, false});
    }

    std::vector<PointResult> results(points.size());
    std::vector<std::string> failures(points.size());

    auto work = [&](size_t idx) {
        Scenario s = base;
        s.fairness = policy_for_point(opt.spec, points[idx].v1, points[idx].v2);
        try {
            results[idx] = solve_point(s);
        } catch (const Error& e) {
            failures[idx] = e.what();
        }
    };

    const int threads = std::max(1, opt.threads);
    if (threads == 1) {
        for (size_t i = 0; i < points.size(); ++i) work(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= points.size()) return;
                    work(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    std::ostringstream csv;
    csv << (opt.spec.param2 ? "theta,budget,total_cost,jfi,rel_gap,wall_ms\n"
                            : "threshold,total_cost,jfi,rel_gap,wall_ms\n");
    for (size_t i = 0; i < points.size(); ++i) {
        if (!failures[i].empty()) {
            emit_error(err, "sweep", "point " + std::to_string(i) + ": " + failures[i]);
            return kExitBadInput;
        }
        const PointResult& r = results[i];
        if (r.infeasible && !opt.keep_going) {
            emit_error(err, "infeasible",
                       "sweep point " + fmt_g17(points[i].v1) + " is infeasible");
            return kExitInfeasible;
        }
        if (opt.spec.param2) csv << fmt_g17(points[i].v1) << ',' << fmt_g17(points[i].v2) << ',';
        else csv << fmt_g17(points[i].v1) << ',';
        if (r.infeasible)
            csv << "inf,nan,nan," << fmt_g17(r.wall_ms) << "\n";
        else
            csv << fmt_g17(r.total_cost) << ',' << fmt_g17(r.jfi) << ',' << fmt_g17(r.rel_gap)
                << ',' << fmt_g17(r.wall_ms) << "\n";
    }

    // post-hoc trend check on single-axis sweeps: cost should not rise as the
    // threshold loosens
    if (!opt.spec.param2) {
        for (size_t i = 1; i < points.size(); ++i) {
            if (results[i].infeasible || results[i - 1].infeasible) continue;
            const double slack =
                2.0 * base.solver.gap_tol * std::max(1.0, std::abs(results[i - 1].total_cost));
            if (results[i].total_cost > results[i - 1].total_cost + slack)
                err << "warning: cost rose from " << fmt_g17(results[i - 1].total_cost) << " to "
                    << fmt_g17(results[i].total_cost) << " at threshold "
                    << fmt_g17(points[i].v1) << "\n";
        }
    }

    try {
        write_text_file(opt.out_csv, csv.str());
    } catch (const IoError& e) {
        emit_error(err, "io", e.what());
        return kExitBadInput;
    }
    return kExitOk;
}

int run_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        Scenario scenario = load_scenario(opt.scenario_path);
        std::string recorded_fp;
        Schedule sched =
            schedule_from_json_text(read_text_file(opt.schedule_path), scenario, &recorded_fp);
        const std::string actual_fp = fingerprint(scenario);
        if (!recorded_fp.empty() && recorded_fp != actual_fp) {
            emit_error(err, "fingerprint",
                       "schedule was produced from a different scenario (recorded " + recorded_fp +
                           ", scenario hashes to " + actual_fp + ")");
            return kExitBadInput;
        }

        AuditReport report = feasibility_audit(sched, scenario, opt.tol);
        out << "family,max_violation\n";
        for (const auto& [family, residual] : report.max_violation)
            out << family << ',' << fmt_g17(residual) << "\n";
        if (!report.pass(opt.tol)) {
            err << "FAIL: " << report.worst_family << " residual " << fmt_g17(report.worst)
                << " exceeds tolerance " << fmt_g17(opt.tol) << "\n";
            return kExitVerifyFailed;
        }
        out << "PASS (tolerance " << fmt_g17(opt.tol) << ")\n";
        return kExitOk;
    } catch (const Error& e) {
        emit_error(err, "parse", e.what());
        return kExitBadInput;
    }
}

}  // namespace evfair
