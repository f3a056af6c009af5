#include "evfair/json_io.hpp"
#include "evfair/metrics.hpp"
#include "evfair/scenario_gen.hpp"
#include <chrono>
#include <cstdio>
using namespace evfair;
using Clock = std::chrono::steady_clock;
double ms(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}
int main(int argc, char** argv) {
    const int n = argc > 1 ? atoi(argv[1]) : 20;
    GenConfig cfg = GenConfig::defaults_for(SiteCase::Residential);
    cfg.n_fixed = n / 2;
    cfg.n_random = n - n / 2;
    cfg.seed = 1;
    auto t0 = Clock::now();
    Scenario s = generate_residential(cfg);
    auto t1 = Clock::now();
    auto [p, m] = build_problem(s);
    auto t2 = Clock::now();
    std::printf("n=%d cols=%d eq=%zu ineq=%zu bins=%zu flows=%zu  gen %.0fms build %.0fms\n", n,
                p.num_cols, p.eq_rows.size(), p.ineq_rows.size(), p.binary_cols.size(),
                m.flows().size(), ms(t0, t1), ms(t1, t2));
    StackedForm f = stack_problem(p);
    auto t3 = Clock::now();
    std::printf("stack %.0fms rows=%ld nnz=%ld\n", ms(t2, t3), (long)f.A.rows(),
                (long)f.A.nonZeros());
    QpSettings st;
    QpEngine eng(std::move(f), st);
    auto t4 = Clock::now();
    std::printf("engine setup (scaling+factor) %.0fms\n", ms(t3, t4));
    auto sol = eng.solve();
    auto t5 = Clock::now();
    std::printf("solve %.0fms status %d iters %d polished %d obj %.4f kkt %.2e %.2e %.2e\n",
                ms(t4, t5), (int)sol.status, sol.iterations, (int)sol.polished, sol.objective,
                sol.kkt.primal_infeas, sol.kkt.dual_infeas, sol.kkt.complementarity);
    return 0;
}
