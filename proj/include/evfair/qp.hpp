// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <vector>

#include "evfair/model.hpp"

namespace evfair {

struct QpSettings {
    double tol = 1e-6;          // absolute KKT residual tolerance, unscaled
    int max_iter = 200000;
    int check_interval = 25;
    double sigma = 1e-6;        // primal regularization
    double alpha = 1.6;         // relaxation
    double rho = 0.1;           // initial step; equality rows get rho * rho_eq_scale
    double rho_eq_scale = 1e3;
    bool adaptive_rho = true;
    int adaptive_rho_interval = 100;
    int scaling_iters = 10;
    double infeas_margin = 1e-7;   // rejection margin for the infeasibility certificate
    double polish_delta = 1e-8;    // regularization of the polish KKT system
    int polish_refine_steps = 6;
    int polish_retry_interval = 500;
};

enum class QpStatus { Optimal, Infeasible, IterLimit };

struct KktResiduals {
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    double complementarity = 0.0;
    double worst() const;
};

struct ContinuousSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd dual;  // row multipliers in stacked order (eq, ineq, box)
    double objective = 0.0;
    KktResiduals kkt;
    QpStatus status = QpStatus::IterLimit;
    int iterations = 0;
    bool polished = false;
    // Farkas margin when status == Infeasible: how far the certificate's
    // support function is below zero (always > 0 on detection).
    double certificate_residual = 0.0;
};

/// Row-stacked form used by the engine:
///   l <= [A_eq; A_ineq; I] x <= u
/// with l = u on equality rows, l = -inf on inequality rows, and the
/// variable box as the trailing identity block.
struct StackedForm {
    Eigen::SparseMatrix<double> P;  // full symmetric
    Eigen::VectorXd q;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd l;
    Eigen::VectorXd u;
    int box_offset = 0;       // first identity row
    int num_eq_rows = 0;
    std::vector<char> high_rho;  // per-row flag: step scaled by rho_eq_scale
};

/// Binary bounds are kept as given ([0,1] unless externally fixed); callers
/// relax or fix binaries by overriding l/u on the box rows.
StackedForm stack_problem(const QpProblem& p);

/// Residuals of a candidate (x, y) against a stacked form, computed
/// independently of any solve path.
KktResiduals compute_kkt_residuals(const StackedForm& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y);

struct WarmStart {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd z;
};

/// Operator-splitting solver for convex QPs (ADMM iteration on the stacked
/// form, Ruiz equilibration, quasi-definite LDLT of the KKT system, active-set
/// polishing). Handles PSD and zero quadratics alike. One engine instance can
/// re-solve with modified row bounds while reusing the factorization, which is
/// what branch-and-bound needs when it fixes binaries.
class QpEngine {
public:
    QpEngine(StackedForm form, QpSettings settings);
    ~QpEngine();
    QpEngine(QpEngine&&) noexcept;
    QpEngine& operator=(QpEngine&&) noexcept;

    ContinuousSolution solve();
    ContinuousSolution solve(const Eigen::VectorXd& l_override, const Eigen::VectorXd& u_override,
                             const WarmStart* warm = nullptr, bool lock_rho = false);

    const StackedForm& form() const;
    /// Final iterate of the last solve, reusable as a warm start.
    WarmStart last_iterate() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot convenience: stack, solve with binaries relaxed to their bounds.
ContinuousSolution solve_qp(const QpProblem& p, const QpSettings& settings = {});

}  // namespace evfair
