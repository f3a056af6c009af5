// SPDX-License-Identifier: Apache-2.0
#include "evfair/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

Eigen::VectorXd cwise_clamp(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
    return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

double KktResiduals::worst() const {
    return std::max({primal_infeas, dual_infeas, complementarity});
}

StackedForm stack_problem(const QpProblem& p) {
    const int n = p.num_cols;
    const int me = static_cast<int>(p.eq_rows.size());
    const int mi = static_cast<int>(p.ineq_rows.size());
    const int m = me + mi + n;

    StackedForm f;
    f.box_offset = me + mi;
    f.num_eq_rows = me;
    f.q = Eigen::Map<const Eigen::VectorXd>(p.linear.data(), n);
    f.l.resize(m);
    f.u.resize(m);
    f.high_rho.assign(m, 0);

    std::vector<Triplet> pt;
    pt.reserve(n);
    for (int j = 0; j < n; ++j)
        if (p.quad_diag[j] != 0.0) pt.emplace_back(j, j, p.quad_diag[j]);
    f.P.resize(n, n);
    f.P.setFromTriplets(pt.begin(), pt.end());

    std::vector<Triplet> at;
    for (int r = 0; r < me; ++r) {
        for (const auto& [col, coef] : p.eq_rows[r].terms) at.emplace_back(r, col, coef);
        f.l[r] = p.eq_rows[r].rhs;
        f.u[r] = p.eq_rows[r].rhs;
        f.high_rho[r] = 1;
    }
    for (int r = 0; r < mi; ++r) {
        for (const auto& [col, coef] : p.ineq_rows[r].terms) at.emplace_back(me + r, col, coef);
        f.l[me + r] = -kInf;
        f.u[me + r] = p.ineq_rows[r].rhs;
    }
    for (int j = 0; j < n; ++j) {
        at.emplace_back(me + mi + j, j, 1.0);
        f.l[me + mi + j] = p.lower[j];
        f.u[me + mi + j] = p.upper[j];
    }
    // Binary box rows keep a fixed high step so fixing them in branch-and-bound
    // does not force a refactorization.
    for (int b : p.binary_cols) f.high_rho[me + mi + b] = 1;

    f.A.resize(m, n);
    f.A.setFromTriplets(at.begin(), at.end());
    f.A.makeCompressed();
    f.P.makeCompressed();
    return f;
}

namespace {

double comp_term(double y, double row_val, double lo, double hi) {
    double c = 0.0;
    const double pos = std::max(y, 0.0);
    const double neg = std::max(-y, 0.0);
    if (pos > 1e-12) c = std::max(c, hi == kInf ? kInf : pos * std::abs(hi - row_val));
    if (neg > 1e-12) c = std::max(c, lo == -kInf ? kInf : neg * std::abs(row_val - lo));
    return c;
}

KktResiduals residuals_at(const StackedForm& f, const Eigen::VectorXd& l, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    KktResiduals r;
    const Eigen::VectorXd ax = f.A * x;
    for (int i = 0; i < ax.size(); ++i) {
        r.primal_infeas = std::max({r.primal_infeas, ax[i] - u[i], l[i] - ax[i]});
        r.complementarity = std::max(r.complementarity, comp_term(y[i], ax[i], l[i], u[i]));
    }
    r.primal_infeas = std::max(r.primal_infeas, 0.0);
    const Eigen::VectorXd d = f.P * x + f.q + f.A.transpose() * y;
    r.dual_infeas = d.lpNorm<Eigen::Infinity>();
    return r;
}

}  // namespace

KktResiduals compute_kkt_residuals(const StackedForm& f, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y) {
    return residuals_at(f, f.l, f.u, x, y);
}

struct QpEngine::Impl {
    QpSettings st;
    StackedForm f0;       // unscaled problem
    SpMat At0;            // A0 transposed, for dual residuals and polish rows
    int n = 0, m = 0;

    // Ruiz-equilibrated copies
    SpMat Ps, As, Ats;
    Eigen::VectorXd qs, D, E;
    double cost_scale = 1.0;

    double rho_bar = 0.1;
    Eigen::VectorXd rho_vec, rho_inv;

    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    std::vector<Triplet> kkt_fixed;  // P + sigma*I block and A block
    bool pattern_analyzed = false;

    // iterates of the last solve, scaled
    Eigen::VectorXd xb, zb, yb;

    explicit Impl(StackedForm form, QpSettings settings) : st(settings), f0(std::move(form)) {
        n = static_cast<int>(f0.P.rows());
        m = static_cast<int>(f0.A.rows());
        At0 = f0.A.transpose();
        At0.makeCompressed();
        rho_bar = st.rho;
        equilibrate();
        build_fixed_triplets();
        set_rho(rho_bar, true);
        xb.setZero(n);
        zb.setZero(m);
        yb.setZero(m);
    }

    void equilibrate() {
        Ps = f0.P;
        As = f0.A;
        qs = f0.q;
        D.setOnes(n);
        E.setOnes(m);
        cost_scale = 1.0;

        Eigen::VectorXd colnorm(n), rownorm(m), dx(n), dy(m);
        for (int k = 0; k < st.scaling_iters; ++k) {
            colnorm.setZero();
            rownorm.setZero();
            for (int j = 0; j < n; ++j)
                for (SpMat::InnerIterator it(Ps, j); it; ++it)
                    colnorm[j] = std::max(colnorm[j], std::abs(it.value()));
            for (int j = 0; j < n; ++j)
                for (SpMat::InnerIterator it(As, j); it; ++it) {
                    colnorm[j] = std::max(colnorm[j], std::abs(it.value()));
                    rownorm[it.row()] = std::max(rownorm[it.row()], std::abs(it.value()));
                }
            for (int j = 0; j < n; ++j)
                dx[j] = colnorm[j] > 1e-10 ? 1.0 / std::sqrt(colnorm[j]) : 1.0;
            for (int i = 0; i < m; ++i)
                dy[i] = rownorm[i] > 1e-10 ? 1.0 / std::sqrt(rownorm[i]) : 1.0;
            dx = dx.cwiseMax(1e-6).cwiseMin(1e6);
            dy = dy.cwiseMax(1e-6).cwiseMin(1e6);

            for (int j = 0; j < n; ++j)
                for (SpMat::InnerIterator it(Ps, j); it; ++it)
                    it.valueRef() *= dx[it.row()] * dx[j];
            for (int j = 0; j < n; ++j)
                for (SpMat::InnerIterator it(As, j); it; ++it)
                    it.valueRef() *= dy[it.row()] * dx[j];
            qs.array() *= dx.array();
            D.array() *= dx.array();
            E.array() *= dy.array();

            // cost scaling toward unit objective magnitude
            double pnorm_mean = 0.0;
            for (int j = 0; j < n; ++j) {
                double cn = 0.0;
                for (SpMat::InnerIterator it(Ps, j); it; ++it)
                    cn = std::max(cn, std::abs(it.value()));
                pnorm_mean += cn;
            }
            pnorm_mean /= std::max(1, n);
            const double denom = std::max(pnorm_mean, qs.lpNorm<Eigen::Infinity>());
            double gamma = denom > 1e-10 ? 1.0 / denom : 1.0;
            gamma = std::clamp(gamma, 1e-6, 1e6);
            Ps *= gamma;
            qs *= gamma;
            cost_scale *= gamma;
        }
        Ats = As.transpose();
        Ats.makeCompressed();
    }

    void build_fixed_triplets() {
        kkt_fixed.clear();
        kkt_fixed.reserve(Ps.nonZeros() + n + As.nonZeros());
        for (int j = 0; j < n; ++j)
            for (SpMat::InnerIterator it(Ps, j); it; ++it)
                if (it.row() >= j) kkt_fixed.emplace_back(it.row(), j, it.value());
        for (int j = 0; j < n; ++j) kkt_fixed.emplace_back(j, j, st.sigma);
        for (int j = 0; j < n; ++j)
            for (SpMat::InnerIterator it(As, j); it; ++it)
                kkt_fixed.emplace_back(n + it.row(), j, it.value());
    }

    void set_rho(double rb, bool first) {
        rho_bar = rb;
        rho_vec.resize(m);
        for (int i = 0; i < m; ++i) {
            const double r = f0.high_rho[i] ? rb * st.rho_eq_scale : rb;
            rho_vec[i] = std::clamp(r, 1e-6, 1e6);
        }
        rho_inv = rho_vec.cwiseInverse();

        std::vector<Triplet> tr = kkt_fixed;
        tr.reserve(tr.size() + m);
        for (int i = 0; i < m; ++i) tr.emplace_back(n + i, n + i, -rho_inv[i]);
        SpMat kkt(n + m, n + m);
        kkt.setFromTriplets(tr.begin(), tr.end());
        kkt.makeCompressed();
        if (first && !pattern_analyzed) {
            ldlt.analyzePattern(kkt);
            pattern_analyzed = true;
        }
        ldlt.factorize(kkt);
    }

    // --- unscaling helpers ---
    Eigen::VectorXd unscale_x() const { return D.cwiseProduct(xb); }
    Eigen::VectorXd unscale_z() const { return zb.cwiseQuotient(E); }
    Eigen::VectorXd unscale_y() const { return E.cwiseProduct(yb) / cost_scale; }

    double objective(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(f0.P * x) + f0.q.dot(x);
    }

    // Farkas-style certificate over the bounded box: for feasible x,
    //   v'Ax >= -sum_j |(A'v)_j| * B_j  and  v'Ax <= u'(v)+ + l'(v)-,
    // so support + bound_sum < 0 proves the system empty.
    bool certifies_infeasible(const Eigen::VectorXd& v, const Eigen::VectorXd& l,
                              const Eigen::VectorXd& u, double* margin_out) const {
        const double nv = v.lpNorm<Eigen::Infinity>();
        if (nv < 1e-10) return false;
        const Eigen::VectorXd vn = v / nv;
        double support = 0.0;
        for (int i = 0; i < m; ++i) {
            const double pos = std::max(vn[i], 0.0);
            const double neg = std::min(vn[i], 0.0);
            if (pos > 1e-12) {
                if (u[i] == kInf) return false;
                support += u[i] * pos;
            }
            if (neg < -1e-12) {
                if (l[i] == -kInf) return false;
                support += l[i] * neg;
            }
        }
        const Eigen::VectorXd g = At0 * vn;
        double bound_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double gl = l[f0.box_offset + j];
            const double gu = u[f0.box_offset + j];
            const double b = std::max(std::abs(gl), std::abs(gu));
            if (std::isinf(b)) {
                if (std::abs(g[j]) > 1e-8) return false;
            } else {
                bound_sum += std::abs(g[j]) * b;
            }
        }
        const double margin = support + bound_sum;
        if (margin < -st.infeas_margin) {
            if (margin_out) *margin_out = -margin;
            return true;
        }
        return false;
    }

    // Equality-constrained re-solve on the detected active set, with
    // iterative refinement against the unregularized KKT system.
    bool polish(const Eigen::VectorXd& l, const Eigen::VectorXd& u, const Eigen::VectorXd& y_hint,
                const Eigen::VectorXd& z_hint, bool from_z, ContinuousSolution* out) const {
        std::vector<int> active;
        std::vector<double> target;
        active.reserve(m / 4);
        for (int i = 0; i < m; ++i) {
            if (l[i] == u[i]) {
                active.push_back(i);
                target.push_back(l[i]);
            } else if (from_z) {
                if (l[i] != -kInf && z_hint[i] - l[i] < 1e-7) {
                    active.push_back(i);
                    target.push_back(l[i]);
                } else if (u[i] != kInf && u[i] - z_hint[i] < 1e-7) {
                    active.push_back(i);
                    target.push_back(u[i]);
                }
            } else {
                if (y_hint[i] < 0.0 && l[i] != -kInf) {
                    active.push_back(i);
                    target.push_back(l[i]);
                } else if (y_hint[i] > 0.0 && u[i] != kInf) {
                    active.push_back(i);
                    target.push_back(u[i]);
                }
            }
        }
        const int na = static_cast<int>(active.size());

        std::vector<Triplet> tr;
        tr.reserve(f0.P.nonZeros() + n + At0.nonZeros() + na);
        for (int j = 0; j < n; ++j)
            for (SpMat::InnerIterator it(f0.P, j); it; ++it)
                if (it.row() >= j) tr.emplace_back(it.row(), j, it.value());
        for (int j = 0; j < n; ++j) tr.emplace_back(j, j, st.polish_delta);
        for (int k = 0; k < na; ++k) {
            for (SpMat::InnerIterator it(At0, active[k]); it; ++it)
                tr.emplace_back(n + k, it.row(), it.value());
            tr.emplace_back(n + k, n + k, -st.polish_delta);
        }
        SpMat kkt(n + na, n + na);
        kkt.setFromTriplets(tr.begin(), tr.end());
        kkt.makeCompressed();

        Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> fac;
        fac.compute(kkt);
        if (fac.info() != Eigen::Success) return false;

        Eigen::VectorXd rhs(n + na);
        rhs.head(n) = -f0.q;
        for (int k = 0; k < na; ++k) rhs[n + k] = target[k];

        Eigen::VectorXd sol = fac.solve(rhs);
        Eigen::VectorXd resid(n + na);
        for (int step = 0; step < st.polish_refine_steps; ++step) {
            const Eigen::VectorXd xs = sol.head(n);
            Eigen::VectorXd lam = sol.tail(na);
            Eigen::VectorXd gty = Eigen::VectorXd::Zero(n);
            Eigen::VectorXd gx(na);
            for (int k = 0; k < na; ++k) {
                double dot = 0.0;
                for (SpMat::InnerIterator it(At0, active[k]); it; ++it) {
                    gty[it.row()] += it.value() * lam[k];
                    dot += it.value() * xs[it.row()];
                }
                gx[k] = dot;
            }
            resid.head(n) = -f0.q - (f0.P * xs) - gty;
            for (int k = 0; k < na; ++k) resid[n + k] = target[k] - gx[k];
            sol += fac.solve(resid);
        }

        ContinuousSolution cand;
        cand.x = sol.head(n);
        cand.dual = Eigen::VectorXd::Zero(m);
        for (int k = 0; k < na; ++k) cand.dual[active[k]] = sol[n + k];
        cand.kkt = residuals_at(f0, l, u, cand.x, cand.dual);
        if (cand.kkt.worst() > st.tol) return false;
        cand.objective = objective(cand.x);
        cand.status = QpStatus::Optimal;
        cand.polished = true;
        *out = std::move(cand);
        return true;
    }

    ContinuousSolution run(const Eigen::VectorXd& l, const Eigen::VectorXd& u,
                           const WarmStart* warm, bool lock_rho) {
        const Eigen::VectorXd ls = E.cwiseProduct(l);
        const Eigen::VectorXd us = E.cwiseProduct(u);

        if (warm && warm->x.size() == n) {
            xb = warm->x.cwiseQuotient(D);
            zb = E.cwiseProduct(warm->z);
            yb = cost_scale * warm->y.cwiseQuotient(E);
        } else {
            xb.setZero(n);
            zb.setZero(m);
            yb.setZero(m);
        }

        Eigen::VectorXd y_prev = unscale_y();
        Eigen::VectorXd rhs(n + m), sol_vec(n + m), w(m), ztil(m);
        int last_polish_attempt = -st.polish_retry_interval;

        ContinuousSolution best;
        best.status = QpStatus::IterLimit;

        for (int iter = 1; iter <= st.max_iter; ++iter) {
            rhs.head(n) = st.sigma * xb - qs;
            rhs.tail(m) = zb - yb.cwiseProduct(rho_inv);
            sol_vec = ldlt.solve(rhs);
            const auto xt = sol_vec.head(n);
            const auto nu = sol_vec.tail(m);
            ztil = zb + (nu - yb).cwiseProduct(rho_inv);
            xb = st.alpha * xt + (1.0 - st.alpha) * xb;
            w = st.alpha * ztil + (1.0 - st.alpha) * zb + yb.cwiseProduct(rho_inv);
            zb = cwise_clamp(w, ls, us);
            yb = rho_vec.cwiseProduct(w - zb);

            if (iter % st.check_interval != 0 && iter != st.max_iter) continue;

            const Eigen::VectorXd x = unscale_x();
            const Eigen::VectorXd z = unscale_z();
            const Eigen::VectorXd y = unscale_y();

            const double r_prim = (f0.A * x - z).lpNorm<Eigen::Infinity>();
            const Eigen::VectorXd dres = f0.P * x + f0.q + At0 * y;
            const double r_dual = dres.lpNorm<Eigen::Infinity>();

            best.x = x;
            best.dual = y;
            best.iterations = iter;

            if (r_prim <= st.tol && r_dual <= st.tol) {
                if (iter - last_polish_attempt >= st.polish_retry_interval) {
                    last_polish_attempt = iter;
                    ContinuousSolution polished;
                    if (polish(l, u, y, z, false, &polished) ||
                        polish(l, u, y, z, true, &polished)) {
                        polished.iterations = iter;
                        return polished;
                    }
                }
                KktResiduals res = residuals_at(f0, l, u, x, y);
                if (res.worst() <= st.tol) {
                    best.kkt = res;
                    best.objective = objective(x);
                    best.status = QpStatus::Optimal;
                    return best;
                }
            }

            double margin = 0.0;
            const Eigen::VectorXd dy = y - y_prev;
            if (certifies_infeasible(dy, l, u, &margin) ||
                certifies_infeasible(y, l, u, &margin)) {
                best.status = QpStatus::Infeasible;
                best.certificate_residual = margin;
                best.kkt = residuals_at(f0, l, u, x, y);
                best.objective = kInf;
                return best;
            }
            y_prev = y;

            if (st.adaptive_rho && !lock_rho && iter % st.adaptive_rho_interval == 0) {
                const double rp_s = (As * xb - zb).lpNorm<Eigen::Infinity>();
                const Eigen::VectorXd dd = Ps * xb + qs + Ats * yb;
                const double rd_s = dd.lpNorm<Eigen::Infinity>();
                const double pnorm = std::max({(As * xb).lpNorm<Eigen::Infinity>(),
                                               zb.lpNorm<Eigen::Infinity>(), 1e-10});
                const double dnorm = std::max({(Ps * xb).lpNorm<Eigen::Infinity>(),
                                               (Ats * yb).lpNorm<Eigen::Infinity>(),
                                               qs.lpNorm<Eigen::Infinity>(), 1e-10});
                const double ratio = std::sqrt((rp_s / pnorm) / std::max(rd_s / dnorm, 1e-16));
                const double rho_new = std::clamp(rho_bar * ratio, 1e-6, 1e6);
                if (rho_new > 5.0 * rho_bar || rho_new < rho_bar / 5.0) set_rho(rho_new, false);
            }
        }

        // Last chance: a polish from the terminal iterate often lands the
        // solution even when plain iteration stalled short of tolerance.
        {
            const Eigen::VectorXd x = unscale_x();
            const Eigen::VectorXd z = unscale_z();
            const Eigen::VectorXd y = unscale_y();
            ContinuousSolution polished;
            if (polish(l, u, y, z, false, &polished) || polish(l, u, y, z, true, &polished)) {
                polished.iterations = st.max_iter;
                return polished;
            }
            best.x = x;
            best.dual = y;
            best.kkt = residuals_at(f0, l, u, x, y);
            best.objective = objective(x);
            best.iterations = st.max_iter;
            best.status = QpStatus::IterLimit;
        }
        return best;
    }
};

QpEngine::QpEngine(StackedForm form, QpSettings settings)
    : impl_(std::make_unique<Impl>(std::move(form), settings)) {}
QpEngine::~QpEngine() = default;
QpEngine::QpEngine(QpEngine&&) noexcept = default;
QpEngine& QpEngine::operator=(QpEngine&&) noexcept = default;

const StackedForm& QpEngine::form() const { return impl_->f0; }

WarmStart QpEngine::last_iterate() const {
    return {impl_->unscale_x(), impl_->unscale_y(), impl_->unscale_z()};
}

ContinuousSolution QpEngine::solve() { return impl_->run(impl_->f0.l, impl_->f0.u, nullptr, false); }

ContinuousSolution QpEngine::solve(const Eigen::VectorXd& l_override,
                                   const Eigen::VectorXd& u_override, const WarmStart* warm,
                                   bool lock_rho) {
    return impl_->run(l_override, u_override, warm, lock_rho);
}

ContinuousSolution solve_qp(const QpProblem& p, const QpSettings& settings) {
    QpEngine engine(stack_problem(p), settings);
    return engine.solve();
}

}  // namespace evfair
