#include "svh/hedge.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "svh/errors.hpp"

namespace svh {

namespace {

void finish(HedgeSolution& s, const MomentData& m) {
    s.c = m.k_star - m.swap_k;
    s.eps2 = hedging_error(s.v, m);
    s.rel_err = m.k_star > 0.0 ? std::sqrt(s.eps2) / m.k_star : 0.0;
}

Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& c, const Eigen::VectorXd& rhs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(0.0, ev.size() ? ev.maxCoeff() : 0.0);
    Eigen::VectorXd y = es.eigenvectors().transpose() * rhs;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = ev[i] > cutoff ? y[i] / ev[i] : 0.0;
    return es.eigenvectors() * y;
}

}  // namespace

double hedging_error(const Eigen::VectorXd& v, const MomentData& m) {
    double e = m.a;
    if (v.size()) {
        if (v.size() != m.b.size()) throw ConfigError("hedging_error: weight size mismatch");
        e += -2.0 * v.dot(m.b) + v.dot(m.c * v);
    }
    if (e < 0.0) {
        if (e < -1e-10 * m.a)
            std::cerr << "warning: eps2 = " << e << " negative beyond the noise floor; flooring\n";
        e = 0.0;
    }
    return e;
}

HedgeSolution solve_unconstrained(const MomentData& m) {
    HedgeSolution s;
    const Eigen::Index n = m.b.size();
    if (n == 0) {
        s.method = "unconstrained";
        finish(s, m);
        return s;
    }
    if (m.rcond() > 1e-14) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(m.c);
        if (ldlt.info() == Eigen::Success) {
            s.v = ldlt.solve(m.b);
            const double resid = (m.c * s.v - m.b).norm();
            if (resid < 1e-8 * std::max(m.b.norm(), 1e-300)) {
                s.method = "unconstrained";
                finish(s, m);
                return s;
            }
        }
    }
    return solve_pinv(m);
}

HedgeSolution solve_pinv(const MomentData& m) {
    HedgeSolution s;
    s.method = "pinv";
    s.v = m.b.size() ? pinv_solve(m.c, m.b) : Eigen::VectorXd();
    finish(s, m);
    return s;
}

std::vector<Constraint> nonneg_constraints(Eigen::Index n) {
    std::vector<Constraint> cons(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        cons[static_cast<std::size_t>(i)].p = Eigen::VectorXd::Unit(n, i);
    }
    return cons;
}

namespace {

HedgeSolution active_set_qp(const Eigen::MatrixXd& c, const Eigen::VectorXd& b,
                            const std::vector<Constraint>& cons) {
    const Eigen::Index n = b.size();
    const std::size_t mcons = cons.size();
    Eigen::MatrixXd pt(n, static_cast<Eigen::Index>(mcons));  // columns are the p_j
    for (std::size_t j = 0; j < mcons; ++j) {
        if (cons[j].p.size() != n)
            throw ConfigError("solve_constrained: constraint dimension mismatch");
        pt.col(static_cast<Eigen::Index>(j)) = cons[j].p;
    }

    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);  // p'0 = 0: always feasible
    std::vector<int> work;  // working set, kept sorted
    for (std::size_t j = 0; j < mcons; ++j) work.push_back(static_cast<int>(j));

    const auto drop_dependent = [&]() {
        // keep a maximal independent prefix of the working-set normals
        Eigen::MatrixXd w(n, static_cast<Eigen::Index>(work.size()));
        for (std::size_t j = 0; j < work.size(); ++j)
            w.col(static_cast<Eigen::Index>(j)) = pt.col(work[j]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
        qr.setThreshold(1e-12);
        const Eigen::Index rank = qr.rank();
        if (rank == static_cast<Eigen::Index>(work.size())) return;
        std::vector<int> kept;
        for (Eigen::Index j = 0; j < rank; ++j)
            kept.push_back(work[static_cast<std::size_t>(qr.colsPermutation().indices()[j])]);
        std::sort(kept.begin(), kept.end());
        work = kept;
    };
    drop_dependent();

    const std::size_t max_iter = 50 * (static_cast<std::size_t>(n) + mcons + 10);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // equality-constrained subproblem on the working set via nullspace
        Eigen::VectorXd vstar;
        if (work.empty()) {
            vstar = pinv_solve(c, b);
        } else {
            Eigen::MatrixXd w(n, static_cast<Eigen::Index>(work.size()));
            for (std::size_t j = 0; j < work.size(); ++j)
                w.col(static_cast<Eigen::Index>(j)) = pt.col(work[j]);
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
            const Eigen::MatrixXd q = qr.householderQ();
            const Eigen::Index k = n - static_cast<Eigen::Index>(work.size());
            if (k <= 0) {
                vstar = Eigen::VectorXd::Zero(n);
            } else {
                const Eigen::MatrixXd z = q.rightCols(k);
                const Eigen::VectorXd y = pinv_solve(z.transpose() * c * z, z.transpose() * b);
                vstar = z * y;
            }
        }

        const Eigen::VectorXd d = vstar - v;
        if (d.norm() <= 1e-14 * (1.0 + v.norm())) {
            // stationary on the working set: check multipliers of 2Cv - 2B = W mu
            if (work.empty()) break;
            Eigen::MatrixXd w(n, static_cast<Eigen::Index>(work.size()));
            for (std::size_t j = 0; j < work.size(); ++j)
                w.col(static_cast<Eigen::Index>(j)) = pt.col(work[j]);
            const Eigen::VectorXd g = 2.0 * (c * v - b);
            const Eigen::VectorXd mu = w.colPivHouseholderQr().solve(g);
            int worst = -1;
            double worst_mu = -1e-12 * (1.0 + g.norm());
            for (std::size_t j = 0; j < work.size(); ++j) {
                if (mu[static_cast<Eigen::Index>(j)] < worst_mu) {
                    worst_mu = mu[static_cast<Eigen::Index>(j)];
                    worst = static_cast<int>(j);
                }
            }
            if (worst < 0) break;  // KKT holds
            work.erase(work.begin() + worst);
            continue;
        }

        // longest feasible step toward vstar
        double alpha = 1.0;
        int blocking = -1;
        for (std::size_t j = 0; j < mcons; ++j) {
            if (std::find(work.begin(), work.end(), static_cast<int>(j)) != work.end()) continue;
            const double pd = pt.col(static_cast<Eigen::Index>(j)).dot(d);
            if (pd >= -1e-15) continue;
            const double pv = pt.col(static_cast<Eigen::Index>(j)).dot(v);
            const double aj = std::max(0.0, -pv / pd);
            if (aj < alpha) {
                alpha = aj;
                blocking = static_cast<int>(j);
            }
        }
        v += alpha * d;
        if (blocking >= 0) {
            work.insert(std::lower_bound(work.begin(), work.end(), blocking), blocking);
            drop_dependent();
        }
        if (blocking < 0) {
            // full step onto the subproblem optimum; loop verifies multipliers next
            continue;
        }
    }

    // KKT residual: stationarity, feasibility, complementarity
    Eigen::VectorXd g = 2.0 * (c * v - b);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mcons));
    if (!work.empty()) {
        Eigen::MatrixXd w(n, static_cast<Eigen::Index>(work.size()));
        for (std::size_t j = 0; j < work.size(); ++j)
            w.col(static_cast<Eigen::Index>(j)) = pt.col(work[j]);
        const Eigen::VectorXd mw = w.colPivHouseholderQr().solve(g);
        for (std::size_t j = 0; j < work.size(); ++j) mu[work[j]] = mw[static_cast<Eigen::Index>(j)];
        g -= w * mw;
    }
    double kkt = g.lpNorm<Eigen::Infinity>();
    for (std::size_t j = 0; j < mcons; ++j) {
        const double pv = pt.col(static_cast<Eigen::Index>(j)).dot(v);
        kkt = std::max(kkt, -pv);                                         // feasibility
        kkt = std::max(kkt, -mu[static_cast<Eigen::Index>(j)]);           // dual sign
        kkt = std::max(kkt, std::abs(mu[static_cast<Eigen::Index>(j)] * pv));  // complementarity
    }
    if (kkt > 1e-8) throw MaxIterations("active-set QP did not reach the KKT tolerance");

    HedgeSolution s;
    s.v = v;
    s.method = "active-set";
    s.kkt_residual = kkt;
    for (std::size_t j = 0; j < mcons; ++j)
        if (std::abs(pt.col(static_cast<Eigen::Index>(j)).dot(v)) <= 1e-10 * (1.0 + v.norm()))
            s.active_set.push_back(static_cast<int>(j));
    return s;
}

}  // namespace

HedgeSolution solve_constrained(const MomentData& m, const std::vector<Constraint>& constraints) {
    if (constraints.empty()) throw ConfigError("solve_constrained: empty constraint list");
    HedgeSolution s;
    try {
        s = active_set_qp(m.c, m.b, constraints);
    } catch (const MaxIterations&) {
        // cycling safeguard: jitter the diagonal once and retry
        MomentData jittered = m;
        const double eps =
            1e-12 * jittered.c.trace() / std::max<Eigen::Index>(jittered.c.rows(), 1);
        jittered.c.diagonal().array() += eps;
        s = active_set_qp(jittered.c, jittered.b, constraints);
    }
    finish(s, m);
    return s;
}

double relative_hedge_contribution(const MomentData& m, const Eigen::VectorXd& k_col, double cov0,
                                   double var_new) {
    if (k_col.size() != m.b.size())
        throw ConfigError("relative_hedge_contribution: column size mismatch");
    const Eigen::Index n = m.b.size();
    Eigen::VectorXd cinv_b, cinv_k;
    if (n > 0) {
        if (m.rcond() > 1e-14) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(m.c);
            cinv_b = ldlt.solve(m.b);
            cinv_k = ldlt.solve(k_col);
        } else {
            cinv_b = pinv_solve(m.c, m.b);
            cinv_k = pinv_solve(m.c, k_col);
        }
    }
    const double eps2_n = std::max(0.0, m.a - (n ? m.b.dot(cinv_b) : 0.0));
    const double schur = var_new - (n ? k_col.dot(cinv_k) : 0.0);
    const double tol = 1e-12 * std::max(var_new, n ? m.c.trace() / static_cast<double>(n) : 0.0);
    if (schur <= tol) throw RedundantAsset("relative_hedge_contribution: redundant asset");
    if (eps2_n <= 0.0) return 0.0;  // nothing left to hedge
    const double num = cov0 - (n ? k_col.dot(cinv_b) : 0.0);
    const double rhc = num * num / (schur * eps2_n);
    return std::clamp(rhc, 0.0, 1.0);
}

}  // namespace svh
