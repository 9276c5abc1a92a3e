#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "svh/moments.hpp"

namespace svh {

// Static option weights solving the outer quadratic problem
//   min_v  A - 2 v'B + v'Cv   (optionally under linear constraints p'v >= 0).
struct HedgeSolution {
    Eigen::VectorXd v;
    double c = 0.0;        // initial capital of the residual target, k* - k
    double eps2 = 0.0;     // minimal squared hedging error, floored at 0
    double rel_err = 0.0;  // sqrt(eps2) / k*
    std::vector<int> active_set;  // binding constraints (constrained solves)
    std::string method;
    double kkt_residual = 0.0;
};

// A - 2 v'B + v'Cv, floored at 0 (warns if negative beyond -1e-10 A).
double hedging_error(const Eigen::VectorXd& v, const MomentData& m);

// Symmetric factorization when C is numerically nonsingular
// (reciprocal condition > 1e-14); otherwise falls through to solve_pinv.
HedgeSolution solve_unconstrained(const MomentData& m);

// Minimum-norm solution of Cv = B via spectral decomposition with an
// eigenvalue cutoff of 1e-12 times the largest eigenvalue.
HedgeSolution solve_pinv(const MomentData& m);

// One homogeneous linear constraint p'v >= 0.
struct Constraint {
    Eigen::VectorXd p;
};

// The long-only special case: one unit-vector constraint per asset.
std::vector<Constraint> nonneg_constraints(Eigen::Index n);

// Primal active-set method.  Throws MaxIterations on cycling after one
// Tikhonov-regularized retry.
HedgeSolution solve_constrained(const MomentData& m, const std::vector<Constraint>& constraints);

// Fractional reduction in eps2 from adding one asset with covariance column
// k_col against the existing assets, cov0 against the swap residual, and
// variance var_new.  Throws RedundantAsset when the Schur complement
// var_new - k'C^+k is at the noise floor.
double relative_hedge_contribution(const MomentData& m, const Eigen::VectorXd& k_col, double cov0,
                                   double var_new);

}  // namespace svh
