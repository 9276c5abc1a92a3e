#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "svh/claims.hpp"
#include "svh/heston.hpp"
#include "svh/moments.hpp"

namespace svh {

struct SimConfig {
    std::size_t n_paths = 100'000;
    int steps_per_year = 500;
    std::uint64_t seed = 42;
    int threads = 0;  // 0 = hardware concurrency
    std::string scheme = "full-truncation-euler";

    int n_steps(double maturity) const;
    void validate() const;
};

// Full paths on the grid; intended for small diagnostic runs.
struct PathBatch {
    std::vector<double> t;
    Eigen::MatrixXd x;  // n_paths rows, n_steps+1 columns
    Eigen::MatrixXd v;
};

PathBatch simulate_paths(const HestonParams& p, const SimConfig& cfg);

// Dynamic GKW strategies (number of shares held at time t).
double strategy_theta0(double t, double s, double v, const HestonParams& p);
cplx strategy_theta_u(double t, double x, double v, cplx u, const HestonParams& p);

// Terminal GKW residuals of the swap (row 0) and each supplementary claim
// (rows 1..n); one column per path.
//
// l  — realized residuals: payoff minus price minus the discretely rebalanced
//      gains process.  These are what a trader books, but their second moments
//      carry the O(dt) discrete-hedging friction on top of the continuous-time
//      covariances.
// lp — projection residuals: the same martingales written as integrals against
//      the orthogonal Brownian driver and discretized directly, so their
//      covariances estimate A, B, C without the friction term.
//
// gain0 is the discretized integral of theta0 against S, kept for
// orthogonality diagnostics.
struct ResidualMatrix {
    Eigen::MatrixXd l;
    Eigen::MatrixXd lp;
    Eigen::VectorXd gain0;
    std::vector<double> prices;
};

ResidualMatrix simulate_residuals(const HestonParams& p, const ClaimSet& claims,
                                  const SimConfig& cfg, const QuadSettings& qs = {});

// Sample moments of the residuals with delete-one jackknife standard errors.
// Means are taken from the realized residuals (a price-consistency check);
// a/b/c come from the projection residuals when present, falling back to the
// realized ones for hand-built matrices.
struct ResidualSample {
    std::size_t n_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd mean;  // residual means, rows [L0, L1..Ln]
    Eigen::VectorXd mean_se;
    double a_hat = 0.0;
    double a_se = 0.0;
    Eigen::VectorXd b_hat, b_se;
    Eigen::MatrixXd c_hat, c_se;
};

ResidualSample summarize_residuals(const ResidualMatrix& r, const SimConfig& cfg);
ResidualSample estimate_moments(const HestonParams& p, const ClaimSet& claims,
                                const SimConfig& cfg, const QuadSettings& qs = {});

// Realized squared shortfall of the full semi-static portfolio with static
// weights v: per-path (L0 - v'L)^2, reported as mean with standard errors.
struct ErrorSample {
    double eps2 = 0.0;
    double se = 0.0;
    double mean = 0.0;  // mean shortfall; a zero-mean martingale increment
    double mean_se = 0.0;
};

ErrorSample realized_error_from(const ResidualMatrix& r, const Eigen::VectorXd& v);
ErrorSample realized_error(const Eigen::VectorXd& v, const HestonParams& p,
                           const ClaimSet& claims, const SimConfig& cfg,
                           const QuadSettings& qs = {});

}  // namespace svh
