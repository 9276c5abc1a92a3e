#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "svh/hedge.hpp"
#include "svh/moments.hpp"

namespace svh {

// One point of a sparsity sweep: the best (or heuristic) portfolio found at a
// given cardinality, with full-length weights (zeros off the support).
struct SelectionEntry {
    std::string method;
    int d = 0;  // requested cardinality; effective ||v||_0 for lasso entries
    std::vector<int> support;
    Eigen::VectorXd v;
    double eps2 = 0.0;
    double rel_err = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();  // lasso only
    double wall_time = 0.0;                                    // seconds
    bool certified = true;  // false when a budget/sweep cap cut the search
};

struct SelectionPath {
    std::vector<SelectionEntry> entries;
};

// Restricted solve: weights supported on the given index set (unconstrained
// or long-only), scattered back to full length.
HedgeSolution solve_on_support(const MomentData& m, const std::vector<int>& support, bool nonneg);

// Exact minimizers of the cardinality-d problem.
SelectionEntry brute_force(const MomentData& m, int d, bool nonneg,
                           std::size_t subset_budget = 2'000'000);
SelectionEntry leaps_and_bounds(const MomentData& m, int d, bool nonneg,
                                std::size_t node_budget = 1'000'000);

// Nested heuristics.
SelectionPath greedy_forward(const MomentData& m, int d_max, bool nonneg);
SelectionPath greedy_backward(const MomentData& m, bool nonneg);

// l1 relaxation: cyclic coordinate descent with soft-thresholding, one entry
// per lambda (warm-started along the given grid).
SelectionPath lasso_path(const MomentData& m, const std::vector<double>& lambdas, bool nonneg,
                         std::size_t max_sweeps = 200'000);
std::vector<double> default_lambda_grid(const MomentData& m, int n_points = 61,
                                        double decades = 6.0);
// max violation of the stationarity conditions of the l1 problem at v
double lasso_kkt_residual(const Eigen::VectorXd& v, const MomentData& m, double lambda,
                          bool nonneg);

}  // namespace svh
