#pragma once

#include <string>
#include <vector>

#include "svh/heston.hpp"

namespace svh {

enum class ClaimKind { VarianceSwap, Put, Call };

std::string to_string(ClaimKind k);

// One hedging instrument.  The target claim is a variance swap; supplementary
// claims are European puts/calls with a Laplace-inversion abscissa strip_r.
struct ClaimSpec {
    ClaimKind kind = ClaimKind::VarianceSwap;
    double strike = 0.0;   // unused for the swap
    double strip_r = 0.0;  // Re u of the integration strip; 0 = not yet chosen

    double payoff(double s_terminal) const;
};

// Two-sided Laplace transform of the put/call payoff (x = log S_T):
//   f~(u) = K^{1-u} / (2 pi i u (u-1)),
// integrable along Re u = R with R > 1 (calls) or R < 0 (puts).
// Throws PoleError within 1e-8 of the poles u = 0, 1.
cplx laplace_transform(cplx u, double strike);

// Default integration abscissa for a claim kind under the given model:
// puts R = -1, calls R = min(2, 0.45 u_max) where T*(u_max) = T.  Falls back
// to the midpoint of the admissible interval when the default is infeasible;
// throws NoValidStrip when no abscissa satisfies T < T*(2R).
double choose_strip(ClaimKind kind, const HestonParams& p);

// Static replication weights 2 dK_i / K_i^2 for the log-contract portfolio,
// trapezoidal dK at interior strikes and half-intervals at the ends.
std::vector<double> neuberger_weights(const std::vector<double>& strikes, double spot);

// Target swap plus supplementary options.
struct ClaimSet {
    ClaimSpec target;                // must be the variance swap
    std::vector<ClaimSpec> options;  // puts/calls, strips filled in
    double swap_strike = 0.0;        // contractual strike k of the swap; 0 = use k*

    std::size_t size() const { return options.size(); }

    // fills missing strips via choose_strip and checks kinds, duplicate
    // (kind, strike) pairs, strip signs, and the moment condition T < T*(2R)
    void finalize(const HestonParams& p);
};

}  // namespace svh
