#pragma once

#include <complex>
#include <utility>

#include "svh/errors.hpp"

namespace svh {

using cplx = std::complex<double>;

// Heston model under the pricing measure, forward price S = e^X:
//   dX = -V/2 dt + sqrt(V) dW1
//   dV = -lambda (V - kappa) dt + sigma sqrt(V) dW2,   d<W1,W2> = rho dt
// Defaults: a calibration to S&P 500 index options (the running example).
struct HestonParams {
    double kappa = 0.0354;    // long-run variance level
    double lambda = 1.3253;   // mean-reversion speed
    double rho = -0.7165;     // leverage correlation
    double sigma = 0.3877;    // vol-of-vol
    double v0 = 0.0174;       // initial variance
    double s0 = 100.0;        // initial forward price
    double maturity = 1.0;    // horizon T in years

    double x0() const { return std::log(s0); }

    // throws ConfigError on out-of-range values
    void validate() const;
};

// E[exp(u X_T + w V_T)] = exp(phi_T(u,w) + psi_T(u,w) V0 + u X0), plus the
// w-derivatives of both exponents (needed for the E[...V_t] formulas).
struct CharExponents {
    cplx phi;
    cplx psi;
    cplx dphi_dw;
    cplx dpsi_dw;
};

cplx heston_chi(cplx u, const HestonParams& p);           // rho sigma u - lambda
cplx heston_discriminant(cplx u, const HestonParams& p);  // chi^2 - sigma^2 (u^2 - u)

// Riccati fixed points (r_minus, r_plus) = (-chi -/+ sqrt(Delta)) / sigma^2.
std::pair<cplx, cplx> riccati_roots(cplx u, const HestonParams& p);

// Exponents of the joint transform at horizon t.  Handles the degenerate
// discriminant (Delta ~ 0) and the w = r_plus fixed point explicitly.
// Throws NonFiniteResult if any output fails std::isfinite.
CharExponents char_exponents(double t, cplx u, cplx w, const HestonParams& p);

// Max relative error between the analytic d/dw exponent derivatives and a
// central finite difference with stepsize h.
double dw_derivatives_check(double t, cplx u, cplx w, const HestonParams& p, double h = 1e-6);

// Moment explosion time T*(u): sup{t : E[e^{u X_t}] < inf}.  +infinity is
// returned as std::numeric_limits<double>::infinity().
double critical_time(double u, const HestonParams& p);

double mean_variance(double t, const HestonParams& p);  // E[V_t]
double swap_rate(const HestonParams& p);                // k* = E[integral of V]

// E[H_t(u) V_t] with H_t(u) = E[e^{u X_T} | F_t], via exponential tilting and
// the semiflow identities of (phi, psi).  Throws DomainViolation if the
// moment condition fails at Re u.
cplx expect_hv(double t, cplx u, const HestonParams& p);

// E[H_t(u1) H_t(u2) V_t]; requires E[e^{2 Re u_i X_T}] < inf for both i.
cplx expect_hhv(double t, cplx u1, cplx u2, const HestonParams& p);

// Largest jump of the imaginary part of the phi log-term along an n-step grid
// in t on [0, t_max].  A principal-branch crossing shows up as a jump ~ 2*pi;
// smooth evolution stays near 0.  Used to verify branch safety on the
// integration strips before assembling moment integrals.
double phi_branch_jump(cplx u, cplx w, double t_max, int n, const HestonParams& p);

}  // namespace svh
