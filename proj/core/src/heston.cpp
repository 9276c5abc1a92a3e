#include "svh/heston.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace svh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

void HestonParams::validate() const {
    std::ostringstream bad;
    if (!(kappa > 0)) bad << "kappa must be > 0; ";
    if (!(lambda > 0)) bad << "lambda must be > 0; ";
    if (!(rho >= -1 && rho <= 1)) bad << "rho must be in [-1, 1]; ";
    if (!(sigma > 0)) bad << "sigma must be > 0; ";
    if (!(v0 >= 0)) bad << "v0 must be >= 0; ";
    if (!(s0 > 0)) bad << "s0 must be > 0; ";
    if (!(maturity > 0)) bad << "maturity must be > 0; ";
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError("invalid Heston parameters: " + msg);
}

cplx heston_chi(cplx u, const HestonParams& p) { return p.rho * p.sigma * u - p.lambda; }

cplx heston_discriminant(cplx u, const HestonParams& p) {
    const cplx chi = heston_chi(u, p);
    return chi * chi - p.sigma * p.sigma * (u * u - u);
}

std::pair<cplx, cplx> riccati_roots(cplx u, const HestonParams& p) {
    const double s2 = p.sigma * p.sigma;
    const cplx chi = heston_chi(u, p);
    const cplx sq = std::sqrt(heston_discriminant(u, p));  // principal branch, Re >= 0
    return {(-chi - sq) / s2, (-chi + sq) / s2};
}

CharExponents char_exponents(double t, cplx u, cplx w, const HestonParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double lk = p.lambda * p.kappa;
    const cplx chi = heston_chi(u, p);
    const cplx delta = chi * chi - s2 * (u * u - u);
    CharExponents out;

    if (std::abs(delta) <= 1e-12 * (1.0 + std::norm(chi))) {
        // double Riccati root r = -chi/sigma^2; flow is rational in t
        const cplx r = -chi / s2;
        const cplx a = r - w;
        const cplx den = 2.0 + s2 * t * a;
        out.psi = w + a * a * s2 * t / den;
        out.phi = lk * r * t - (2.0 * lk / s2) * std::log(1.0 + 0.5 * s2 * a * t);
        out.dpsi_dw = 1.0 - s2 * t * a * (4.0 + s2 * t * a) / (den * den);
        out.dphi_dw = lk * t / (1.0 + 0.5 * s2 * a * t);
    } else {
        const cplx sq = std::sqrt(delta);  // principal branch, Re >= 0
        const cplx rm = (-chi - sq) / s2;
        const cplx rp = (-chi + sq) / s2;
        if (std::abs(rp - w) <= 1e-12 * (1.0 + std::abs(rp))) {
            // w sits at the unstable fixed point: psi stays put, and the
            // w-derivatives follow from the linearized flow exp(t sqrt(Delta))
            const cplx e = std::exp(t * sq);
            out.psi = w;
            out.phi = lk * rp * t;
            out.dpsi_dw = e;
            out.dphi_dw = lk * (e - 1.0) / sq;
        } else {
            const cplx g = (rm - w) / (rp - w);
            const cplx e = std::exp(-t * sq);  // |e| <= 1 since Re sq >= 0
            const cplx n = 1.0 - e;
            const cplx d = 1.0 - g * e;
            out.psi = w + (rm - w) * n / d;
            out.phi = lk * rm * t - (2.0 * lk / s2) * (std::log(d) - std::log(1.0 - g));
            const cplx dg = (rm - rp) / ((rp - w) * (rp - w));
            out.dpsi_dw = 1.0 - n / d + (rm - w) * n * e * dg / (d * d);
            out.dphi_dw = -(2.0 * lk / s2) * dg * (1.0 / (1.0 - g) - e / d);
        }
    }

    if (!finite(out.phi) || !finite(out.psi) || !finite(out.dphi_dw) || !finite(out.dpsi_dw)) {
        std::ostringstream msg;
        msg << "char_exponents non-finite at t=" << t << " u=(" << u.real() << "," << u.imag()
            << ") w=(" << w.real() << "," << w.imag() << ")";
        throw NonFiniteResult(msg.str());
    }
    return out;
}

double dw_derivatives_check(double t, cplx u, cplx w, const HestonParams& p, double h) {
    const CharExponents c = char_exponents(t, u, w, p);
    const CharExponents up = char_exponents(t, u, w + h, p);
    const CharExponents dn = char_exponents(t, u, w - h, p);
    const cplx fd_phi = (up.phi - dn.phi) / (2.0 * h);
    const cplx fd_psi = (up.psi - dn.psi) / (2.0 * h);
    const double e_phi = std::abs(fd_phi - c.dphi_dw) / (1.0 + std::abs(c.dphi_dw));
    const double e_psi = std::abs(fd_psi - c.dpsi_dw) / (1.0 + std::abs(c.dpsi_dw));
    return std::max(e_phi, e_psi);
}

double critical_time(double u, const HestonParams& p) {
    // E[e^{u X_t}] < inf for all t when u in [0,1] (e^X is a martingale and
    // e^{uX} is bounded by 1 + e^X); this also sidesteps the log/atan branches,
    // which are only delicate there.
    if (u >= 0.0 && u <= 1.0) return kInf;
    const double chi = p.rho * p.sigma * u - p.lambda;
    const double delta = chi * chi - p.sigma * p.sigma * (u * u - u);
    if (delta >= 0.0) {
        if (chi < 0.0) return kInf;
        // u outside [0,1] makes sigma^2(u^2-u) > 0, so chi > sqrt(delta) here
        const double sq = std::sqrt(delta);
        return std::log((chi + sq) / (chi - sq)) / sq;
    }
    const double sq = std::sqrt(-delta);
    return 2.0 / sq * (std::atan(sq / chi) + (chi < 0.0 ? M_PI : 0.0));
}

double mean_variance(double t, const HestonParams& p) {
    const double e = std::exp(-p.lambda * t);
    return e * p.v0 + (1.0 - e) * p.kappa;
}

double swap_rate(const HestonParams& p) {
    return p.kappa * p.maturity +
           (p.v0 - p.kappa) * (1.0 - std::exp(-p.lambda * p.maturity)) / p.lambda;
}

cplx expect_hv(double t, cplx u, const HestonParams& p) {
    const double T = p.maturity;
    if (!(t >= 0.0 && t <= T)) throw DomainViolation("expect_hv: t outside [0, T]");
    if (!(critical_time(u.real(), p) > T))
        throw DomainViolation("expect_hv: moment condition fails at Re u");
    const CharExponents tail = char_exponents(T - t, u, 0.0, p);
    const CharExponents at_t = char_exponents(t, u, tail.psi, p);
    const CharExponents full = char_exponents(T, u, 0.0, p);
    return (at_t.dphi_dw + p.v0 * at_t.dpsi_dw) *
           std::exp(u * p.x0() + full.phi + p.v0 * full.psi);
}

cplx expect_hhv(double t, cplx u1, cplx u2, const HestonParams& p) {
    const double T = p.maturity;
    if (!(t >= 0.0 && t <= T)) throw DomainViolation("expect_hhv: t outside [0, T]");
    if (!(critical_time(2.0 * u1.real(), p) > T) || !(critical_time(2.0 * u2.real(), p) > T))
        throw DomainViolation("expect_hhv: moment condition fails at 2 Re u");
    const double tau = T - t;
    const CharExponents t1 = char_exponents(tau, u1, 0.0, p);
    const CharExponents t2 = char_exponents(tau, u2, 0.0, p);
    const cplx uu = u1 + u2;
    const cplx q = t1.psi + t2.psi;
    const CharExponents at_t = char_exponents(t, uu, q, p);
    return (at_t.dphi_dw + p.v0 * at_t.dpsi_dw) *
           std::exp(t1.phi + t2.phi + at_t.phi + p.v0 * at_t.psi + uu * p.x0());
}

double phi_branch_jump(cplx u, cplx w, double t_max, int n, const HestonParams& p) {
    // Track Im[log(1 - g e^{-t sqrt(Delta)}) - log(1 - g)] along t; a branch
    // crossing of the principal log shows as a ~2*pi step between grid points.
    const double s2 = p.sigma * p.sigma;
    const cplx delta = heston_discriminant(u, p);
    if (std::abs(delta) <= 1e-12 * (1.0 + std::norm(heston_chi(u, p)))) return 0.0;
    const auto [rm, rp] = riccati_roots(u, p);
    if (std::abs(rp - w) <= 1e-12 * (1.0 + std::abs(rp))) return 0.0;
    const cplx g = (rm - w) / (rp - w);
    const cplx sq = std::sqrt(delta);
    double prev = 0.0;  // value at t = 0: log(1-g) - log(1-g)
    double worst = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double t = t_max * i / n;
        const double cur =
            std::imag(std::log(1.0 - g * std::exp(-t * sq)) - std::log(1.0 - g));
        worst = std::max(worst, std::abs(cur - prev));
        prev = cur;
    }
    return worst;
}

}  // namespace svh
