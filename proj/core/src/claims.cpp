#include "svh/claims.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace svh {

namespace {

// Smallest |u| with T*(u) = T on the given side of the u-axis, found by
// doubling + bisection.  Returns +/-inf when no explosion is reachable.
double explosion_boundary(const HestonParams& p, bool positive_side) {
    const double sgn = positive_side ? 1.0 : -1.0;
    double hi = 2.0;
    while (critical_time(sgn * hi, p) > p.maturity) {
        hi *= 2.0;
        if (hi > 1e8) return sgn * std::numeric_limits<double>::infinity();
    }
    double lo = hi / 2.0;  // T*(sgn*lo) > T >= T*(sgn*hi); T* monotone out here
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (critical_time(sgn * mid, p) > p.maturity ? lo : hi) = mid;
    }
    return sgn * 0.5 * (lo + hi);
}

}  // namespace

std::string to_string(ClaimKind k) {
    switch (k) {
        case ClaimKind::VarianceSwap: return "variance_swap";
        case ClaimKind::Put: return "put";
        case ClaimKind::Call: return "call";
    }
    return "?";
}

double ClaimSpec::payoff(double s_terminal) const {
    switch (kind) {
        case ClaimKind::Put: return std::max(strike - s_terminal, 0.0);
        case ClaimKind::Call: return std::max(s_terminal - strike, 0.0);
        case ClaimKind::VarianceSwap: break;
    }
    throw ConfigError("payoff: variance swap payoff is path-dependent, not a function of S_T");
}

cplx laplace_transform(cplx u, double strike) {
    if (!(strike > 0)) throw ConfigError("laplace_transform: strike must be > 0");
    if (std::abs(u) < 1e-8 || std::abs(u - 1.0) < 1e-8)
        throw PoleError("laplace_transform: u too close to a pole (0 or 1)");
    const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
    return std::pow(strike, 1.0 - u) / (two_pi_i * u * (u - 1.0));
}

double choose_strip(ClaimKind kind, const HestonParams& p) {
    if (kind == ClaimKind::VarianceSwap)
        throw ConfigError("choose_strip: the swap target has no integration strip");
    if (kind == ClaimKind::Put) {
        // default R = -1 whenever E[e^{-2 X_T}] is finite
        if (critical_time(-2.0, p) > p.maturity) return -1.0;
        const double u_min = explosion_boundary(p, false);
        const double r = u_min / 4.0;  // midpoint of the admissible (u_min/2, 0)
        if (!(r < -1e-9) || !(critical_time(2.0 * r, p) > p.maturity))
            throw NoValidStrip("choose_strip: no put abscissa with T < T*(2R)");
        return r;
    }
    const double u_max = explosion_boundary(p, true);
    if (std::isinf(u_max)) return 2.0;
    double r = std::min(2.0, 0.45 * u_max);
    if (r <= 1.0) {
        // margin rule landed below the pole; retry at the midpoint of (1, u_max/2)
        r = 1.0 + 0.5 * (0.5 * u_max - 1.0);
    }
    if (!(r > 1.0 + 1e-9) || !(critical_time(2.0 * r, p) > p.maturity))
        throw NoValidStrip("choose_strip: no call abscissa with 1 < R and T < T*(2R)");
    return r;
}

std::vector<double> neuberger_weights(const std::vector<double>& strikes, double spot) {
    const std::size_t n = strikes.size();
    if (n == 0) return {};
    if (!std::is_sorted(strikes.begin(), strikes.end()))
        throw ConfigError("neuberger_weights: strikes must be sorted ascending");
    if (!(strikes.front() > 0.0))
        throw ConfigError("neuberger_weights: strikes must be positive");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dk;
        if (n == 1) {
            dk = 0.05 * strikes[0];  // no neighbours; use the canonical 5% grid spacing
        } else if (i == 0) {
            dk = 0.5 * (strikes[1] - strikes[0]);
        } else if (i == n - 1) {
            dk = 0.5 * (strikes[n - 1] - strikes[n - 2]);
        } else {
            dk = 0.5 * (strikes[i + 1] - strikes[i - 1]);
        }
        w[i] = 2.0 * dk / (strikes[i] * strikes[i]);
    }
    (void)spot;  // the weights themselves do not depend on where the put/call split lies
    return w;
}

void ClaimSet::finalize(const HestonParams& p) {
    p.validate();
    if (target.kind != ClaimKind::VarianceSwap)
        throw ConfigError("claim set: target must be a variance swap");
    std::set<std::pair<int, double>> seen;
    for (auto& opt : options) {
        if (opt.kind == ClaimKind::VarianceSwap)
            throw ConfigError("claim set: supplementary claims must be puts or calls");
        if (!(opt.strike > 0)) throw ConfigError("claim set: option strike must be > 0");
        if (!seen.insert({static_cast<int>(opt.kind), opt.strike}).second) {
            std::ostringstream msg;
            msg << "claim set: duplicate " << to_string(opt.kind) << " at strike " << opt.strike;
            throw ConfigError(msg.str());
        }
        if (opt.strip_r == 0.0) opt.strip_r = choose_strip(opt.kind, p);
        if (opt.kind == ClaimKind::Put && !(opt.strip_r < 0))
            throw ConfigError("claim set: put strip must have R < 0");
        if (opt.kind == ClaimKind::Call && !(opt.strip_r > 1))
            throw ConfigError("claim set: call strip must have R > 1");
        if (!(critical_time(2.0 * opt.strip_r, p) > p.maturity)) {
            std::ostringstream msg;
            msg << "claim set: moment condition T < T*(2R) fails for "
                << to_string(opt.kind) << " K=" << opt.strike << " R=" << opt.strip_r;
            throw DomainViolation(msg.str());
        }
    }
    if (swap_strike == 0.0) swap_strike = swap_rate(p);
}

}  // namespace svh
