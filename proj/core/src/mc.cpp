#include "svh/mc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "svh/errors.hpp"
#include "svh/parallel.hpp"
#include "svh/quadrature.hpp"

namespace svh {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 path_engine(std::uint64_t seed, std::size_t path) {
    return std::mt19937_64(splitmix64(seed + 0x9e3779b97f4a7c15ULL * (path + 1)));
}

// one Box-Muller pair per step: exactly two normals, no distribution state
inline void draw_pair(std::mt19937_64& eng, double& z1, double& z2) {
    const double u1 = (static_cast<double>(eng() >> 11) + 1.0) * 0x1p-53;  // (0,1]
    const double u2 = static_cast<double>(eng() >> 11) * 0x1p-53;          // [0,1)
    const double rad = std::sqrt(-2.0 * std::log(u1));
    z1 = rad * std::cos(kTwoPi * u2);
    z2 = rad * std::sin(kTwoPi * u2);
}

// Per-step Fourier panel shared by every claim on one strip: theta^i at the
// step equals (2/S) Re sum_a c_{i,a} e^{u_a (X - x0) + psi_a V}, and the
// variance sensitivity dG^i/dv equals 2 Re sum_a d_{i,a} e^{...} with the
// psi-weighted coefficients d.
struct StripPanel {
    double r = 0.0;
    std::vector<double> y, re_psi, im_psi;
    std::vector<int> claim_idx;                  // rows into the residual matrix
    std::vector<std::vector<double>> re_c, im_c;  // [claim][node], theta weights
    std::vector<std::vector<double>> re_d, im_d;  // [claim][node], dG/dv weights
};

std::vector<std::vector<StripPanel>> build_panels(const HestonParams& p, const ClaimSet& claims,
                                                  int n_steps, double dt,
                                                  const QuadSettings& qs) {
    std::vector<double> strips;
    for (const auto& c : claims.options) strips.push_back(c.strip_r);
    std::sort(strips.begin(), strips.end());
    strips.erase(std::unique(strips.begin(), strips.end()), strips.end());

    std::vector<std::vector<StripPanel>> panels(static_cast<std::size_t>(n_steps));
    parallel_for(static_cast<std::size_t>(n_steps), qs.threads, [&](std::size_t k) {
        const double t = static_cast<double>(k) * dt;
        const double tau = p.maturity - t;
        const double width = std::sqrt(2.0 / std::max(p.v0 * tau, 1e-12));
        const double y_max = std::min(6000.0, 10.0 * width + 60.0);
        const int nodes =
            std::clamp(static_cast<int>(std::ceil(0.5 * y_max)) + 32, 128, 2400);
        const auto [yn, yw] = gauss_legendre(nodes, 0.0, y_max);
        for (double r : strips) {
            StripPanel panel;
            panel.r = r;
            panel.y = yn;
            panel.re_psi.resize(yn.size());
            panel.im_psi.resize(yn.size());
            std::vector<cplx> base(yn.size());    // i w f~-free theta factor
            std::vector<cplx> base_d(yn.size());  // i w f~-free dG/dv factor
            for (std::size_t a = 0; a < yn.size(); ++a) {
                const cplx u(r, yn[a]);
                const CharExponents ce = char_exponents(tau, u, 0.0, p);
                panel.re_psi[a] = ce.psi.real();
                panel.im_psi[a] = ce.psi.imag();
                const cplx common = cplx(0.0, yw[a]) * std::exp(ce.phi + u * p.x0());
                base[a] = common * (u + p.rho * p.sigma * ce.psi);
                base_d[a] = common * ce.psi;
            }
            for (std::size_t ci = 0; ci < claims.options.size(); ++ci) {
                if (claims.options[ci].strip_r != r) continue;
                panel.claim_idx.push_back(static_cast<int>(ci));
                std::vector<double> re(yn.size()), im(yn.size());
                std::vector<double> re_d(yn.size()), im_d(yn.size());
                for (std::size_t a = 0; a < yn.size(); ++a) {
                    const cplx u(r, yn[a]);
                    const cplx ft = laplace_transform(u, claims.options[ci].strike);
                    const cplx c = base[a] * ft;
                    const cplx cd = base_d[a] * ft;
                    re[a] = c.real();
                    im[a] = c.imag();
                    re_d[a] = cd.real();
                    im_d[a] = cd.imag();
                }
                panel.re_c.push_back(std::move(re));
                panel.im_c.push_back(std::move(im));
                panel.re_d.push_back(std::move(re_d));
                panel.im_d.push_back(std::move(im_d));
            }
            panels[k].push_back(std::move(panel));
        }
    });
    return panels;
}

}  // namespace

int SimConfig::n_steps(double maturity) const {
    const int n = static_cast<int>(std::lround(steps_per_year * maturity));
    return std::max(n, 1);
}

void SimConfig::validate() const {
    if (n_paths < 1000) throw ConfigError("SimConfig: n_paths must be at least 1000");
    if (steps_per_year < 1) throw ConfigError("SimConfig: steps_per_year must be positive");
}

PathBatch simulate_paths(const HestonParams& p, const SimConfig& cfg) {
    p.validate();
    cfg.validate();
    const int n_steps = cfg.n_steps(p.maturity);
    if (cfg.n_paths * static_cast<std::size_t>(n_steps + 1) > 20'000'000)
        throw ConfigError("simulate_paths: grid too large to store; use simulate_residuals");
    const double dt = p.maturity / n_steps;

    PathBatch out;
    out.t.resize(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) out.t[static_cast<std::size_t>(k)] = k * dt;
    out.x.resize(static_cast<Eigen::Index>(cfg.n_paths), n_steps + 1);
    out.v.resize(static_cast<Eigen::Index>(cfg.n_paths), n_steps + 1);

    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t path) {
        auto eng = path_engine(cfg.seed, path);
        const auto row = static_cast<Eigen::Index>(path);
        double x = p.x0(), v = p.v0;
        out.x(row, 0) = x;
        out.v(row, 0) = v;
        const double rho_bar = std::sqrt(1.0 - p.rho * p.rho);
        for (int k = 0; k < n_steps; ++k) {
            double z1, z2;
            draw_pair(eng, z1, z2);
            const double zv = p.rho * z1 + rho_bar * z2;  // correlated driver of V
            const double vp = std::max(v, 0.0);
            const double sv = std::sqrt(vp * dt);
            x += -0.5 * vp * dt + sv * z1;
            v += -p.lambda * (v - p.kappa) * dt + p.sigma * sv * zv;
            out.x(row, k + 1) = x;
            out.v(row, k + 1) = v;
        }
    });
    return out;
}

double strategy_theta0(double t, double s, double /*v*/, const HestonParams& p) {
    const double tau = p.maturity - t;
    return p.rho * p.sigma * (1.0 - std::exp(-p.lambda * tau)) / (p.lambda * s);
}

cplx strategy_theta_u(double t, double x, double v, cplx u, const HestonParams& p) {
    if (critical_time(u.real(), p) <= p.maturity)
        throw DomainViolation("strategy_theta_u: strip outside the moment domain");
    const double tau = p.maturity - t;
    const CharExponents ce = char_exponents(tau, u, 0.0, p);
    const cplx h = std::exp(u * x + ce.phi + ce.psi * v);
    return h * (u + p.rho * p.sigma * ce.psi) / std::exp(x);
}

ResidualMatrix simulate_residuals(const HestonParams& p, const ClaimSet& claims,
                                  const SimConfig& cfg, const QuadSettings& qs) {
    p.validate();
    cfg.validate();
    const int n_steps = cfg.n_steps(p.maturity);
    const double dt = p.maturity / n_steps;
    const auto n_claims = claims.options.size();
    const double x0 = p.x0();
    const double k_star = swap_rate(p);

    ResidualMatrix out;
    out.prices.resize(n_claims);
    for (std::size_t i = 0; i < n_claims; ++i)
        out.prices[i] = option_price(claims.options[i], p, qs.price_tol);

    const auto panels = build_panels(p, claims, n_steps, dt, qs);

    out.l.resize(static_cast<Eigen::Index>(n_claims) + 1,
                 static_cast<Eigen::Index>(cfg.n_paths));
    out.lp.resize(static_cast<Eigen::Index>(n_claims) + 1,
                  static_cast<Eigen::Index>(cfg.n_paths));
    out.gain0.resize(static_cast<Eigen::Index>(cfg.n_paths));
    const double sig_perp = p.sigma * std::sqrt(1.0 - p.rho * p.rho);

    constexpr std::size_t kBatch = 1024;
    const std::size_t n_batches = (cfg.n_paths + kBatch - 1) / kBatch;
    using Arr = Eigen::ArrayXd;

    parallel_for(n_batches, cfg.threads, [&](std::size_t batch) {
        const std::size_t lo = batch * kBatch;
        const std::size_t count = std::min(kBatch, cfg.n_paths - lo);
        const auto bn = static_cast<Eigen::Index>(count);

        std::vector<std::mt19937_64> eng;
        eng.reserve(count);
        for (std::size_t b = 0; b < count; ++b) eng.push_back(path_engine(cfg.seed, lo + b));

        Arr x = Arr::Constant(bn, x0), v = Arr::Constant(bn, p.v0), qv = Arr::Zero(bn);
        Arr z1(bn), z2(bn), ew(bn), arg(bn), ewc(bn), ews(bn), ds(bn), s(bn), dwp(bn);
        Eigen::ArrayXXd lacc = Eigen::ArrayXXd::Zero(bn, static_cast<Eigen::Index>(n_claims) + 1);
        Eigen::ArrayXXd lpacc = lacc;
        Arr gain0 = Arr::Zero(bn);

        for (int k = 0; k < n_steps; ++k) {
            const double t = k * dt;
            const double tau = p.maturity - t;
            s = x.exp();
            const double th0_s = p.rho * p.sigma * (1.0 - std::exp(-p.lambda * tau)) / p.lambda;
            const double dv_m = (1.0 - std::exp(-p.lambda * tau)) / p.lambda;

            Eigen::ArrayXXd theta(bn, static_cast<Eigen::Index>(n_claims));
            Eigen::ArrayXXd dvg(bn, static_cast<Eigen::Index>(n_claims));
            theta.setZero();
            dvg.setZero();
            for (const StripPanel& panel : panels[static_cast<std::size_t>(k)]) {
                const double r = panel.r;
                for (std::size_t a = 0; a < panel.y.size(); ++a) {
                    ew = (r * (x - x0) + panel.re_psi[a] * v).exp();
                    arg = panel.y[a] * (x - x0) + panel.im_psi[a] * v;
                    ewc = ew * arg.cos();
                    ews = ew * arg.sin();
                    for (std::size_t ci = 0; ci < panel.claim_idx.size(); ++ci) {
                        theta.col(panel.claim_idx[ci]) +=
                            panel.re_c[ci][a] * ewc - panel.im_c[ci][a] * ews;
                        dvg.col(panel.claim_idx[ci]) +=
                            panel.re_d[ci][a] * ewc - panel.im_d[ci][a] * ews;
                    }
                }
            }

            for (std::size_t b = 0; b < count; ++b)
                draw_pair(eng[b], z1[static_cast<Eigen::Index>(b)],
                          z2[static_cast<Eigen::Index>(b)]);

            const Arr vp = v.max(0.0);
            const Arr sv = (vp * dt).sqrt();
            const Arr xn = x - 0.5 * vp * dt + sv * z1;
            const Arr zv = p.rho * z1 + std::sqrt(1.0 - p.rho * p.rho) * z2;
            v += -p.lambda * (v - p.kappa) * dt + p.sigma * sv * zv;
            qv += vp * dt;
            ds = xn.exp() - s;
            gain0 += th0_s * ds / s;  // theta0 carries 1/S
            lacc.col(0) -= th0_s * ds / s;
            // projection form: integrate dG/dv sigma sqrt((1-rho^2) V) dW-perp
            dwp = sig_perp * sv * z2;
            lpacc.col(0) += dv_m * dwp;
            for (std::size_t ci = 0; ci < n_claims; ++ci) {
                lacc.col(static_cast<Eigen::Index>(ci) + 1) -=
                    2.0 * theta.col(static_cast<Eigen::Index>(ci)) * ds / s;
                lpacc.col(static_cast<Eigen::Index>(ci) + 1) +=
                    2.0 * dvg.col(static_cast<Eigen::Index>(ci)) * dwp;
            }
            x = xn;
        }

        const Arr st = x.exp();
        lacc.col(0) += qv - k_star;
        for (std::size_t ci = 0; ci < n_claims; ++ci) {
            const auto& claim = claims.options[ci];
            const Arr payoff = claim.kind == ClaimKind::Call
                                   ? Arr((st - claim.strike).max(0.0))
                                   : Arr((claim.strike - st).max(0.0));
            lacc.col(static_cast<Eigen::Index>(ci) + 1) += payoff - out.prices[ci];
        }

        for (std::size_t b = 0; b < count; ++b) {
            out.l.col(static_cast<Eigen::Index>(lo + b)) =
                lacc.row(static_cast<Eigen::Index>(b)).transpose().matrix();
            out.lp.col(static_cast<Eigen::Index>(lo + b)) =
                lpacc.row(static_cast<Eigen::Index>(b)).transpose().matrix();
            out.gain0[static_cast<Eigen::Index>(lo + b)] = gain0[static_cast<Eigen::Index>(b)];
        }
    });
    return out;
}

namespace {

// delete-one jackknife for a sample covariance (ddof = 1)
void jackknife_cov(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double& cov, double& se) {
    const auto n = static_cast<double>(x.size());
    const double sx = x.sum(), sy = y.sum();
    const double sxy = x.dot(y);
    cov = (sxy - sx * sy / n) / (n - 1.0);
    const Eigen::ArrayXd loo =
        ((sxy - (x.array() * y.array())) -
         (sx - x.array()) * (sy - y.array()) / (n - 1.0)) /
        (n - 2.0);
    const double mean_loo = loo.mean();
    se = std::sqrt((n - 1.0) / n * (loo - mean_loo).square().sum());
}

}  // namespace

ResidualSample summarize_residuals(const ResidualMatrix& r, const SimConfig& cfg) {
    const Eigen::Index rows = r.l.rows();
    const Eigen::Index n = rows - 1;
    const auto paths = static_cast<double>(r.l.cols());
    ResidualSample out;
    out.n_paths = static_cast<std::size_t>(r.l.cols());
    out.seed = cfg.seed;
    out.mean.resize(rows);
    out.mean_se.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::VectorXd row = r.l.row(i).transpose();
        out.mean[i] = row.mean();
        out.mean_se[i] =
            std::sqrt((row.array() - out.mean[i]).square().sum() / (paths - 1.0) / paths);
    }
    // covariances from the friction-free projection residuals when available
    const Eigen::MatrixXd& src = r.lp.size() ? r.lp : r.l;
    const Eigen::VectorXd l0 = src.row(0).transpose();
    jackknife_cov(l0, l0, out.a_hat, out.a_se);
    out.b_hat.resize(n);
    out.b_se.resize(n);
    out.c_hat.resize(n, n);
    out.c_se.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd li = src.row(i + 1).transpose();
        jackknife_cov(l0, li, out.b_hat[i], out.b_se[i]);
        for (Eigen::Index j = i; j < n; ++j) {
            const Eigen::VectorXd lj = src.row(j + 1).transpose();
            double c, se;
            jackknife_cov(li, lj, c, se);
            out.c_hat(i, j) = out.c_hat(j, i) = c;
            out.c_se(i, j) = out.c_se(j, i) = se;
        }
    }
    return out;
}

ResidualSample estimate_moments(const HestonParams& p, const ClaimSet& claims,
                                const SimConfig& cfg, const QuadSettings& qs) {
    const ResidualMatrix r = simulate_residuals(p, claims, cfg, qs);
    ResidualSample out = summarize_residuals(r, cfg);
    out.n_steps = cfg.n_steps(p.maturity);
    return out;
}

ErrorSample realized_error_from(const ResidualMatrix& r, const Eigen::VectorXd& v) {
    if (v.size() != r.l.rows() - 1)
        throw ConfigError("realized_error: weight length does not match the claim count");
    const Eigen::VectorXd shortfall =
        (r.l.row(0).transpose() - r.l.bottomRows(r.l.rows() - 1).transpose() * v);
    const auto n = static_cast<double>(shortfall.size());
    ErrorSample out;
    out.mean = shortfall.mean();
    out.mean_se =
        std::sqrt((shortfall.array() - out.mean).square().sum() / (n - 1.0) / n);
    const Eigen::ArrayXd sq = shortfall.array().square();
    out.eps2 = sq.mean();
    out.se = std::sqrt((sq - out.eps2).square().sum() / (n - 1.0) / n);
    return out;
}

ErrorSample realized_error(const Eigen::VectorXd& v, const HestonParams& p,
                           const ClaimSet& claims, const SimConfig& cfg,
                           const QuadSettings& qs) {
    return realized_error_from(simulate_residuals(p, claims, cfg, qs), v);
}

}  // namespace svh
