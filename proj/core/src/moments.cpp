#include "svh/moments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "svh/parallel.hpp"

namespace svh {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double tau_of(double t, const HestonParams& p) { return p.maturity - t; }

// (1 - e^{-lambda tau}) psi_tau(u,0) E[H_t(u) V_t] f~(u), the B integrand.
// E[HV] is fused via the semiflow split: phi_T = phi_tau + phi_t(u, psi_tau),
// psi_T = psi_t(u, psi_tau), so only two exponent evaluations are needed.
cplx b_integrand(double t, cplx u, const ClaimSpec& claim, const HestonParams& p) {
    const double tau = tau_of(t, p);
    const CharExponents tail = char_exponents(tau, u, 0.0, p);
    const CharExponents at_t = char_exponents(t, u, tail.psi, p);
    const cplx hv = (at_t.dphi_dw + p.v0 * at_t.dpsi_dw) *
                    std::exp(u * p.x0() + tail.phi + at_t.phi + p.v0 * at_t.psi);
    return (1.0 - std::exp(-p.lambda * tau)) * tail.psi * hv * laplace_transform(u, claim.strike);
}

void check_im(cplx z, const char* what) {
    if (std::abs(z.imag()) > 1e-9 * (1.0 + std::abs(z.real()))) {
        std::ostringstream msg;
        msg << what << ": imaginary part " << z.imag() << " vs real " << z.real()
            << " exceeds the realness tolerance";
        throw QuadratureFailure(msg.str());
    }
}

double b_entry_impl(const ClaimSpec& claim, const HestonParams& p, const QuadSettings& s,
                    EntryMeta* meta) {
    const auto [tn, tw] = gauss_legendre(s.time_nodes, 0.0, p.maturity);
    StripOptions opt;
    opt.abs_tol = s.strip_tol;
    double total = 0.0;
    double err = 0.0;
    std::size_t evals = 0;
    for (int k = 0; k < s.time_nodes; ++k) {
        const double t = tn[k];
        const auto f = [&](cplx u) { return b_integrand(t, u, claim, p); };
        QuadResult r;
        if (s.check_imaginary) {
            r = strip_integral(f, claim.strip_r, opt);
            check_im(r.value, "compute_b entry");
        } else {
            r = strip_integral_real(f, claim.strip_r, opt);
        }
        total += tw[k] * r.value.real();
        err += tw[k] * r.abs_err;
        evals += r.n_evals;
    }
    const double pref = p.sigma * p.sigma * (1.0 - p.rho * p.rho) / p.lambda;
    if (meta) *meta = {std::abs(pref) * err, evals};
    return pref * total;
}

struct InnerCache {
    cplx psi_tau;  // psi_tau(u2, 0)
    cplx factor;   // f~_j(u2) psi_tau(u2,0) exp(phi_tau(u2,0) + u2 x0)
};

double c_entry_impl(const ClaimSpec& ci, const ClaimSpec& cj, const HestonParams& p,
                    const QuadSettings& s, EntryMeta* meta) {
    const auto [tn, tw] = gauss_legendre(s.time_nodes, 0.0, p.maturity);
    const double x0 = p.x0();
    double total = 0.0;
    double err = 0.0;
    std::size_t evals = 0;
    StripOptions inner_opt;
    inner_opt.abs_tol = s.strip_tol;
    StripOptions outer_opt;
    outer_opt.abs_tol = s.outer_tol;
    outer_opt.max_evals = 200'000;

    for (int k = 0; k < s.time_nodes; ++k) {
        const double t = tn[k];
        const double tau = tau_of(t, p);
        std::unordered_map<std::uint64_t, InnerCache> memo;
        std::size_t inner_evals = 0;
        double inner_err_max = 0.0;
        double inner_width = inner_opt.initial_halfwidth;

        const auto inner_of = [&](double y2) -> const InnerCache& {
            std::uint64_t key;
            static_assert(sizeof(key) == sizeof(y2));
            std::memcpy(&key, &y2, sizeof(key));
            auto it = memo.find(key);
            if (it == memo.end()) {
                const cplx u2(cj.strip_r, y2);
                const CharExponents ce2 = char_exponents(tau, u2, 0.0, p);
                InnerCache e;
                e.psi_tau = ce2.psi;
                e.factor = laplace_transform(u2, cj.strike) * ce2.psi *
                           std::exp(ce2.phi + u2 * x0);
                it = memo.emplace(key, e).first;
            }
            return it->second;
        };

        const auto outer_f = [&](cplx u1) -> cplx {
            const CharExponents ce1 = char_exponents(tau, u1, 0.0, p);
            const cplx psi1 = ce1.psi;
            const cplx fac1 =
                laplace_transform(u1, ci.strike) * psi1 * std::exp(ce1.phi + u1 * x0);
            const auto inner_f = [&](cplx u2) -> cplx {
                const InnerCache& e = inner_of(u2.imag());
                const cplx uu = u1 + u2;
                const cplx q = psi1 + e.psi_tau;
                const CharExponents ce = char_exponents(t, uu, q, p);
                return e.factor * (ce.dphi_dw + p.v0 * ce.dpsi_dw) *
                       std::exp(ce.phi + p.v0 * ce.psi);
            };
            StripOptions io = inner_opt;
            io.initial_halfwidth = inner_width;
            const QuadResult r = strip_integral(inner_f, cj.strip_r, io);
            inner_evals += r.n_evals;
            inner_err_max = std::max(inner_err_max, r.abs_err * std::abs(fac1));
            inner_width = std::max(inner_width, r.halfwidth);  // reuse the grown width
            return fac1 * r.value;
        };

        QuadResult r;
        if (s.check_imaginary) {
            r = strip_integral(outer_f, ci.strip_r, outer_opt);
            check_im(r.value, "compute_c entry");
        } else {
            r = strip_integral_real(outer_f, ci.strip_r, outer_opt);
        }
        total += tw[k] * r.value.real();
        err += tw[k] * (r.abs_err + inner_err_max);
        evals += inner_evals + r.n_evals;
    }
    const double pref = p.sigma * p.sigma * (1.0 - p.rho * p.rho);
    if (meta) *meta = {std::abs(pref) * err, evals};
    return pref * total;
}

// Everything needed to integrate a whole block of C entries at once: all
// claim pairs whose strips match (outer_r, inner_r) share the expensive
// char_exponents kernel at (t, u1+u2, psi1+psi2), so each (i, j) component
// only adds a cheap multiplicative factor on top of it.
struct CGroupPair {
    double outer_r = 0.0, inner_r = 0.0;
    std::vector<int> outer_claims, inner_claims;
    struct Comp {
        int mat_i, mat_j;      // symmetric-matrix slot (mat_i <= mat_j)
        int outer_pos, inner_pos;  // positions in outer_claims / inner_claims
        std::size_t flat;      // upper-triangle meta index
    };
    std::vector<Comp> comps;
};

std::vector<CGroupPair> c_group_pairs(const ClaimSet& claims) {
    const int n = static_cast<int>(claims.options.size());
    const auto flat_of = [n](int i, int j) {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n) -
               static_cast<std::size_t>(i) * static_cast<std::size_t>(i - 1) / 2 +
               static_cast<std::size_t>(j - i);
    };
    std::vector<double> strips;
    for (const auto& c : claims.options) strips.push_back(c.strip_r);
    std::sort(strips.begin(), strips.end());
    strips.erase(std::unique(strips.begin(), strips.end()), strips.end());

    std::vector<std::vector<int>> members(strips.size());
    for (int i = 0; i < n; ++i) {
        const auto s = static_cast<std::size_t>(
            std::lower_bound(strips.begin(), strips.end(), claims.options[i].strip_r) -
            strips.begin());
        members[s].push_back(i);
    }

    std::vector<CGroupPair> pairs;
    for (std::size_t a = 0; a < strips.size(); ++a) {
        for (std::size_t b = a; b < strips.size(); ++b) {
            CGroupPair gp;
            gp.outer_r = strips[a];
            gp.inner_r = strips[b];
            gp.outer_claims = members[a];
            gp.inner_claims = members[b];
            for (std::size_t oi = 0; oi < gp.outer_claims.size(); ++oi) {
                for (std::size_t ij = 0; ij < gp.inner_claims.size(); ++ij) {
                    const int i = gp.outer_claims[oi];
                    const int j = gp.inner_claims[ij];
                    if (a == b && j < i) continue;  // same group: keep i <= j once
                    CGroupPair::Comp c;
                    c.mat_i = std::min(i, j);
                    c.mat_j = std::max(i, j);
                    c.outer_pos = static_cast<int>(oi);
                    c.inner_pos = static_cast<int>(ij);
                    c.flat = flat_of(c.mat_i, c.mat_j);
                    gp.comps.push_back(c);
                }
            }
            if (!gp.comps.empty()) pairs.push_back(std::move(gp));
        }
    }
    return pairs;
}

struct CTaskResult {
    std::vector<double> contrib;  // per component, already time-weighted
    double err = 0.0;
    std::size_t evals = 0;
};

CTaskResult c_group_task(const CGroupPair& gp, double t, double tw, const ClaimSet& claims,
                         const HestonParams& p, const QuadSettings& s) {
    const double tau = tau_of(t, p);
    const double x0 = p.x0();
    const auto n_inner = static_cast<int>(gp.inner_claims.size());
    const auto n_comp = static_cast<int>(gp.comps.size());

    struct Node {
        cplx psi2;
        cplx common;  // psi_tau(u2,0) exp(phi_tau(u2,0) + u2 x0)
        std::vector<cplx> ftil;
    };
    std::unordered_map<std::uint64_t, Node> memo;
    StripOptions inner_opt;
    inner_opt.abs_tol = s.strip_tol;
    double inner_width = inner_opt.initial_halfwidth;
    double inner_err_max = 0.0;
    std::size_t evals = 0;

    const auto node_of = [&](double y2) -> const Node& {
        std::uint64_t key;
        std::memcpy(&key, &y2, sizeof(key));
        auto it = memo.find(key);
        if (it == memo.end()) {
            const cplx u2(gp.inner_r, y2);
            const CharExponents ce2 = char_exponents(tau, u2, 0.0, p);
            Node nd;
            nd.psi2 = ce2.psi;
            nd.common = ce2.psi * std::exp(ce2.phi + u2 * x0);
            nd.ftil.reserve(gp.inner_claims.size());
            for (int j : gp.inner_claims)
                nd.ftil.push_back(laplace_transform(u2, claims.options[j].strike));
            it = memo.emplace(key, std::move(nd)).first;
        }
        return it->second;
    };

    std::vector<cplx> fac1(gp.outer_claims.size());
    std::vector<cplx> inner_vals(gp.inner_claims.size());
    const auto outer_f = [&](cplx u1, cplx* out) {
        const CharExponents ce1 = char_exponents(tau, u1, 0.0, p);
        const cplx psi1 = ce1.psi;
        const cplx e1 = psi1 * std::exp(ce1.phi + u1 * x0);
        double fac1_max = 0.0;
        for (std::size_t oi = 0; oi < gp.outer_claims.size(); ++oi) {
            fac1[oi] = laplace_transform(u1, claims.options[gp.outer_claims[oi]].strike) * e1;
            fac1_max = std::max(fac1_max, std::abs(fac1[oi]));
        }
        const auto inner_f = [&](cplx u2, cplx* jout) {
            const Node& nd = node_of(u2.imag());
            const CharExponents ce = char_exponents(t, u1 + u2, psi1 + nd.psi2, p);
            const cplx base = (ce.dphi_dw + p.v0 * ce.dpsi_dw) *
                              std::exp(ce.phi + p.v0 * ce.psi) * nd.common;
            for (int jj = 0; jj < n_inner; ++jj)
                jout[jj] = base * nd.ftil[static_cast<std::size_t>(jj)];
        };
        StripOptions io = inner_opt;
        io.initial_halfwidth = inner_width;
        const MultiResult r = strip_integral_multi(inner_f, n_inner, gp.inner_r, io);
        evals += r.n_evals;
        inner_err_max = std::max(inner_err_max, r.abs_err * fac1_max);
        inner_width = std::max(inner_width, r.halfwidth);
        for (std::size_t jj = 0; jj < inner_vals.size(); ++jj) inner_vals[jj] = r.value[jj];
        for (int c = 0; c < n_comp; ++c) {
            const auto& comp = gp.comps[static_cast<std::size_t>(c)];
            out[c] = fac1[static_cast<std::size_t>(comp.outer_pos)] *
                     inner_vals[static_cast<std::size_t>(comp.inner_pos)];
        }
    };

    StripOptions outer_opt;
    outer_opt.abs_tol = s.outer_tol;
    outer_opt.max_evals = 200'000;
    MultiResult r;
    if (s.check_imaginary) {
        r = strip_integral_multi(outer_f, n_comp, gp.outer_r, outer_opt);
        for (const cplx& z : r.value) check_im(z, "compute_c block");
    } else {
        r = strip_integral_multi_real(outer_f, n_comp, gp.outer_r, outer_opt);
    }

    CTaskResult out;
    out.contrib.resize(static_cast<std::size_t>(n_comp));
    for (int c = 0; c < n_comp; ++c)
        out.contrib[static_cast<std::size_t>(c)] = tw * r.value[static_cast<std::size_t>(c)].real();
    out.err = tw * (r.abs_err + inner_err_max);
    out.evals = evals + r.n_evals;
    return out;
}

// Walk t over a fine grid along the actual evaluation paths of the moment
// integrands and fail loudly if the principal log in phi crosses a branch.
void branch_safety_scan(const HestonParams& p, const ClaimSet& claims) {
    const double T = p.maturity;
    constexpr int kSteps = 256;
    constexpr double kProbeY[] = {0.5, 2.0, 8.0, 32.0, 128.0, 512.0};
    std::vector<double> strips;
    for (const auto& opt : claims.options) strips.push_back(opt.strip_r);
    std::sort(strips.begin(), strips.end());
    strips.erase(std::unique(strips.begin(), strips.end()), strips.end());
    const auto check = [&](cplx u, cplx w, const char* where) {
        if (phi_branch_jump(u, w, T, kSteps, p) > 1.0) {
            std::ostringstream msg;
            msg << "phi branch jump detected (" << where << ") at u=(" << u.real() << ","
                << u.imag() << ")";
            throw QuadratureFailure(msg.str());
        }
    };
    for (double r : strips) {
        for (double y : kProbeY) {
            const cplx u(r, y);
            check(u, 0.0, "psi_tau line");
            // paths with moving w: w*(t) = psi_{T-t}(u,0) and the doubled-strip
            // analogue q(t) = 2 psi_{T-t}(u,0) entering at argument 2u
            double prev_hv = 0.0, prev_hh = 0.0;
            for (int i = 1; i <= kSteps; ++i) {
                const double t = T * i / kSteps;
                const double tau = T - t;
                const cplx wstar = char_exponents(tau, u, 0.0, p).psi;
                const auto log_term = [&](cplx uu, cplx w) -> double {
                    const cplx delta = heston_discriminant(uu, p);
                    if (std::abs(delta) <= 1e-12 * (1.0 + std::norm(heston_chi(uu, p))))
                        return 0.0;
                    const auto [rm, rp] = riccati_roots(uu, p);
                    if (std::abs(rp - w) <= 1e-12 * (1.0 + std::abs(rp))) return 0.0;
                    const cplx g = (rm - w) / (rp - w);
                    return std::imag(std::log(1.0 - g * std::exp(-t * std::sqrt(delta))) -
                                     std::log(1.0 - g));
                };
                const double cur_hv = log_term(u, wstar);
                const double cur_hh = log_term(2.0 * u, 2.0 * wstar);
                if (i > 1 && (std::abs(cur_hv - prev_hv) > 1.5 || std::abs(cur_hh - prev_hh) > 1.5))
                    check(u, wstar, "moving-w path");  // recheck precisely, then throw
                prev_hv = cur_hv;
                prev_hh = cur_hh;
            }
        }
    }
}

}  // namespace

double MomentData::rcond() const {
    if (c.rows() == 0) return 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double lo = std::abs(ev.minCoeff());
    const double hi = std::abs(ev.maxCoeff());
    if (hi == 0.0) return 0.0;
    return std::min(lo, hi) / std::max(lo, hi);
}

double compute_a(const HestonParams& p) {
    const double lam = p.lambda, T = p.maturity;
    const double el = std::exp(-lam * T);
    const double e2l = std::exp(-2.0 * lam * T);
    const double term_k = p.kappa * (T - 2.0 * (1.0 - el) / lam + (1.0 - e2l) / (2.0 * lam));
    const double term_v = (p.v0 - p.kappa) * ((1.0 - el) / lam - 2.0 * T * el + (el - e2l) / lam);
    return p.sigma * p.sigma * (1.0 - p.rho * p.rho) / (lam * lam) * (term_k + term_v);
}

double compute_b_entry(const ClaimSpec& claim, const HestonParams& p, const QuadSettings& s,
                       EntryMeta* meta) {
    return b_entry_impl(claim, p, s, meta);
}

double compute_c_entry(const ClaimSpec& ci, const ClaimSpec& cj, const HestonParams& p,
                       const QuadSettings& s, EntryMeta* meta) {
    return c_entry_impl(ci, cj, p, s, meta);
}

double option_price(const ClaimSpec& claim, const HestonParams& p, double abs_tol) {
    const auto f = [&](cplx u) -> cplx {
        const CharExponents ce = char_exponents(p.maturity, u, 0.0, p);
        return laplace_transform(u, claim.strike) * std::exp(u * p.x0() + ce.phi + p.v0 * ce.psi);
    };
    StripOptions opt;
    opt.abs_tol = abs_tol;
    return strip_integral_real(f, claim.strip_r, opt).value.real();
}

std::string params_hash(const HestonParams& p, const ClaimSet& claims, const QuadSettings& s) {
    std::ostringstream enc;
    enc << "svh-moments-v1|" << fmt17(p.kappa) << '|' << fmt17(p.lambda) << '|' << fmt17(p.rho)
        << '|' << fmt17(p.sigma) << '|' << fmt17(p.v0) << '|' << fmt17(p.s0) << '|'
        << fmt17(p.maturity) << "|k=" << fmt17(claims.swap_strike) << "|claims=";
    for (const auto& c : claims.options)
        enc << to_string(c.kind) << ':' << fmt17(c.strike) << ':' << fmt17(c.strip_r) << ';';
    enc << "|quad=" << fmt17(s.strip_tol) << ',' << fmt17(s.outer_tol) << ',' << s.time_nodes;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(enc.str())));
    return buf;
}

MomentData compute_moments(const HestonParams& p, const ClaimSet& claims, const QuadSettings& s,
                           const std::optional<std::filesystem::path>& cache_dir) {
    p.validate();
    const std::size_t n = claims.options.size();
    for (const auto& c : claims.options)
        if (c.strip_r == 0.0)
            throw ConfigError("compute_moments: claims not finalized (missing strips)");

    const std::string hash = params_hash(p, claims, s);
    std::filesystem::path cache_file;
    if (cache_dir) {
        cache_file = *cache_dir / ("moments_" + hash + ".json");
        if (auto cached = load_moments(cache_file, hash)) return *cached;
    }

    branch_safety_scan(p, claims);

    MomentData m;
    m.params_hash = hash;
    m.k_star = swap_rate(p);
    m.swap_k = claims.swap_strike == 0.0 ? m.k_star : claims.swap_strike;
    m.a = compute_a(p);
    m.b.resize(static_cast<Eigen::Index>(n));
    m.c.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.b_meta.resize(n);
    m.c_meta.resize(n * (n + 1) / 2);

    // Task list: all B entries, then one C block task per (strip-group pair,
    // time node).  Grouping C entries by strip pair lets every claim pair in
    // the block share the expensive inner kernel evaluations.
    const std::vector<CGroupPair> groups = c_group_pairs(claims);
    const auto [tn, tw] = gauss_legendre(s.time_nodes, 0.0, p.maturity);
    struct BlockTask {
        std::size_t group;
        int node;
    };
    std::vector<BlockTask> btasks;
    btasks.reserve(groups.size() * static_cast<std::size_t>(s.time_nodes));
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int k = 0; k < s.time_nodes; ++k) btasks.push_back({g, k});
    std::vector<CTaskResult> results(btasks.size());

    parallel_for(n + btasks.size(), s.threads, [&](std::size_t task) {
        if (task < n) {
            m.b[static_cast<Eigen::Index>(task)] =
                b_entry_impl(claims.options[task], p, s, &m.b_meta[task]);
        } else {
            const BlockTask& bt = btasks[task - n];
            results[task - n] =
                c_group_task(groups[bt.group], tn[bt.node], tw[bt.node], claims, p, s);
        }
    });

    // Reduce in fixed task order so the sums are bit-identical across thread
    // counts.
    const double pref = p.sigma * p.sigma * (1.0 - p.rho * p.rho);
    m.c.setZero();
    for (auto& meta : m.c_meta) meta = {0.0, 0};
    for (std::size_t idx = 0; idx < btasks.size(); ++idx) {
        const CGroupPair& gp = groups[btasks[idx].group];
        const CTaskResult& r = results[idx];
        for (std::size_t c = 0; c < gp.comps.size(); ++c) {
            const auto& comp = gp.comps[c];
            m.c(comp.mat_i, comp.mat_j) += r.contrib[c];
            m.c_meta[comp.flat].abs_err += std::abs(pref) * r.err;
            m.c_meta[comp.flat].n_evals += r.evals / gp.comps.size();
        }
    }
    m.c *= pref;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            m.c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                m.c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

    if (cache_dir) {
        std::filesystem::create_directories(*cache_dir);
        save_moments(cache_file, m, p, claims, s);
    }
    return m;
}

namespace {

void json_claims(std::ostringstream& out, const ClaimSet& claims) {
    out << "[";
    for (std::size_t i = 0; i < claims.options.size(); ++i) {
        const auto& c = claims.options[i];
        out << (i ? "," : "") << "{\"kind\":\"" << to_string(c.kind)
            << "\",\"strike\":" << fmt17(c.strike) << ",\"strip_r\":" << fmt17(c.strip_r) << "}";
    }
    out << "]";
}

}  // namespace

std::string to_json(const MomentData& m, const HestonParams& p, const ClaimSet& claims,
                    const QuadSettings& s) {
    std::ostringstream out;
    out << "{\n\"schema\":\"svh-moments-v1\",\n\"params_hash\":\"" << m.params_hash << "\",\n";
    out << "\"params\":{\"kappa\":" << fmt17(p.kappa) << ",\"lambda\":" << fmt17(p.lambda)
        << ",\"rho\":" << fmt17(p.rho) << ",\"sigma\":" << fmt17(p.sigma)
        << ",\"v0\":" << fmt17(p.v0) << ",\"s0\":" << fmt17(p.s0)
        << ",\"maturity\":" << fmt17(p.maturity) << "},\n";
    out << "\"claims\":";
    json_claims(out, claims);
    out << ",\n\"settings\":{\"strip_tol\":" << fmt17(s.strip_tol)
        << ",\"outer_tol\":" << fmt17(s.outer_tol) << ",\"time_nodes\":" << s.time_nodes
        << "},\n";
    out << "\"k_star\":" << fmt17(m.k_star) << ",\n\"swap_k\":" << fmt17(m.swap_k) << ",\n";
    out << "\"a\":" << fmt17(m.a) << ",\n\"b\":[";
    for (Eigen::Index i = 0; i < m.b.size(); ++i) out << (i ? "," : "") << fmt17(m.b[i]);
    out << "],\n\"c\":[";
    for (Eigen::Index i = 0; i < m.c.rows(); ++i) {
        out << (i ? ",\n" : "") << "[";
        for (Eigen::Index j = 0; j < m.c.cols(); ++j) out << (j ? "," : "") << fmt17(m.c(i, j));
        out << "]";
    }
    out << "],\n\"meta\":{\"a\":{\"abs_err\":" << fmt17(m.a_meta.abs_err)
        << ",\"n_evals\":" << m.a_meta.n_evals << "},\"b\":[";
    for (std::size_t i = 0; i < m.b_meta.size(); ++i)
        out << (i ? "," : "") << "{\"abs_err\":" << fmt17(m.b_meta[i].abs_err)
            << ",\"n_evals\":" << m.b_meta[i].n_evals << "}";
    out << "],\"c\":[";
    for (std::size_t i = 0; i < m.c_meta.size(); ++i)
        out << (i ? "," : "") << "{\"abs_err\":" << fmt17(m.c_meta[i].abs_err)
            << ",\"n_evals\":" << m.c_meta[i].n_evals << "}";
    out << "]}\n}\n";
    return out.str();
}

MomentData moments_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("moments JSON parse error: ") + e.what());
    }
    if (j.value("schema", "") != "svh-moments-v1")
        throw ConfigError("moments JSON: unknown schema");
    MomentData m;
    try {
        m.params_hash = j.at("params_hash").get<std::string>();
        m.k_star = j.at("k_star").get<double>();
        m.swap_k = j.at("swap_k").get<double>();
        m.a = j.at("a").get<double>();
        const auto& jb = j.at("b");
        m.b.resize(static_cast<Eigen::Index>(jb.size()));
        for (std::size_t i = 0; i < jb.size(); ++i)
            m.b[static_cast<Eigen::Index>(i)] = jb[i].get<double>();
        const auto& jc = j.at("c");
        const auto nn = static_cast<Eigen::Index>(jc.size());
        m.c.resize(nn, nn);
        for (Eigen::Index i = 0; i < nn; ++i) {
            if (static_cast<Eigen::Index>(jc[i].size()) != nn)
                throw ConfigError("moments JSON: C is not square");
            for (Eigen::Index j2 = 0; j2 < nn; ++j2) m.c(i, j2) = jc[i][j2].get<double>();
        }
        if (m.b.size() != nn) throw ConfigError("moments JSON: B/C size mismatch");
        if (j.contains("meta")) {
            const auto& meta = j["meta"];
            m.a_meta = {meta.at("a").at("abs_err").get<double>(),
                        meta.at("a").at("n_evals").get<std::size_t>()};
            for (const auto& e : meta.at("b"))
                m.b_meta.push_back({e.at("abs_err").get<double>(), e.at("n_evals").get<std::size_t>()});
            for (const auto& e : meta.at("c"))
                m.c_meta.push_back({e.at("abs_err").get<double>(), e.at("n_evals").get<std::size_t>()});
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("moments JSON: missing or ill-typed field: ") + e.what());
    }
    return m;
}

void save_moments(const std::filesystem::path& file, const MomentData& m, const HestonParams& p,
                  const ClaimSet& claims, const QuadSettings& s) {
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << to_json(m, p, claims, s);
    }
    std::filesystem::rename(tmp, file);
}

std::optional<MomentData> load_moments(const std::filesystem::path& file,
                                       const std::string& expected_hash) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        MomentData m = moments_from_json(buf.str());
        if (!expected_hash.empty() && m.params_hash != expected_hash) return std::nullopt;
        return m;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace svh
