#include "svh/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "svh/errors.hpp"

namespace svh {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

MomentData sub_moments(const MomentData& m, const std::vector<int>& idx) {
    MomentData s;
    s.a = m.a;
    s.k_star = m.k_star;
    s.swap_k = m.swap_k;
    const auto k = static_cast<Eigen::Index>(idx.size());
    s.b.resize(k);
    s.c.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        s.b[i] = m.b[idx[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < k; ++j)
            s.c(i, j) = m.c(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return s;
}

void check_support(const MomentData& m, const std::vector<int>& support) {
    for (int i : support)
        if (i < 0 || i >= m.b.size()) throw ConfigError("support index out of range");
}

// RHC of adding asset j to the conditioning set F; redundant assets score 0.
double rhc_of(const MomentData& m, const std::vector<int>& f, int j) {
    const MomentData sub = sub_moments(m, f);
    Eigen::VectorXd k_col(static_cast<Eigen::Index>(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i)
        k_col[static_cast<Eigen::Index>(i)] = m.c(f[i], j);
    try {
        return relative_hedge_contribution(sub, k_col, m.b[j], m.c(j, j));
    } catch (const RedundantAsset&) {
        return 0.0;
    }
}

SelectionEntry entry_from(const MomentData& m, const std::vector<int>& support,
                          const HedgeSolution& sol, const std::string& method, int d) {
    SelectionEntry e;
    e.method = method;
    e.d = d;
    e.support = support;
    std::sort(e.support.begin(), e.support.end());
    e.v = sol.v;
    e.eps2 = sol.eps2;
    e.rel_err = sol.rel_err;
    return e;
}

bool lex_smaller(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

HedgeSolution solve_on_support(const MomentData& m, const std::vector<int>& support, bool nonneg) {
    check_support(m, support);
    std::vector<int> idx = support;
    std::sort(idx.begin(), idx.end());
    const MomentData sub = sub_moments(m, idx);
    HedgeSolution sol =
        nonneg && !idx.empty()
            ? solve_constrained(sub, nonneg_constraints(static_cast<Eigen::Index>(idx.size())))
            : solve_unconstrained(sub);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(m.b.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        full[idx[i]] = sol.v[static_cast<Eigen::Index>(i)];
    sol.v = std::move(full);
    return sol;
}

SelectionEntry brute_force(const MomentData& m, int d, bool nonneg, std::size_t subset_budget) {
    const int n = static_cast<int>(m.b.size());
    if (d < 0 || d > n) throw ConfigError("brute_force: d out of range");
    // C(n, d), saturating at the budget sentinel
    double n_subsets = 1.0;
    for (int i = 0; i < d; ++i) n_subsets *= static_cast<double>(n - i) / (i + 1);
    if (n_subsets > static_cast<double>(subset_budget))
        throw BudgetExceeded("brute_force: subset count exceeds the budget");

    const auto t0 = Clock::now();
    std::vector<int> comb(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) comb[static_cast<std::size_t>(i)] = i;
    std::vector<int> best;
    HedgeSolution best_sol;
    double best_eps2 = std::numeric_limits<double>::infinity();
    while (true) {
        HedgeSolution sol = solve_on_support(m, comb, nonneg);
        if (sol.eps2 < best_eps2 || (sol.eps2 == best_eps2 && lex_smaller(comb, best))) {
            best_eps2 = sol.eps2;
            best = comb;
            best_sol = sol;
        }
        // next combination in lexicographic order
        int i = d - 1;
        while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - d + i) --i;
        if (i < 0) break;
        ++comb[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < d; ++j)
            comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    }
    SelectionEntry e = entry_from(m, best, best_sol, "brute-force", d);
    e.wall_time = seconds_since(t0);
    return e;
}

namespace {

struct LnbContext {
    const MomentData* m;
    bool nonneg;
    std::size_t node_budget;
    std::size_t nodes = 0;
    bool truncated = false;
    int d;
    std::vector<int> order;  // candidate assets, decreasing single-asset RHC
    std::vector<int> best;
    HedgeSolution best_sol;
    double best_eps2 = std::numeric_limits<double>::infinity();
    double margin = 0.0;
};

// f holds the chosen assets, pos indexes the next candidate in ctx.order.
void lnb_dfs(LnbContext& ctx, std::vector<int>& f, std::size_t pos) {
    if (ctx.truncated) return;
    const int n = static_cast<int>(ctx.order.size());
    const int remaining = n - static_cast<int>(pos);
    const int need = ctx.d - static_cast<int>(f.size());
    if (need < 0 || remaining < need) return;

    if (need == 0) {
        HedgeSolution sol = solve_on_support(*ctx.m, f, ctx.nonneg);
        std::vector<int> sorted_f = f;
        std::sort(sorted_f.begin(), sorted_f.end());
        if (sol.eps2 < ctx.best_eps2 ||
            (sol.eps2 == ctx.best_eps2 && lex_smaller(sorted_f, ctx.best))) {
            ctx.best_eps2 = sol.eps2;
            ctx.best = sorted_f;
            ctx.best_sol = sol;
        }
        return;
    }

    if (++ctx.nodes > ctx.node_budget) {
        ctx.truncated = true;
        return;
    }

    // lower bound: unconstrained solve on everything still reachable here
    std::vector<int> reach = f;
    for (std::size_t i = pos; i < ctx.order.size(); ++i) reach.push_back(ctx.order[i]);
    const double bound = solve_unconstrained(sub_moments(*ctx.m, reach)).eps2;
    if (bound > ctx.best_eps2 + ctx.margin) return;

    const int next = ctx.order[pos];
    f.push_back(next);
    lnb_dfs(ctx, f, pos + 1);
    f.pop_back();
    lnb_dfs(ctx, f, pos + 1);
}

}  // namespace

SelectionEntry leaps_and_bounds(const MomentData& m, int d, bool nonneg,
                                std::size_t node_budget) {
    const int n = static_cast<int>(m.b.size());
    if (d < 0 || d > n) throw ConfigError("leaps_and_bounds: d out of range");
    if (n > 64) throw ConfigError("leaps_and_bounds: n > 64 unsupported");

    const auto t0 = Clock::now();
    LnbContext ctx;
    ctx.m = &m;
    ctx.nonneg = nonneg;
    ctx.node_budget = node_budget;
    ctx.d = d;
    ctx.margin = 1e-9 * std::max(m.a, 0.0);  // keeps the bound valid under
                                             // pseudo-inverse truncation noise
    std::vector<double> score(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) score[static_cast<std::size_t>(i)] = rhc_of(m, {}, i);
    ctx.order.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ctx.order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(ctx.order.begin(), ctx.order.end(), [&](int a, int b) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });

    std::vector<int> f;
    lnb_dfs(ctx, f, 0);

    SelectionEntry e = entry_from(m, ctx.best, ctx.best_sol, "leaps-and-bounds", d);
    e.certified = !ctx.truncated;
    e.wall_time = seconds_since(t0);
    return e;
}

SelectionPath greedy_forward(const MomentData& m, int d_max, bool nonneg) {
    const int n = static_cast<int>(m.b.size());
    d_max = std::min(d_max, n);
    if (d_max < 0) throw ConfigError("greedy_forward: negative d_max");

    SelectionPath path;
    std::vector<int> f;
    {
        const auto t0 = Clock::now();
        SelectionEntry e = entry_from(m, {}, solve_on_support(m, {}, nonneg), "greedy-forward", 0);
        e.wall_time = seconds_since(t0);
        path.entries.push_back(std::move(e));
    }
    std::vector<bool> in(static_cast<std::size_t>(n), false);
    for (int step = 1; step <= d_max; ++step) {
        const auto t0 = Clock::now();
        int pick = -1;
        double best = -1.0;
        for (int j = 0; j < n; ++j) {
            if (in[static_cast<std::size_t>(j)]) continue;
            const double r = rhc_of(m, f, j);
            if (r > best) {
                best = r;
                pick = j;
            }
        }
        if (pick < 0) break;
        f.push_back(pick);
        in[static_cast<std::size_t>(pick)] = true;
        SelectionEntry e =
            entry_from(m, f, solve_on_support(m, f, nonneg), "greedy-forward", step);
        e.wall_time = seconds_since(t0);
        path.entries.push_back(std::move(e));
    }
    return path;
}

SelectionPath greedy_backward(const MomentData& m, bool nonneg) {
    const int n = static_cast<int>(m.b.size());
    SelectionPath path;
    std::vector<int> f(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = i;
    {
        const auto t0 = Clock::now();
        SelectionEntry e =
            entry_from(m, f, solve_on_support(m, f, nonneg), "greedy-backward", n);
        e.wall_time = seconds_since(t0);
        path.entries.push_back(std::move(e));
    }
    while (!f.empty()) {
        const auto t0 = Clock::now();
        std::size_t drop = 0;
        double best = std::numeric_limits<double>::infinity();
        HedgeSolution best_sol;
        for (std::size_t j = 0; j < f.size(); ++j) {
            std::vector<int> trial = f;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(j));
            HedgeSolution sol = solve_on_support(m, trial, nonneg);
            if (sol.eps2 < best) {
                best = sol.eps2;
                drop = j;
                best_sol = sol;
            }
        }
        f.erase(f.begin() + static_cast<std::ptrdiff_t>(drop));
        SelectionEntry e = entry_from(m, f, best_sol, "greedy-backward",
                                      static_cast<int>(f.size()));
        e.wall_time = seconds_since(t0);
        path.entries.push_back(std::move(e));
    }
    return path;
}

std::vector<double> default_lambda_grid(const MomentData& m, int n_points, double decades) {
    const double lmax = m.b.size() ? 2.0 * m.b.cwiseAbs().maxCoeff() : 1.0;
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double frac = n_points > 1 ? static_cast<double>(i) / (n_points - 1) : 0.0;
        grid.push_back(lmax * std::pow(10.0, -decades * frac));
    }
    return grid;
}

double lasso_kkt_residual(const Eigen::VectorXd& v, const MomentData& m, double lambda,
                          bool nonneg) {
    const Eigen::VectorXd g = 2.0 * (m.c * v - m.b);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double r;
        if (nonneg) {
            // stationarity of v'Cv - 2B'v + lambda sum(v) over v >= 0
            r = v[i] > 0.0 ? std::abs(g[i] + lambda) : std::max(0.0, -(g[i] + lambda));
            r = std::max(r, -v[i]);
        } else {
            r = v[i] != 0.0 ? std::abs(g[i] + lambda * (v[i] > 0.0 ? 1.0 : -1.0))
                            : std::max(0.0, std::abs(g[i]) - lambda);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

SelectionPath lasso_path(const MomentData& m, const std::vector<double>& lambdas, bool nonneg,
                         std::size_t max_sweeps) {
    const Eigen::Index n = m.b.size();
    for (double l : lambdas)
        if (!(l > 0.0)) throw ConfigError("lasso_path: lambda values must be positive");

    SelectionPath path;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (double lambda : lambdas) {
        const auto t0 = Clock::now();
        bool converged = false;
        for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
            double max_step = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (m.c(i, i) <= 0.0) continue;
                const double r = m.c.row(i).dot(v) - m.c(i, i) * v[i];
                const double z = m.b[i] - r - 0.5 * lambda;
                double vi;
                if (nonneg) {
                    vi = std::max(0.0, z) / m.c(i, i);
                } else {
                    const double zz = m.b[i] - r;
                    const double t = 0.5 * lambda;
                    vi = std::abs(zz) <= t ? 0.0 : (zz - (zz > 0.0 ? t : -t)) / m.c(i, i);
                }
                max_step = std::max(max_step, std::abs(vi - v[i]));
                v[i] = vi;
            }
            if (max_step < 1e-12) {
                converged = true;
                break;
            }
        }
        SelectionEntry e;
        e.method = "lasso";
        e.lambda = lambda;
        e.v = v;
        for (Eigen::Index i = 0; i < n; ++i)
            if (v[i] != 0.0) e.support.push_back(static_cast<int>(i));
        e.d = static_cast<int>(e.support.size());
        e.eps2 = hedging_error(v, m);
        e.rel_err = m.k_star > 0.0 ? std::sqrt(e.eps2) / m.k_star : 0.0;
        e.certified = converged;
        e.wall_time = seconds_since(t0);
        path.entries.push_back(std::move(e));
    }
    return path;
}

}  // namespace svh
