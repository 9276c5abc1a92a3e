#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "svh/errors.hpp"
#include "svh/hedge.hpp"
#include "svh/moments.hpp"
#include "svh/selection.hpp"

using namespace svh;

namespace {

MomentData make_instance(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, double a) {
    MomentData m;
    m.c = c;
    m.b = b;
    m.a = a;
    m.k_star = 0.0254271773507134;
    m.swap_k = m.k_star;
    return m;
}

MomentData random_psd(int n, unsigned seed, int rank = -1) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    if (rank < 0) rank = n;
    Eigen::MatrixXd g(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) g(i, j) = nd(gen);
    Eigen::VectorXd b0(n);
    for (int i = 0; i < n; ++i) b0[i] = 0.1 * nd(gen);
    const Eigen::MatrixXd c = g * g.transpose() / n;
    // keep B inside range(C) and size A so [[A, B'], [B, C]] is a genuine
    // PSD Gram structure: every restricted residual stays positive
    const Eigen::VectorXd b = c * b0;
    return make_instance(c, b, b0.dot(b) + 1.0);
}

}  // namespace

TEST_CASE("solve_on_support scatters weights to the right slots") {
    const MomentData m = random_psd(6, 3);
    const HedgeSolution s = solve_on_support(m, {1, 4}, false);
    REQUIRE(s.v.size() == 6);
    CHECK(s.v[0] == 0.0);
    CHECK(s.v[2] == 0.0);
    CHECK(s.v[3] == 0.0);
    CHECK(s.v[5] == 0.0);
    // restricted normal equations hold on the support
    const Eigen::Vector2d vb(s.v[1], s.v[4]);
    Eigen::Matrix2d cc;
    cc << m.c(1, 1), m.c(1, 4), m.c(4, 1), m.c(4, 4);
    const Eigen::Vector2d bb(m.b[1], m.b[4]);
    CHECK((cc * vb - bb).norm() < 1e-10);
    CHECK(s.eps2 == doctest::Approx(hedging_error(s.v, m)).epsilon(1e-13));
}

TEST_CASE("brute force: d = 0 and d = n ground cases") {
    const MomentData m = random_psd(5, 17);
    const SelectionEntry e0 = brute_force(m, 0, false);
    CHECK(e0.eps2 == doctest::Approx(m.a));
    CHECK(e0.support.empty());
    const SelectionEntry en = brute_force(m, 5, false);
    CHECK(en.eps2 == doctest::Approx(solve_unconstrained(m).eps2).epsilon(1e-12));
    CHECK(en.support.size() == 5);
    CHECK(en.d == 5);
}

TEST_CASE("brute force rejects an impossible budget") {
    const MomentData m = random_psd(30, 1);
    CHECK_THROWS_AS(brute_force(m, 15, false, /*subset_budget=*/1000), BudgetExceeded);
}

TEST_CASE("leaps-and-bounds equals brute force on random instances") {
    // the exactness-equivalence battery: >= 20 instances, n <= 12, all d
    int instances = 0;
    for (unsigned seed = 100; seed < 108; ++seed) {
        for (int n : {4, 8, 12}) {
            const MomentData m = random_psd(n, seed, (seed % 2) ? n : std::max(2, n - 2));
            for (bool nonneg : {false, true}) {
                ++instances;
                for (int d = 0; d <= n; ++d) {
                    const SelectionEntry bf = brute_force(m, d, nonneg);
                    const SelectionEntry lb = leaps_and_bounds(m, d, nonneg);
                    REQUIRE(bf.support == lb.support);
                    REQUIRE(bf.eps2 == doctest::Approx(lb.eps2).epsilon(1e-12));
                }
            }
        }
    }
    CHECK(instances >= 40);
}

TEST_CASE("leaps-and-bounds handles duplicated assets like brute force") {
    // near-degenerate instances stress the pseudo-inverse pruning bound
    for (unsigned seed : {7u, 8u}) {
        MomentData m = random_psd(6, seed);
        Eigen::MatrixXd c(7, 7);
        c.topLeftCorner(6, 6) = m.c;
        c.col(6).head(6) = m.c.col(2);
        c.row(6).head(6) = m.c.row(2);
        c(6, 6) = m.c(2, 2);
        Eigen::VectorXd b(7);
        b.head(6) = m.b;
        b[6] = m.b[2];
        const MomentData dup = make_instance(c, b, m.a);
        for (int d = 0; d <= 7; ++d) {
            const SelectionEntry bf = brute_force(dup, d, false);
            const SelectionEntry lb = leaps_and_bounds(dup, d, false);
            CHECK(bf.support == lb.support);
            CHECK(bf.eps2 == doctest::Approx(lb.eps2).epsilon(1e-10));
        }
    }
}

TEST_CASE("exact methods: eps2 non-increasing in d; ties resolved lexicographically") {
    const MomentData m = random_psd(9, 41);
    double prev = m.a + 1.0;
    for (int d = 0; d <= 9; ++d) {
        const SelectionEntry e = leaps_and_bounds(m, d, false);
        CHECK(e.eps2 <= prev + 1e-14);
        prev = e.eps2;
        CHECK(std::is_sorted(e.support.begin(), e.support.end()));
        CHECK(static_cast<int>(e.support.size()) <= d);
    }
}

TEST_CASE("greedy forward: nested supports, pointwise above the exact curve") {
    const MomentData m = random_psd(10, 53);
    const SelectionPath g = greedy_forward(m, 10, false);
    REQUIRE(g.entries.size() == 11);
    for (int d = 0; d <= 10; ++d) {
        const SelectionEntry& e = g.entries[static_cast<std::size_t>(d)];
        CHECK(e.d == d);
        const SelectionEntry exact = leaps_and_bounds(m, d, false);
        CHECK(e.eps2 >= exact.eps2 - 1e-12);
        if (d > 0) {
            // nested: previous support contained in the current one
            const auto& prev = g.entries[static_cast<std::size_t>(d - 1)].support;
            for (int idx : prev)
                CHECK(std::find(e.support.begin(), e.support.end(), idx) != e.support.end());
        }
    }
    // monotone decreasing errors along the greedy path as well
    for (std::size_t i = 1; i < g.entries.size(); ++i)
        CHECK(g.entries[i].eps2 <= g.entries[i - 1].eps2 + 1e-14);
}

TEST_CASE("greedy backward: full path from n down to 0") {
    const MomentData m = random_psd(8, 67);
    const SelectionPath g = greedy_backward(m, false);
    REQUIRE(g.entries.size() == 9);
    CHECK(g.entries.front().d == 8);
    CHECK(g.entries.back().d == 0);
    CHECK(g.entries.back().eps2 == doctest::Approx(m.a));
    CHECK(g.entries.front().eps2 ==
          doctest::Approx(solve_unconstrained(m).eps2).epsilon(1e-12));
    for (const auto& e : g.entries) {
        const SelectionEntry exact = leaps_and_bounds(m, e.d, false);
        CHECK(e.eps2 >= exact.eps2 - 1e-12);
    }
}

TEST_CASE("greedy with nonneg stays feasible") {
    const MomentData m = random_psd(7, 71);
    for (const auto& e : greedy_forward(m, 7, true).entries) CHECK(e.v.minCoeff() >= -1e-12);
    for (const auto& e : greedy_backward(m, true).entries) CHECK(e.v.minCoeff() >= -1e-12);
}

TEST_CASE("lasso: orthogonal design soft-thresholds exactly") {
    // C = I: coordinate descent solves v_i = S(B_i, lambda/2) in one sweep
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd b(4);
    b << 0.8, -0.5, 0.3, 0.05;
    const MomentData m = make_instance(c, b, 4.0);
    const double lambda = 0.4;
    const SelectionPath path = lasso_path(m, {lambda}, false);
    REQUIRE(path.entries.size() == 1);
    const Eigen::VectorXd& v = path.entries[0].v;
    CHECK(v[0] == doctest::Approx(0.8 - 0.2).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(-0.5 + 0.2).epsilon(1e-12));
    CHECK(v[2] == doctest::Approx(0.3 - 0.2).epsilon(1e-12));
    CHECK(v[3] == 0.0);
    CHECK(path.entries[0].d == 3);
    // nonneg variant clips the negative coordinate away
    const SelectionPath pn = lasso_path(m, {lambda}, true);
    CHECK(pn.entries[0].v[1] == 0.0);
    CHECK(pn.entries[0].v[0] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("lasso: lambda >= 2 max|B| kills the portfolio") {
    const MomentData m = random_psd(6, 83);
    const double lambda = 2.0 * m.b.cwiseAbs().maxCoeff();
    const SelectionPath path = lasso_path(m, {lambda * 1.0001, lambda * 2.0}, false);
    for (const auto& e : path.entries) {
        CHECK(e.v.norm() == 0.0);
        CHECK(e.d == 0);
        CHECK(e.eps2 == doctest::Approx(m.a));
    }
}

TEST_CASE("lasso KKT residual below 1e-8 along the default path") {
    for (unsigned seed : {5u, 15u}) {
        const MomentData m = random_psd(8, seed);
        const std::vector<double> grid = default_lambda_grid(m, 31, 5.0);
        for (bool nonneg : {false, true}) {
            const SelectionPath path = lasso_path(m, grid, nonneg);
            REQUIRE(path.entries.size() == grid.size());
            for (std::size_t i = 0; i < path.entries.size(); ++i) {
                const auto& e = path.entries[i];
                CHECK(e.lambda == doctest::Approx(grid[i]));
                CHECK(lasso_kkt_residual(e.v, m, e.lambda, nonneg) < 1e-8);
                if (nonneg) CHECK(e.v.minCoeff() >= 0.0);
                CHECK(e.certified);
            }
        }
    }
}

TEST_CASE("lasso path: effective size grows as lambda shrinks") {
    const MomentData m = random_psd(10, 29);
    const SelectionPath path = lasso_path(m, default_lambda_grid(m), false);
    CHECK(path.entries.front().d <= path.entries.back().d);
    // the tail of the path approaches the unconstrained solution
    const HedgeSolution u = solve_unconstrained(m);
    CHECK(path.entries.back().eps2 <= u.eps2 * 1.001 + 1e-12);
}

TEST_CASE("default lambda grid is positive, decreasing, and anchored at 2max|B|") {
    const MomentData m = random_psd(5, 97);
    const auto grid = default_lambda_grid(m, 13, 4.0);
    REQUIRE(grid.size() == 13);
    CHECK(grid.front() == doctest::Approx(2.0 * m.b.cwiseAbs().maxCoeff()));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] < grid[i - 1]);
    CHECK(grid.back() > 0.0);
    CHECK(grid.back() == doctest::Approx(grid.front() * 1e-4).epsilon(1e-10));
}

TEST_CASE("lasso rejects nonpositive lambdas") {
    const MomentData m = random_psd(3, 31);
    CHECK_THROWS_AS(lasso_path(m, {0.5, 0.0}, false), ConfigError);
    CHECK_THROWS_AS(lasso_path(m, {-1.0}, false), ConfigError);
}

TEST_CASE("selection entries carry bookkeeping fields") {
    const MomentData m = random_psd(6, 201);
    const SelectionEntry e = leaps_and_bounds(m, 3, true);
    CHECK(e.method == "leaps-and-bounds");
    CHECK(e.d == 3);
    CHECK(e.certified);
    CHECK(e.wall_time >= 0.0);
    CHECK(e.rel_err == doctest::Approx(std::sqrt(e.eps2) / m.k_star));
    const SelectionEntry b = brute_force(m, 2, false);
    CHECK(b.method == "brute-force");
    const SelectionPath g = greedy_forward(m, 2, false);
    CHECK(g.entries.back().method == "greedy-forward");
    const SelectionPath gb = greedy_backward(m, false);
    CHECK(gb.entries.front().method == "greedy-backward");
    const SelectionPath lp = lasso_path(m, {0.01}, false);
    CHECK(lp.entries.front().method == "lasso");
}

TEST_CASE("leaps-and-bounds refuses n > 64") {
    const MomentData m = random_psd(65, 2);
    CHECK_THROWS_AS(leaps_and_bounds(m, 3, false), ConfigError);
}
