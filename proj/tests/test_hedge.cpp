#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "svh/errors.hpp"
#include "svh/hedge.hpp"
#include "svh/moments.hpp"

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
    // PSD Gram structure: the unconstrained residual is then exactly 1
    const Eigen::VectorXd b = c * b0;
    return make_instance(c, b, b0.dot(b) + 1.0);
}

double qp_value(const MomentData& m, const Eigen::VectorXd& v) {
    return m.a - 2.0 * v.dot(m.b) + v.dot(m.c * v);
}

}  // namespace

TEST_CASE("hedging_error matches the quadratic form and floors at zero") {
    const MomentData m = random_psd(5, 11);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(5, -0.3, 0.8);
    CHECK(hedging_error(v, m) == doctest::Approx(qp_value(m, v)).epsilon(1e-14));
    // dimension mismatch rejected
    Eigen::VectorXd bad(3);
    bad.setZero();
    CHECK_THROWS_AS(hedging_error(bad, m), ConfigError);
}

TEST_CASE("unconstrained solve on a hand-checked 2x2 instance") {
    Eigen::MatrixXd c(2, 2);
    c << 2.0, 1.0, 1.0, 2.0;
    Eigen::VectorXd b(2);
    b << 1.0, 0.0;
    // v = C^{-1} B = (1/3)[2, -1]; eps2 = a - B'C^{-1}B = a - 2/3
    const MomentData m = make_instance(c, b, 1.0);
    const HedgeSolution s = solve_unconstrained(m);
    CHECK(s.v[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s.v[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    CHECK(s.eps2 == doctest::Approx(1.0 - 2.0 / 3.0).epsilon(1e-12));
    CHECK(s.rel_err == doctest::Approx(std::sqrt(s.eps2) / m.k_star).epsilon(1e-12));
    CHECK(s.c == doctest::Approx(m.k_star - m.swap_k));
}

TEST_CASE("unconstrained optimum is a stationary point and a minimum") {
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        const MomentData m = random_psd(9, seed);
        const HedgeSolution s = solve_unconstrained(m);
        const Eigen::VectorXd grad = 2.0 * (m.c * s.v - m.b);
        CHECK(grad.norm() < 1e-8 * (1.0 + m.b.norm()));
        // perturbations never decrease the objective
        std::mt19937 gen(seed + 100);
        std::normal_distribution<double> nd;
        for (int k = 0; k < 10; ++k) {
            Eigen::VectorXd dv(9);
            for (int i = 0; i < 9; ++i) dv[i] = 1e-3 * nd(gen);
            CHECK(qp_value(m, s.v + dv) >= s.eps2 - 1e-12);
        }
    }
}

TEST_CASE("pinv solve: rank-deficient duplicated asset gets the min-norm split") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 1.0, 1.0, 1.0;  // the same asset twice
    Eigen::VectorXd b(2);
    b << 0.5, 0.5;
    const MomentData m = make_instance(c, b, 1.0);
    const HedgeSolution s = solve_pinv(m);
    // any v with v1 + v2 = 0.5 solves Cv = B; min-norm puts 0.25 on each
    CHECK(s.v[0] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(s.v[1] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(s.eps2 == doctest::Approx(1.0 - 0.25).epsilon(1e-10));
    CHECK(s.method == "pinv");

    // the dispatcher notices the rank deficiency and falls through to pinv
    const HedgeSolution d = solve_unconstrained(m);
    CHECK(d.v[0] == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(d.method == "pinv");
}

TEST_CASE("pinv equals direct inverse on well-conditioned instances") {
    const MomentData m = random_psd(7, 21);
    const HedgeSolution a = solve_unconstrained(m);
    const HedgeSolution b = solve_pinv(m);
    CHECK((a.v - b.v).norm() < 1e-9 * (1.0 + a.v.norm()));
    CHECK(a.eps2 == doctest::Approx(b.eps2).epsilon(1e-10));
}

TEST_CASE("nonneg constrained solve: unconstrained optimum feasible => identical") {
    Eigen::MatrixXd c(2, 2);
    c << 2.0, 0.5, 0.5, 1.0;
    Eigen::VectorXd b(2);
    b << 1.0, 0.5;
    const MomentData m = make_instance(c, b, 2.0);
    const HedgeSolution u = solve_unconstrained(m);
    REQUIRE(u.v.minCoeff() > 0.0);
    const HedgeSolution s = solve_constrained(m, nonneg_constraints(2));
    CHECK((s.v - u.v).norm() < 1e-10);
    CHECK(s.kkt_residual < 1e-8);
    CHECK(s.active_set.empty());
}

TEST_CASE("nonneg constrained solve: binding constraint lands on the boundary") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 0.0, 0.0, 1.0;
    Eigen::VectorXd b(2);
    b << 1.0, -1.0;
    const MomentData m = make_instance(c, b, 3.0);
    const HedgeSolution s = solve_constrained(m, nonneg_constraints(2));
    CHECK(s.v[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s.v[1] == doctest::Approx(0.0));
    CHECK(s.eps2 == doctest::Approx(3.0 - 1.0).epsilon(1e-10));
    REQUIRE(s.active_set.size() == 1);
    CHECK(s.active_set[0] == 1);
    CHECK(s.kkt_residual < 1e-8);
}

TEST_CASE("constrained solve satisfies KKT on random instances") {
    for (unsigned seed = 0; seed < 25; ++seed) {
        const int n = 3 + static_cast<int>(seed % 10);
        const MomentData m = random_psd(n, 1000 + seed);
        const HedgeSolution s = solve_constrained(m, nonneg_constraints(n));
        CHECK(s.kkt_residual < 1e-8);
        CHECK(s.v.minCoeff() >= -1e-12);
        // never better than unconstrained, never worse than v = 0
        const HedgeSolution u = solve_unconstrained(m);
        CHECK(s.eps2 >= u.eps2 - 1e-10 * m.a);
        CHECK(s.eps2 <= m.a + 1e-10 * m.a);
        // feasible-direction sanity: projecting the gradient is nonnegative
        const Eigen::VectorXd grad = 2.0 * (m.c * s.v - m.b);
        for (int i = 0; i < n; ++i)
            if (s.v[i] > 1e-10) CHECK(std::abs(grad[i]) < 1e-7 * (1.0 + grad.norm()));
    }
}

TEST_CASE("constrained solve with general constraints") {
    // portfolio must have nonnegative net weight: p = ones
    const MomentData m = random_psd(4, 77);
    std::vector<Constraint> cons;
    cons.push_back({Eigen::VectorXd::Ones(4)});
    const HedgeSolution s = solve_constrained(m, cons);
    CHECK(s.v.sum() >= -1e-12);
    CHECK(s.kkt_residual < 1e-8);
    CHECK_THROWS_AS(solve_constrained(m, {}), ConfigError);
}

TEST_CASE("degenerate C: constrained solve still terminates with valid KKT") {
    for (unsigned seed : {5u, 6u, 7u}) {
        const MomentData m = random_psd(8, seed, /*rank=*/3);
        const HedgeSolution s = solve_constrained(m, nonneg_constraints(8));
        CHECK(s.kkt_residual < 1e-8);
        CHECK(s.v.minCoeff() >= -1e-12);
    }
}

TEST_CASE("relative hedge contribution matches a direct re-solve") {
    for (unsigned seed : {3u, 9u, 27u}) {
        const MomentData big = random_psd(6, seed);
        // split: first 5 assets are the current book, the 6th is the candidate
        MomentData m = make_instance(big.c.topLeftCorner(5, 5), big.b.head(5), big.a);
        const Eigen::VectorXd k_col = big.c.topRightCorner(5, 1);
        const double var_new = big.c(5, 5);
        const double cov0 = big.b[5];
        const double rhc = relative_hedge_contribution(m, k_col, cov0, var_new);

        const double eps_small = solve_unconstrained(m).eps2;
        const double eps_big = solve_unconstrained(big).eps2;
        const double expected = (eps_small - eps_big) / eps_small;
        CHECK(rhc == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("relative hedge contribution flags redundant assets") {
    const MomentData base = random_psd(4, 13);
    // candidate = exact copy of asset 0
    const Eigen::VectorXd k_col = base.c.col(0);
    CHECK_THROWS_AS(
        relative_hedge_contribution(base, k_col, base.b[0], base.c(0, 0)), RedundantAsset);
}

TEST_CASE("zero assets: the d = 0 solution is the bare swap error") {
    MomentData m;
    m.a = 2.3026288702184956e-4;
    m.k_star = 0.0254271773507134;
    m.swap_k = m.k_star;
    m.b.resize(0);
    m.c.resize(0, 0);
    const HedgeSolution s = solve_unconstrained(m);
    CHECK(s.eps2 == doctest::Approx(m.a));
    CHECK(s.rel_err == doctest::Approx(0.596779396001).epsilon(1e-9));
    CHECK(s.v.size() == 0);
}

TEST_CASE("negative eps2 rounding is floored at zero") {
    // perfect replication: one asset identical to the target residual
    Eigen::MatrixXd c(1, 1);
    c << 0.5;
    Eigen::VectorXd b(1);
    b << 0.5;
    const MomentData m = make_instance(c, b, 0.5);  // corr = 1
    const HedgeSolution s = solve_unconstrained(m);
    CHECK(s.eps2 == 0.0);
    CHECK(s.rel_err == 0.0);
}
