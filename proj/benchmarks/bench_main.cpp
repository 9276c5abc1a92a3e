#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "svh/claims.hpp"
#include "svh/hedge.hpp"
#include "svh/heston.hpp"
#include "svh/moments.hpp"
#include "svh/quadrature.hpp"
#include "svh/selection.hpp"

namespace {

using namespace svh;

void bm_char_exponents(benchmark::State& state) {
    const HestonParams p;
    const cplx u(2.0, 37.5), w(0.01, -0.02);
    for (auto _ : state) benchmark::DoNotOptimize(char_exponents(0.63, u, w, p));
}
BENCHMARK(bm_char_exponents);

void bm_option_price(benchmark::State& state) {
    const HestonParams p;
    ClaimSet cs;
    cs.options.push_back({ClaimKind::Put, 80.0, 0.0});
    cs.finalize(p);
    for (auto _ : state) benchmark::DoNotOptimize(option_price(cs.options[0], p));
}
BENCHMARK(bm_option_price);

void bm_b_entry(benchmark::State& state) {
    const HestonParams p;
    ClaimSet cs;
    cs.options.push_back({ClaimKind::Put, 80.0, 0.0});
    cs.finalize(p);
    QuadSettings qs;
    qs.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(compute_b_entry(cs.options[0], p, qs));
}
BENCHMARK(bm_b_entry)->Unit(benchmark::kMillisecond);

// Random PSD hedge instance with the scale of the paper moments.
MomentData random_instance(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = nd(gen);
    Eigen::VectorXd b0(n);
    for (int i = 0; i < n; ++i) b0[i] = 0.1 * nd(gen);
    MomentData m;
    m.c = g * g.transpose() / n;
    // keep B inside range(C) so the instance is a valid covariance structure
    m.b = m.c * b0;
    m.a = b0.dot(m.b) + 1.0;
    m.k_star = 0.025;
    m.swap_k = m.k_star;
    return m;
}

void bm_solve_unconstrained(benchmark::State& state) {
    const MomentData m = random_instance(static_cast<int>(state.range(0)), 7);
    for (auto _ : state) benchmark::DoNotOptimize(solve_unconstrained(m));
}
BENCHMARK(bm_solve_unconstrained)->Arg(21)->Arg(64);

void bm_solve_constrained(benchmark::State& state) {
    const MomentData m = random_instance(static_cast<int>(state.range(0)), 7);
    const auto cons = nonneg_constraints(m.b.size());
    for (auto _ : state) benchmark::DoNotOptimize(solve_constrained(m, cons));
}
BENCHMARK(bm_solve_constrained)->Arg(21)->Arg(64);

void bm_leaps_and_bounds(benchmark::State& state) {
    const MomentData m = random_instance(21, 7);
    for (auto _ : state) benchmark::DoNotOptimize(leaps_and_bounds(m, static_cast<int>(state.range(0)), true));
}
BENCHMARK(bm_leaps_and_bounds)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void bm_lasso_path(benchmark::State& state) {
    const MomentData m = random_instance(21, 7);
    const auto grid = default_lambda_grid(m);
    for (auto _ : state) benchmark::DoNotOptimize(lasso_path(m, grid, true));
}
BENCHMARK(bm_lasso_path)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
