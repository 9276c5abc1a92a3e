#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "svh/claims.hpp"
#include "svh/errors.hpp"
#include "svh/heston.hpp"
#include "svh/moments.hpp"
#include "svh/quadrature.hpp"

using namespace svh;

namespace {
const HestonParams kPaper;
constexpr double kPi = std::numbers::pi;
}  // namespace

TEST_CASE("gauss-legendre: exactness, symmetry, interval mapping") {
    for (int n : {4, 16, 64}) {
        const auto [x, w] = gauss_legendre(n);
        REQUIRE(static_cast<int>(x.size()) == n);
        double mass = 0.0, odd = 0.0, quad = 0.0;
        for (int i = 0; i < n; ++i) {
            mass += w[i];
            odd += w[i] * x[i] * x[i] * x[i];
            quad += w[i] * x[i] * x[i];
        }
        CHECK(mass == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(odd == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(quad == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
        // degree 2n-1 exactness: x^(2n-2) integrates to 2/(2n-1)
        double high = 0.0;
        for (int i = 0; i < n; ++i) high += w[i] * std::pow(x[i], 2 * n - 2);
        CHECK(high == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-12));
    }
    const auto [x, w] = gauss_legendre(32, 0.0, 3.0);
    double mass = 0.0;
    for (double wi : w) mass += wi;
    CHECK(mass == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(x.front() > 0.0);
    CHECK(x.back() < 3.0);
}

TEST_CASE("adaptive integrator: smooth, oscillatory, and peaked integrands") {
    const auto gauss = [](double x) { return cplx(std::exp(-x * x), 0.0); };
    const QuadResult g = integrate_adaptive(gauss, -8.0, 8.0, 1e-12, 100000);
    CHECK(g.value.real() == doctest::Approx(std::sqrt(kPi)).epsilon(1e-12));
    CHECK(g.abs_err < 1e-10);

    const auto osc = [](double x) { return cplx(std::cos(40.0 * x), std::sin(40.0 * x)); };
    const QuadResult o = integrate_adaptive(osc, 0.0, 2.0, 1e-12, 200000);
    CHECK(o.value.real() == doctest::Approx(std::sin(80.0) / 40.0).epsilon(1e-11));
    CHECK(o.value.imag() == doctest::Approx((1.0 - std::cos(80.0)) / 40.0).epsilon(1e-11));

    const auto peak = [](double x) { return cplx(1.0 / (1e-6 + x * x), 0.0); };
    const double ref = 2.0 / 1e-3 * std::atan(5.0 / 1e-3);
    const QuadResult p = integrate_adaptive(peak, -5.0, 5.0, 1e-9, 2000000);
    CHECK(p.value.real() == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("adaptive integrator fails loudly when the budget is too small") {
    const auto peak = [](double x) { return cplx(1.0 / (1e-10 + x * x), 0.0); };
    CHECK_THROWS_AS(integrate_adaptive(peak, -5.0, 5.0, 1e-12, 100), QuadratureFailure);
}

TEST_CASE("multi-component integrator matches scalar results componentwise") {
    const auto f3 = [](double x, cplx* out) {
        out[0] = cplx(std::exp(-x * x), 0.0);
        out[1] = cplx(std::cos(7.0 * x), std::sin(3.0 * x));
        out[2] = cplx(1.0 / (0.01 + x * x), 0.0);
    };
    const MultiResult m = integrate_adaptive_multi(f3, 3, -6.0, 6.0, 1e-11, 4000000);
    REQUIRE(m.value.size() == 3);

    const auto s0 = integrate_adaptive([](double x) { return cplx(std::exp(-x * x), 0.0); },
                                       -6.0, 6.0, 1e-11, 4000000);
    const auto s2 = integrate_adaptive([](double x) { return cplx(1.0 / (0.01 + x * x), 0.0); },
                                       -6.0, 6.0, 1e-11, 4000000);
    // the shared partition refines for the worst component, so every component
    // is at least as accurate as its scalar run's tolerance
    CHECK(std::abs(m.value[0] - s0.value) < 1e-9);
    CHECK(std::abs(m.value[2] - s2.value) < 1e-7 * std::abs(s2.value));
    CHECK(m.value[1].real() == doctest::Approx(2.0 * std::sin(42.0) / 7.0).epsilon(1e-9));
    // eval accounting counts integrand calls once per node, not per component
    CHECK(m.n_evals < s0.n_evals + s2.n_evals + 100000);
}

TEST_CASE("strip integral: value independent of the abscissa within the domain") {
    // option prices are contour integrals; moving the strip inside the
    // analyticity domain must not change the value
    ClaimSet cs;
    cs.options.push_back({ClaimKind::Put, 80.0, -1.0});
    cs.options.push_back({ClaimKind::Call, 120.0, 2.0});
    cs.finalize(kPaper);

    const auto price_at = [&](const ClaimSpec& c, double r) {
        const auto f = [&](cplx u) {
            const CharExponents ce = char_exponents(kPaper.maturity, u, 0.0, kPaper);
            return laplace_transform(u, c.strike) *
                   std::exp(u * kPaper.x0() + ce.phi + kPaper.v0 * ce.psi);
        };
        StripOptions opt;
        opt.abs_tol = 1e-11;
        return strip_integral_real(f, r, opt).value.real();
    };
    const double put_a = price_at(cs.options[0], -1.0);
    const double put_b = price_at(cs.options[0], -0.45);
    const double put_c = price_at(cs.options[0], -1.8);
    CHECK(put_a == doctest::Approx(put_b).epsilon(1e-9));
    CHECK(put_a == doctest::Approx(put_c).epsilon(1e-9));

    const double call_a = price_at(cs.options[1], 2.0);
    const double call_b = price_at(cs.options[1], 1.5);
    CHECK(call_a == doctest::Approx(call_b).epsilon(1e-9));
}

TEST_CASE("half-line real form equals the full-line strip integral") {
    ClaimSet cs;
    cs.options.push_back({ClaimKind::Put, 90.0, -1.0});
    cs.finalize(kPaper);
    const auto f = [&](cplx u) {
        const CharExponents ce = char_exponents(kPaper.maturity, u, 0.0, kPaper);
        return laplace_transform(u, 90.0) *
               std::exp(u * kPaper.x0() + ce.phi + kPaper.v0 * ce.psi);
    };
    StripOptions opt;
    opt.abs_tol = 1e-11;
    const QuadResult sym = strip_integral_real(f, -1.0, opt);
    const QuadResult full = strip_integral(f, -1.0, opt);
    CHECK(sym.value.real() == doctest::Approx(full.value.real()).epsilon(1e-9));
    CHECK(std::abs(full.value.imag()) < 1e-9 * (1.0 + std::abs(full.value.real())));
    CHECK(sym.halfwidth > 0.0);
}

TEST_CASE("multi strip integral matches scalar strip integral per component") {
    const double strikes[3] = {70.0, 90.0, 110.0};
    const auto fm = [&](cplx u, cplx* out) {
        const CharExponents ce = char_exponents(kPaper.maturity, u, 0.0, kPaper);
        const cplx kernel = std::exp(u * kPaper.x0() + ce.phi + kPaper.v0 * ce.psi);
        for (int j = 0; j < 3; ++j) out[j] = laplace_transform(u, strikes[j]) * kernel;
    };
    StripOptions opt;
    opt.abs_tol = 1e-11;
    const MultiResult m = strip_integral_multi_real(fm, 3, -1.0, opt);
    const MultiResult mf = strip_integral_multi(fm, 3, -1.0, opt);
    for (int j = 0; j < 3; ++j) {
        const auto fs = [&](cplx u) {
            const CharExponents ce = char_exponents(kPaper.maturity, u, 0.0, kPaper);
            return laplace_transform(u, strikes[j]) *
                   std::exp(u * kPaper.x0() + ce.phi + kPaper.v0 * ce.psi);
        };
        const QuadResult s = strip_integral_real(fs, -1.0, opt);
        CHECK(m.value[j].real() == doctest::Approx(s.value.real()).epsilon(1e-8));
        CHECK(mf.value[j].real() == doctest::Approx(s.value.real()).epsilon(1e-8));
        CHECK(std::abs(mf.value[j].imag()) < 1e-8 * (1.0 + std::abs(s.value.real())));
    }
}

TEST_CASE("strip integral honours a seeded initial halfwidth") {
    const auto f = [&](cplx u) {
        const CharExponents ce = char_exponents(kPaper.maturity, u, 0.0, kPaper);
        return laplace_transform(u, 90.0) *
               std::exp(u * kPaper.x0() + ce.phi + kPaper.v0 * ce.psi);
    };
    StripOptions small;
    small.abs_tol = 1e-10;
    small.initial_halfwidth = 10.0;  // too small; must grow
    const QuadResult grown = strip_integral_real(f, -1.0, small);
    StripOptions seeded;
    seeded.abs_tol = 1e-10;
    seeded.initial_halfwidth = grown.halfwidth;
    const QuadResult direct = strip_integral_real(f, -1.0, seeded);
    CHECK(grown.halfwidth > 10.0);
    CHECK(direct.value.real() == doctest::Approx(grown.value.real()).epsilon(1e-10));
}

TEST_CASE("deterministic: repeated evaluation returns identical bits") {
    const auto f = [&](cplx u) {
        const CharExponents ce = char_exponents(kPaper.maturity, u, 0.0, kPaper);
        return laplace_transform(u, 80.0) *
               std::exp(u * kPaper.x0() + ce.phi + kPaper.v0 * ce.psi);
    };
    StripOptions opt;
    opt.abs_tol = 1e-10;
    const QuadResult a = strip_integral_real(f, -1.0, opt);
    const QuadResult b = strip_integral_real(f, -1.0, opt);
    CHECK(a.value.real() == b.value.real());  // bitwise
    CHECK(a.n_evals == b.n_evals);
}
