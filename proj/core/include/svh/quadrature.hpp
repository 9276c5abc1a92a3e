#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "svh/errors.hpp"

namespace svh {

using cplx = std::complex<double>;

struct QuadResult {
    cplx value{0.0, 0.0};
    double abs_err = 0.0;
    std::size_t n_evals = 0;
    double halfwidth = 0.0;  // truncation point used by the strip integrals
};

// Adaptive Gauss-Kronrod 7/15 on [a, b] for a complex-valued integrand.
// Globally adaptive: repeatedly bisects the panel with the largest error
// estimate until the summed estimate falls below abs_tol.  Deterministic:
// panel selection ties break on the panel position.  Throws QuadratureFailure
// if the budget (or the panel-width floor) is hit while the estimate still
// exceeds 10 * abs_tol.
QuadResult integrate_adaptive(const std::function<cplx(double)>& f, double a, double b,
                              double abs_tol, std::size_t max_evals);

struct StripOptions {
    double abs_tol = 1e-10;
    double initial_halfwidth = 100.0;  // starting truncation Y
    double max_halfwidth = 1e9;
    std::size_t max_evals = 20'000'000;
};

// i * integral over the strip Re u = r of F(u) du, for integrands satisfying
// F(conj u) = -conj F(u) (Laplace-transform products of real payoffs), so the
// result is real:  2 * Re integral_0^Y i F(r + iy) dy.  Y starts at
// initial_halfwidth and doubles until the tail bound |F(r+iY)| * Y clears
// half the tolerance.
QuadResult strip_integral_real(const std::function<cplx(cplx)>& f, double r,
                               const StripOptions& opt);

// Same contour integral without the symmetry assumption: integrates
// i F(r + iy) over y in [-Y, Y] and returns the complex value.
QuadResult strip_integral(const std::function<cplx(cplx)>& f, double r,
                          const StripOptions& opt);

// Vector-valued variants: the integrand writes n_comp values per call, and
// the partition adapts on the worst component (abs_err is that max-norm).
// Meant for families of integrals sharing an expensive kernel.
struct MultiResult {
    std::vector<cplx> value;
    double abs_err = 0.0;
    std::size_t n_evals = 0;  // integrand calls; each call fills all components
    double halfwidth = 0.0;
};

using MultiFn = std::function<void(double, cplx*)>;
using MultiStripFn = std::function<void(cplx, cplx*)>;

MultiResult integrate_adaptive_multi(const MultiFn& f, int n_comp, double a, double b,
                                     double abs_tol, std::size_t max_evals);

// Componentwise analogues of the strip integrals above.
MultiResult strip_integral_multi_real(const MultiStripFn& f, int n_comp, double r,
                                      const StripOptions& opt);
MultiResult strip_integral_multi(const MultiStripFn& f, int n_comp, double r,
                                 const StripOptions& opt);

// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on P_n.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

// Nodes/weights mapped to [a, b].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b);

}  // namespace svh
