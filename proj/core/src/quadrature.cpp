#include "svh/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace svh {

namespace {

// Kronrod-15 abscissae (positive half) and weights, Gauss-7 weights embedded.
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Panel {
    double a, b;
    cplx value;
    double err;
};

// one GK15 pass over [a, b]; QUADPACK-style damped error estimate
Panel gk15(const std::function<cplx(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    cplx fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);
    cplx resk = kWgk[7] * fv[7];
    cplx resg = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        resk += kWgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) resg += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    resk *= h;
    resg *= h;
    const cplx mean = resk / (b - a);
    double resasc = 0.0;
    for (int i = 0; i < 7; ++i)
        resasc += kWgk[i] * (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));
    resasc += kWgk[7] * std::abs(fv[7] - mean);
    resasc *= std::abs(h);
    double err = std::abs(resk - resg);
    if (resasc > 0.0 && err > 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    return {a, b, resk, err};
}

bool worse(const Panel& x, const Panel& y) {
    if (x.err != y.err) return x.err < y.err;
    return x.a > y.a;  // deterministic tie-break
}

}  // namespace

QuadResult integrate_adaptive(const std::function<cplx(double)>& f, double a, double b,
                              double abs_tol, std::size_t max_evals) {
    QuadResult out;
    if (a == b) return out;
    std::vector<Panel> heap;
    heap.push_back(gk15(f, a, b));
    out.n_evals = 15;
    double total_err = heap.front().err;
    const double width_floor = 1e-14 * std::abs(b - a);
    while (total_err > abs_tol) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        const Panel worst = heap.back();
        if (out.n_evals + 30 > max_evals || worst.b - worst.a < width_floor) {
            std::push_heap(heap.begin(), heap.end(), worse);
            break;
        }
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        const Panel left = gk15(f, worst.a, mid);
        const Panel right = gk15(f, mid, worst.b);
        out.n_evals += 30;
        total_err += left.err + right.err - worst.err;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), worse);
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), worse);
    }
    // sum small-to-large panel positions for a reproducible reduction
    std::sort(heap.begin(), heap.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    cplx value{0.0, 0.0};
    double err = 0.0;
    for (const Panel& p : heap) {
        value += p.value;
        err += p.err;
    }
    out.value = value;
    out.abs_err = err;
    if (err > 10.0 * abs_tol) {
        std::ostringstream msg;
        msg << "integrate_adaptive: estimate " << err << " above tolerance " << abs_tol
            << " after " << out.n_evals << " evaluations on [" << a << ", " << b << "]";
        throw QuadratureFailure(msg.str());
    }
    return out;
}

namespace {

// grow Y until the decay-model tail bound mag(Y) * Y clears half the tolerance
double grow_halfwidth(const std::function<double(double)>& magnitude, const StripOptions& opt,
                      std::size_t* evals) {
    double y = opt.initial_halfwidth;
    while (true) {
        const double mag = std::max(magnitude(y), magnitude(0.8731 * y));
        *evals += 2;
        if (mag * y < 0.5 * opt.abs_tol) return y;
        y *= 2.0;
        if (y > opt.max_halfwidth) {
            std::ostringstream msg;
            msg << "strip integral: tail bound " << mag * y << " still above " << 0.5 * opt.abs_tol
                << " at Y = " << y;
            throw QuadratureFailure(msg.str());
        }
    }
}

}  // namespace

QuadResult strip_integral_real(const std::function<cplx(cplx)>& f, double r,
                               const StripOptions& opt) {
    std::size_t tail_evals = 0;
    const auto mag = [&](double y) { return 2.0 * std::abs(f(cplx(r, y))); };
    const double y_max = grow_halfwidth(mag, opt, &tail_evals);
    const cplx i_unit(0.0, 1.0);
    const auto g = [&](double y) -> cplx {
        return cplx(2.0 * std::real(i_unit * f(cplx(r, y))), 0.0);
    };
    QuadResult res = integrate_adaptive(g, 0.0, y_max, opt.abs_tol, opt.max_evals);
    res.n_evals += tail_evals;
    res.abs_err += 2.0 * std::abs(f(cplx(r, y_max))) * y_max;
    res.value = cplx(res.value.real(), 0.0);
    res.halfwidth = y_max;
    return res;
}

QuadResult strip_integral(const std::function<cplx(cplx)>& f, double r, const StripOptions& opt) {
    std::size_t tail_evals = 0;
    const auto mag = [&](double y) {
        return std::abs(f(cplx(r, y))) + std::abs(f(cplx(r, -y)));
    };
    const double y_max = grow_halfwidth(mag, opt, &tail_evals);
    const cplx i_unit(0.0, 1.0);
    const auto g = [&](double y) { return i_unit * f(cplx(r, y)); };
    QuadResult res = integrate_adaptive(g, -y_max, y_max, opt.abs_tol, opt.max_evals);
    res.n_evals += tail_evals;
    res.abs_err += (std::abs(f(cplx(r, y_max))) + std::abs(f(cplx(r, -y_max)))) * y_max;
    res.halfwidth = y_max;
    return res;
}

namespace {

struct MultiPanel {
    double a, b;
    std::vector<cplx> value;
    double err;
};

// one GK15 pass for all components; panel error is the worst component
MultiPanel gk15_multi(const MultiFn& f, int n_comp, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const auto nc = static_cast<std::size_t>(n_comp);
    std::vector<cplx> fv(15 * nc);
    for (int i = 0; i < 7; ++i) {
        f(c - h * kXgk[i], fv.data() + static_cast<std::size_t>(i) * nc);
        f(c + h * kXgk[i], fv.data() + static_cast<std::size_t>(14 - i) * nc);
    }
    f(c, fv.data() + 7 * nc);
    MultiPanel panel{a, b, std::vector<cplx>(nc), 0.0};
    for (std::size_t j = 0; j < nc; ++j) {
        cplx resk = kWgk[7] * fv[7 * nc + j];
        cplx resg = kWg[3] * fv[7 * nc + j];
        for (int i = 0; i < 7; ++i) {
            const cplx pair = fv[static_cast<std::size_t>(i) * nc + j] +
                              fv[static_cast<std::size_t>(14 - i) * nc + j];
            resk += kWgk[i] * pair;
            if (i % 2 == 1) resg += kWg[i / 2] * pair;
        }
        resk *= h;
        resg *= h;
        const cplx mean = resk / (b - a);
        double resasc = 0.0;
        for (int i = 0; i < 15; ++i)
            resasc += kWgk[i < 8 ? i : 14 - i] *
                      std::abs(fv[static_cast<std::size_t>(i) * nc + j] - mean);
        resasc *= std::abs(h);
        double err = std::abs(resk - resg);
        if (resasc > 0.0 && err > 0.0)
            err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
        panel.value[j] = resk;
        panel.err = std::max(panel.err, err);
    }
    return panel;
}

bool worse_multi(const MultiPanel& x, const MultiPanel& y) {
    if (x.err != y.err) return x.err < y.err;
    return x.a > y.a;
}

}  // namespace

MultiResult integrate_adaptive_multi(const MultiFn& f, int n_comp, double a, double b,
                                     double abs_tol, std::size_t max_evals) {
    MultiResult out;
    out.value.assign(static_cast<std::size_t>(n_comp), cplx(0.0, 0.0));
    if (a == b) return out;
    std::vector<MultiPanel> heap;
    heap.push_back(gk15_multi(f, n_comp, a, b));
    out.n_evals = 15;
    double total_err = heap.front().err;
    const double width_floor = 1e-14 * std::abs(b - a);

    while (total_err > abs_tol) {
        std::pop_heap(heap.begin(), heap.end(), worse_multi);
        const MultiPanel top = heap.back();
        heap.pop_back();
        if (out.n_evals + 30 > max_evals || std::abs(top.b - top.a) < width_floor) {
            heap.push_back(top);
            std::push_heap(heap.begin(), heap.end(), worse_multi);
            if (total_err > 10.0 * abs_tol) {
                std::ostringstream msg;
                msg << "adaptive quadrature stalled at error " << total_err << " (tolerance "
                    << abs_tol << ", " << out.n_evals << " evals)";
                throw QuadratureFailure(msg.str());
            }
            break;
        }
        const double mid = 0.5 * (top.a + top.b);
        MultiPanel left = gk15_multi(f, n_comp, top.a, mid);
        MultiPanel right = gk15_multi(f, n_comp, mid, top.b);
        out.n_evals += 30;
        total_err += left.err + right.err - top.err;
        heap.push_back(std::move(left));
        std::push_heap(heap.begin(), heap.end(), worse_multi);
        heap.push_back(std::move(right));
        std::push_heap(heap.begin(), heap.end(), worse_multi);
    }

    // deterministic final sum: accumulate panels in position order
    std::sort(heap.begin(), heap.end(),
              [](const MultiPanel& x, const MultiPanel& y) { return x.a < y.a; });
    for (const MultiPanel& panel : heap)
        for (std::size_t j = 0; j < out.value.size(); ++j) out.value[j] += panel.value[j];
    out.abs_err = total_err;
    return out;
}

namespace {

MultiResult strip_multi_impl(const MultiStripFn& f, int n_comp, double r, const StripOptions& opt,
                             bool half_line_real) {
    const auto nc = static_cast<std::size_t>(n_comp);
    std::vector<cplx> buf(nc), buf2(nc);
    std::size_t tail_evals = 0;
    const auto mag = [&](double y) {
        f(cplx(r, y), buf.data());
        double m = 0.0;
        for (const cplx& z : buf) m = std::max(m, std::abs(z));
        if (!half_line_real) {
            f(cplx(r, -y), buf2.data());
            for (const cplx& z : buf2) m = std::max(m, std::abs(z));
        }
        return half_line_real ? 2.0 * m : m;
    };
    const double y_max = grow_halfwidth(mag, opt, &tail_evals);

    const cplx i_unit(0.0, 1.0);
    MultiResult res;
    if (half_line_real) {
        const auto g = [&](double y, cplx* out) {
            f(cplx(r, y), out);
            for (std::size_t j = 0; j < nc; ++j)
                out[j] = cplx(2.0 * std::real(i_unit * out[j]), 0.0);
        };
        res = integrate_adaptive_multi(g, n_comp, 0.0, y_max, opt.abs_tol, opt.max_evals);
    } else {
        const auto g = [&](double y, cplx* out) {
            f(cplx(r, y), out);
            for (std::size_t j = 0; j < nc; ++j) out[j] = i_unit * out[j];
        };
        res = integrate_adaptive_multi(g, n_comp, -y_max, y_max, opt.abs_tol, opt.max_evals);
    }
    res.n_evals += tail_evals;
    res.abs_err += mag(y_max) * y_max;
    ++res.n_evals;
    res.halfwidth = y_max;
    return res;
}

}  // namespace

MultiResult strip_integral_multi_real(const MultiStripFn& f, int n_comp, double r,
                                      const StripOptions& opt) {
    return strip_multi_impl(f, n_comp, r, opt, true);
}

MultiResult strip_integral_multi(const MultiStripFn& f, int n_comp, double r,
                                 const StripOptions& opt) {
    return strip_multi_impl(f, n_comp, r, opt, false);
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw ConfigError("gauss_legendre: n must be >= 1");
    std::vector<double> x(n), w(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return {x, w};
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b) {
    auto [x, w] = gauss_legendre(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        x[i] = mid + half * x[i];
        w[i] *= half;
    }
    return {x, w};
}

}  // namespace svh
