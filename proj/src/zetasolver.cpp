#include "circleflow/zetasolver.hpp"

#include "circleflow/errors.hpp"
#include "mp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace circleflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEps = std::numeric_limits<double>::epsilon();
const cplx kI(0.0, 1.0);

// Half-width of the window around +-x_t handled by the Puiseux seed.
constexpr double kPuiseuxWindow = 0.05;
constexpr int kFixedPointSteps = 64;

// tan z - z, by its Taylor series near 0 where the difference cancels.
cplx tan_minus_id(cplx z) {
    if (std::abs(z) < 0.1) {
        static constexpr double c[] = {1.0 / 3,           2.0 / 15,          17.0 / 315,
                                       62.0 / 2835,       1382.0 / 155925,   21844.0 / 6081075,
                                       929569.0 / 638512875};
        const cplx z2 = z * z;
        cplx s = c[6];
        for (int k = 5; k >= 0; --k) s = s * z2 + c[k];
        return s * z2 * z;
    }
    return tan_stable(z) - z;
}

cplx g_of(double t, cplx theta, cplx z) { return (1.0 - t) * z - t * tan_minus_id(z) - theta; }

double residual_tol(cplx theta) { return std::max(1e-12, 16 * kEps * std::abs(theta)); }

struct Attempt {
    cplx z;
    int iterations = 0;
    bool ok = false;
};

// Damped Newton on g(z) = z - t tan z - theta.
Attempt newton(double t, cplx theta, cplx z, int max_iter = 100) {
    Attempt a{z, 0, false};
    double r = std::abs(g_of(t, theta, z));
    for (int it = 1; it <= max_iter; ++it) {
        a.iterations = it;
        cplx tz = tan_stable(z);
        cplx gz = g_of(t, theta, z);
        cplx d = 1.0 - t * (1.0 + tz * tz);
        if (d == cplx(0.0) || !std::isfinite(std::abs(d))) break;
        cplx step = gz / d;
        double lam = 1.0;
        cplx zn = z - step;
        double rn = std::abs(g_of(t, theta, zn));
        while (!(rn < r) && lam > 1e-4) {
            lam *= 0.5;
            zn = z - lam * step;
            rn = std::abs(g_of(t, theta, zn));
        }
        if (!std::isfinite(rn)) break;
        bool tiny = std::abs(lam * step) <= 4 * kEps * (1.0 + std::abs(z));
        if (rn <= r) {
            z = zn;
            r = rn;
        }
        if (tiny || r == 0.0) break;
        if (!(rn <= r) && lam <= 1e-4) break;  // stalled
    }
    a.z = z;
    a.ok = std::isfinite(r) && r <= residual_tol(theta);
    return a;
}

bool in_upper(cplx z, cplx theta) {
    if (theta.imag() > 0) return z.imag() > theta.imag();
    return z.imag() >= 0;
}

cplx puiseux_seed(double t, double x_t, cplx theta) {
    // theta near +x_t: zeta ~ a + i c sqrt(theta - x_t), branch fixed by Im zeta > 0
    double a = std::acos(std::sqrt(t));
    double c = std::pow(t / (1.0 - t), 0.25);
    return a + kI * c * std::sqrt(theta - x_t);
}

cplx cube_seed(cplx theta) {
    // (-3 theta)^{1/3} with arg(-3 theta) taken in [-pi, 0] and the branch cbrt(-i) = i
    cplx w = -3.0 * theta;
    double arg = std::arg(w);
    if (arg > 0) arg -= 2 * kPi;
    if (w.imag() == 0.0 && w.real() < 0) arg = -kPi;
    return std::polar(std::cbrt(std::abs(w)), arg / 3.0) * std::polar(1.0, 2 * kPi / 3);
}

ZetaValue finish(double t, cplx theta, cplx z, int iterations, ZetaMethod m) {
    return {z, std::abs(g_of(t, theta, z)), iterations, m};
}

double real_branch(double t, double theta, int& iterations) {
    double a = std::acos(std::sqrt(t));
    double lo = -a, hi = a;
    iterations = 0;
    while (iterations < 200) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ++iterations;
        double f = mid - t * std::tan(mid) - theta;
        if (f == 0.0) return mid;
        if (f < 0)
            lo = mid;
        else
            hi = mid;
    }
    double flo = std::fabs(lo - t * std::tan(lo) - theta);
    double fhi = std::fabs(hi - t * std::tan(hi) - theta);
    return flo <= fhi ? lo : hi;
}

// Solve for theta with Re theta in [-pi/2, pi/2).
ZetaValue solve_reduced(double t, cplx theta, std::ostringstream& trace) {
    const bool crit = std::fabs(t - 1.0) <= kCriticalWindow;
    const bool sub = !crit && t < 1.0;
    const bool real = theta.imag() == 0.0;

    if (crit && std::abs(theta) < kPuiseuxWindow) {
        if (theta == cplx(0.0)) return {cplx(0.0), 0.0, 0, ZetaMethod::real_branch};
        Attempt a = newton(t, theta, cube_seed(theta));
        trace << "cube-seed newton it=" << a.iterations << " z=" << a.z << "; ";
        if (a.ok && in_upper(a.z, theta)) return finish(t, theta, a.z, a.iterations, ZetaMethod::puiseux_seeded);
    }

    double x_t = kNaN;
    if (sub) {
        x_t = std::acos(std::sqrt(t)) - std::sqrt(t * (1.0 - t));
        double ax = std::fabs(theta.real());
        if (real && ax <= x_t) {
            int it = 0;
            double z = real_branch(t, theta.real(), it);
            return finish(t, theta, cplx(z, 0.0), it, ZetaMethod::real_branch);
        }
        if (real && ax < x_t + kPuiseuxWindow) {
            // mirror negative theta through zeta(-conj theta) = -conj zeta(theta)
            cplx th = theta.real() < 0 ? -std::conj(theta) : theta;
            Attempt a = newton(t, th, puiseux_seed(t, x_t, th));
            trace << "puiseux newton it=" << a.iterations << " z=" << a.z << "; ";
            if (a.ok && in_upper(a.z, th)) {
                cplx z = theta.real() < 0 ? -std::conj(a.z) : a.z;
                return finish(t, theta, z, a.iterations, ZetaMethod::puiseux_seeded);
            }
        }
    }

    // fixed-point iteration followed by Newton polish
    cplx x = theta + kI * t;
    int steps = 0;
    bool settled = false;
    for (; steps < kFixedPointSteps; ++steps) {
        cplx nx = theta + t * tan_stable(x);
        bool close = std::abs(nx - x) <= 2 * kEps * (1.0 + std::abs(nx));
        x = nx;
        if (close) {
            settled = true;
            ++steps;
            break;
        }
    }
    if (settled && std::abs(g_of(t, theta, x)) <= residual_tol(theta) && in_upper(x, theta))
        return finish(t, theta, x, steps, ZetaMethod::fixed_point);
    Attempt a = newton(t, theta, x);
    trace << "fixed-point+newton it=" << steps + a.iterations << " z=" << a.z << "; ";
    if (a.ok && in_upper(a.z, theta)) return finish(t, theta, a.z, steps + a.iterations, ZetaMethod::newton);

    // near a branch point with small Im theta: Puiseux seed for complex theta
    if (sub) {
        cplx th = theta.real() < 0 ? -std::conj(theta) : theta;
        Attempt p = newton(t, th, puiseux_seed(t, x_t, th));
        trace << "complex puiseux it=" << p.iterations << " z=" << p.z << "; ";
        if (p.ok && in_upper(p.z, th)) {
            cplx z = theta.real() < 0 ? -std::conj(p.z) : p.z;
            return finish(t, theta, z, p.iterations, ZetaMethod::puiseux_seeded);
        }
    }

    // homotopy in Im theta from a well-conditioned starting point
    const double H = 1.0 + t;
    const int N = 400;
    cplx z = theta + kI * (H + t);
    int total = 0;
    bool ok = true;
    for (int s = 0; s <= N && ok; ++s) {
        cplx th = theta + kI * (H * (N - s) / N);
        Attempt h = newton(t, th, z);
        total += h.iterations;
        ok = h.ok && in_upper(h.z, th);
        z = h.z;
    }
    trace << "homotopy it=" << total << " z=" << z << "; ";
    if (ok) return finish(t, theta, z, total, ZetaMethod::newton);

    std::ostringstream msg;
    msg << "zeta: no convergence for t=" << t << " theta=" << theta << " trace: " << trace.str();
    throw NumericalError(msg.str());
}

}  // namespace

std::string to_string(ZetaMethod m) {
    switch (m) {
        case ZetaMethod::fixed_point: return "fixed_point";
        case ZetaMethod::newton: return "newton";
        case ZetaMethod::puiseux_seeded: return "puiseux_seeded";
        case ZetaMethod::real_branch: return "real_branch";
    }
    return "unknown";
}

cplx tan_stable(cplx z) {
    if (z.imag() >= 0) {
        cplx e = std::exp(2.0 * kI * z);
        return kI * (1.0 - e) / (1.0 + e);
    }
    cplx e = std::exp(-2.0 * kI * z);
    return -kI * (1.0 - e) / (1.0 + e);
}

ZetaValue zeta(double t, cplx theta) {
    if (!(t > 0) || !std::isfinite(t)) throw ValidationError("zeta: t must be positive and finite");
    if (!std::isfinite(theta.real()) || !std::isfinite(theta.imag()))
        throw ValidationError("zeta: theta must be finite");
    if (theta.imag() < 0) throw ValidationError("zeta: Im theta must be >= 0");
    double shift = std::floor((theta.real() + 0.5 * kPi) / kPi);
    cplx reduced(theta.real() - shift * kPi, theta.imag());
    std::ostringstream trace;
    ZetaValue v = solve_reduced(t, reduced, trace);
    if (shift != 0.0) {
        v.zeta += shift * kPi;
        v.residual = std::abs(g_of(t, theta, v.zeta));
    }
    return v;
}

cplx zeta_fixed_point(double t, cplx theta, cplx start, int max_iter, double tol) {
    if (!(t > 0)) throw ValidationError("zeta_fixed_point: t must be positive");
    if (start.imag() <= 0) throw ValidationError("zeta_fixed_point: start must lie in the upper half-plane");
    cplx x = start;
    for (int i = 0; i < max_iter; ++i) {
        cplx nx = theta + t * tan_stable(x);
        if (std::abs(nx - x) <= tol * (1.0 + std::abs(nx))) return nx;
        x = nx;
    }
    throw NumericalError("zeta_fixed_point: iteration did not settle");
}

namespace {

template <class F>
double bisect(F f, double lo, double hi) {
    // f(lo) < 0 < f(hi)
    for (int i = 0; i < 400; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double solve_y0(double t) {
    // positive root of y = t tanh y, t > 1
    return bisect([t](double y) { return y - t * std::tanh(y); }, 0.0, t);
}

}  // namespace

double y_axis(double t, double tau) {
    if (!(t > 0)) throw ValidationError("y_axis: t must be positive");
    if (!(tau > 0)) throw ValidationError("y_axis: tau must be positive");
    double lo = tau;
    if (t > 1.0) lo = std::max(lo, solve_y0(t));
    double hi = tau + t + 1.0;
    return bisect([t, tau](double y) { return y - t * std::tanh(y) - tau; }, lo, hi);
}

double y_tilde_axis(double t, double tau) {
    if (!(t > 0)) throw ValidationError("y_tilde_axis: t must be positive");
    if (!(tau >= 0)) throw ValidationError("y_tilde_axis: tau must be >= 0");
    auto f = [t, tau](double y) { return y - t / std::tanh(y) - tau; };
    double hi = tau + t + 1.0;
    while (f(hi) <= 0) hi *= 2;
    double lo = 0.5 * hi;
    while (f(lo) >= 0) lo *= 0.5;
    return bisect(f, lo, hi);
}

BranchData branch_data(double t) {
    if (!(t > 0) || !std::isfinite(t)) throw ValidationError("branch_data: t must be positive");
    BranchData b{t, Regime::super, kNaN, kNaN, y_tilde_axis(t, 0.0)};
    if (std::fabs(t - 1.0) <= kCriticalWindow) {
        b.regime = Regime::crit;
    } else if (t < 1.0) {
        b.regime = Regime::sub;
        b.x_t = std::acos(std::sqrt(t)) - std::sqrt(t * (1.0 - t));
    } else {
        b.y0 = solve_y0(t);
    }
    return b;
}

cplx r_func(double t, cplx z) {
    if (!(t > 0)) throw ValidationError("r_func: t must be positive");
    if (!(std::abs(z) <= 1.0 + 1e-14)) throw ValidationError("r_func: requires |z| <= 1");
    if (z == cplx(0.0)) return 1.0;
    double m = std::min(std::abs(z), 1.0);
    cplx theta(0.5 * std::arg(z), -0.5 * std::log(m));
    ZetaValue zv = zeta(t, theta);
    cplx r = (zv.zeta - theta) / (kI * t);
    if (zv.zeta.imag() == 0.0 && theta.imag() == 0.0) r = cplx(0.0, r.imag());
    cplx e = std::exp(2.0 * t * r);
    double res = std::abs(z * (1.0 + r) - e * (1.0 - r));
    if (res > 1e-10 * std::max(1.0, std::abs(e)))
        throw NumericalError("r_func: functional equation residual " + std::to_string(res));
    return r;
}

cplx v_func(double t, cplx z) {
    if (!(std::abs(z) < 1.0)) throw ValidationError("v_func: requires |z| < 1");
    cplx r = r_func(t, z);
    return (1.0 - r) / (1.0 + r);
}

TruncSeries r_taylor(double t, int L) {
    using detail::Mp;
    if (!(t > 0)) throw ValidationError("r_taylor: t must be positive");
    if (L < 1 || L > 200) throw ValidationError("r_taylor: L must be in [1, 200]");
    std::vector<cplx> c(L + 1, cplx(0.0));
    c[0] = 1.0;
    for (int l = 1; l <= L; ++l) {
        const int m = l - 1;
        double value = 0.0;
        for (mpfr_prec_t p = 128; p <= (1 << 16); p *= 2) {
            Mp x(p), term(p), sum(p), abs_sum(p), tmp(p);
            mpfr_set_d(x.get(), t, MPFR_RNDN);
            mpfr_mul_si(x.get(), x.get(), -4L * l, MPFR_RNDN);
            mpfr_set_si(term.get(), m + 1, MPFR_RNDN);
            for (int j = 0; j <= m; ++j) {
                mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
                mpfr_abs(tmp.get(), term.get(), MPFR_RNDN);
                mpfr_add(abs_sum.get(), abs_sum.get(), tmp.get(), MPFR_RNDN);
                // term_{j+1} = term_j x (m-j) / ((j+1)(j+2))
                mpfr_mul(term.get(), term.get(), x.get(), MPFR_RNDN);
                mpfr_mul_si(term.get(), term.get(), m - j, MPFR_RNDN);
                mpfr_div_si(term.get(), term.get(), static_cast<long>(j + 1) * (j + 2), MPFR_RNDN);
            }
            double lost = abs_sum.log2_abs() - sum.log2_abs() + std::log2(m + 2.0);
            bool resolved = !sum.is_zero() && lost + 64 < static_cast<double>(p);
            if (resolved || p == (1 << 16)) {
                // 2 (-1)^l / l * e^{-2lt} * q
                mpfr_set_d(tmp.get(), t, MPFR_RNDN);
                mpfr_mul_si(tmp.get(), tmp.get(), -2L * l, MPFR_RNDN);
                mpfr_exp(tmp.get(), tmp.get(), MPFR_RNDN);
                mpfr_mul(sum.get(), sum.get(), tmp.get(), MPFR_RNDN);
                mpfr_mul_si(sum.get(), sum.get(), (l % 2) ? -2 : 2, MPFR_RNDN);
                mpfr_div_si(sum.get(), sum.get(), l, MPFR_RNDN);
                value = sum.to_double();
                break;
            }
        }
        c[l] = value;
    }
    return TruncSeries(std::move(c), SeriesKind::s);
}

}  // namespace circleflow
