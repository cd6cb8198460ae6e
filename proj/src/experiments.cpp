#include "circleflow/experiments.hpp"

#include "circleflow/errors.hpp"
#include "circleflow/series.hpp"
#include "circleflow/unitary_poisson.hpp"
#include "circleflow/zetasolver.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace circleflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int round_k(double t, int n) {
    return static_cast<int>(std::llround(t * n));
}

void check_n(int n, const char* who) {
    if (n < 1) throw ValidationError(std::string(who) + ": n must be >= 1");
}

void check_lmax(int lmax, const char* who) {
    if (lmax < 1 || lmax > kMaxMomentOrder)
        throw ValidationError(std::string(who) + ": lmax must be in [1, " + std::to_string(kMaxMomentOrder) + "]");
}

std::vector<double> errors_against_poisson(const EmpiricalAngles& roots, double t, int lmax) {
    auto emp = empirical_moments(roots, lmax);
    std::vector<double> err(lmax);
    for (int l = 1; l <= lmax; ++l) err[l - 1] = std::abs(emp[l - 1] - moment(t, l));
    return err;
}

double smallest_positive(const EmpiricalAngles& roots) {
    for (const auto& r : roots.angles())
        if (r.angle > 0) return r.angle;
    return kNaN;
}

struct Neumaier {
    double sum = 0, comp = 0;
    void add(double x) {
        double s = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - s) + x;
        else
            comp += (x - s) + sum;
        sum = s;
    }
    double value() const { return sum + comp; }
};

}  // namespace

double kolmogorov_distance(const EmpiricalAngles& emp, double t, double alpha) {
    if (emp.total() < 1) throw ValidationError("kolmogorov_distance: empty angle set");
    const CdfTable table(t);
    const double atom = atom_weight(t);
    const double ac = 1.0 - atom;
    const double atom_pos = wrap_angle(alpha);

    // Distribution function of the absolutely continuous part, extended periodically.
    auto g_ac = [&](double x) {
        double m = std::floor((x + kPi) / (2 * kPi));
        double y = std::clamp(x - 2 * kPi * m, -kPi, kPi);
        double f = table.cdf(y) - (atom > 0 && y >= 0 ? atom : 0.0);
        return std::max(0.0, f) + m * ac;
    };
    const double g0 = g_ac(-kPi - alpha);
    auto ref = [&](double x, bool left) {
        double v = g_ac(x - alpha) - g0;
        if (atom > 0 && (left ? x > atom_pos : x >= atom_pos)) v += atom;
        return v;
    };

    const double n = emp.total();
    double d = 0;
    double below = 0;
    bool atom_seen = atom <= 0;
    auto visit = [&](double x, double mass) {
        d = std::max(d, std::fabs(below / n - ref(x, true)));
        below += mass;
        d = std::max(d, std::fabs(below / n - ref(x, false)));
    };
    for (const auto& r : emp.angles()) {
        if (!atom_seen && atom_pos < r.angle) {
            visit(atom_pos, 0);
            atom_seen = true;
        }
        if (!atom_seen && atom_pos == r.angle) atom_seen = true;
        visit(r.angle, r.multiplicity);
    }
    if (!atom_seen) visit(atom_pos, 0);
    return std::clamp(d, 0.0, 1.0);
}

double kolmogorov_distance(const EmpiricalAngles& emp, double t) { return kolmogorov_distance(emp, t, 0.0); }

ConvergenceReport laguerre_convergence(int n, double t, int lmax) {
    const auto start = Clock::now();
    check_n(n, "laguerre_convergence");
    check_lmax(lmax, "laguerre_convergence");
    if (!(t >= 0) || !std::isfinite(t)) throw ValidationError("laguerre_convergence: t must be >= 0");
    ConvergenceReport rep;
    rep.n = n;
    rep.t = t;
    rep.k = round_k(t, n);
    if (rep.k == 0) {
        // L_{n,0} = (z-1)^n: all zeros at 0, and the limit is the input itself.
        rep.passthrough = true;
        rep.roots = EmpiricalAngles({{0.0, n}});
        rep.moment_errors.assign(lmax, 0.0);
        rep.kolmogorov = 0;
        rep.min_positive_angle = kNaN;
        rep.runtime_ms = elapsed_ms(start);
        return rep;
    }
    rep.roots = laguerre_roots(n, rep.k);
    rep.moment_errors = errors_against_poisson(rep.roots, t, lmax);
    rep.kolmogorov = kolmogorov_distance(rep.roots, t);
    rep.min_positive_angle = smallest_positive(rep.roots);
    rep.runtime_ms = elapsed_ms(start);
    return rep;
}

ConvergenceReport derivative_flow(const EmpiricalAngles& angles, double t, int lmax) {
    const auto start = Clock::now();
    const int n = angles.total();
    if (n < 2 || n % 2 != 0) throw ValidationError("derivative_flow: the number of zeros 2d must be even and positive");
    if (n > 128) throw ValidationError("derivative_flow: 2d must be <= 128");
    check_lmax(lmax, "derivative_flow");
    if (!(t >= 0) || !std::isfinite(t)) throw ValidationError("derivative_flow: t must be >= 0");

    ConvergenceReport rep;
    rep.n = n;
    rep.t = t;
    rep.k = round_k(t, n);
    if (rep.k == 0) {
        rep.passthrough = true;
        rep.roots = angles;
        rep.moment_errors.assign(lmax, 0.0);
        rep.kolmogorov = kNaN;
        rep.min_positive_angle = smallest_positive(angles);
        rep.runtime_ms = elapsed_ms(start);
        return rep;
    }

    rep.roots = roots_on_circle(TrigEval::derivative_of_angles(angles, rep.k));
    rep.min_positive_angle = smallest_positive(rep.roots);

    auto m_in = empirical_moments(angles, lmax);
    if (std::abs(m_in[0]) < 1e-12) {
        rep.degraded = true;
    } else {
        auto pred = conv_moments(m_in, t, lmax);
        auto emp = empirical_moments(rep.roots, lmax);
        rep.moment_errors.resize(lmax);
        for (int l = 1; l <= lmax; ++l) rep.moment_errors[l - 1] = std::abs(emp[l - 1] - pred[l - 1]);
    }
    rep.kolmogorov = angles.angles().size() == 1 ? kolmogorov_distance(rep.roots, t, angles.angles()[0].angle) : kNaN;
    rep.runtime_ms = elapsed_ms(start);
    return rep;
}

LogGrowth log_growth_check(int n, int k, cplx theta) {
    check_n(n, "log_growth_check");
    if (k < 1) throw ValidationError("log_growth_check: k must be >= 1");
    if (!(theta.imag() >= 0.2)) throw ValidationError("log_growth_check: Im theta must be >= 0.2");
    const double t = static_cast<double>(k) / n;

    auto te = TrigEval::laguerre(n, k);
    auto lv = te.eval_log(theta);
    LogGrowth g;
    g.lhs_log = (lv.log_abs - n * std::numbers::ln2 - std::lgamma(k + 1.0)) / n;
    g.lhs_logderiv = lv.log_deriv;

    const cplx z = zeta(t, theta / 2.0).zeta;
    const cplx w = 2.0 * z - theta;
    g.rhs_log = std::log(std::abs(std::sin(z))) - t * std::log(std::abs(w));
    g.rhs_logderiv = t / w;
    g.rhs_cot = 0.5 / tan_stable(z);
    return g;
}

double minimal_angle(int n, double t) {
    check_n(n, "minimal_angle");
    if (!(t > 0 && t < 1)) throw ValidationError("minimal_angle: t must lie in (0, 1)");
    const int k = round_k(t, n);
    if (k < 1 || k >= n) throw ValidationError("minimal_angle: k = round(t n) must lie in [1, n)");
    double a = smallest_positive(laguerre_roots(n, k));
    if (std::isnan(a)) throw NumericalError("minimal_angle: no positive root found");
    return a;
}

std::vector<cplx> expected_charpoly(int n, int k) {
    if (n < 1 || n > 64) throw ValidationError("expected_charpoly: n must be in [1, 64]");
    if (k < 0) throw ValidationError("expected_charpoly: k must be >= 0");
    // (z+1)(z-1)^{n-1}
    std::vector<cplx> base(n + 1, 0.0);
    base[0] = 1;
    for (int i = 0; i < n - 1; ++i) {
        for (int j = i + 1; j >= 1; --j) base[j] = base[j - 1] - base[j];
        base[0] = -base[0];
    }
    for (int j = n; j >= 1; --j) base[j] += base[j - 1];
    UnitPoly refl = UnitPoly::from_coeffs(base);
    UnitPoly acc = laguerre(n, 0);
    for (int i = 0; i < k; ++i) acc = ffm_conv(acc, refl);
    std::vector<cplx> out(n + 1);
    for (int j = 0; j <= n; ++j) out[j] = acc.coeff(j);
    return out;
}

ReflectionRun reflections_mc(int n, int k, int samples, std::uint64_t seed, bool keep_angles) {
    if (n < 1 || n > 64) throw ValidationError("reflections_mc: n must be in [1, 64]");
    if (k < 1) throw ValidationError("reflections_mc: k must be >= 1");
    if (samples < 1 || samples > 1000000) throw ValidationError("reflections_mc: samples must be in [1, 1e6]");

    ReflectionRun run;
    run.n = n;
    run.k = k;
    run.samples = samples;
    run.seed = seed;
    const std::uint64_t base = detail::splitmix64(seed);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;

    struct Sample {
        bool ok = false;
        std::vector<cplx> eig;
        std::vector<cplx> charpoly;
        double unit_err = 0, det_err = 0;
    };

    auto draw = [&](std::size_t s, Sample& out) {
        std::mt19937_64 gen(detail::splitmix64(base + s));
        std::normal_distribution<double> normal;
        Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd u(n);
        for (int r = 0; r < k; ++r) {
            for (int i = 0; i < n; ++i) u[i] = normal(gen);
            u /= u.norm();
            q -= 2.0 * u * (u.transpose() * q);
        }
        Eigen::EigenSolver<Eigen::MatrixXd> es(q, false);
        out.ok = false;
        if (es.info() != Eigen::Success) return;
        out.eig.resize(n);
        cplx det = 1;
        double unit_err = 0;
        for (int i = 0; i < n; ++i) {
            out.eig[i] = es.eigenvalues()[i];
            unit_err = std::max(unit_err, std::fabs(std::abs(out.eig[i]) - 1.0));
            det *= out.eig[i];
        }
        if (unit_err > 1e-8) return;
        out.unit_err = unit_err;
        out.det_err = std::abs(det - sign);
        out.charpoly.assign(n + 1, 0.0);
        out.charpoly[0] = 1;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j >= 1; --j) out.charpoly[j] = out.charpoly[j - 1] - out.eig[i] * out.charpoly[j];
            out.charpoly[0] *= -out.eig[i];
        }
        out.ok = true;
    };

    std::vector<Neumaier> re(n + 1), im(n + 1), sq(n + 1);
    if (keep_angles) run.eigen_angles.reserve(static_cast<std::size_t>(n) * samples);
    constexpr int kBlock = 4096;
    std::vector<Sample> block;
    for (int first = 0; first < samples; first += kBlock) {
        const int count = std::min(kBlock, samples - first);
        block.assign(count, Sample{});
        detail::parallel_for(static_cast<std::size_t>(count),
                             [&](std::size_t i) { draw(static_cast<std::size_t>(first) + i, block[i]); });
        for (const Sample& s : block) {
            if (!s.ok) {
                ++run.skipped;
                continue;
            }
            run.unit_error_max = std::max(run.unit_error_max, s.unit_err);
            run.det_error_max = std::max(run.det_error_max, s.det_err);
            for (int j = 0; j <= n; ++j) {
                re[j].add(s.charpoly[j].real());
                im[j].add(s.charpoly[j].imag());
                sq[j].add(s.charpoly[j].real() * s.charpoly[j].real());
            }
            if (keep_angles) {
                for (const cplx& l : s.eig) {
                    double a = std::arg(l);
                    if (std::fabs(a) < 1e-7) a = 0.0;
                    run.eigen_angles.push_back(wrap_angle(a));
                }
            }
        }
    }

    const int accepted = samples - run.skipped;
    run.valid = run.skipped <= 0.01 * samples;
    run.estimated_charpoly.assign(n + 1, kNaN);
    run.std_errors.assign(n + 1, kNaN);
    if (accepted > 0) {
        for (int j = 0; j <= n; ++j) {
            double mean = re[j].value() / accepted;
            run.estimated_charpoly[j] = {mean, im[j].value() / accepted};
            if (accepted > 1) {
                double var = std::max(0.0, (sq[j].value() - accepted * mean * mean) / (accepted - 1));
                run.std_errors[j] = std::sqrt(var / accepted);
            }
        }
    }
    return run;
}

PoissonLimitReport poisson_limit_finite_n(int n, double t, int lmax) {
    check_n(n, "poisson_limit_finite_n");
    check_lmax(lmax, "poisson_limit_finite_n");
    if (!(t > 0) || !std::isfinite(t)) throw ValidationError("poisson_limit_finite_n: t must be positive");
    PoissonLimitReport rep;
    rep.n = n;
    rep.t = t;
    rep.k = round_k(t, n);

    UnitPoly step = laguerre(n, 1);
    UnitPoly acc = laguerre(n, 0);
    for (int i = 0; i < rep.k; ++i) acc = ffm_conv(acc, step);
    UnitPoly closed = laguerre(n, rep.k);

    const auto& a = acc.log_form();
    const auto& b = closed.log_form();
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : b) top = std::max(top, c.log_mag);
    double diff = 0;
    for (int j = 0; j <= n; ++j) {
        cplx x = std::isinf(a[j].log_mag) ? cplx(0) : a[j].phase * std::exp(a[j].log_mag - top);
        cplx y = std::isinf(b[j].log_mag) ? cplx(0) : b[j].phase * std::exp(b[j].log_mag - top);
        diff = std::max(diff, std::abs(x - y));
    }
    rep.closed_form_error = diff;

    std::vector<AngleMass> known;
    if (rep.k < n) known.push_back({0.0, n - rep.k});
    if (rep.k == 0) {
        rep.moment_errors.assign(lmax, 0.0);
        return rep;
    }
    auto roots = roots_on_circle(TrigEval(acc, known));
    rep.moment_errors = errors_against_poisson(roots, t, lmax);
    return rep;
}

}  // namespace circleflow
