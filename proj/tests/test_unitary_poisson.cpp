#include "doctest.h"

#include "circleflow/errors.hpp"
#include "circleflow/series.hpp"
#include "circleflow/unitary_poisson.hpp"
#include "circleflow/zetasolver.hpp"

#include <cmath>
#include <numbers>

using namespace circleflow;
using std::numbers::pi;

namespace {

double x_t(double t) { return std::acos(std::sqrt(t)) - std::sqrt(t * (1 - t)); }

// Moments of Pi_t by Lagrange inversion of z/(1+z) exp(t/(z+1/2)):
// m_n = (1/n) [w^{n-1}] (1+w)^n exp(-n t / (w + 1/2)).
std::vector<double> lagrange_moments(double t, int L) {
    std::vector<double> out(L + 1, 0.0);
    out[0] = 1.0;
    for (int n = 1; n <= L; ++n) {
        // a(w) = -n t / (w + 1/2) = -2 n t sum (-2w)^j
        std::vector<double> a(n), e(n, 0.0), b(n, 0.0);
        double p = -2.0 * n * t;
        for (int j = 0; j < n; ++j, p *= -2.0) a[j] = p;
        e[0] = std::exp(a[0]);
        for (int k = 1; k < n; ++k) {
            double s = 0;
            for (int j = 1; j <= k; ++j) s += j * a[j] * e[k - j];
            e[k] = s / k;
        }
        // binomial (1+w)^n
        double c = 1;
        for (int j = 0; j < n; ++j) {
            b[j] = c;
            c = c * (n - j) / (j + 1);
        }
        double s = 0;
        for (int j = 0; j < n; ++j) s += b[j] * e[n - 1 - j];
        out[n] = s / n;
    }
    return out;
}

}  // namespace

TEST_CASE("moments: printed polynomials") {
    for (double t : {0.1, 0.5, 1.0, 2.3}) {
        CHECK(moment(t, 0) == 1.0);
        CHECK(moment(t, 1) == doctest::Approx(std::exp(-2 * t)).epsilon(1e-15));
        CHECK(moment(t, 2) == doctest::Approx(std::exp(-4 * t) * (1 + 4 * t)).epsilon(1e-15));
        double p5 = 1 + 8 * t + 80 * t * t - 800.0 / 3 * std::pow(t, 3) + 4000.0 / 3 * std::pow(t, 4);
        CHECK(p_ell(t, 5) == doctest::Approx(p5).epsilon(1e-14));
        CHECK(moment(t, 5) == doctest::Approx(std::exp(-10 * t) * p5).epsilon(1e-14));
        CHECK(moment(t, -3) == moment(t, 3));
    }
    CHECK_THROWS_AS(moment(1.0, kMaxMomentOrder + 1), ValidationError);
    CHECK_THROWS_AS(moment(0.0, 1), ValidationError);
}

TEST_CASE("moments agree with the Lagrange-inversion route") {
    for (double t : {0.2, 0.6, 1.0, 1.7}) {
        auto lag = lagrange_moments(t, 10);
        for (int l = 1; l <= 10; ++l) CHECK(std::abs(moment(t, l) - lag[l]) <= 1e-10);
    }
}

TEST_CASE("moments agree with the series engine at high order") {
    for (double t : {0.3, 1.0, 2.0}) {
        auto c = conv_moments(std::vector<cplx>(64, 1.0), t, 64);
        for (int l = 1; l <= 64; ++l) CHECK(std::abs(c[l - 1] - moment(t, l)) <= 1e-12);
    }
}

TEST_CASE("moment table") {
    MomentTable tab(0.7, 12);
    CHECK(tab.lmax() == 12);
    CHECK(tab.entries()[0].moment == 1.0);
    for (const auto& e : tab.entries()) {
        CHECK(std::fabs(e.moment) <= 1.0);
        CHECK(e.moment == moment(0.7, e.ell));
        CHECK_FALSE(e.denormal_risk);
    }
    MomentTable deep(10.0, 64);
    CHECK(deep.entries()[64].denormal_risk);
    CHECK_THROWS_AS(tab.moment(13), ValidationError);
}

TEST_CASE("atoms and circular law") {
    CHECK(atom_weight(0.25) == 0.75);
    CHECK(atom_weight(1.0) == 0.0);
    CHECK(atom_weight(3.0) == 0.0);
    CircularLaw a = circular_law(0.5);
    REQUIRE(a.atoms.size() == 1);
    CHECK(a.atoms[0].angle == 0.0);
    CHECK(a.atoms[0].weight + a.ac_total == 1.0);
    REQUIRE(a.support_gap.has_value());
    CHECK(a.support_gap->second == doctest::Approx(2 * x_t(0.5)));
    CHECK(circular_law(1.0).atoms.empty());
    CHECK(circular_law(2.0).atoms.empty());
    CHECK_FALSE(circular_law(2.0).support_gap.has_value());
}

TEST_CASE("density: gap, symmetry, cusp") {
    CHECK(density(0.5, 0.3) == 0.0);
    CHECK(density(0.5, -0.57) == 0.0);
    for (double t : {0.4, 1.0, 2.5})
        for (int i = 1; i <= 30; ++i) {
            double th = pi * i / 31;
            CHECK(density(t, th) == doctest::Approx(density(t, -th)).epsilon(1e-12));
            CHECK(density(t, th) >= 0);
        }
    CHECK(std::isinf(density(1.0, 0.0)));
    double th = 1e-3;
    double ratio = density(1.0, th) * 2 * pi * std::cbrt(4 * th / std::sqrt(3.0));
    CHECK(ratio >= 0.95);
    CHECK(ratio <= 1.05);
    CHECK_THROWS_AS(density(1.0, 4.0), ValidationError);
}

TEST_CASE("density agrees with Re(1/r) on the circle") {
    for (double t : {0.5, 1.0, 2.0})
        for (double th : {0.8, 1.7, 3.0}) {
            cplx r = r_func(t, std::polar(1.0, th));
            CHECK(density(t, th) == doctest::Approx((1.0 / r).real() / (2 * pi)).epsilon(1e-9));
        }
}

TEST_CASE("support edges") {
    double t = 0.5, e = 2 * x_t(t);
    CHECK(density(t, e - 1e-3) == 0.0);
    CHECK(density(t, e + 1e-3) > 0.0);
    double lo = 1e300, hi = 0;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
        double r = density(t, e + eps) / std::sqrt(eps);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(lo > 0);
    CHECK(hi / lo <= 1.3);
}

TEST_CASE("positivity for t > 1") {
    for (double t : {1.5, 3.0}) {
        double mn = 1e300;
        for (int i = 0; i < 721; ++i) mn = std::min(mn, density(t, -pi + 2 * pi * i / 720));
        CHECK(mn > 0);
    }
}

TEST_CASE("normalization and quadrature moments") {
    for (double t : {0.3, 0.7, 1.0, 1.5, 3.0}) {
        CHECK(std::fabs(atom_weight(t) + density_integral(t, -pi, pi) - 1.0) <= 1e-7);
        double tol = t == 1.0 ? 1e-5 : 1e-6;
        for (int l = 1; l <= 8; ++l) CHECK(std::fabs(density_cos_moment(t, l) + atom_weight(t) - moment(t, l)) <= tol);
    }
}

TEST_CASE("psi transform") {
    CHECK(std::abs(psi(0.8, 0.0)) == 0.0);
    for (double t : {0.5, 1.0, 2.0}) {
        double h = 1e-4;
        cplx d = (psi(t, h) - psi(t, -h)) / (2 * h);
        CHECK(std::abs(d - std::exp(-2 * t)) <= 1e-7);
        MomentTable tab(t, 200);
        for (double rad : {0.5, 0.7})
            for (int a = 0; a < 12; ++a) {
                cplx z = std::polar(rad, 2 * pi * a / 12);
                cplx s = 0, zp = 1;
                for (int l = 1; l <= 200; ++l) {
                    zp *= z;
                    s += tab.moment(l) * zp;
                }
                CHECK(std::abs(psi(t, z) - s) <= 1e-8);
            }
    }
    double t = 0.6;
    cplx y(0.05, 0.02);
    cplx arg = y / (1.0 + y) * std::exp(t / (y + 0.5));
    CHECK(std::abs(psi(t, arg) - y) <= 1e-9);
    CHECK_THROWS_AS(psi(1.0, 1.0), ValidationError);
}

TEST_CASE("S and Sigma transforms") {
    double t = 0.9;
    CHECK(std::abs(s_sigma(t, 0.0).Sigma - std::exp(2 * t)) <= 1e-14);
    CHECK(std::abs(s_sigma(t, 0.5).S - std::exp(t)) <= 1e-14);
    for (cplx z : {cplx(0.2, 0.1), cplx(-0.3, 0.4), cplx(2.0, -1.0)}) {
        cplx lhs = s_sigma(t, z).Sigma;
        cplx rhs = s_sigma(t, z / (1.0 - z)).S;
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
    }
    // S(z) = (1+z)/z psi^{-1}(z): solve psi(w) = z by Newton on the closed form
    cplx z(0.04, 0.01);
    cplx w = z * std::exp(2 * t);
    for (int i = 0; i < 50; ++i) {
        double h = 1e-6;
        cplx f = psi(t, w) - z;
        cplx df = (psi(t, w + h) - psi(t, w - h)) / (2 * h);
        w -= f / df;
    }
    CHECK(std::abs((1.0 + z) / z * w - s_sigma(t, z).S) <= 1e-8);
    CHECK_THROWS_AS(s_sigma(t, -0.5), ValidationError);
    CHECK_THROWS_AS(s_sigma(t, -1.0), ValidationError);
}

TEST_CASE("cdf and quantile") {
    for (double t : {0.5, 1.0, 2.0}) {
        CHECK(cdf(t, -pi) == 0.0);
        CHECK(cdf(t, pi) == 1.0);
        CHECK(std::fabs(cdf(t, std::nextafter(0.0, -1.0)) - (1 - atom_weight(t)) / 2) <= 1e-7);
        CHECK(std::fabs(cdf(t, 0.0) - (1 + atom_weight(t)) / 2) <= 1e-7);
        for (double u : {0.05, 0.2, 0.9}) {
            double q = quantile(t, u);
            CHECK(std::fabs(cdf(t, q) - u) <= 1e-8);
        }
    }
    CHECK(quantile(0.5, 0.5) == 0.0);
    CHECK(quantile(0.5, 0.3) == 0.0);
    CHECK_THROWS_AS(quantile(0.5, 1.0), ValidationError);
}

TEST_CASE("tabulated cdf matches quadrature") {
    for (double t : {0.3, 0.5, 1.0, 1.5, 3.0}) {
        CdfTable tab(t);
        double worst = 0;
        for (int i = 0; i <= 40; ++i) {
            double th = -pi + 2 * pi * i / 40;
            worst = std::max(worst, std::fabs(tab.cdf(th) - cdf(t, th)));
        }
        CHECK(worst <= 1e-8);
        for (double u : {0.01, 0.3, 0.77, 0.999}) {
            double q = tab.quantile(u);
            if (q != 0.0) CHECK(std::fabs(tab.cdf(q) - u) <= 1e-10);
        }
    }
}

TEST_CASE("sampling") {
    const int N = 1000000;
    double t = 2.0;
    EmpiricalAngles a = sample(t, N, 42);
    CHECK(a.total() == N);
    double m1 = moment(t, 1), m2 = moment(t, 2);
    double s = 0;
    for (const auto& am : a.angles()) s += am.multiplicity * std::cos(am.angle);
    double mean = s / N;
    double sigma = std::sqrt(((1 + m2) / 2 - m1 * m1) / N);
    CHECK(std::fabs(mean - m1) <= 3 * sigma);
    EmpiricalAngles b = sample(t, 1000, 42);
    EmpiricalAngles c = sample(t, 1000, 42);
    CHECK(b.flattened() == c.flattened());
    CHECK(sample(t, 1000, 43).flattened() != b.flattened());
    // the atom receives its share
    EmpiricalAngles d = sample(0.5, 20000, 7);
    int at0 = 0;
    for (const auto& am : d.angles())
        if (am.angle == 0.0) at0 = am.multiplicity;
    double sd = std::sqrt(0.25 / 20000);
    CHECK(std::fabs(at0 / 20000.0 - 0.5) <= 4 * sd);
}

TEST_CASE("Fourier-series density") {
    double t = 2.0;
    MomentTable tab(t, 60);
    double worst = 0;
    for (int i = 0; i <= 720; ++i) {
        double th = -pi + 2 * pi * i / 720;
        worst = std::max(worst, std::fabs(density_fourier(tab, th, 60) - density(t, th)));
    }
    CHECK(worst <= 1e-6);
    CHECK(density_fourier(40.0, 1.0, 10) == doctest::Approx(1 / (2 * pi)).epsilon(1e-15));
    // inside the gap the partial sums approach zero
    double a = std::fabs(density_fourier(0.5, 0.2, 16));
    double b = std::fabs(density_fourier(0.5, 0.2, 128));
    CHECK(b < a);
    CHECK(b < 2e-3);
    CHECK(density_fourier(0.5, 1.5, 128) == doctest::Approx(density(0.5, 1.5)).epsilon(1e-3));
}

TEST_CASE("PDE density agrees with the zeta-based density") {
    std::vector<cplx> delta(60, 1.0);
    for (double x : {-2.0, 0.0, 0.7, 3.0}) CHECK(std::fabs(pde_density(delta, 2.0, x, 60) - density(2.0, x)) <= 1e-5);
}

TEST_CASE("weak Poisson limit through the series engine") {
    double t = 0.8;
    std::vector<double> prev(4, 1e9);
    for (int n : {10, 40, 160}) {
        // mu_n = (1 - t/n) delta_1 + (t/n) delta_-1, raised to the n-th boxtimes power
        std::vector<cplx> m(5);
        for (int l = 1; l <= 5; ++l) m[l - 1] = 1.0 - t / n + (t / n) * (l % 2 ? -1.0 : 1.0);
        TruncSeries S = psi_to_S(TruncSeries::from_moments(m));
        TruncSeries Sn = S;
        for (int i = 1; i < n; ++i) Sn = multiply(Sn, S);
        std::vector<cplx> chi(5, 0.0);
        for (int k = 1; k <= 4; ++k)
            for (int j = 0; j <= k - 1; ++j) chi[k] += ((k - 1 - j) % 2 ? -1.0 : 1.0) * Sn[j];
        TruncSeries psi_n = invert(TruncSeries(chi));
        for (int l = 1; l <= 4; ++l) {
            double err = std::abs(psi_n[l] - moment(t, l));
            CHECK(err < prev[l - 1]);
            prev[l - 1] = err;
        }
    }
    for (double e : prev) CHECK(e < 0.01);
}
