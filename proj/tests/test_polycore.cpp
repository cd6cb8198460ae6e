#include "doctest.h"

#include "circleflow/errors.hpp"
#include "circleflow/polycore.hpp"

#include <gmp.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace circleflow;
using std::numbers::pi;

namespace {

const cplx I(0.0, 1.0);

// Exact coefficient of L_{n,k}: i^k (-1)^{n-j} C(n,j) (2j-n)^k / 2^k, via GMP.
cplx laguerre_oracle(int n, int k, int j) {
    mpz_t b, p;
    mpz_init(b);
    mpz_init(p);
    mpz_bin_uiui(b, n, j);
    mpz_set_si(p, 2 * j - n);
    mpz_pow_ui(p, p, k);
    mpz_mul(p, p, b);
    long e = 0;
    double m = mpz_get_d_2exp(&e, p);
    mpz_clear(b);
    mpz_clear(p);
    double r = std::ldexp(m, static_cast<int>(e) - k);
    if ((n - j) % 2) r = -r;
    return std::pow(I, k) * r;
}

double rel_err(cplx a, cplx b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s == 0 ? 0.0 : std::abs(a - b) / s;
}

double circ_dist(double a, double b) { return std::fabs(std::remainder(a - b, 2 * pi)); }

std::vector<double> random_angles(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-pi, pi);
    std::vector<double> a(n);
    for (auto& x : a) x = u(rng);
    return a;
}

}  // namespace

TEST_CASE("laguerre(4,2) matches the exact integer expansion") {
    UnitPoly p = laguerre(4, 2);
    REQUIRE(p.has_coeffs());
    const double expect[] = {-4, 4, 0, 4, -4};
    for (int j = 0; j <= 4; ++j) CHECK(std::abs(p.coeffs()[j] - cplx(expect[j])) < 1e-14);
}

TEST_CASE("laguerre(n,0) is (z-1)^n and laguerre(n,1) is i(n/2)(z-1)^{n-1}(z+1)") {
    for (int n : {1, 2, 5, 8}) {
        UnitPoly p0 = laguerre(n, 0);
        UnitPoly p1 = laguerre(n, 1);
        // Horner in double loses about eps * sum |a_j| = eps * 2^n (n/2)
        const double tol = 1e-14 * std::ldexp(1.0, n) * n;
        for (double x : {0.3, -1.7, 2.9}) {
            cplx z = std::polar(1.0, x);
            cplx pw = 1.0;
            for (int i = 0; i < n - 1; ++i) pw *= z - 1.0;
            CHECK(std::abs(p0.evaluate(z) - pw * (z - 1.0)) < tol);
            CHECK(std::abs(p1.evaluate(z) - I * (n / 2.0) * pw * (z + 1.0)) < tol);
        }
    }
}

TEST_CASE("log form reproduces exact coefficients") {
    for (auto [n, k] : {std::pair{10, 3}, {30, 7}, {25, 25}}) {
        UnitPoly p = laguerre(n, k);
        for (int j = 0; j <= n; ++j) {
            cplx want = laguerre_oracle(n, k, j);
            if (want == cplx(0)) {
                CHECK(std::isinf(p.log_form()[j].log_mag));
                continue;
            }
            CHECK(rel_err(p.coeff(j), want) < 1e-12);
        }
    }
}

TEST_CASE("large Laguerre coefficients are only available in log form") {
    UnitPoly p = laguerre(400, 300);
    CHECK_FALSE(p.has_coeffs());
    CHECK_THROWS_AS(p.coeffs(), NumericalError);
    // log |a_0| = log C(400,0) + 300 log 200
    CHECK(p.log_form()[0].log_mag == doctest::Approx(300 * std::log(200.0)).epsilon(1e-13));
}

TEST_CASE("apply_D acts diagonally") {
    const int n = 5;
    for (int j = 0; j <= n; ++j) {
        std::vector<cplx> a(n + 1, 0.0);
        a[j] = 1.0;
        a[n] += (j == n) ? 0.0 : 1.0;  // keep a valid leading coefficient
        UnitPoly d = apply_D(UnitPoly::from_coeffs(a));
        CHECK(std::abs(d.coeffs()[j] - I * (j - n / 2.0)) < 1e-14);
    }
}

TEST_CASE("apply_D of (z-1)^n is laguerre(n,1)") {
    for (int n : {3, 6, 11}) {
        UnitPoly d = apply_D(laguerre(n, 0));
        UnitPoly l = laguerre(n, 1);
        for (int j = 0; j <= n; ++j) CHECK(rel_err(d.coeff(j), l.coeff(j)) < 1e-14);
    }
}

TEST_CASE("self-inversive closure") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, 6)));
        CHECK(p.is_self_inversive());
        CHECK(apply_D(p).is_self_inversive());
        CHECK(apply_D(p, 3).is_self_inversive());
        auto q = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, 6)));
        CHECK(ffm_conv(p, q).is_self_inversive());
    }
}

TEST_CASE("odd degree convolution is anti-self-inversive") {
    // (z-1)^n itself satisfies a_j = -conj(a_{n-j}) for odd n; i times it is self-inversive
    std::mt19937_64 rng(8);
    auto p = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, 5)));
    auto q = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, 5)));
    auto r = ffm_conv(p, q);
    CHECK_FALSE(r.is_self_inversive());
    std::vector<cplx> ir;
    for (auto c : r.coeffs()) ir.push_back(I * c);
    CHECK(UnitPoly::from_coeffs(ir).is_self_inversive());
}

TEST_CASE("ffm_conv unit element and semigroup") {
    std::mt19937_64 rng(11);
    auto q = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, 7)));
    auto r = ffm_conv(laguerre(7, 0), q);
    for (int j = 0; j <= 7; ++j) CHECK(rel_err(r.coeff(j), q.coeff(j)) < 1e-14);

    auto one = ffm_conv(laguerre(1, 0), laguerre(1, 0));
    CHECK(std::abs(one.coeff(0) + 1.0) < 1e-15);
    CHECK(std::abs(one.coeff(1) - 1.0) < 1e-15);

    std::uniform_int_distribution<int> un(1, 20);
    for (int trial = 0; trial < 40; ++trial) {
        int n = un(rng);
        int k1 = std::uniform_int_distribution<int>(0, n)(rng);
        int k2 = std::uniform_int_distribution<int>(0, n - k1)(rng);
        auto c = ffm_conv(laguerre(n, k1), laguerre(n, k2));
        auto l = laguerre(n, k1 + k2);
        for (int j = 0; j <= n; ++j) {
            bool zc = std::isinf(c.log_form()[j].log_mag), zl = std::isinf(l.log_form()[j].log_mag);
            CHECK(zc == zl);
            if (!zc && !zl) {
                CHECK(std::fabs(c.log_form()[j].log_mag - l.log_form()[j].log_mag) < 1e-10);
                CHECK(std::abs(c.log_form()[j].phase - l.log_form()[j].phase) < 1e-10);
            }
        }
    }
}

TEST_CASE("ffm_conv rejects mismatched degrees") {
    CHECK_THROWS_WITH_AS(ffm_conv(laguerre(3, 1), laguerre(4, 1)),
                         "ffm_conv: degree mismatch (3 vs 4)", ValidationError);
}

TEST_CASE("D^k equals convolution with laguerre(n,k)") {
    std::mt19937_64 rng(3);
    for (int n = 1; n <= 10; ++n) {
        auto p = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, n)));
        for (int k = 0; k <= 4; ++k) {
            auto a = apply_D(p, k);
            auto b = ffm_conv(p, laguerre(n, k));
            double scale = 0;
            for (int j = 0; j <= n; ++j) scale = std::max(scale, std::abs(a.coeff(j)));
            for (int j = 0; j <= n; ++j) CHECK(std::abs(a.coeff(j) - b.coeff(j)) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("poly_from_angles examples") {
    // pi is stored as its representative -pi, which fixes the sign of the trig form
    auto ang = EmpiricalAngles::from_list({0.0, pi});
    CHECK(ang.angles()[0].angle == -pi);
    auto p = poly_from_angles(ang);
    CHECK(p.is_self_inversive());
    for (double th : {0.4, 1.3, -2.2}) {
        cplx t = p.evaluate(std::polar(1.0, th)) * std::exp(-I * th);
        CHECK(std::abs(t - std::sin(th / 2) * std::sin((th + pi) / 2)) < 1e-15);
        CHECK(std::abs(std::abs(t) - std::fabs(std::sin(th / 2) * std::sin((th - pi) / 2))) < 1e-15);
    }
    auto h = poly_from_angles(EmpiricalAngles({{0.0, 2}}));
    for (double th : {0.4, 1.3, -2.2}) {
        cplx t = h.evaluate(std::polar(1.0, th)) * std::exp(-I * th);
        CHECK(std::abs(t - std::pow(std::sin(th / 2), 2)) < 1e-15);
    }
}

TEST_CASE("poly_from_angles satisfies the functional equation") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-pi, pi);
    for (int n : {3, 16, 64}) {
        auto p = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, n)));
        for (int i = 0; i < 100; ++i) {
            cplx z = std::polar(1.0, u(rng));
            cplx lhs = std::pow(std::conj(z), n) * p.evaluate(1.0 / std::conj(z));
            CHECK(std::abs(lhs - std::conj(p.evaluate(z))) < 1e-12);
        }
    }
    CHECK_THROWS_AS(poly_from_angles(EmpiricalAngles({{0.1, 65}})), ValidationError);
}

TEST_CASE("trig_eval matches closed forms") {
    for (int d : {1, 2, 5}) {
        TrigEval t = TrigEval::laguerre(2 * d, 0);
        for (double th : {0.3, 1.9, -2.5}) {
            TrigValue v = trig_eval(t, th);
            double want = std::pow(-4.0, d) * std::pow(std::sin(th / 2), 2 * d);
            CHECK(v.value_scaled * std::exp(v.log_offset) == doctest::Approx(want).epsilon(1e-13));
            CHECK(v.imag_residue <= 1e-10 * std::fabs(v.value_scaled));
        }
    }
    // k = 1, 2 derivatives of (sin theta/2)^6 times (2i)^6 = -64
    const int n = 6;
    TrigEval t1 = TrigEval::laguerre(n, 1), t2 = TrigEval::laguerre(n, 2);
    for (double th : {0.7, -1.1, 2.8}) {
        double s = std::sin(th / 2), c = std::cos(th / 2);
        double d1 = (n / 2.0) * std::pow(s, n - 1) * c;
        double d2 = (n / 2.0) * ((n - 1) / 2.0 * std::pow(s, n - 2) * c * c - 0.5 * std::pow(s, n));
        TrigValue v1 = trig_eval(t1, th), v2 = trig_eval(t2, th);
        CHECK(v1.value_scaled * std::exp(v1.log_offset) == doctest::Approx(-64 * d1).epsilon(1e-12));
        CHECK(v2.value_scaled * std::exp(v2.log_offset) == doctest::Approx(-64 * d2).epsilon(1e-12));
    }
}

TEST_CASE("trig_eval zeros") {
    for (auto [n, k] : {std::pair{10, 3}, {400, 200}, {64, 63}})
        CHECK(trig_eval(TrigEval::laguerre(n, k), 0.0).value_scaled == 0.0);
    CHECK(std::fabs(trig_eval(TrigEval::laguerre(4, 2), 2 * pi / 3).value_scaled) < 1e-14);
    // scaled coefficients peak at log-magnitude zero
    auto sc = TrigEval::laguerre(50, 20).scaled_coeffs();
    double mx = -INFINITY;
    for (auto& c : sc) mx = std::max(mx, c.log_mag);
    CHECK(std::fabs(mx) < 1e-12);
}

TEST_CASE("roots of small Laguerre polynomials") {
    auto r = laguerre_roots(4, 2);
    REQUIRE(r.angles().size() == 3);
    CHECK(r.total() == 4);
    CHECK(r.angles()[0].angle == doctest::Approx(-2 * pi / 3).epsilon(1e-12));
    CHECK(r.angles()[1].angle == 0.0);
    CHECK(r.angles()[1].multiplicity == 2);
    CHECK(r.angles()[2].angle == doctest::Approx(2 * pi / 3).epsilon(1e-12));

    for (int n : {1, 2, 7, 30}) {
        auto r1 = laguerre_roots(n, 1);
        CHECK(r1.total() == n);
        bool has_pi = false, has_zero = false;
        for (auto& m : r1.angles()) {
            if (circ_dist(m.angle, pi) < 1e-11 && m.multiplicity == 1) has_pi = true;
            if (m.angle == 0.0 && m.multiplicity == n - 1) has_zero = true;
        }
        CHECK(has_pi);
        if (n > 1) CHECK(has_zero);
        auto r0 = laguerre_roots(n, 0);
        REQUIRE(r0.angles().size() == 1);
        CHECK(r0.angles()[0].multiplicity == n);
    }
}

TEST_CASE("Laguerre roots are symmetric and complete") {
    for (auto [n, k] : {std::pair{20, 7}, {100, 50}, {60, 90}, {128, 26}}) {
        auto r = laguerre_roots(n, k);
        CHECK(r.total() == n);
        auto f = r.flattened();
        for (double a : f) {
            double best = 10;
            for (double b : f) best = std::min(best, circ_dist(a, -b));
            CHECK(best < 1e-11);
        }
        for (std::size_t i = 1; i < r.angles().size(); ++i)
            CHECK(r.angles()[i].angle > r.angles()[i - 1].angle);
    }
}

TEST_CASE("Rolle on the circle") {
    std::mt19937_64 rng(5);
    for (int n = 2; n <= 12; ++n) {
        auto p = poly_from_angles(EmpiricalAngles::from_list(random_angles(rng, n)));
        auto r = roots_on_circle(apply_D(p));
        CHECK(r.total() == n);
    }
}

TEST_CASE("roots_on_circle reports a count deficit for hidden double roots") {
    auto p = poly_from_angles(EmpiricalAngles::from_list({0.5, 0.5, 1.0, 2.0}));
    try {
        roots_on_circle(p);
        FAIL("expected RootCountError");
    } catch (const RootCountError& e) {
        CHECK(e.found() == 2);
        CHECK(e.expected() == 4);
    }
    CHECK_THROWS_AS(roots_on_circle(p, RootSearchOptions{8, 4, 1e-12}), ValidationError);
}

TEST_CASE("empirical moments") {
    auto d = EmpiricalAngles({{0.0, 9}});
    for (auto m : empirical_moments(d, 5)) CHECK(std::abs(m - 1.0) < 1e-15);
    const int n = 9;
    auto l1 = laguerre_roots(n, 1);
    auto m = empirical_moments(l1, 6);
    for (int l = 1; l <= 6; ++l)
        CHECK(std::abs(m[l - 1] - (n - 1 + std::pow(-1.0, l)) / n) < 1e-12);

    auto r = laguerre_roots(200, 100);
    CHECK(std::abs(empirical_moments(r, 1)[0] - std::exp(-1.0)) < 0.05);
}

TEST_CASE("psi_empirical") {
    auto d = EmpiricalAngles({{0.0, 5}});
    cplx th(0.4, 0.7);
    cplx z = std::exp(I * th);
    CHECK(std::abs(psi_empirical(d, th) - z / (1.0 - z)) < 1e-14);

    auto r = laguerre_roots(100, 50);
    CHECK(std::abs(psi_empirical(r, cplx(1.3, 10.0))) <= 2 * std::exp(-10.0) / (1 - std::exp(-10.0)));

    cplx t0(0.3, 0.5);
    auto m = empirical_moments(r, 200);
    cplx series = 0;
    for (int l = 200; l >= 1; --l) series += std::exp(I * (static_cast<double>(l) * t0)) * m[l - 1];
    CHECK(std::abs(psi_empirical(r, t0) - series) < 1e-8);

    // asymmetric set: the series uses m_l, not conj(m_l)
    auto a = EmpiricalAngles::from_list({0.3, 1.1, -2.0});
    auto ma = empirical_moments(a, 200);
    series = 0;
    for (int l = 200; l >= 1; --l) series += std::exp(I * (static_cast<double>(l) * t0)) * ma[l - 1];
    CHECK(std::abs(psi_empirical(a, t0) - series) < 1e-8);
    CHECK_THROWS_AS(psi_empirical(a, cplx(0.1, 0.0)), ValidationError);
}

TEST_CASE("eval_log agrees with double evaluation for small degree") {
    const int n = 6, k = 2;
    UnitPoly p = laguerre(n, k);
    TrigEval t = TrigEval::laguerre(n, k);
    cplx th(0.3, 0.5);
    cplx z = std::exp(I * th);
    cplx T = p.evaluate(z) * std::exp(-I * (n / 2.0) * th);
    const auto& a = p.coeffs();
    cplx dT = 0;
    for (int j = 0; j <= n; ++j) dT += a[j] * I * (j - n / 2.0) * std::exp(I * (j - n / 2.0) * th);
    TrigLogValue v = t.eval_log(th);
    CHECK(v.log_abs == doctest::Approx(std::log(std::abs(T))).epsilon(1e-13));
    CHECK(std::fabs(std::remainder(v.arg - std::arg(T), 2 * pi)) < 1e-12);
    CHECK(std::abs(v.log_deriv - dT / T) < 1e-12);
}
