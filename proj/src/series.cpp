#include "circleflow/series.hpp"

#include "circleflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace circleflow {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<cplx> truncated(const std::vector<cplx>& c, int order) {
    std::vector<cplx> out(order + 1, cplx(0.0));
    for (int j = 0; j <= order && j < static_cast<int>(c.size()); ++j) out[j] = c[j];
    return out;
}

std::vector<cplx> mul(const std::vector<cplx>& a, const std::vector<cplx>& b, int order) {
    std::vector<cplx> out(order + 1, cplx(0.0));
    const int na = static_cast<int>(a.size()) - 1, nb = static_cast<int>(b.size()) - 1;
    for (int i = 0; i <= std::min(na, order); ++i) {
        if (a[i] == cplx(0.0)) continue;
        for (int j = 0; j <= std::min(nb, order - i); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

std::vector<cplx> recip(const std::vector<cplx>& a, int order) {
    if (a[0] == cplx(0.0)) throw ValidationError("reciprocal: constant term is zero");
    std::vector<cplx> b(order + 1, cplx(0.0));
    const cplx inv = 1.0 / a[0];
    b[0] = inv;
    for (int k = 1; k <= order; ++k) {
        cplx s = 0.0;
        for (int j = 1; j <= k && j < static_cast<int>(a.size()); ++j) s += a[j] * b[k - j];
        b[k] = -inv * s;
    }
    return b;
}

// outer(inner(z)) with inner[0] == 0, by Horner.
std::vector<cplx> comp(const std::vector<cplx>& outer, const std::vector<cplx>& inner, int order) {
    std::vector<cplx> r(order + 1, cplx(0.0));
    const int no = std::min(static_cast<int>(outer.size()) - 1, order);
    r[0] = outer[no];
    std::vector<cplx> in = truncated(inner, order);
    for (int j = no - 1; j >= 0; --j) {
        r = mul(r, in, order);
        r[0] += outer[j];
    }
    return r;
}

}  // namespace

TruncSeries::TruncSeries(std::vector<cplx> coeffs, SeriesKind kind) : c_(std::move(coeffs)), kind_(kind) {
    if (c_.empty()) throw ValidationError("TruncSeries: need at least the constant term");
    if (kind_ == SeriesKind::psi && c_[0] != cplx(0.0))
        throw ValidationError("TruncSeries: psi-kind series must have c_0 = 0");
    if (kind_ == SeriesKind::s && c_[0] == cplx(0.0))
        throw ValidationError("TruncSeries: s-kind series must have c_0 != 0");
}

TruncSeries::TruncSeries(std::vector<cplx> coeffs)
    : TruncSeries(coeffs, !coeffs.empty() && coeffs[0] != cplx(0.0) ? SeriesKind::s : SeriesKind::psi) {}

TruncSeries TruncSeries::identity(int order) {
    if (order < 1) throw ValidationError("identity: order must be >= 1");
    std::vector<cplx> c(order + 1, cplx(0.0));
    c[1] = 1.0;
    return TruncSeries(std::move(c), SeriesKind::psi);
}

TruncSeries TruncSeries::from_moments(const std::vector<cplx>& m) {
    std::vector<cplx> c(m.size() + 1, cplx(0.0));
    std::copy(m.begin(), m.end(), c.begin() + 1);
    return TruncSeries(std::move(c), SeriesKind::psi);
}

cplx TruncSeries::eval(cplx z) const {
    cplx s = 0.0;
    for (int j = order(); j >= 0; --j) s = s * z + c_[j];
    return s;
}

TruncSeries add(const TruncSeries& a, const TruncSeries& b) {
    const int L = std::min(a.order(), b.order());
    std::vector<cplx> c(L + 1);
    for (int j = 0; j <= L; ++j) c[j] = a[j] + b[j];
    return TruncSeries(std::move(c));
}

TruncSeries multiply(const TruncSeries& a, const TruncSeries& b) {
    return TruncSeries(mul(a.coeffs(), b.coeffs(), std::min(a.order(), b.order())));
}

TruncSeries reciprocal(const TruncSeries& a) { return TruncSeries(recip(a.coeffs(), a.order()), SeriesKind::s); }

TruncSeries exp_series(const TruncSeries& a) {
    const int L = a.order();
    std::vector<cplx> e(L + 1, cplx(0.0));
    e[0] = std::exp(a[0]);
    for (int k = 1; k <= L; ++k) {
        cplx s = 0.0;
        for (int j = 1; j <= k; ++j) s += static_cast<double>(j) * a[j] * e[k - j];
        e[k] = s / static_cast<double>(k);
    }
    return TruncSeries(std::move(e), SeriesKind::s);
}

TruncSeries compose(const TruncSeries& outer, const TruncSeries& inner) {
    if (inner[0] != cplx(0.0)) throw ValidationError("compose: inner series must have c_0 = 0");
    const int L = std::min(outer.order(), inner.order());
    return TruncSeries(comp(outer.coeffs(), inner.coeffs(), L));
}

TruncSeries invert(const TruncSeries& s) {
    if (s[0] != cplx(0.0)) throw ValidationError("invert: series must have c_0 = 0");
    const int L = s.order();
    if (L < 1 || std::abs(s[1]) <= 1e-14)
        throw ValidationError(
            "invert: |c_1| <= 1e-14; the measure is not in M_T* (psi'(0) = integral of u dmu = 0)");
    // Newton on s(g) = z with precision doubling
    std::vector<cplx> g(2, cplx(0.0));
    g[1] = 1.0 / s[1];
    std::vector<cplx> ds(L, cplx(0.0));
    for (int j = 1; j <= L; ++j) ds[j - 1] = static_cast<double>(j) * s[j];
    int prec = 1;
    bool final_pass = false;
    while (true) {
        int next = std::min(2 * prec, L);
        if (next == prec) {
            if (final_pass) break;
            final_pass = true;
        }
        prec = next;
        g = truncated(g, prec);
        std::vector<cplx> sg = comp(truncated(s.coeffs(), prec), g, prec);
        sg[1] -= 1.0;
        std::vector<cplx> dsg = comp(truncated(ds, prec), g, prec);
        std::vector<cplx> corr = mul(sg, recip(dsg, prec), prec);
        for (int j = 0; j <= prec; ++j) g[j] -= corr[j];
        g[0] = 0.0;
    }
    return TruncSeries(std::move(g), SeriesKind::psi);
}

TruncSeries psi_to_S(const TruncSeries& psi) {
    TruncSeries inv = invert(psi);
    const int L = inv.order() - 1;
    if (L < 0) throw ValidationError("psi_to_S: order too small");
    std::vector<cplx> S(L + 1, cplx(0.0));
    for (int k = 0; k <= L; ++k) S[k] = inv[k + 1] + (k >= 1 ? inv[k] : cplx(0.0));
    return TruncSeries(std::move(S), SeriesKind::s);
}

TruncSeries poisson_S_series(double t, int L) {
    if (L < 0) throw ValidationError("poisson_S_series: L must be >= 0");
    // t/(z + 1/2) = 2t sum (-2z)^l
    std::vector<cplx> a(L + 1);
    double p = 2.0 * t;
    for (int l = 0; l <= L; ++l, p *= -2.0) a[l] = p;
    return exp_series(TruncSeries(std::move(a), SeriesKind::s));
}

std::vector<cplx> conv_moments(const std::vector<cplx>& m, double t, int L) {
    if (L < 1) throw ValidationError("conv_moments: L must be >= 1");
    if (static_cast<int>(m.size()) < L)
        throw ValidationError("conv_moments: need at least L input moments");
    if (!(t >= 0) || !std::isfinite(t)) throw ValidationError("conv_moments: t must be >= 0");
    std::vector<cplx> mm(m.begin(), m.begin() + L);
    // Haar measure (all moments zero) is absorbing
    if (std::all_of(mm.begin(), mm.end(), [](cplx c) { return c == cplx(0.0); })) return mm;
    if (std::abs(mm[0]) <= 1e-14)
        throw ValidationError("conv_moments: m_1 = 0; the measure is outside M_T* (psi'(0) = 0)");
    if (t == 0.0) return mm;

    // psi_t = (z/(1+z) S_nu(z) exp(t/(z+1/2)))^{-1}, read off by Lagrange-Buermann:
    //   [z^n] psi_t = (1/n) [u^{n-1}] psi_nu'(u) exp(-n t / (psi_nu(u) + 1/2))
    std::vector<cplx> den(L + 1, cplx(0.0));
    den[0] = 1.0;
    for (int j = 1; j <= L; ++j) den[j] = 2.0 * mm[j - 1];
    std::vector<cplx> A = recip(den, L - 1);
    for (auto& a : A) a *= -2.0 * t;
    std::vector<cplx> out(L), e(L);
    for (int n = 1; n <= L; ++n) {
        e[0] = std::exp(static_cast<double>(n) * A[0]);
        for (int k = 1; k < n; ++k) {
            cplx s = 0.0;
            for (int j = 1; j <= k; ++j) s += static_cast<double>(j) * A[j] * e[k - j];
            e[k] = static_cast<double>(n) * s / static_cast<double>(k);
        }
        cplx c = 0.0;
        for (int j = 0; j < n; ++j) c += static_cast<double>(j + 1) * mm[j] * e[n - 1 - j];
        out[n - 1] = c / static_cast<double>(n);
    }
    return out;
}

namespace {

struct Fourier {
    cplx s;    // sum c_l e^{-ilx}
    cplx ds;   // derivative in x
};

Fourier fourier_sum(const std::vector<cplx>& c, double x) {
    Fourier f{0.0, 0.0};
    for (std::size_t l = 1; l <= c.size(); ++l) {
        cplx e = std::polar(1.0, -static_cast<double>(l) * x);
        f.s += c[l - 1] * e;
        f.ds += cplx(0.0, -static_cast<double>(l)) * c[l - 1] * e;
    }
    return f;
}

void check_pde_args(const std::vector<cplx>& m, int L) {
    if (L < 1 || L > 200) throw ValidationError("pde: L must be in [1, 200]");
    if (static_cast<int>(m.size()) < L) throw ValidationError("pde: need at least L input moments");
}

}  // namespace

double pde_density(const std::vector<cplx>& m, double t, double x, int L) {
    check_pde_args(m, L);
    Fourier f = fourier_sum(conv_moments(m, t, L), x);
    return (1.0 + 2.0 * f.s.real()) / (2.0 * kPi);
}

double pde_residual(const std::vector<cplx>& m, double t, double x, double h_t, int L) {
    check_pde_args(m, L);
    if (!(t > 1.0)) throw ValidationError("pde_residual: requires t > 1");
    if (!(h_t > 0) || !(t - h_t > 0)) throw ValidationError("pde_residual: requires 0 < h_t < t");
    Fourier f = fourier_sum(conv_moments(m, t, L), x);
    const double u = (1.0 + 2.0 * f.s.real()) / (2.0 * kPi);
    if (!(u > 1e-6)) throw ValidationError("pde_residual: u is near zero at the probe point");
    const double ux = f.ds.real() / kPi;
    const double h = -f.s.imag() / kPi;
    const double hx = -f.ds.imag() / kPi;
    const double up = pde_density(m, t + h_t, x, L);
    const double um = pde_density(m, t - h_t, x, L);
    const double ut = (up - um) / (2.0 * h_t);
    const double flux_x = (hx * u - h * ux) / (u * u + h * h);
    return std::fabs(ut + flux_x / kPi);
}

}  // namespace circleflow
