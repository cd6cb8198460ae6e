#include "circleflow/polycore.hpp"

#include "circleflow/errors.hpp"
#include "coeff_source.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace circleflow {

using detail::CoeffSource;
using detail::Mp;
using detail::MpCoeffs;
using detail::MpComplex;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;
constexpr mpfr_prec_t kBasePrec = 128;
constexpr mpfr_prec_t kMaxPrec = 1 << 16;

LogCoeff to_log_coeff(const MpComplex& v) {
    double l2 = v.log2_abs();
    if (std::isinf(l2)) return {cplx(1.0, 0.0), -std::numeric_limits<double>::infinity()};
    Mp m(64), x(64);
    mpfr_hypot(m.get(), v.re.get(), v.im.get(), MPFR_RNDN);
    mpfr_div(x.get(), v.re.get(), m.get(), MPFR_RNDN);
    double re = x.to_double();
    mpfr_div(x.get(), v.im.get(), m.get(), MPFR_RNDN);
    return {cplx(re, x.to_double()), l2 * kLn2};
}

}  // namespace

// ---------------------------------------------------------------- UnitPoly

UnitPoly::UnitPoly(std::shared_ptr<const CoeffSource> src) : src_(std::move(src)) {
    n_ = src_->degree();
    MpCoeffs c = src_->compute(kBasePrec);
    has_coeffs_ = true;
    for (const auto& v : c.a) {
        LogCoeff lc = to_log_coeff(v);
        if (!std::isinf(lc.log_mag) && std::fabs(lc.log_mag) > 700.0) has_coeffs_ = false;
        log_form_.push_back(lc);
    }
    if (std::isinf(log_form_.back().log_mag)) throw ValidationError("leading coefficient is zero");
    if (has_coeffs_)
        for (const auto& v : c.a) coeffs_.emplace_back(v.re.to_double(), v.im.to_double());
}

UnitPoly UnitPoly::from_coeffs(std::vector<cplx> a) {
    if (a.size() < 2) throw ValidationError("degree must be at least 1");
    if (a.back() == cplx(0.0)) throw ValidationError("leading coefficient is zero");
    for (const auto& c : a)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw ValidationError("coefficients must be finite");
    return UnitPoly(detail::explicit_source(a));
}

const std::vector<cplx>& UnitPoly::coeffs() const {
    if (!has_coeffs_)
        throw NumericalError("direct coefficients unavailable (|log a_j| > 700); use log_form");
    return coeffs_;
}

cplx UnitPoly::coeff(int j) const {
    const auto& c = log_form_.at(j);
    if (std::isinf(c.log_mag)) return cplx(0.0);
    return c.phase * std::exp(c.log_mag);
}

bool UnitPoly::is_self_inversive(double tol) const {
    double scale = -std::numeric_limits<double>::infinity();
    for (const auto& c : log_form_) scale = std::max(scale, c.log_mag);
    for (int j = 0; j <= n_; ++j) {
        const auto& a = log_form_[j];
        const auto& b = log_form_[n_ - j];
        bool za = std::isinf(a.log_mag), zb = std::isinf(b.log_mag);
        if (za || zb) {
            double other = za ? b.log_mag : a.log_mag;
            if (!std::isinf(other) && other - scale > std::log(tol)) return false;
            continue;
        }
        // |a - conj(b)| relative to the largest coefficient
        double m = std::max(a.log_mag, b.log_mag);
        cplx d = a.phase * std::exp(a.log_mag - m) - std::conj(b.phase) * std::exp(b.log_mag - m);
        if (std::abs(d) * std::exp(m - scale) > tol) return false;
    }
    return true;
}

cplx UnitPoly::evaluate(cplx z) const {
    const auto& a = coeffs();
    cplx s = a[n_];
    for (int j = n_ - 1; j >= 0; --j) s = s * z + a[j];
    return s;
}

// ---------------------------------------------------------- EmpiricalAngles

double wrap_angle(double theta) {
    double a = std::remainder(theta, 2.0 * kPi);
    if (a >= kPi - 1e-11) a -= 2.0 * kPi;
    if (a < -kPi) a = -kPi;
    return a;
}

EmpiricalAngles::EmpiricalAngles(std::vector<AngleMass> masses) {
    for (auto& m : masses) {
        if (m.multiplicity <= 0) throw ValidationError("multiplicity must be positive");
        if (!std::isfinite(m.angle)) throw ValidationError("angle must be finite");
        m.angle = wrap_angle(m.angle);
    }
    std::sort(masses.begin(), masses.end(),
              [](const AngleMass& a, const AngleMass& b) { return a.angle < b.angle; });
    for (const auto& m : masses) {
        if (!angles_.empty() && angles_.back().angle == m.angle)
            angles_.back().multiplicity += m.multiplicity;
        else
            angles_.push_back(m);
        total_ += m.multiplicity;
    }
}

EmpiricalAngles EmpiricalAngles::from_list(const std::vector<double>& angles) {
    std::vector<AngleMass> m;
    m.reserve(angles.size());
    for (double a : angles) m.push_back({a, 1});
    return EmpiricalAngles(std::move(m));
}

std::vector<double> EmpiricalAngles::flattened() const {
    std::vector<double> out;
    out.reserve(total_);
    for (const auto& m : angles_)
        for (int i = 0; i < m.multiplicity; ++i) out.push_back(m.angle);
    return out;
}

// ------------------------------------------------------------- operations

UnitPoly laguerre(int n, int k) {
    if (n < 1) throw ValidationError("laguerre: n must be >= 1, got " + std::to_string(n));
    if (k < 0) throw ValidationError("laguerre: k must be >= 0, got " + std::to_string(k));
    return UnitPoly(detail::laguerre_source(n, k));
}

UnitPoly apply_D(const UnitPoly& p) { return apply_D(p, 1); }

UnitPoly apply_D(const UnitPoly& p, int k) {
    if (k < 0) throw ValidationError("apply_D: k must be >= 0");
    if (k == 0) return p;
    return UnitPoly(detail::derivative_source(p.source(), k));
}

UnitPoly ffm_conv(const UnitPoly& p, const UnitPoly& q) {
    if (p.degree() != q.degree())
        throw ValidationError("ffm_conv: degree mismatch (" + std::to_string(p.degree()) + " vs " +
                              std::to_string(q.degree()) + ")");
    return UnitPoly(detail::ffm_source(p.source(), q.source()));
}

UnitPoly poly_from_angles(const EmpiricalAngles& angles) {
    if (angles.total() < 1) throw ValidationError("poly_from_angles: empty angle set");
    if (angles.total() > 64)
        throw ValidationError("poly_from_angles: total " + std::to_string(angles.total()) +
                              " exceeds 64; use TrigEval::derivative_of_angles");
    return UnitPoly(detail::angles_source(angles.flattened()));
}

// ---------------------------------------------------------------- TrigEval

struct TrigEval::Impl {
    std::shared_ptr<const CoeffSource> src;
    int n = 0;
    int k = -1;
    std::vector<AngleMass> known;
    std::vector<LogCoeff> log_form;
    double phi = 0.0;          // rotation making the trig form real
    double log2_max = 0.0;     // log2 max |a_j|
    double log2_sum_bound = 0.0;
    std::vector<double> log2_bound;

    mutable std::mutex mu;
    mutable std::map<mpfr_prec_t, std::shared_ptr<const MpCoeffs>> cache;

    std::shared_ptr<const MpCoeffs> at(mpfr_prec_t p) const {
        std::lock_guard<std::mutex> lk(mu);
        auto it = cache.find(p);
        if (it != cache.end()) return it->second;
        auto c = std::make_shared<const MpCoeffs>(src->compute(p));
        cache.emplace(p, c);
        return c;
    }

    bool is_known_root(double theta) const {
        for (const auto& r : known)
            if (wrap_angle(theta) == r.angle) return true;
        return false;
    }

    // Returns false when the real part is not resolved at precision p.
    bool eval_real(double theta, mpfr_prec_t p, Mp& re, Mp& im) const {
        auto c = at(p);
        mpfr_prec_t wp = p + 32;
        Mp th(wp), s0(wp), s1(wp);
        MpComplex z(wp), acc(wp), rot(wp);
        mpfr_set_d(th.get(), theta, MPFR_RNDN);
        mpfr_sin_cos(z.im.get(), z.re.get(), th.get(), MPFR_RNDN);
        mpfr_set(acc.re.get(), c->a[n].re.get(), MPFR_RNDN);
        mpfr_set(acc.im.get(), c->a[n].im.get(), MPFR_RNDN);
        for (int j = n - 1; j >= 0; --j) detail::cmul_add(acc, z, c->a[j], s0, s1);
        // rotate by exp(-i (n theta / 2 + phi))
        mpfr_mul_si(th.get(), th.get(), n, MPFR_RNDN);
        mpfr_div_2ui(th.get(), th.get(), 1, MPFR_RNDN);
        mpfr_set_d(s0.get(), phi, MPFR_RNDN);
        mpfr_add(th.get(), th.get(), s0.get(), MPFR_RNDN);
        mpfr_neg(th.get(), th.get(), MPFR_RNDN);
        mpfr_sin_cos(rot.im.get(), rot.re.get(), th.get(), MPFR_RNDN);
        detail::cmul(acc, acc, rot);
        re = acc.re;
        im = acc.im;
        double log2_err = std::log2(c->ops + 8.0 * (n + 2)) - static_cast<double>(p) + log2_sum_bound;
        return re.log2_abs() > log2_err + 4.0;
    }

    // Real value at adaptive precision; zero when unresolved at the cap.
    void eval_adaptive(double theta, Mp& re, Mp& im) const {
        if (is_known_root(theta)) {
            re = Mp(64);
            im = Mp(64);
            return;
        }
        for (mpfr_prec_t p = kBasePrec; p <= kMaxPrec; p *= 2)
            if (eval_real(theta, p, re, im)) return;
        mpfr_set_zero(re.get(), 1);
    }
};

namespace {

std::shared_ptr<TrigEval::Impl> make_impl(std::shared_ptr<const CoeffSource> src, int k,
                                          std::vector<AngleMass> known) {
    auto impl = std::make_shared<TrigEval::Impl>();
    impl->src = src;
    impl->n = src->degree();
    impl->k = k;
    for (auto& r : known) r.angle = wrap_angle(r.angle);
    impl->known = std::move(known);
    MpCoeffs c = src->compute(kBasePrec);
    impl->log2_bound = c.log2_bound;
    impl->log2_sum_bound = detail::log2_sum_exp2(c.log2_bound);
    impl->log2_max = -std::numeric_limits<double>::infinity();
    for (const auto& v : c.a) {
        impl->log_form.push_back(to_log_coeff(v));
        impl->log2_max = std::max(impl->log2_max, v.log2_abs());
    }
    const auto& a0 = impl->log_form.front();
    const auto& an = impl->log_form.back();
    double phi = 0.5 * (std::arg(an.phase) + std::arg(a0.phase));
    phi = std::remainder(phi, kPi);
    if (phi <= -0.5 * kPi) phi += kPi;
    impl->phi = phi;
    return impl;
}

}  // namespace

TrigEval::TrigEval(const UnitPoly& p, std::vector<AngleMass> known)
    : impl_(make_impl(p.source(), -1, std::move(known))) {}

TrigEval TrigEval::laguerre(int n, int k) {
    UnitPoly p = circleflow::laguerre(n, k);
    std::vector<AngleMass> known;
    if (k < n) known.push_back({0.0, n - k});
    TrigEval t(p, known);
    t.impl_->k = k;
    return t;
}

TrigEval TrigEval::derivative_of_angles(const EmpiricalAngles& angles, int k) {
    if (angles.total() < 1) throw ValidationError("derivative_of_angles: empty angle set");
    if (k < 0) throw ValidationError("derivative_of_angles: k must be >= 0");
    auto src = detail::angles_source(angles.flattened());
    if (k > 0) src = detail::derivative_source(src, k);
    std::vector<AngleMass> known;
    for (const auto& m : angles.angles())
        if (m.multiplicity > k) known.push_back({m.angle, m.multiplicity - k});
    TrigEval t(UnitPoly(src), known);
    t.impl_->k = k;
    return t;
}

int TrigEval::n() const { return impl_->n; }
int TrigEval::k() const { return impl_->k; }
double TrigEval::log_offset() const { return impl_->log2_max * kLn2; }
const std::vector<AngleMass>& TrigEval::known_roots() const { return impl_->known; }

std::vector<LogCoeff> TrigEval::scaled_coeffs() const {
    std::vector<LogCoeff> out = impl_->log_form;
    double m = log_offset();
    for (auto& c : out) c.log_mag -= m;
    return out;
}

TrigValue TrigEval::eval(double theta) const {
    if (!std::isfinite(theta)) throw ValidationError("trig_eval: theta must be finite");
    Mp re(64), im(64);
    impl_->eval_adaptive(theta, re, im);
    long shift = -static_cast<long>(std::floor(impl_->log2_max));
    double frac = impl_->log2_max + static_cast<double>(shift);
    mpfr_mul_2si(re.get(), re.get(), shift, MPFR_RNDN);
    mpfr_mul_2si(im.get(), im.get(), shift, MPFR_RNDN);
    double scale = std::exp2(-frac);
    return {re.to_double() * scale, log_offset(), std::fabs(im.to_double()) * scale};
}

int TrigEval::sign(double theta) const {
    Mp re(64), im(64);
    impl_->eval_adaptive(theta, re, im);
    return mpfr_sgn(re.get());
}

TrigLogValue TrigEval::eval_log(cplx theta) const {
    const auto& I = *impl_;
    const int n = I.n;
    const double y = theta.imag();
    const double log2z = -y / kLn2;  // log2 |e^{i theta}|
    std::vector<double> wb(n + 1), wdb(n + 1);
    for (int j = 0; j <= n; ++j) {
        wb[j] = I.log2_bound[j] + j * log2z;
        wdb[j] = wb[j] + (j > 0 ? std::log2(static_cast<double>(j)) : -INFINITY);
    }
    const double lsum = detail::log2_sum_exp2(wb);
    const double ldsum = detail::log2_sum_exp2(wdb);
    for (mpfr_prec_t p = kBasePrec; p <= kMaxPrec; p *= 2) {
        auto c = I.at(p);
        mpfr_prec_t wp = p + 32;
        Mp t(wp), ex(wp), s0(wp), s1(wp);
        MpComplex z(wp), acc(wp), dacc(wp);
        // z = exp(i theta) = e^{-y} (cos x + i sin x)
        mpfr_set_d(t.get(), theta.real(), MPFR_RNDN);
        mpfr_sin_cos(z.im.get(), z.re.get(), t.get(), MPFR_RNDN);
        mpfr_set_d(t.get(), -y, MPFR_RNDN);
        mpfr_exp(ex.get(), t.get(), MPFR_RNDN);
        mpfr_mul(z.re.get(), z.re.get(), ex.get(), MPFR_RNDN);
        mpfr_mul(z.im.get(), z.im.get(), ex.get(), MPFR_RNDN);
        mpfr_set(acc.re.get(), c->a[n].re.get(), MPFR_RNDN);
        mpfr_set(acc.im.get(), c->a[n].im.get(), MPFR_RNDN);
        for (int j = n - 1; j >= 0; --j) {
            detail::cmul_add(dacc, z, acc, s0, s1);
            detail::cmul_add(acc, z, c->a[j], s0, s1);
        }
        detail::cmul(dacc, dacc, z);  // sum j a_j z^j
        double err = std::log2(c->ops + 8.0 * (n + 2)) - static_cast<double>(p);
        double la = acc.log2_abs();
        double ld = std::max(dacc.log2_abs(), la + std::log2(0.5 * n));
        if (la - (err + lsum) < 60.0 || ld - (err + ldsum) < 60.0) continue;
        // ratio = (sum j a_j z^j) / (sum a_j z^j)
        Mp den(wp);
        mpfr_sqr(den.get(), acc.re.get(), MPFR_RNDN);
        mpfr_fma(den.get(), acc.im.get(), acc.im.get(), den.get(), MPFR_RNDN);
        mpfr_fmma(s0.get(), dacc.re.get(), acc.re.get(), dacc.im.get(), acc.im.get(), MPFR_RNDN);
        mpfr_fmms(s1.get(), dacc.im.get(), acc.re.get(), dacc.re.get(), acc.im.get(), MPFR_RNDN);
        mpfr_div(s0.get(), s0.get(), den.get(), MPFR_RNDN);
        mpfr_div(s1.get(), s1.get(), den.get(), MPFR_RNDN);
        cplx ratio(s0.to_double(), s1.to_double());
        TrigLogValue out;
        out.log_abs = la * kLn2 + 0.5 * n * y;
        // rescale before converting so tiny or huge values keep their angle
        Mp r(64), i2(64);
        long sh = -static_cast<long>(std::floor(la));
        mpfr_mul_2si(r.get(), acc.re.get(), sh, MPFR_RNDN);
        mpfr_mul_2si(i2.get(), acc.im.get(), sh, MPFR_RNDN);
        double a = std::atan2(i2.to_double(), r.to_double());
        out.arg = std::remainder(a - 0.5 * n * theta.real(), 2.0 * kPi);
        out.log_deriv = cplx(0.0, 1.0) * (ratio - 0.5 * n);
        return out;
    }
    throw NumericalError("trig eval_log: value not resolved at maximal precision");
}

TrigValue trig_eval(const TrigEval& t, double theta) { return t.eval(theta); }

// ------------------------------------------------------------ root search

namespace {

// Sign of T divided by the known-root factors; continuous across known roots.
int reduced_sign(const TrigEval& t, double theta) {
    int s = t.sign(theta);
    for (const auto& r : t.known_roots()) {
        if (r.multiplicity % 2 == 0) continue;
        double v = std::sin(0.5 * (theta - r.angle));
        if (v < 0) s = -s;
    }
    return s;
}

}  // namespace

EmpiricalAngles roots_on_circle(const TrigEval& t, const RootSearchOptions& opt) {
    const int n = t.n();
    int known_total = 0;
    for (const auto& r : t.known_roots()) known_total += r.multiplicity;
    const int expected = n - known_total;
    if (expected < 0) throw ValidationError("known roots exceed the degree");
    int grid = opt.grid > 0 ? opt.grid : 8 * n;
    if (grid < 4 * n) throw ValidationError("roots_on_circle: grid must be >= 4n");
    if (expected == 0) return EmpiricalAngles(t.known_roots());

    int found = 0;
    for (int attempt = 0; attempt <= opt.max_doublings; ++attempt, grid *= 2) {
        const double h = 2.0 * kPi / grid;
        const double start = -kPi + 0.3183098861837907 * h;
        std::vector<int> sg(grid + 1);
        detail::parallel_for(grid + 1, [&](std::size_t i) {
            double th = start + h * static_cast<double>(i);
            int s = reduced_sign(t, th);
            // an exact hit on a root: probe slightly to the right
            for (int nudge = 1; s == 0 && nudge <= 4; ++nudge)
                s = reduced_sign(t, th + h * 1e-3 * nudge);
            sg[i] = s;
        });
        std::vector<int> brackets;
        for (int i = 0; i < grid; ++i)
            if (sg[i] * sg[i + 1] < 0) brackets.push_back(i);
        found = static_cast<int>(brackets.size());
        if (found != expected) continue;

        std::vector<double> roots(found);
        detail::parallel_for(brackets.size(), [&](std::size_t b) {
            int i = brackets[b];
            double lo = start + h * i, hi = start + h * (i + 1);
            int slo = sg[i];
            while (hi - lo >= opt.tol) {
                double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                int sm = reduced_sign(t, mid);
                if (sm == 0) {
                    lo = hi = mid;
                    break;
                }
                if (sm == slo)
                    lo = mid;
                else
                    hi = mid;
            }
            roots[b] = 0.5 * (lo + hi);
        });
        std::vector<AngleMass> all = t.known_roots();
        for (double r : roots) all.push_back({r, 1});
        return EmpiricalAngles(std::move(all));
    }
    throw RootCountError(found + known_total, n);
}

EmpiricalAngles roots_on_circle(const UnitPoly& p, const RootSearchOptions& opt) {
    return roots_on_circle(TrigEval(p), opt);
}

EmpiricalAngles laguerre_roots(int n, int k, const RootSearchOptions& opt) {
    return roots_on_circle(TrigEval::laguerre(n, k), opt);
}

std::vector<cplx> empirical_moments(const EmpiricalAngles& a, int lmax) {
    if (lmax < 1) throw ValidationError("empirical_moments: lmax must be >= 1");
    if (a.total() < 1) throw ValidationError("empirical_moments: empty angle set");
    std::vector<cplx> m(lmax, cplx(0.0));
    for (const auto& am : a.angles())
        for (int l = 1; l <= lmax; ++l)
            m[l - 1] += static_cast<double>(am.multiplicity) * std::polar(1.0, l * am.angle);
    for (auto& v : m) v /= static_cast<double>(a.total());
    return m;
}

cplx psi_empirical(const EmpiricalAngles& a, cplx theta) {
    if (!(theta.imag() > 0)) throw ValidationError("psi_empirical: Im theta must be > 0");
    if (a.total() < 1) throw ValidationError("psi_empirical: empty angle set");
    const cplx i(0.0, 1.0);
    cplx s(0.0);
    for (const auto& am : a.angles()) {
        // cot(x/2) = -i (1 + w)/(1 - w), w = e^{ix}, stable for Im x > 0
        cplx w = std::exp(i * (theta + am.angle));
        s += static_cast<double>(am.multiplicity) * (-i) * (1.0 + w) / (1.0 - w);
    }
    return i / (2.0 * a.total()) * s - 0.5;
}

}  // namespace circleflow
