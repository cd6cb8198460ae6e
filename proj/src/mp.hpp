#pragma once

// Minimal RAII handles over MPFR / GMP values with explicit precision.
// Every value carries its own precision, so nothing here touches global state.

#include <gmp.h>
#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>

namespace circleflow::detail {

class Mp {
public:
    explicit Mp(mpfr_prec_t prec = 64) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
    Mp(mpfr_prec_t prec, double x) { mpfr_init2(v_, prec); mpfr_set_d(v_, x, MPFR_RNDN); }
    Mp(const Mp& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    Mp(Mp&& o) noexcept {
        mpfr_init2(v_, MPFR_PREC_MIN);
        mpfr_swap(v_, o.v_);
    }
    Mp& operator=(const Mp& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Mp& operator=(Mp&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Mp() { mpfr_clear(v_); }

    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    mpfr_prec_t prec() const { return mpfr_get_prec(v_); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }

    // log2|x| as a double, -inf for zero; safe far outside the double range.
    double log2_abs() const {
        if (mpfr_zero_p(v_)) return -INFINITY;
        long e = 0;
        double m = mpfr_get_d_2exp(&e, v_, MPFR_RNDN);
        return std::log2(std::fabs(m)) + static_cast<double>(e);
    }

private:
    mpfr_t v_;
};

struct MpComplex {
    Mp re;
    Mp im;
    explicit MpComplex(mpfr_prec_t prec = 64) : re(prec), im(prec) {}
    void set_prec(mpfr_prec_t prec) {
        mpfr_prec_round(re.get(), prec, MPFR_RNDN);
        mpfr_prec_round(im.get(), prec, MPFR_RNDN);
    }
    // log2|z|, computed without overflow.
    double log2_abs() const {
        double a = re.log2_abs(), b = im.log2_abs();
        double hi = std::max(a, b), lo = std::min(a, b);
        if (std::isinf(hi)) return hi;
        return hi + 0.5 * std::log2(1.0 + std::exp2(2.0 * (lo - hi)));
    }
};

class Mpz {
public:
    Mpz() { mpz_init(v_); }
    explicit Mpz(long x) { mpz_init_set_si(v_, x); }
    Mpz(const Mpz& o) { mpz_init_set(v_, o.v_); }
    Mpz& operator=(const Mpz& o) {
        if (this != &o) mpz_set(v_, o.v_);
        return *this;
    }
    ~Mpz() { mpz_clear(v_); }
    mpz_ptr get() { return v_; }
    mpz_srcptr get() const { return v_; }

private:
    mpz_t v_;
};

class Mpq {
public:
    Mpq() { mpq_init(v_); }
    Mpq(const Mpq& o) {
        mpq_init(v_);
        mpq_set(v_, o.v_);
    }
    Mpq& operator=(const Mpq& o) {
        if (this != &o) mpq_set(v_, o.v_);
        return *this;
    }
    ~Mpq() { mpq_clear(v_); }
    mpq_ptr get() { return v_; }
    mpq_srcptr get() const { return v_; }

private:
    mpq_t v_;
};

// z <- z*w + a for complex values; scratch holds two temporaries.
inline void cmul_add(MpComplex& z, const MpComplex& w, const MpComplex& a, Mp& s0, Mp& s1) {
    mpfr_fmms(s0.get(), z.re.get(), w.re.get(), z.im.get(), w.im.get(), MPFR_RNDN);
    mpfr_fmma(s1.get(), z.re.get(), w.im.get(), z.im.get(), w.re.get(), MPFR_RNDN);
    mpfr_add(z.re.get(), s0.get(), a.re.get(), MPFR_RNDN);
    mpfr_add(z.im.get(), s1.get(), a.im.get(), MPFR_RNDN);
}

inline void cmul(MpComplex& out, const MpComplex& a, const MpComplex& b) {
    Mp r(out.re.prec());
    mpfr_fmms(r.get(), a.re.get(), b.re.get(), a.im.get(), b.im.get(), MPFR_RNDN);
    mpfr_fmma(out.im.get(), a.re.get(), b.im.get(), a.im.get(), b.re.get(), MPFR_RNDN);
    mpfr_swap(out.re.get(), r.get());
}

}  // namespace circleflow::detail
