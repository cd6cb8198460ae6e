#include "coeff_source.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace circleflow::detail {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log2_binom(int n, int j) {
    return (std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0)) / std::log(2.0);
}

// out <- out * i^k
void rotate_by_i_power(MpComplex& out, int k) {
    switch (((k % 4) + 4) % 4) {
        case 0:
            break;
        case 1:  // (x + iy) i = -y + ix
            mpfr_swap(out.re.get(), out.im.get());
            mpfr_neg(out.re.get(), out.re.get(), MPFR_RNDN);
            break;
        case 2:
            mpfr_neg(out.re.get(), out.re.get(), MPFR_RNDN);
            mpfr_neg(out.im.get(), out.im.get(), MPFR_RNDN);
            break;
        case 3:  // (x + iy)(-i) = y - ix
            mpfr_swap(out.re.get(), out.im.get());
            mpfr_neg(out.im.get(), out.im.get(), MPFR_RNDN);
            break;
    }
}

class ExplicitSource final : public CoeffSource {
public:
    explicit ExplicitSource(std::vector<std::complex<double>> a) : a_(std::move(a)) {}
    int degree() const override { return static_cast<int>(a_.size()) - 1; }
    MpCoeffs compute(mpfr_prec_t prec) const override {
        MpCoeffs out;
        out.prec = prec;
        out.ops = 1.0;
        for (const auto& c : a_) {
            MpComplex v(std::max<mpfr_prec_t>(prec, 53));
            mpfr_set_d(v.re.get(), c.real(), MPFR_RNDN);
            mpfr_set_d(v.im.get(), c.imag(), MPFR_RNDN);
            out.a.push_back(std::move(v));
            double m = std::abs(c);
            out.log2_bound.push_back(m > 0 ? std::log2(m) : kNegInf);
        }
        return out;
    }

private:
    std::vector<std::complex<double>> a_;
};

class LaguerreSource final : public CoeffSource {
public:
    LaguerreSource(int n, int k) : n_(n), k_(k) {}
    int degree() const override { return n_; }
    MpCoeffs compute(mpfr_prec_t prec) const override {
        MpCoeffs out;
        out.prec = prec;
        out.ops = 2.0;
        Mpz binom, power;
        for (int j = 0; j <= n_; ++j) {
            // (-1)^{n-j} C(n,j) (2j-n)^k / 2^k, then times i^k
            mpz_bin_uiui(binom.get(), n_, j);
            mpz_set_si(power.get(), 2 * j - n_);
            mpz_pow_ui(power.get(), power.get(), k_);
            mpz_mul(power.get(), power.get(), binom.get());
            if ((n_ - j) % 2) mpz_neg(power.get(), power.get());
            MpComplex v(prec);
            mpfr_set_z(v.re.get(), power.get(), MPFR_RNDN);
            mpfr_div_2ui(v.re.get(), v.re.get(), k_, MPFR_RNDN);
            out.log2_bound.push_back(v.re.log2_abs());
            rotate_by_i_power(v, k_);
            out.a.push_back(std::move(v));
        }
        return out;
    }

private:
    int n_, k_;
};

class AnglesSource final : public CoeffSource {
public:
    explicit AnglesSource(std::vector<double> th) : th_(std::move(th)) {}
    int degree() const override { return static_cast<int>(th_.size()); }
    MpCoeffs compute(mpfr_prec_t prec) const override {
        const int n = degree();
        mpfr_prec_t wp = prec + 16 + static_cast<mpfr_prec_t>(2 * std::log2(n + 1.0));
        std::vector<MpComplex> c;
        c.emplace_back(wp);
        mpfr_set_ui(c[0].re.get(), 1, MPFR_RNDN);
        Mp theta(wp), sum(wp), s0(wp), s1(wp);
        MpComplex w(wp);
        for (int m = 0; m < n; ++m) {
            mpfr_set_d(theta.get(), th_[m], MPFR_RNDN);
            mpfr_add(sum.get(), sum.get(), theta.get(), MPFR_RNDN);
            mpfr_sin_cos(w.im.get(), w.re.get(), theta.get(), MPFR_RNDN);
            // c <- c * (z - w)
            c.emplace_back(wp);
            for (int j = m + 1; j >= 0; --j) {
                // new c_j = c_{j-1} - w c_j
                if (j <= m) {
                    mpfr_fmms(s0.get(), w.re.get(), c[j].re.get(), w.im.get(), c[j].im.get(), MPFR_RNDN);
                    mpfr_fmma(s1.get(), w.re.get(), c[j].im.get(), w.im.get(), c[j].re.get(), MPFR_RNDN);
                } else {
                    mpfr_set_zero(s0.get(), 1);
                    mpfr_set_zero(s1.get(), 1);
                }
                if (j >= 1) {
                    mpfr_sub(c[j].re.get(), c[j - 1].re.get(), s0.get(), MPFR_RNDN);
                    mpfr_sub(c[j].im.get(), c[j - 1].im.get(), s1.get(), MPFR_RNDN);
                } else {
                    mpfr_neg(c[j].re.get(), s0.get(), MPFR_RNDN);
                    mpfr_neg(c[j].im.get(), s1.get(), MPFR_RNDN);
                }
            }
        }
        // leading coefficient (2i)^{-n} exp(-i sum/2)
        MpComplex lead(wp);
        mpfr_div_2ui(sum.get(), sum.get(), 1, MPFR_RNDN);
        mpfr_neg(sum.get(), sum.get(), MPFR_RNDN);
        mpfr_sin_cos(lead.im.get(), lead.re.get(), sum.get(), MPFR_RNDN);
        mpfr_div_2ui(lead.re.get(), lead.re.get(), n, MPFR_RNDN);
        mpfr_div_2ui(lead.im.get(), lead.im.get(), n, MPFR_RNDN);
        rotate_by_i_power(lead, -n);

        MpCoeffs out;
        out.prec = prec;
        out.ops = 4.0 * n + 8.0;
        for (int j = 0; j <= n; ++j) {
            MpComplex v(wp);
            cmul(v, c[j], lead);
            v.set_prec(prec);
            out.a.push_back(std::move(v));
            out.log2_bound.push_back(log2_binom(n, j) - n);
        }
        return out;
    }

private:
    std::vector<double> th_;
};

class DerivativeSource final : public CoeffSource {
public:
    DerivativeSource(std::shared_ptr<const CoeffSource> child, int k) : child_(std::move(child)), k_(k) {}
    int degree() const override { return child_->degree(); }
    MpCoeffs compute(mpfr_prec_t prec) const override {
        MpCoeffs out = child_->compute(prec);
        const int n = degree();
        Mpz power;
        Mp f(prec);
        for (int j = 0; j <= n; ++j) {
            // times (i (j - n/2))^k = i^k (2j - n)^k / 2^k
            mpz_set_si(power.get(), 2 * j - n);
            mpz_pow_ui(power.get(), power.get(), k_);
            mpfr_set_z(f.get(), power.get(), MPFR_RNDN);
            mpfr_div_2ui(f.get(), f.get(), k_, MPFR_RNDN);
            auto& v = out.a[j];
            mpfr_mul(v.re.get(), v.re.get(), f.get(), MPFR_RNDN);
            mpfr_mul(v.im.get(), v.im.get(), f.get(), MPFR_RNDN);
            rotate_by_i_power(v, k_);
            if (k_ > 0) {
                if (2 * j == n)
                    out.log2_bound[j] = kNegInf;
                else
                    out.log2_bound[j] += k_ * std::log2(std::fabs(j - 0.5 * n));
            }
        }
        out.ops += 3.0;
        return out;
    }

private:
    std::shared_ptr<const CoeffSource> child_;
    int k_;
};

class FfmSource final : public CoeffSource {
public:
    FfmSource(std::shared_ptr<const CoeffSource> p, std::shared_ptr<const CoeffSource> q)
        : p_(std::move(p)), q_(std::move(q)) {}
    int degree() const override { return p_->degree(); }
    MpCoeffs compute(mpfr_prec_t prec) const override {
        MpCoeffs a = p_->compute(prec);
        MpCoeffs b = q_->compute(prec);
        const int n = degree();
        MpCoeffs out;
        out.prec = prec;
        out.ops = a.ops + b.ops + 4.0;
        Mpz binom;
        Mp c(prec);
        for (int j = 0; j <= n; ++j) {
            MpComplex v(prec);
            cmul(v, a.a[j], b.a[j]);
            mpz_bin_uiui(binom.get(), n, j);
            mpfr_set_z(c.get(), binom.get(), MPFR_RNDN);
            if ((n - j) % 2) mpfr_neg(c.get(), c.get(), MPFR_RNDN);
            mpfr_div(v.re.get(), v.re.get(), c.get(), MPFR_RNDN);
            mpfr_div(v.im.get(), v.im.get(), c.get(), MPFR_RNDN);
            out.a.push_back(std::move(v));
            out.log2_bound.push_back(a.log2_bound[j] + b.log2_bound[j] - log2_binom(n, j));
        }
        return out;
    }

private:
    std::shared_ptr<const CoeffSource> p_, q_;
};

}  // namespace

double log2_sum_exp2(const std::vector<double>& x) {
    double m = kNegInf;
    for (double v : x) m = std::max(m, v);
    if (std::isinf(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp2(v - m);
    return m + std::log2(s);
}

std::shared_ptr<const CoeffSource> explicit_source(const std::vector<std::complex<double>>& a) {
    return std::make_shared<ExplicitSource>(a);
}
std::shared_ptr<const CoeffSource> laguerre_source(int n, int k) {
    return std::make_shared<LaguerreSource>(n, k);
}
std::shared_ptr<const CoeffSource> angles_source(const std::vector<double>& angles) {
    return std::make_shared<AnglesSource>(angles);
}
std::shared_ptr<const CoeffSource> derivative_source(std::shared_ptr<const CoeffSource> child, int k) {
    return std::make_shared<DerivativeSource>(std::move(child), k);
}
std::shared_ptr<const CoeffSource> ffm_source(std::shared_ptr<const CoeffSource> p,
                                              std::shared_ptr<const CoeffSource> q) {
    return std::make_shared<FfmSource>(std::move(p), std::move(q));
}

}  // namespace circleflow::detail
