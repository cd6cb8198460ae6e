#pragma once

#include "mp.hpp"

#include <memory>
#include <vector>

namespace circleflow::detail {

// Coefficients at a given working precision p together with an error model:
// |computed a_j - exact a_j| <= ops * 2^{-p} * 2^{log2_bound[j]}, and
// |a_j| <= 2^{log2_bound[j]}.
struct MpCoeffs {
    mpfr_prec_t prec = 0;
    std::vector<MpComplex> a;
    std::vector<double> log2_bound;
    double ops = 1.0;
};

class CoeffSource {
public:
    virtual ~CoeffSource() = default;
    virtual int degree() const = 0;
    virtual MpCoeffs compute(mpfr_prec_t prec) const = 0;
};

std::shared_ptr<const CoeffSource> explicit_source(const std::vector<std::complex<double>>& a);
std::shared_ptr<const CoeffSource> laguerre_source(int n, int k);
std::shared_ptr<const CoeffSource> angles_source(const std::vector<double>& angles);
std::shared_ptr<const CoeffSource> derivative_source(std::shared_ptr<const CoeffSource> child, int k);
std::shared_ptr<const CoeffSource> ffm_source(std::shared_ptr<const CoeffSource> p,
                                              std::shared_ptr<const CoeffSource> q);

// log2 of sum_j 2^{x_j}, robust for huge spreads; -inf for an empty / all -inf input.
double log2_sum_exp2(const std::vector<double>& x);

}  // namespace circleflow::detail
