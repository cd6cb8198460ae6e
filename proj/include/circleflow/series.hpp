#pragma once

// Truncated power series c_0 + c_1 z + ... + c_L z^L and the moment pipeline
// psi -> psi^{-1} -> S -> S * S_Pi -> psi for free multiplicative convolution
// with the free unitary Poisson law.

#include <complex>
#include <vector>

namespace circleflow {

using cplx = std::complex<double>;

enum class SeriesKind { psi, s };

class TruncSeries {
public:
    TruncSeries() = default;
    // coeffs[0..L]; kind psi requires coeffs[0] == 0, kind s requires coeffs[0] != 0.
    TruncSeries(std::vector<cplx> coeffs, SeriesKind kind);
    // Kind inferred from the constant term.
    explicit TruncSeries(std::vector<cplx> coeffs);

    static TruncSeries identity(int order);
    // psi-series with coefficients m_1..m_L.
    static TruncSeries from_moments(const std::vector<cplx>& m);

    int order() const { return static_cast<int>(c_.size()) - 1; }
    SeriesKind kind() const { return kind_; }
    const std::vector<cplx>& coeffs() const { return c_; }
    cplx operator[](int j) const { return c_[j]; }
    cplx eval(cplx z) const;

private:
    std::vector<cplx> c_{cplx(0.0)};
    SeriesKind kind_ = SeriesKind::psi;
};

TruncSeries add(const TruncSeries& a, const TruncSeries& b);
TruncSeries multiply(const TruncSeries& a, const TruncSeries& b);
TruncSeries reciprocal(const TruncSeries& a);
TruncSeries exp_series(const TruncSeries& a);
TruncSeries compose(const TruncSeries& outer, const TruncSeries& inner);
TruncSeries invert(const TruncSeries& s);

// S(z) = ((1+z)/z) psi^{-1}(z), constant term 1/m_1.
TruncSeries psi_to_S(const TruncSeries& psi);
// exp(t/(z+1/2)) to order L.
TruncSeries poisson_S_series(double t, int L);

// Moments of nu boxtimes Pi_t from moments m_1..m_L of nu (returns L values).
std::vector<cplx> conv_moments(const std::vector<cplx>& m, double t, int L);

// u_t(x) = (1/2pi) Re(1 + 2 psi_t(e^{-ix})) truncated at order L.
double pde_density(const std::vector<cplx>& m, double t, double x, int L);

// |du/dt + (1/pi) d/dx arctan(Hu/u)| with H the periodic Hilbert transform.
double pde_residual(const std::vector<cplx>& m, double t, double x, double h_t, int L);

}  // namespace circleflow
