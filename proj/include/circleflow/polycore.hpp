#pragma once

// Polynomials with all roots on the unit circle.
//
// A UnitPoly P of degree n is paired with the trigonometric form
//     T(theta) = P(e^{i theta}) e^{-i n theta / 2},
// which is real (up to a constant phase) when P is self-inversive. Coefficients
// of circular Laguerre polynomials grow like C(n,j) |j - n/2|^k, so every
// polynomial keeps an exact multiprecision description of its coefficients
// next to the double / log-magnitude views.

#include <complex>
#include <memory>
#include <vector>

namespace circleflow {

using cplx = std::complex<double>;

namespace detail {
class CoeffSource;
}

struct LogCoeff {
    cplx phase;       // unit complex; 1 for a zero coefficient
    double log_mag;   // natural log of |a_j|, -inf for zero
};

class UnitPoly {
public:
    // Coefficients a_0..a_n in increasing degree; requires n >= 1 and a_n != 0.
    static UnitPoly from_coeffs(std::vector<cplx> a);

    int degree() const { return n_; }
    const std::vector<LogCoeff>& log_form() const { return log_form_; }

    // Direct double coefficients exist only when every |log a_j| <= 700.
    bool has_coeffs() const { return has_coeffs_; }
    const std::vector<cplx>& coeffs() const;

    // a_j reconstructed from log_form (may be inf/0 outside the double range).
    cplx coeff(int j) const;

    // a_j == conj(a_{n-j}) for all j, relative tolerance tol.
    bool is_self_inversive(double tol = 1e-12) const;

    // Horner evaluation in double precision; needs has_coeffs().
    cplx evaluate(cplx z) const;

    const std::shared_ptr<const detail::CoeffSource>& source() const { return src_; }
    explicit UnitPoly(std::shared_ptr<const detail::CoeffSource> src);

private:
    std::shared_ptr<const detail::CoeffSource> src_;
    int n_ = 0;
    bool has_coeffs_ = false;
    std::vector<cplx> coeffs_;
    std::vector<LogCoeff> log_form_;
};

struct AngleMass {
    double angle;
    int multiplicity;
};

// Multiset of angles in [-pi, pi), strictly increasing, with multiplicities.
class EmpiricalAngles {
public:
    EmpiricalAngles() = default;
    // Angles are reduced to [-pi, pi); exact duplicates are merged.
    explicit EmpiricalAngles(std::vector<AngleMass> masses);
    static EmpiricalAngles from_list(const std::vector<double>& angles);

    const std::vector<AngleMass>& angles() const { return angles_; }
    int total() const { return total_; }
    std::vector<double> flattened() const;

private:
    std::vector<AngleMass> angles_;
    int total_ = 0;
};

// Reduce to [-pi, pi). Values within 1e-11 of +pi map to -pi.
double wrap_angle(double theta);

UnitPoly laguerre(int n, int k);
UnitPoly apply_D(const UnitPoly& p);
UnitPoly apply_D(const UnitPoly& p, int k);
UnitPoly ffm_conv(const UnitPoly& p, const UnitPoly& q);
UnitPoly poly_from_angles(const EmpiricalAngles& angles);

struct TrigValue {
    double value_scaled;   // real trig value divided by e^{log_offset}
    double log_offset;     // M = max_j log|a_j|
    double imag_residue;   // |imaginary part| / e^{M}
};

struct TrigLogValue {
    double log_abs;        // log |T(theta)|
    double arg;            // arg T(theta)
    cplx log_deriv;        // T'(theta) / T(theta)
};

// Evaluator for the trigonometric form with adaptive working precision.
// The real value reported is Re(T(theta) e^{-i phi}) where
// phi = arg(a_n / conj(a_0)) / 2 reduced to (-pi/2, pi/2]. For self-inversive P
// this is T itself; for L_{n,k} with n even it is
// T_{n,k} = (2i)^n d^k/dtheta^k (sin theta/2)^n, and for odd n it is T_{n,k}
// times a unit constant.
class TrigEval {
public:
    explicit TrigEval(const UnitPoly& p, std::vector<AngleMass> known = {});
    static TrigEval laguerre(int n, int k);
    // Trig form of D^k applied to the polynomial with the given roots; no degree cap.
    static TrigEval derivative_of_angles(const EmpiricalAngles& angles, int k);

    int n() const;
    int k() const;   // -1 when not a Laguerre / derivative construction
    double log_offset() const;
    // Scaled Fourier coefficients c_j = a_j e^{-M}, in log form.
    std::vector<LogCoeff> scaled_coeffs() const;
    // Roots known analytically (the zero at 0 of multiplicity n-k for L_{n,k}).
    const std::vector<AngleMass>& known_roots() const;

    TrigValue eval(double theta) const;
    // Certified sign of the real value; 0 when unresolved at the precision cap.
    int sign(double theta) const;
    // Requires T(theta) != 0; theta may be complex.
    TrigLogValue eval_log(cplx theta) const;

    struct Impl;

private:
    std::shared_ptr<Impl> impl_;
};

TrigValue trig_eval(const TrigEval& t, double theta);

struct RootSearchOptions {
    int grid = 0;            // 0 selects 8n; must otherwise be >= 4n
    int max_doublings = 4;
    double tol = 1e-12;
};

// Roots of the real trig form. Known roots are taken as given; the remaining
// ones are assumed simple and located by sign changes plus bisection.
EmpiricalAngles roots_on_circle(const TrigEval& t, const RootSearchOptions& opt = {});
EmpiricalAngles roots_on_circle(const UnitPoly& p, const RootSearchOptions& opt = {});
EmpiricalAngles laguerre_roots(int n, int k, const RootSearchOptions& opt = {});

std::vector<cplx> empirical_moments(const EmpiricalAngles& a, int lmax);
cplx psi_empirical(const EmpiricalAngles& a, cplx theta);

}  // namespace circleflow
