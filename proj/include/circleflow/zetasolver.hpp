#pragma once

// Principal branch of zeta - t tan(zeta) = theta on the closed upper half-plane,
// and the disk functions r_t, v_t built on it.

#include "circleflow/series.hpp"

#include <complex>
#include <string>

namespace circleflow {

using cplx = std::complex<double>;

enum class ZetaMethod { fixed_point, newton, puiseux_seeded, real_branch };
std::string to_string(ZetaMethod m);

struct ZetaValue {
    cplx zeta;
    double residual;   // |zeta - t tan zeta - theta|
    int iterations;
    ZetaMethod method;
};

enum class Regime { sub, crit, super };

// Fields that do not apply to the regime are NaN.
struct BranchData {
    double t;
    Regime regime;
    double x_t;       // arccos(sqrt t) - sqrt(t(1-t)), sub only
    double y0;        // positive root of y = t tanh y, super only
    double ytilde0;   // positive root of y = t coth y
};

// |t - 1| below this counts as the critical regime.
inline constexpr double kCriticalWindow = 1e-12;

ZetaValue zeta(double t, cplx theta);

// Plain iteration x -> theta + t tan x from an arbitrary start in the upper
// half-plane; runs until successive iterates agree to tol.
cplx zeta_fixed_point(double t, cplx theta, cplx start, int max_iter = 100000, double tol = 1e-14);

// tan evaluated through exp(2iz) with the decaying exponent, safe for large |Im z|.
cplx tan_stable(cplx z);

double y_axis(double t, double tau);
double y_tilde_axis(double t, double tau);
BranchData branch_data(double t);

cplx r_func(double t, cplx z);
TruncSeries r_taylor(double t, int L);
cplx v_func(double t, cplx z);

}  // namespace circleflow
