#pragma once

// Finite-n checks of the Poisson limit: Laguerre zeros, the derivative flow,
// log-growth of W_{n,k}, and Monte Carlo products of random reflections.

#include "circleflow/polycore.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace circleflow {

using cplx = std::complex<double>;

struct ConvergenceReport {
    int n = 0;
    int k = 0;
    double t = 0;
    std::vector<double> moment_errors;   // entry l-1 holds |m_l(emp) - m_l(ref)|
    double kolmogorov = 0;               // NaN when no reference cdf is available
    double min_positive_angle = 0;       // NaN when there is no positive root
    double runtime_ms = 0;
    bool passthrough = false;            // k = 0: the input is returned unchanged
    bool degraded = false;               // m_1 of the input vanishes; moments not compared
    EmpiricalAngles roots;
};

// Kolmogorov distance between the empirical angle cdf and Pi_t (atom included),
// both cut at -pi.
double kolmogorov_distance(const EmpiricalAngles& emp, double t);
// The same against Pi_t rotated by alpha.
double kolmogorov_distance(const EmpiricalAngles& emp, double t, double alpha);

ConvergenceReport laguerre_convergence(int n, double t, int lmax);

// Zeros of D^k applied to the polynomial with the given 2d roots, k = round(2 t d),
// against conv_moments of the input moments. For a single-atom input the
// Kolmogorov distance to the rotated Pi_t is reported as well.
ConvergenceReport derivative_flow(const EmpiricalAngles& angles, double t, int lmax = 3);

struct LogGrowth {
    double lhs_log;        // log|W_{n,k}(theta)| / n
    cplx lhs_logderiv;     // W'/W, not normalized
    double rhs_log;        // log|sin z| - t log|2z - theta|, z = zeta_t(theta/2)
    cplx rhs_logderiv;     // t / (2z - theta)
    cplx rhs_cot;          // cot(z) / 2, equal to rhs_logderiv
};

LogGrowth log_growth_check(int n, int k, cplx theta);

double minimal_angle(int n, double t);

struct ReflectionRun {
    int n = 0;
    int k = 0;
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> eigen_angles;          // n angles per accepted sample
    std::vector<cplx> estimated_charpoly;      // mean of det(zI - Q), increasing degree
    std::vector<double> std_errors;            // standard error of the real part
    double unit_error_max = 0;                 // max ||lambda| - 1| over accepted samples
    double det_error_max = 0;                  // max |prod(lambda) - (-1)^k| over accepted samples
    int skipped = 0;
    bool valid = true;                         // skipped <= 1% of samples
};

ReflectionRun reflections_mc(int n, int k, int samples, std::uint64_t seed, bool keep_angles = true);

// The monic target ((z+1)(z-1)^{n-1}) boxtimes_n ... boxtimes_n (k factors).
std::vector<cplx> expected_charpoly(int n, int k);

struct PoissonLimitReport {
    int n = 0;
    int k = 0;
    double t = 0;
    double closed_form_error = 0;   // max_j |a_j - b_j| / max_j |b_j|
    std::vector<double> moment_errors;
};

PoissonLimitReport poisson_limit_finite_n(int n, double t, int lmax);

}  // namespace circleflow
