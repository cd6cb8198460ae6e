#pragma once

// The free unitary Poisson law Pi_t on the circle.

#include "circleflow/polycore.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace circleflow {

using cplx = std::complex<double>;

struct Atom {
    double angle;
    double weight;
};

struct CircularLaw {
    double t;
    std::vector<Atom> atoms;   // the atom at angle 0 with weight 1 - t, for t < 1
    double ac_total;           // mass of the absolutely continuous part
    std::optional<std::pair<double, double>> support_gap;   // (-2x_t, 2x_t), t < 1
};

CircularLaw circular_law(double t);

// Largest |l| accepted by moment / p_ell.
inline constexpr int kMaxMomentOrder = 256;

struct MomentEntry {
    int ell;
    double p;              // p_ell(t)
    double moment;         // e^{-2 ell t} p_ell(t)
    bool denormal_risk;    // |moment| < 1e-50
};

class MomentTable {
public:
    MomentTable(double t, int lmax = 64);
    double t() const { return t_; }
    int lmax() const { return static_cast<int>(entries_.size()) - 1; }
    const std::vector<MomentEntry>& entries() const { return entries_; }
    double moment(int ell) const;

private:
    double t_;
    std::vector<MomentEntry> entries_;
};

double p_ell(double t, int ell);
double moment(double t, int ell);

// Density of the absolutely continuous part. Exactly 0 inside the gap for t < 1;
// +infinity at (t = 1, theta = 0).
double density(double t, double theta);
double atom_weight(double t);

cplx psi(double t, cplx z);

struct SSigma {
    cplx S;
    cplx Sigma;
};
SSigma s_sigma(double t, cplx z);

// Integral of the density over [a, b] within [-pi, pi].
double density_integral(double t, double a, double b);
// Integral of cos(ell theta) times the density over [-pi, pi].
double density_cos_moment(double t, int ell);

double cdf(double t, double theta);
double quantile(double t, double u);

// Tabulated CDF for repeated evaluation and inversion.
class CdfTable {
public:
    explicit CdfTable(double t, int nodes_per_piece = 1024);
    double t() const { return t_; }
    double cdf(double theta) const;
    double quantile(double u) const;

private:
    struct Piece {
        double edge;       // substitution centre
        int dir;           // +1: theta = edge + g(u), -1: theta = edge - g(u)
        int power;         // 1, 2 or 3
        double base;       // cdf at the start of the piece (in increasing theta)
        std::vector<double> u, F, dF;   // F as a function of u, increasing in theta
    };
    double theta_of(const Piece& p, double u) const;
    double eval_piece(const Piece& p, double u) const;
    double t_;
    double atom_ = 0;
    std::vector<Piece> pieces_;   // ordered by theta
};

EmpiricalAngles sample(double t, int n, std::uint64_t seed);

double density_fourier(double t, double theta, int L);
double density_fourier(const MomentTable& table, double theta, int L);

}  // namespace circleflow
