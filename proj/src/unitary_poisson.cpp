#include "circleflow/unitary_poisson.hpp"

#include "circleflow/errors.hpp"
#include "circleflow/zetasolver.hpp"
#include "mp.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace circleflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_t(double t, const char* who) {
    if (!(t > 0) || !std::isfinite(t)) throw ValidationError(std::string(who) + ": t must be positive and finite");
}

bool is_crit(double t) { return std::fabs(t - 1.0) <= kCriticalWindow; }
bool is_sub(double t) { return t < 1.0 && !is_crit(t); }

double gap_edge(double t) {
    return 2.0 * (std::acos(std::sqrt(t)) - std::sqrt(t * (1.0 - t)));
}

// Coefficients of p_l in powers of t, exact.
const std::vector<detail::Mpq>& p_coeffs(int ell) {
    static std::mutex mu;
    static std::map<int, std::vector<detail::Mpq>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(ell);
    if (it != cache.end()) return it->second;

    // q_a = C(n,a) (4l)^a / (a-1)! * sum_b C(n-a,b) (-2)^b / ((a+b)(a+b+1)),  n = l - 1,
    // the inner sum taken over the common denominator M = lcm(1..l).
    const int n = ell - 1;
    std::vector<detail::Mpq> q(ell);
    mpq_set_ui(q[0].get(), 1, 1);
    detail::Mpz M, binom_na, binom_b, acc, term, pw, fact;
    mpz_set_ui(M.get(), 1);
    for (int i = 2; i <= ell; ++i) mpz_lcm_ui(M.get(), M.get(), i);
    mpz_set_ui(binom_na.get(), 1);   // C(n, a)
    mpz_set_ui(fact.get(), 1);       // (a-1)!
    for (int a = 1; a <= n; ++a) {
        mpz_mul_ui(binom_na.get(), binom_na.get(), n - a + 1);
        mpz_divexact_ui(binom_na.get(), binom_na.get(), a);
        if (a > 1) mpz_mul_ui(fact.get(), fact.get(), a - 1);
        mpz_set_ui(acc.get(), 0);
        mpz_set_ui(binom_b.get(), 1);   // C(n-a, b) (-2)^b
        for (int b = 0; a + b <= n; ++b) {
            mpz_divexact_ui(term.get(), M.get(), static_cast<unsigned long>(a + b) * (a + b + 1));
            mpz_addmul(acc.get(), term.get(), binom_b.get());
            mpz_mul_si(binom_b.get(), binom_b.get(), -2L * (n - a - b));
            mpz_divexact_ui(binom_b.get(), binom_b.get(), b + 1);
        }
        mpz_ui_pow_ui(pw.get(), 4 * ell, a);
        mpz_mul(acc.get(), acc.get(), pw.get());
        mpz_mul(acc.get(), acc.get(), binom_na.get());
        mpz_mul(term.get(), M.get(), fact.get());
        mpq_set_num(q[a].get(), acc.get());
        mpq_set_den(q[a].get(), term.get());
        mpq_canonicalize(q[a].get());
    }
    return cache.emplace(ell, std::move(q)).first->second;
}

struct PValue {
    double p;
    double moment;
};

PValue eval_p(double t, int ell) {
    if (ell == 0) return {1.0, 1.0};
    const auto& q = p_coeffs(ell);
    detail::Mpq tq, acc;
    mpq_set_d(tq.get(), t);
    mpq_set(acc.get(), q.back().get());
    for (int a = static_cast<int>(q.size()) - 2; a >= 0; --a) {
        mpq_mul(acc.get(), acc.get(), tq.get());
        mpq_add(acc.get(), acc.get(), q[a].get());
    }
    detail::Mp p(128), e(128);
    mpfr_set_q(p.get(), acc.get(), MPFR_RNDN);
    mpfr_set_d(e.get(), t, MPFR_RNDN);
    mpfr_mul_si(e.get(), e.get(), -2L * ell, MPFR_RNDN);
    mpfr_exp(e.get(), e.get(), MPFR_RNDN);
    mpfr_mul(e.get(), e.get(), p.get(), MPFR_RNDN);
    return {p.to_double(), e.to_double()};
}

int check_ell(int ell) {
    int a = std::abs(ell);
    if (a > kMaxMomentOrder)
        throw ValidationError("moment: |l| must be <= " + std::to_string(kMaxMomentOrder));
    return a;
}

// Integral of f(theta) w(theta) over [a, b]. On each side of a singular point
// s the integral runs in u with theta = s +- u^p (p = 2 at the gap edges,
// p = 3 at the cusp of t = 1).
template <class W>
double integrate(double t, double a, double b, W w) {
    using boost::math::quadrature::gauss_kronrod;
    if (a >= b) return 0.0;
    struct Region {
        double lo, hi, edge;
        int dir, power;
    };
    std::vector<Region> regions;
    if (is_sub(t)) {
        const double e = gap_edge(t);
        regions = {{-kPi, -e, -e, -1, 2}, {e, kPi, e, +1, 2}};
    } else if (is_crit(t)) {
        regions = {{-kPi, 0.0, 0.0, -1, 3}, {0.0, kPi, 0.0, +1, 3}};
    } else {
        regions = {{-kPi, kPi, -kPi, +1, 1}};
    }
    double total = 0.0;
    for (const Region& R : regions) {
        const double l = std::max(a, R.lo), r = std::min(b, R.hi);
        if (!(l < r)) continue;
        auto u_of = [&](double th) { return std::pow(std::fabs(th - R.edge), 1.0 / R.power); };
        double u0 = u_of(R.dir > 0 ? l : r), u1 = u_of(R.dir > 0 ? r : l);
        auto g = [&](double u) {
            double up = R.power == 1 ? u : (R.power == 2 ? u * u : u * u * u);
            double th = std::clamp(R.edge + R.dir * up, -kPi, kPi);
            double jac = R.power == 1 ? 1.0 : R.power * (R.power == 2 ? u : u * u);
            return density(t, th) * w(th) * jac;
        };
        double err = 0, l1 = 0;
        double value = gauss_kronrod<double, 31>::integrate(g, u0, u1, 15, 1e-12, &err, &l1);
        if (!(err <= std::max(1e-12, 1e-9 * l1))) {
            std::ostringstream msg;
            msg << "quadrature: no convergence on [" << l << ", " << r << "], achieved tolerance " << err;
            throw NumericalError(msg.str());
        }
        total += value;
    }
    return total;
}


}  // namespace

CircularLaw circular_law(double t) {
    check_t(t, "circular_law");
    CircularLaw law{t, {}, 1.0, std::nullopt};
    if (is_sub(t)) {
        law.atoms.push_back({0.0, 1.0 - t});
        law.ac_total = t;
        double e = gap_edge(t);
        law.support_gap = std::make_pair(-e, e);
    }
    return law;
}

double atom_weight(double t) {
    check_t(t, "atom_weight");
    return is_sub(t) ? 1.0 - t : 0.0;
}

MomentTable::MomentTable(double t, int lmax) : t_(t) {
    check_t(t, "MomentTable");
    if (lmax < 0 || lmax > kMaxMomentOrder)
        throw ValidationError("MomentTable: lmax must be in [0, " + std::to_string(kMaxMomentOrder) + "]");
    entries_.resize(lmax + 1);
    for (int l = 0; l <= lmax; ++l) {
        PValue v = eval_p(t, l);
        entries_[l] = {l, v.p, v.moment, std::fabs(v.moment) < 1e-50};
    }
}

double MomentTable::moment(int ell) const {
    int a = std::abs(ell);
    if (a > lmax()) throw ValidationError("MomentTable: order beyond the table");
    return entries_[a].moment;
}

double p_ell(double t, int ell) {
    check_t(t, "p_ell");
    return eval_p(t, check_ell(ell)).p;
}

double moment(double t, int ell) {
    check_t(t, "moment");
    return eval_p(t, check_ell(ell)).moment;
}

double density(double t, double theta) {
    check_t(t, "density");
    if (!(std::fabs(theta) <= kPi + 1e-12)) throw ValidationError("density: theta must lie in [-pi, pi]");
    theta = std::clamp(theta, -kPi, kPi);
    if (is_sub(t) && std::fabs(theta) <= gap_edge(t)) return 0.0;
    if (is_crit(t) && theta == 0.0) return kInf;
    cplx z = zeta(t, theta / 2).zeta;
    double f = -(1.0 / tan_stable(z)).imag() / (2 * kPi);
    return std::max(f, 0.0);
}

cplx psi(double t, cplx z) {
    check_t(t, "psi");
    if (!(std::abs(z) < 1.0)) throw ValidationError("psi: requires |z| < 1");
    return 0.5 / r_func(t, z) - 0.5;
}

SSigma s_sigma(double t, cplx z) {
    check_t(t, "s_sigma");
    if (z == cplx(-0.5)) throw ValidationError("s_sigma: z = -1/2 is a pole of S");
    if (z == cplx(-1.0)) throw ValidationError("s_sigma: z = -1 is a pole of Sigma");
    return {std::exp(t / (z + 0.5)), std::exp(2.0 * t * (1.0 - z) / (1.0 + z))};
}

double density_integral(double t, double a, double b) {
    check_t(t, "density_integral");
    if (!(a >= -kPi && b <= kPi)) throw ValidationError("density_integral: bounds must lie in [-pi, pi]");
    return integrate(t, a, b, [](double) { return 1.0; });
}

double density_cos_moment(double t, int ell) {
    check_t(t, "density_cos_moment");
    return 2.0 * integrate(t, 0.0, kPi, [ell](double th) { return std::cos(ell * th); });
}

double cdf(double t, double theta) {
    check_t(t, "cdf");
    if (!(std::fabs(theta) <= kPi)) throw ValidationError("cdf: theta must lie in [-pi, pi]");
    if (theta == -kPi) return 0.0;
    if (theta == kPi) return 1.0;
    if (theta < 0) return integrate(t, -kPi, theta, [](double) { return 1.0; });
    return 1.0 - integrate(t, theta, kPi, [](double) { return 1.0; });
}

double quantile(double t, double u) {
    check_t(t, "quantile");
    if (!(u > 0 && u < 1)) throw ValidationError("quantile: u must lie in (0, 1)");
    const double w = atom_weight(t);
    if (w > 0) {
        double below = (1.0 - w) / 2;
        if (u >= below && u <= below + w) return 0.0;
    }
    double lo = -kPi, hi = kPi;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        if (cdf(t, mid) < u)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

CdfTable::CdfTable(double t, int nodes) : t_(t) {
    check_t(t, "CdfTable");
    if (nodes < 8) throw ValidationError("CdfTable: need at least 8 nodes per piece");
    atom_ = atom_weight(t);
    if (is_sub(t)) {
        double e = gap_edge(t);
        pieces_.push_back({-e, -1, 2, 0, {}, {}, {}});
        pieces_.push_back({e, +1, 2, 0, {}, {}, {}});
    } else if (is_crit(t)) {
        pieces_.push_back({0.0, -1, 3, 0, {}, {}, {}});
        pieces_.push_back({0.0, +1, 3, 0, {}, {}, {}});
    } else {
        pieces_.push_back({-kPi, +1, 1, 0, {}, {}, {}});
    }
    using boost::math::quadrature::gauss_kronrod;
    for (auto& p : pieces_) {
        double span = p.power == 1 ? 2 * kPi : kPi - std::fabs(p.edge);
        double umax = std::pow(span, 1.0 / p.power);
        p.u.resize(nodes + 1);
        p.F.assign(nodes + 1, 0.0);
        p.dF.assign(nodes + 1, 0.0);
        auto g = [&](double u) {
            double d = density(t, theta_of(p, u));
            if (p.power == 1) return d;
            return d * p.power * std::pow(u, p.power - 1);
        };
        for (int i = 0; i <= nodes; ++i) p.u[i] = umax * i / nodes;
        std::vector<double> inc(nodes, 0.0);
        detail::parallel_for(nodes + 1, [&](std::size_t i) {
            p.dF[i] = (i == 0 && p.power == 3) ? 0.0 : g(p.u[i]);
            if (i < static_cast<std::size_t>(nodes))
                inc[i] = gauss_kronrod<double, 15>::integrate(g, p.u[i], p.u[i + 1], 0);
        });
        for (int i = 0; i < nodes; ++i) p.F[i + 1] = p.F[i] + inc[i];
    }
    // bases, in increasing theta
    if (pieces_.size() == 2) {
        double left = pieces_[0].F.back();
        pieces_[0].base = left;                 // cdf at the edge, approached from the left
        pieces_[1].base = left + atom_;
    }
}

double CdfTable::theta_of(const Piece& p, double u) const {
    double g = p.power == 1 ? u : (p.power == 2 ? u * u : u * u * u);
    return std::clamp(p.edge + p.dir * g, -kPi, kPi);
}

double CdfTable::eval_piece(const Piece& p, double u) const {
    const int n = static_cast<int>(p.u.size()) - 1;
    const double h = p.u[1] - p.u[0];
    int i = std::clamp(static_cast<int>(u / h), 0, n - 1);
    double s = (u - p.u[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p.F[i] + (s3 - 2 * s2 + s) * h * p.dF[i] + (-2 * s3 + 3 * s2) * p.F[i + 1] +
           (s3 - s2) * h * p.dF[i + 1];
}

double CdfTable::cdf(double theta) const {
    if (!(std::fabs(theta) <= kPi)) throw ValidationError("cdf: theta must lie in [-pi, pi]");
    if (pieces_.size() == 1) {
        const Piece& p = pieces_[0];
        return std::clamp(eval_piece(p, theta + kPi), 0.0, 1.0);
    }
    const Piece& a = pieces_[0];
    const Piece& b = pieces_[1];
    if (theta < a.edge || (theta == a.edge && a.power == 3)) {
        if (theta == a.edge) return a.base;
        double u = std::pow(a.edge - theta, 1.0 / a.power);
        return std::max(0.0, a.base - eval_piece(a, u));
    }
    if (theta < 0) return a.base;
    if (theta <= b.edge) return b.base;
    double u = std::pow(theta - b.edge, 1.0 / b.power);
    return std::min(1.0, b.base + eval_piece(b, u));
}

double CdfTable::quantile(double u) const {
    if (!(u > 0 && u < 1)) throw ValidationError("quantile: u must lie in (0, 1)");
    // locate the piece and the target value of F inside it
    const Piece* p = &pieces_[0];
    double target;
    if (pieces_.size() == 1) {
        target = u;
    } else {
        const Piece& a = pieces_[0];
        const Piece& b = pieces_[1];
        if (u < a.base) {
            target = a.base - u;
        } else if (u <= b.base) {
            return 0.0;   // atom, or the cusp at t = 1
        } else {
            p = &b;
            target = u - b.base;
        }
    }
    auto it = std::lower_bound(p->F.begin(), p->F.end(), target);
    int i = std::clamp(static_cast<int>(it - p->F.begin()) - 1, 0, static_cast<int>(p->F.size()) - 2);
    double lo = p->u[i], hi = p->u[i + 1];
    for (int k = 0; k < 60 && hi - lo > 1e-15; ++k) {
        double mid = 0.5 * (lo + hi);
        if (eval_piece(*p, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    double uu = 0.5 * (lo + hi);
    double theta = theta_of(*p, uu);
    return theta >= kPi ? -kPi : theta;
}

EmpiricalAngles sample(double t, int n, std::uint64_t seed) {
    check_t(t, "sample");
    if (n < 1) throw ValidationError("sample: n must be >= 1");
    CdfTable table(t);
    std::vector<double> draws(n);
    const std::uint64_t base = detail::splitmix64(seed);
    detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        draws[i] = table.quantile(detail::unit_from_bits(detail::splitmix64(base + i)));
    });
    return EmpiricalAngles::from_list(draws);
}

double density_fourier(const MomentTable& table, double theta, int L) {
    if (L < 1) throw ValidationError("density_fourier: L must be >= 1");
    if (L > table.lmax()) throw ValidationError("density_fourier: L exceeds the moment table");
    const double t = table.t();
    const bool sub = is_sub(t);
    double s = sub ? t / (2 * kPi) : 1.0 / (2 * kPi);
    for (int l = 1; l <= L; ++l) {
        double c = table.moment(l) - (sub ? 1.0 - t : 0.0);
        s += c * std::cos(l * theta) / kPi;
    }
    return s;
}

double density_fourier(double t, double theta, int L) {
    check_t(t, "density_fourier");
    if (L < 1 || L > kMaxMomentOrder)
        throw ValidationError("density_fourier: L must be in [1, " + std::to_string(kMaxMomentOrder) + "]");
    return density_fourier(MomentTable(t, L), theta, L);
}

}  // namespace circleflow
