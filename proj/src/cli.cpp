#include "circleflow/cli.hpp"

#include "circleflow/errors.hpp"
#include "circleflow/experiments.hpp"
#include "circleflow/polycore.hpp"
#include "circleflow/series.hpp"
#include "circleflow/unitary_poisson.hpp"
#include "circleflow/zetasolver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

namespace circleflow {

namespace {

using Json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json jnum(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

// A flat list of key/value pairs, written as `key,value` CSV or a JSON object.
class Report {
public:
    void add(const std::string& key, double v) { items_.emplace_back(key, jnum(v)); }
    void add(const std::string& key, long long v) { items_.emplace_back(key, Json(v)); }
    void add(const std::string& key, int v) { items_.emplace_back(key, Json(v)); }
    void add(const std::string& key, std::uint64_t v) { items_.emplace_back(key, Json(v)); }
    void add(const std::string& key, bool v) { items_.emplace_back(key, Json(v)); }
    void add(const std::string& key, const std::string& v) { items_.emplace_back(key, Json(v)); }

    std::string render(Format f) const {
        if (f == Format::json) {
            Json j = Json::object();
            for (const auto& [k, v] : items_) j[k] = v;
            return j.dump() + "\n";
        }
        std::string s = "key,value\n";
        for (const auto& [k, v] : items_) {
            s += k + ",";
            if (v.is_null())
                s += "nan";
            else if (v.is_number_float())
                s += num(v.get<double>());
            else if (v.is_string())
                s += v.get<std::string>();
            else
                s += v.dump();
            s += "\n";
        }
        return s;
    }

private:
    std::vector<std::pair<std::string, Json>> items_;
};

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        out.flush();
        return;
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << text;
        f.flush();
        if (!f) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot move output into place at " + path);
    }
}

std::string roots_table(const EmpiricalAngles& roots, Format f, int n, int k) {
    if (f == Format::json) {
        Json j = Json::object();
        j["n"] = n;
        j["k"] = k;
        Json a = Json::array(), m = Json::array();
        for (const auto& r : roots.angles()) {
            a.push_back(r.angle);
            m.push_back(r.multiplicity);
        }
        j["angle"] = a;
        j["multiplicity"] = m;
        return j.dump() + "\n";
    }
    std::string s = "angle,multiplicity\n";
    for (const auto& r : roots.angles()) s += num(r.angle) + "," + std::to_string(r.multiplicity) + "\n";
    return s;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

void check_threads_env() {
    const char* env = std::getenv("CIRCLEFLOW_THREADS");
    if (!env) return;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v >= 1, "CIRCLEFLOW_THREADS must be a positive integer");
}

struct Extra {
    double theta_re = 0, theta_im = 0;
    double alpha = 0;
    std::string input;
    double x = 1.0;
    double h = 1e-3;
    std::string angles_out;
    std::string roots_out;
    bool tol_given = false;
};

// ------------------------------------------------------------------ commands

int cmd_density(const RunConfig& c, std::ostream& out) {
    require(c.t > 0 && std::isfinite(c.t), "density: --t must be positive");
    require(c.grid >= 2 && c.grid <= 10000000, "density: --grid must be in [2, 1e7]");
    std::vector<double> theta(c.grid), dens(c.grid);
    for (int i = 0; i < c.grid; ++i) {
        theta[i] = -kPi + 2 * kPi * i / c.grid;
        dens[i] = density(c.t, theta[i]);
    }
    const auto law = circular_law(c.t);
    std::string text;
    if (c.format == Format::json) {
        Json j = Json::object();
        j["t"] = c.t;
        Json th = Json::array(), d = Json::array(), at = Json::array();
        for (int i = 0; i < c.grid; ++i) {
            th.push_back(theta[i]);
            d.push_back(jnum(dens[i]));
        }
        for (const auto& a : law.atoms) at.push_back(Json{{"angle", a.angle}, {"weight", a.weight}});
        j["theta"] = th;
        j["density"] = d;
        j["atoms"] = at;
        text = j.dump() + "\n";
    } else {
        text = "theta,density\n";
        for (int i = 0; i < c.grid; ++i) text += num(theta[i]) + "," + num(dens[i]) + "\n";
        for (const auto& a : law.atoms) text += "# atom angle=" + num(a.angle) + " weight=" + num(a.weight) + "\n";
    }
    write_output(c.out, text, out);
    return kExitOk;
}

int cmd_moments(const RunConfig& c, std::ostream& out) {
    require(c.t > 0 && std::isfinite(c.t), "moments: --t must be positive");
    require(c.L >= 0 && c.L <= kMaxMomentOrder, "moments: --L must be in [0, " + std::to_string(kMaxMomentOrder) + "]");
    std::vector<double> p(c.L + 1, 1.0), m(c.L + 1, 1.0);
    for (int l = 1; l <= c.L; ++l) {
        p[l] = p_ell(c.t, l);
        m[l] = moment(c.t, l);
    }
    std::string text;
    if (c.format == Format::json) {
        Json j = Json::object();
        j["t"] = c.t;
        Json e = Json::array(), pj = Json::array(), mj = Json::array();
        for (int l = 0; l <= c.L; ++l) {
            e.push_back(l);
            pj.push_back(jnum(p[l]));
            mj.push_back(jnum(m[l]));
        }
        j["ell"] = e;
        j["p_ell"] = pj;
        j["moment"] = mj;
        text = j.dump() + "\n";
    } else {
        text = "ell,p_ell,moment\n";
        for (int l = 0; l <= c.L; ++l) text += std::to_string(l) + "," + num(p[l]) + "," + num(m[l]) + "\n";
    }
    write_output(c.out, text, out);
    return kExitOk;
}

int cmd_laguerre_roots(const RunConfig& c, std::ostream& out) {
    require(c.n >= 1, "laguerre_roots: --n must be >= 1");
    require(c.k >= 0, "laguerre_roots: --k must be >= 0");
    require(c.tol > 0 && c.tol < 1e-3, "laguerre_roots: --tol must be in (0, 1e-3)");
    RootSearchOptions opt;
    opt.tol = c.tol;
    auto roots = laguerre_roots(c.n, c.k, opt);
    write_output(c.out, roots_table(roots, c.format, c.n, c.k), out);
    return kExitOk;
}

int cmd_zeta(const RunConfig& c, const Extra& e, std::ostream& out) {
    require(c.t > 0 && std::isfinite(c.t), "zeta: --t must be positive");
    require(std::isfinite(e.theta_re) && std::isfinite(e.theta_im) && e.theta_im >= 0,
            "zeta: theta must be finite with --theta-im >= 0");
    auto z = zeta(c.t, cplx(e.theta_re, e.theta_im));
    Report r;
    r.add("t", c.t);
    r.add("theta_re", e.theta_re);
    r.add("theta_im", e.theta_im);
    r.add("zeta_re", z.zeta.real());
    r.add("zeta_im", z.zeta.imag());
    r.add("residual", z.residual);
    r.add("iterations", z.iterations);
    r.add("method", to_string(z.method));
    write_output(c.out, r.render(c.format), out);
    return kExitOk;
}

EmpiricalAngles read_angles(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "flow: cannot read --input " + path);
    std::vector<double> a;
    std::string tok;
    while (f >> tok) {
        double v = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        require(res.ec == std::errc() && res.ptr == tok.data() + tok.size() && std::isfinite(v),
                "flow: bad angle '" + tok + "' in " + path);
        a.push_back(v);
    }
    require(!a.empty(), "flow: --input holds no angles");
    return EmpiricalAngles::from_list(a);
}

int cmd_flow(const RunConfig& c, const Extra& e, std::ostream& out) {
    require(c.t >= 0 && std::isfinite(c.t), "flow: --t must be >= 0");
    require(c.L >= 1 && c.L <= 64, "flow: --L must be in [1, 64]");
    require(std::isfinite(e.alpha), "flow: --alpha must be finite");
    EmpiricalAngles input;
    if (!e.input.empty()) {
        input = read_angles(e.input);
        require(c.n == 0 || c.n == input.total(), "flow: --n does not match the number of input angles");
    } else {
        require(c.n >= 2, "flow: --n (the number 2d of zeros) must be given");
        input = EmpiricalAngles({{e.alpha, c.n}});
    }
    require(input.total() % 2 == 0 && input.total() <= 128, "flow: the number of zeros must be even and <= 128");
    auto rep = derivative_flow(input, c.t, c.L);
    Report r;
    r.add("n", rep.n);
    r.add("k", rep.k);
    r.add("t", rep.t);
    r.add("kolmogorov", rep.kolmogorov);
    r.add("min_positive_angle", rep.min_positive_angle);
    r.add("passthrough", rep.passthrough);
    r.add("degraded", rep.degraded);
    for (std::size_t l = 0; l < rep.moment_errors.size(); ++l)
        r.add("moment_error_" + std::to_string(l + 1), rep.moment_errors[l]);
    if (!e.roots_out.empty()) write_output(e.roots_out, roots_table(rep.roots, Format::csv, rep.n, rep.k), out);
    write_output(c.out, r.render(c.format), out);
    return kExitOk;
}

int cmd_reflections(const RunConfig& c, const Extra& e, std::ostream& out) {
    require(c.n >= 1 && c.n <= 64, "reflections: --n must be in [1, 64]");
    require(c.k >= 1, "reflections: --k must be >= 1");
    require(c.samples >= 1 && c.samples <= 1000000, "reflections: --samples must be in [1, 1e6]");
    const bool keep = !e.angles_out.empty();
    auto run = reflections_mc(c.n, c.k, c.samples, c.seed, keep);
    auto target = expected_charpoly(c.n, c.k);
    Report r;
    r.add("n", run.n);
    r.add("k", run.k);
    r.add("samples", run.samples);
    r.add("seed", run.seed);
    r.add("skipped", run.skipped);
    r.add("valid", run.valid);
    r.add("unit_error_max", run.unit_error_max);
    r.add("det_error_max", run.det_error_max);
    for (int j = 0; j <= c.n; ++j) {
        const std::string s = std::to_string(j);
        r.add("charpoly_re_" + s, run.estimated_charpoly[j].real());
        r.add("charpoly_im_" + s, run.estimated_charpoly[j].imag());
        r.add("std_error_" + s, run.std_errors[j]);
        r.add("target_" + s, target[j].real());
    }
    if (keep) {
        auto pooled = EmpiricalAngles::from_list(run.eigen_angles);
        write_output(e.angles_out, roots_table(pooled, Format::csv, c.n, c.k), out);
    }
    write_output(c.out, r.render(c.format), out);
    if (!run.valid) throw NumericalError("reflections: more than 1% of samples were skipped");
    return kExitOk;
}

int cmd_pde_check(const RunConfig& c, const Extra& e, std::ostream& out) {
    require(c.t > 1 && std::isfinite(c.t), "pde_check: --t must be > 1");
    require(c.L >= 2 && c.L <= 200, "pde_check: --L must be in [2, 200]");
    require(std::isfinite(e.x), "pde_check: --x must be finite");
    require(e.h > 0 && e.h < c.t, "pde_check: --step must lie in (0, t)");
    const std::vector<cplx> steady(c.L, 0.0);
    const std::vector<cplx> delta(c.L, 1.0);
    Report r;
    r.add("t", c.t);
    r.add("x", e.x);
    r.add("L", c.L);
    r.add("h", e.h);
    r.add("steady_state_residual", pde_residual(steady, c.t, e.x, e.h, c.L));
    r.add("density", pde_density(delta, c.t, e.x, c.L));
    r.add("residual", pde_residual(delta, c.t, e.x, e.h, c.L));
    r.add("residual_half_L", pde_residual(delta, c.t, e.x, e.h, c.L / 2));
    write_output(c.out, r.render(c.format), out);
    return kExitOk;
}

int cmd_convergence(const RunConfig& c, const Extra& e, std::ostream& out) {
    require(c.n >= 1, "convergence: --n must be >= 1");
    require(c.t >= 0 && std::isfinite(c.t), "convergence: --t must be >= 0");
    require(c.L >= 1 && c.L <= kMaxMomentOrder, "convergence: --L must be in [1, 256]");
    const double target = e.tol_given ? c.tol : 0.05;
    require(target > 0 && target <= 1, "convergence: --tol must lie in (0, 1]");
    auto rep = laguerre_convergence(c.n, c.t, c.L);
    const bool pass = rep.kolmogorov <= target;
    Report r;
    r.add("n", rep.n);
    r.add("k", rep.k);
    r.add("t", rep.t);
    r.add("kolmogorov", rep.kolmogorov);
    r.add("target", target);
    r.add("pass", pass);
    r.add("passthrough", rep.passthrough);
    r.add("min_positive_angle", rep.min_positive_angle);
    for (std::size_t l = 0; l < rep.moment_errors.size(); ++l)
        r.add("moment_error_" + std::to_string(l + 1), rep.moment_errors[l]);
    if (!e.roots_out.empty()) write_output(e.roots_out, roots_table(rep.roots, Format::csv, rep.n, rep.k), out);
    write_output(c.out, r.render(c.format), out);
    if (!pass) throw NumericalError("convergence: kolmogorov distance " + num(rep.kolmogorov) + " above target " + num(target));
    return kExitOk;
}

void report_error(std::ostream& err, const char* kind, const std::string& msg) {
    std::string one = msg;
    for (char& ch : one)
        if (ch == '\n' || ch == '\r') ch = ' ';
    while (!one.empty() && one.back() == ' ') one.pop_back();
    err << Json{{"error", kind}, {"message", one}}.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    Extra e;
    CLI::App app{"Free unitary Poisson law and circular Laguerre polynomials", "circleflow"};
    app.require_subcommand(1);

    const std::map<std::string, Format> formats{{"csv", Format::csv}, {"json", Format::json}};
    auto common = [&](CLI::App* s) {
        s->add_option("--out", c.out, "Output file (default: standard output)");
        s->add_option("--format", c.format, "csv or json")->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    };

    auto* density_cmd = app.add_subcommand("density", "Density of Pi_t on a grid, plus the atom");
    density_cmd->add_option("--t", c.t)->required();
    density_cmd->add_option("--grid", c.grid, "Number of grid points (default 721)");
    common(density_cmd);

    auto* moments_cmd = app.add_subcommand("moments", "Table of p_l(t) and the moments of Pi_t");
    int moments_L = 8;
    moments_cmd->add_option("--t", c.t)->required();
    moments_cmd->add_option("--L", moments_L, "Largest l (default 8)");
    common(moments_cmd);

    auto* roots_cmd = app.add_subcommand("laguerre_roots", "Zeros of L_{n,k} as angles with multiplicities");
    roots_cmd->add_option("--n", c.n)->required();
    roots_cmd->add_option("--k", c.k)->required();
    roots_cmd->add_option("--tol", c.tol, "Bisection tolerance (default 1e-10)");
    common(roots_cmd);

    auto* zeta_cmd = app.add_subcommand("zeta", "Principal branch zeta_t(theta)");
    zeta_cmd->add_option("--t", c.t)->required();
    zeta_cmd->add_option("--theta-re,--theta_re", e.theta_re);
    zeta_cmd->add_option("--theta-im,--theta_im", e.theta_im);
    common(zeta_cmd);

    auto* flow_cmd = app.add_subcommand("flow", "Zeros under the derivative flow against nu boxtimes Pi_t");
    int flow_L = 3;
    flow_cmd->add_option("--t", c.t)->required();
    flow_cmd->add_option("--n", c.n, "Number 2d of zeros when no --input is given");
    flow_cmd->add_option("--alpha", e.alpha, "Position of the initial zeros (default 0)");
    flow_cmd->add_option("--input", e.input, "File of initial zero angles");
    flow_cmd->add_option("--L", flow_L, "Number of moments compared (default 3)");
    flow_cmd->add_option("--roots-out", e.roots_out, "Also write the zeros as angle,multiplicity");
    common(flow_cmd);

    auto* refl_cmd = app.add_subcommand("reflections", "Monte Carlo products of random reflections");
    refl_cmd->add_option("--n", c.n)->required();
    refl_cmd->add_option("--k", c.k)->required();
    c.samples = 1000;
    refl_cmd->add_option("--samples", c.samples, "Number of samples (default 1000)");
    refl_cmd->add_option("--seed", c.seed, "Master seed (default 42)");
    refl_cmd->add_option("--angles-out", e.angles_out, "Also write pooled eigenangles as angle,multiplicity");
    common(refl_cmd);

    auto* pde_cmd = app.add_subcommand("pde_check", "Residual of the density PDE for nu = delta_1 and the steady state");
    int pde_L = 80;
    double pde_t = 2.0;
    pde_cmd->add_option("--t", pde_t, "Time, > 1 (default 2)");
    pde_cmd->add_option("--L", pde_L, "Series order (default 80)");
    pde_cmd->add_option("--x", e.x, "Angle (default 1)");
    pde_cmd->add_option("--step", e.h, "Time step of the central difference (default 1e-3)");
    common(pde_cmd);

    auto* conv_cmd = app.add_subcommand("convergence", "Laguerre zeros against Pi_t: moments and Kolmogorov distance");
    int conv_L = 4;
    conv_cmd->add_option("--n", c.n)->required();
    conv_cmd->add_option("--t", c.t)->required();
    conv_cmd->add_option("--L", conv_L, "Number of moments compared (default 4)");
    auto* tol_opt = conv_cmd->add_option("--tol", c.tol, "Kolmogorov target (default 0.05)");
    conv_cmd->add_option("--roots-out", e.roots_out, "Also write the zeros as angle,multiplicity");
    common(conv_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& ex) {
        report_error(err, "validation", ex.what());
        return kExitValidation;
    }

    try {
        check_threads_env();
        if (density_cmd->parsed()) {
            c.command = Command::density;
            return cmd_density(c, out);
        }
        if (moments_cmd->parsed()) {
            c.command = Command::moments;
            c.L = moments_L;
            return cmd_moments(c, out);
        }
        if (roots_cmd->parsed()) {
            c.command = Command::laguerre_roots;
            return cmd_laguerre_roots(c, out);
        }
        if (zeta_cmd->parsed()) {
            c.command = Command::zeta;
            return cmd_zeta(c, e, out);
        }
        if (flow_cmd->parsed()) {
            c.command = Command::flow;
            c.L = flow_L;
            return cmd_flow(c, e, out);
        }
        if (refl_cmd->parsed()) {
            c.command = Command::reflections;
            return cmd_reflections(c, e, out);
        }
        if (pde_cmd->parsed()) {
            c.command = Command::pde_check;
            c.t = pde_t;
            c.L = pde_L;
            return cmd_pde_check(c, e, out);
        }
        if (conv_cmd->parsed()) {
            c.command = Command::convergence;
            c.L = conv_L;
            e.tol_given = tol_opt->count() > 0;
            return cmd_convergence(c, e, out);
        }
    } catch (const ValidationError& ex) {
        report_error(err, "validation", ex.what());
        return kExitValidation;
    } catch (const NumericalError& ex) {
        report_error(err, "numerical", ex.what());
        return kExitNumerical;
    } catch (const std::exception& ex) {
        report_error(err, "failure", ex.what());
        return kExitNumerical;
    }
    report_error(err, "validation", "no command given");
    return kExitValidation;
}

}  // namespace circleflow
