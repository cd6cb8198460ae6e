#pragma once

// Command-line front end. Every command writes CSV or flat JSON to --out
// (atomically) or to standard output.

#include <cstdint>
#include <iosfwd>
#include <string>

namespace circleflow {

enum class Command { density, moments, laguerre_roots, zeta, flow, reflections, pde_check, convergence };
enum class Format { csv, json };

struct RunConfig {
    Command command = Command::density;
    double t = 0;
    int n = 0;
    int k = 0;
    int L = 0;
    int grid = 721;
    int samples = 0;
    std::uint64_t seed = 42;
    double tol = 1e-10;
    std::string out;   // empty: standard output
    Format format = Format::csv;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Parses argv, runs the command and returns the process exit code. Errors are
// reported on `err` as one JSON line {"error": kind, "message": text}.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace circleflow
