#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fnolab/grid.hpp"
#include "fnolab/precision.hpp"
#include "fnolab/spectral.hpp"

namespace fnolab {

// Bound constants realized in the proofs: the per-part discretization bound
// sqrt(d)(M|w|+L)n^(-1/d) doubled across real/imag parts (c2), and the
// precision bound c*eps*M with c = 4.
struct bound_constants {
  double c1 = 1.0;
  double c2 = 2.0;
  double c = 4.0;
};

// |integral of f*phi_omega - anchor Riemann sum|, complex modulus. The
// continuous integral is analytic for product/constant/tone families and uses
// Richardson-extrapolated reference quadrature for custom functions.
double disc_error(const test_function& f, const grid& g, std::span<const int> omega);

// Modulus of (exact discrete sum) - (sum with both factors quantized). Only
// the two factors per term are quantized, matching the Prec definition.
double prec_error(const test_function& f, const grid& g, const precision_system& sys,
                  std::span<const int> omega);

double disc_upper_bound(double M, double L, int d, int64_t n, double omega_norm,
                        const bound_constants& consts = {});

// Product-witness sine-part gap |(-1/(2pi))^d - (-cot(pi/m)/(2m))^d|; falls
// back to the directly computed gap at m = 1.
double disc_lower_witness(int d, int m);
double disc_lower_witness_direct(int d, int m);

double prec_upper_bound(double M, const precision_system& sys,
                        const bound_constants& consts = {});

// Tie point between two adjacent representable values in (M/2, M); the
// constant-function witness realizing the Thm A.4 lower bound.
double worst_midpoint(const precision_system& sys, double M);
// |y - q(y) q(1)|, the precision error of the constant witness at omega = 0.
double constant_witness_prec_error(const precision_system& sys, double y);

// (lower witness gap, upper bound) for the omega-free Riemann-sum theorem:
// upper = L sqrt(d) n^(-1/d), lower = |2^-d - direct Product anchor sum|.
std::pair<double, double> general_disc_bounds(double M, double L, int d, int64_t n);

// |integral of f - anchor Riemann sum of f| (no basis factor).
double general_gap(const test_function& f, const grid& g);

// disc_error of the aliasing witness sin(2 pi (m+omega) x) at frequency omega.
double aliasing_demo(double M, int omega, const grid& g);

struct error_report {
  int d = 0;
  int m = 0;
  int64_t n = 0;
  int omega = 0;
  double M = 0, L = 0;
  std::string sys;
  double disc_err = 0, disc_upper = 0, disc_lower_witness = 0;
  double prec_err = 0, prec_upper = 0, prec_lower_witness = 0;
  bool disc_violation = false;
  bool prec_violation = false;
};

struct sweep_config {
  std::vector<int> dims{1};
  std::vector<int> ms{4};
  std::vector<int> omegas{1};
  std::vector<std::string> fns{"product"};   // product | const[:y] | multitone | alias
  std::vector<std::string> systems{"exact"};
  double alias_amplitude = 1.0;
  int max_tones = 5;
  uint64_t seed = 1;
  int workers = 0;  // 0 = library default
  bound_constants consts;
};

test_function resolve_function_token(const std::string& token, uint64_t seed, int max_tones,
                                     double alias_amplitude, int alias_freq_offset = 0);

// Row order: fns (outer), then sys, d, m, omega (inner); deterministic and
// independent of worker count.
std::vector<error_report> bounds_sweep(const sweep_config& config);

inline constexpr const char* error_report_header =
    "d,m,n,omega,M,L,sys,disc_err,disc_upper,disc_lower_witness,prec_err,prec_upper,"
    "prec_lower_witness";

void write_error_report_csv(std::ostream& out, std::span<const error_report> rows);
void write_violations_csv(std::ostream& out, std::span<const error_report> rows);

}  // namespace fnolab
