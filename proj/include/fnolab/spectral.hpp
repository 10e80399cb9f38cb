#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fnolab/grid.hpp"
#include "fnolab/precision.hpp"

namespace fnolab {

using cdouble = std::complex<double>;

// Signed interpretation of a stored frequency index t in {0..m-1}:
// t for t <= m/2, otherwise t - m.
inline int signed_freq(int t, int m) { return t <= m / 2 ? t : t - m; }

double freq_norm(std::span<const int> omega);

// phi_omega(x) = exp(+2*pi*i*<omega, x>)
cdouble basis_eval(std::span<const int> omega, std::span<const double> x);

// Complex coefficients over the full index set {0..m-1}^d (row-major flat
// layout shared with grid anchors), interpreted as signed frequencies.
struct spectrum {
  fnolab::grid grid;
  std::vector<cdouble> coeffs;
  precision_system precision_used;

  void omega_at(int64_t s, std::span<int> omega) const;  // signed components
  int64_t flat_of(std::span<const int> omega) const;     // accepts signed or raw
};

struct mode_mask {
  fnolab::grid grid;
  std::vector<char> keep;  // per flat index

  static mode_mask all(const fnolab::grid& g);
  // keep { omega : max_k |signed omega_k| < cutoff }; 0-frequency always kept
  static mode_mask cutoff(const fnolab::grid& g, int cutoff);
  int64_t kept_count() const;
};

// Raised when a quantized transform or contraction produces a non-finite
// intermediate; `index` is the offending flat frequency (dft) or anchor (idft).
class transform_overflow : public std::runtime_error {
 public:
  transform_overflow(const std::string& what, int64_t index)
      : std::runtime_error(what), index_(index) {}
  int64_t index() const { return index_; }

 private:
  int64_t index_;
};

// Forward transform with the paper's +i sign convention and 1/n inside the
// sum: coeffs(omega) = sum_j q(v_j) q(phi_omega(xi_j)) / n, every product and
// running sum re-quantized (round after operation). Exact systems reduce to
// the plain normalized DFT.
spectrum dft(const scalar_field& field, const precision_system& sys);
spectrum dft_serial(const scalar_field& field, const precision_system& sys);
cdouble dft_coeff(const scalar_field& field, const precision_system& sys,
                  std::span<const int> omega);

// Inverse transform, no normalization factor: values(xi_j) =
// sum_omega coeffs(omega) * conj(phi_omega(xi_j)).
std::vector<cdouble> idft_complex(const spectrum& spec, const precision_system& sys);
scalar_field idft(const spectrum& spec, const precision_system& sys);
std::vector<cdouble> idft_complex_serial(const spectrum& spec, const precision_system& sys);

spectrum truncate(const spectrum& spec, const mode_mask& mask);

// Radix-2 fast path, exact precision only, m a power of two. Agrees with
// dft(field, exact) to 1e-10 relative.
spectrum fft_fast(const scalar_field& field);

// CSV layout: header omega_1,...,omega_d,re,im then one row per coefficient.
void spectrum_to_csv(std::ostream& out, const spectrum& spec);

}  // namespace fnolab
