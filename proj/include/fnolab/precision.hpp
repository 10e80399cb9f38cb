#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace fnolab {

// Finite-precision number systems used throughout the lab.
//
//   exact        identity on all finite reals
//   geometric    {0} u {+/- a0*(1+eps)^i : 0 <= i <= T}, nearest-point rounding
//   emu_half     IEEE binary16, round-to-nearest-even, overflow -> +/-inf
//   emu_fp8_clip E5M2, round-to-nearest-even, out-of-range clipped to +/-57344
enum class precision_kind { exact, geometric, emu_half, emu_fp8_clip };

class precision_system {
 public:
  precision_system() = default;

  static precision_system exact();
  static precision_system geometric(double a0, double eps, int levels);
  static precision_system half();
  static precision_system fp8_clip();

  // Token grammar: "exact" | "geom:a0,eps,T" | "half" | "fp8clip"
  static precision_system from_token(const std::string& token);
  std::string token() const;

  precision_kind kind() const { return kind_; }
  bool is_exact() const { return kind_ == precision_kind::exact; }
  double a0() const { return a0_; }
  double eps() const { return eps_; }
  int levels() const { return levels_; }

  // Nearest representable value. Ties break toward the value of smaller
  // magnitude. Throws std::invalid_argument on non-finite input. emu_half
  // may return +/-inf (overflow); emu_fp8_clip clips instead.
  double quantize(double x) const;
  std::complex<double> quantize(std::complex<double> z) const;

  // Worst-case relative rounding error on the interior of the range:
  // eps/2 (geometric), 2^-11 (half), 2^-3 (fp8). Throws for exact.
  double relative_epsilon() const;

  // Positive representable values in increasing order (geometric only).
  const std::vector<double>& positive_values() const;

  bool operator==(const precision_system& other) const;

 private:
  precision_kind kind_ = precision_kind::exact;
  double a0_ = 0.0;
  double eps_ = 0.0;
  int levels_ = 0;
  std::vector<double> grid_;  // geometric positive values, ascending
};

// Accumulates quantization error observations. Single-owner; merge to combine.
struct quantize_stats {
  long long count = 0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  long long overflow_count = 0;

  void record(double x, double qx);
  void merge(const quantize_stats& other);
};

// Round-to-nearest-even conversions used by the emulated formats. Exposed for
// the CLI and benchmarks; tests check them against independent references.
double round_to_half(double x);      // overflow -> +/-inf
double round_to_fp8_e5m2(double x);  // overflow -> clip to +/-57344

inline constexpr double half_max = 65504.0;
inline constexpr double fp8_e5m2_max = 57344.0;

}  // namespace fnolab
