#include "fnolab/precision.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "fnolab/util.hpp"

namespace fnolab {

namespace {

// Rounds |x| onto the grid of a binary minifloat with `mant_bits` fraction
// bits and minimum normal exponent `min_exp`. Subnormals share the quantum of
// the smallest normal binade. Ties go to even multiples, matching IEEE RNE.
double round_to_minifloat(double x, int mant_bits, int min_exp, double max_finite,
                          bool clip_overflow) {
  if (x == 0.0) return x;  // preserves signed zero
  const double a = std::fabs(x);
  int e = std::ilogb(a);
  if (e < min_exp) e = min_exp;
  const double quantum = std::ldexp(1.0, e - mant_bits);
  // a/quantum is exact (power-of-two scaling); nearbyint under the default
  // rounding mode gives round-half-to-even.
  double r = std::nearbyint(a / quantum) * quantum;
  if (r > max_finite) {
    r = clip_overflow ? max_finite : std::numeric_limits<double>::infinity();
  }
  return std::copysign(r, x);
}

}  // namespace

double round_to_half(double x) { return round_to_minifloat(x, 10, -14, half_max, false); }

double round_to_fp8_e5m2(double x) {
  return round_to_minifloat(x, 2, -14, fp8_e5m2_max, true);
}

precision_system precision_system::exact() { return precision_system{}; }

precision_system precision_system::geometric(double a0, double eps, int levels) {
  if (!(a0 > 0.0) || !(eps > 0.0) || levels < 0)
    throw std::invalid_argument("geometric system requires a0 > 0, eps > 0, T >= 0");
  precision_system s;
  s.kind_ = precision_kind::geometric;
  s.a0_ = a0;
  s.eps_ = eps;
  s.levels_ = levels;
  s.grid_.reserve(size_t(levels) + 1);
  double v = a0;
  for (int i = 0; i <= levels; ++i) {
    s.grid_.push_back(v);
    v *= 1.0 + eps;
  }
  if (!std::isfinite(s.grid_.back()))
    throw std::invalid_argument("geometric system overflows double range");
  return s;
}

precision_system precision_system::half() {
  precision_system s;
  s.kind_ = precision_kind::emu_half;
  return s;
}

precision_system precision_system::fp8_clip() {
  precision_system s;
  s.kind_ = precision_kind::emu_fp8_clip;
  return s;
}

precision_system precision_system::from_token(const std::string& token) {
  if (token == "exact") return exact();
  if (token == "half") return half();
  if (token == "fp8clip") return fp8_clip();
  if (token.rfind("geom:", 0) == 0) {
    auto parts = split(token.substr(5), ',');
    if (parts.size() != 3)
      throw std::invalid_argument("geometric token needs geom:a0,eps,T: " + token);
    return geometric(std::stod(parts[0]), std::stod(parts[1]), std::stoi(parts[2]));
  }
  throw std::invalid_argument("unknown precision token: " + token);
}

std::string precision_system::token() const {
  switch (kind_) {
    case precision_kind::exact:
      return "exact";
    case precision_kind::emu_half:
      return "half";
    case precision_kind::emu_fp8_clip:
      return "fp8clip";
    case precision_kind::geometric: {
      char buf[96];
      std::snprintf(buf, sizeof buf, "geom:%s,%s,%d", fmt_double(a0_).c_str(),
                    fmt_double(eps_).c_str(), levels_);
      return buf;
    }
  }
  return "exact";
}

double precision_system::quantize(double x) const {
  if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite input");
  switch (kind_) {
    case precision_kind::exact:
      return x;
    case precision_kind::emu_half:
      return round_to_half(x);
    case precision_kind::emu_fp8_clip:
      return round_to_fp8_e5m2(x);
    case precision_kind::geometric:
      break;
  }
  if (x == 0.0) return 0.0;
  const double a = std::fabs(x);
  // Nearest of {0} u grid_; ties toward the smaller magnitude.
  auto hi = std::lower_bound(grid_.begin(), grid_.end(), a);
  double lo_v = (hi == grid_.begin()) ? 0.0 : *(hi - 1);
  double best;
  if (hi == grid_.end()) {
    best = grid_.back();
  } else {
    const double d_lo = a - lo_v;
    const double d_hi = *hi - a;
    best = (d_lo <= d_hi) ? lo_v : *hi;
  }
  return std::copysign(best, x);
}

std::complex<double> precision_system::quantize(std::complex<double> z) const {
  return {quantize(z.real()), quantize(z.imag())};
}

double precision_system::relative_epsilon() const {
  switch (kind_) {
    case precision_kind::exact:
      throw std::domain_error("no finite epsilon");
    case precision_kind::geometric:
      return eps_ / 2.0;  // midpoint rounding between consecutive grid values
    case precision_kind::emu_half:
      return std::ldexp(1.0, -11);
    case precision_kind::emu_fp8_clip:
      return std::ldexp(1.0, -3);
  }
  throw std::domain_error("no finite epsilon");
}

const std::vector<double>& precision_system::positive_values() const {
  if (kind_ != precision_kind::geometric)
    throw std::domain_error("positive_values: geometric systems only");
  return grid_;
}

bool precision_system::operator==(const precision_system& other) const {
  return kind_ == other.kind_ && a0_ == other.a0_ && eps_ == other.eps_ &&
         levels_ == other.levels_;
}

void quantize_stats::record(double x, double qx) {
  ++count;
  if (std::isinf(qx)) {
    ++overflow_count;
    return;
  }
  const double err = std::fabs(x - qx);
  max_abs_err = std::max(max_abs_err, err);
  if (x != 0.0) max_rel_err = std::max(max_rel_err, err / std::fabs(x));
}

void quantize_stats::merge(const quantize_stats& other) {
  count += other.count;
  max_abs_err = std::max(max_abs_err, other.max_abs_err);
  max_rel_err = std::max(max_rel_err, other.max_rel_err);
  overflow_count += other.overflow_count;
}

}  // namespace fnolab
