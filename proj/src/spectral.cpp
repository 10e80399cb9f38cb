#include "fnolab/spectral.hpp"

#include <cmath>
#include <ostream>

#include "fnolab/util.hpp"

namespace fnolab {

double freq_norm(std::span<const int> omega) {
  double s = 0.0;
  for (int w : omega) s += double(w) * double(w);
  return std::sqrt(s);
}

cdouble basis_eval(std::span<const int> omega, std::span<const double> x) {
  if (omega.size() != x.size())
    throw std::invalid_argument("basis_eval: dimension mismatch");
  double t = 0.0;
  for (size_t k = 0; k < x.size(); ++k) t += double(omega[k]) * x[k];
  const double ang = 2.0 * M_PI * t;
  return {std::cos(ang), std::sin(ang)};
}

void spectrum::omega_at(int64_t s, std::span<int> omega) const {
  const int m = grid.subdivisions;
  for (int k = grid.dim - 1; k >= 0; --k) {
    omega[size_t(k)] = signed_freq(int(s % m), m);
    s /= m;
  }
}

int64_t spectrum::flat_of(std::span<const int> omega) const {
  const int m = grid.subdivisions;
  int64_t s = 0;
  for (int k = 0; k < grid.dim; ++k) {
    int t = ((omega[size_t(k)] % m) + m) % m;
    s = s * m + t;
  }
  return s;
}

mode_mask mode_mask::all(const fnolab::grid& g) {
  mode_mask mask;
  mask.grid = g;
  mask.keep.assign(size_t(g.cells), 1);
  return mask;
}

mode_mask mode_mask::cutoff(const fnolab::grid& g, int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("mode_mask: cutoff must be >= 1");
  mode_mask mask;
  mask.grid = g;
  mask.keep.assign(size_t(g.cells), 0);
  const int m = g.subdivisions;
  std::vector<int> idx(size_t(g.dim));
  for (int64_t s = 0; s < g.cells; ++s) {
    g.anchor_index(s, idx);
    bool inside = true;
    for (int k = 0; k < g.dim; ++k)
      if (std::abs(signed_freq(idx[size_t(k)], m)) >= cutoff) inside = false;
    mask.keep[size_t(s)] = inside ? 1 : 0;
  }
  mask.keep[0] = 1;  // 0-frequency always kept
  return mask;
}

int64_t mode_mask::kept_count() const {
  int64_t n = 0;
  for (char c : keep) n += c;
  return n;
}

namespace {

// One quantized complex multiply-accumulate chain step; `q` is componentwise
// round-after-operation.
inline cdouble qc(const precision_system& sys, cdouble z) {
  return {sys.quantize(z.real()), sys.quantize(z.imag())};
}

inline bool finite(cdouble z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

cdouble dft_coeff_exact(const scalar_field& field, std::span<const int> omega) {
  const grid& g = field.grid;
  const int m = g.subdivisions;
  const double inv_n = 1.0 / double(g.cells);
  std::vector<int> idx(size_t(g.dim));
  cdouble acc(0.0, 0.0);
  for (int64_t j = 0; j < g.cells; ++j) {
    g.anchor_index(j, idx);
    int64_t t = 0;
    for (int k = 0; k < g.dim; ++k) t += int64_t(omega[size_t(k)]) * idx[size_t(k)];
    t = ((t % m) + m) % m;
    const double ang = 2.0 * M_PI * double(t) / double(m);
    acc += field.values[size_t(j)] * cdouble(std::cos(ang), std::sin(ang)) * inv_n;
  }
  return acc;
}

cdouble dft_coeff_quantized(const scalar_field& field, const precision_system& sys,
                            std::span<const int> omega, int64_t flat_omega) {
  const grid& g = field.grid;
  const int m = g.subdivisions;
  const double inv_n = 1.0 / double(g.cells);
  std::vector<int> idx(size_t(g.dim));
  cdouble acc(0.0, 0.0);
  for (int64_t j = 0; j < g.cells; ++j) {
    g.anchor_index(j, idx);
    int64_t t = 0;
    for (int k = 0; k < g.dim; ++k) t += int64_t(omega[size_t(k)]) * idx[size_t(k)];
    t = ((t % m) + m) % m;
    const double ang = 2.0 * M_PI * double(t) / double(m);
    const double qv = sys.quantize(field.values[size_t(j)]);
    const cdouble qb = qc(sys, {std::cos(ang), std::sin(ang)});
    const cdouble prod = qc(sys, qv * qb);
    const cdouble term = qc(sys, prod * inv_n);
    acc = qc(sys, acc + term);
    if (!finite(acc) || !std::isfinite(qv))
      throw transform_overflow("dft: overflow at frequency index " + std::to_string(flat_omega),
                               flat_omega);
  }
  return acc;
}

spectrum dft_impl(const scalar_field& field, const precision_system& sys, bool parallel) {
  const grid& g = field.grid;
  spectrum spec;
  spec.grid = g;
  spec.precision_used = sys;
  spec.coeffs.assign(size_t(g.cells), cdouble(0.0, 0.0));
  const bool exact = sys.is_exact();

  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(static) if (parallel && g.cells > 8)
  for (int64_t s = 0; s < g.cells; ++s) {
    if (failure) continue;
    try {
      std::vector<int> omega(size_t(g.dim));
      int64_t rest = s;
      for (int k = g.dim - 1; k >= 0; --k) {
        omega[size_t(k)] = int(rest % g.subdivisions);
        rest /= g.subdivisions;
      }
      spec.coeffs[size_t(s)] = exact ? dft_coeff_exact(field, omega)
                                     : dft_coeff_quantized(field, sys, omega, s);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return spec;
}

}  // namespace

cdouble dft_coeff(const scalar_field& field, const precision_system& sys,
                  std::span<const int> omega) {
  if (int(omega.size()) != field.grid.dim)
    throw std::invalid_argument("dft_coeff: omega dimension mismatch");
  if (sys.is_exact()) return dft_coeff_exact(field, omega);
  spectrum tmp;
  tmp.grid = field.grid;
  return dft_coeff_quantized(field, sys, omega, tmp.flat_of(omega));
}

spectrum dft(const scalar_field& field, const precision_system& sys) {
  return dft_impl(field, sys, true);
}

spectrum dft_serial(const scalar_field& field, const precision_system& sys) {
  return dft_impl(field, sys, false);
}

namespace {

std::vector<cdouble> idft_impl(const spectrum& spec, const precision_system& sys,
                               bool parallel) {
  const grid& g = spec.grid;
  const int m = g.subdivisions;
  std::vector<cdouble> values(size_t(g.cells), cdouble(0.0, 0.0));
  const bool exact = sys.is_exact();

  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(static) if (parallel && g.cells > 8)
  for (int64_t j = 0; j < g.cells; ++j) {
    if (failure) continue;
    try {
      std::vector<int> jd(size_t(g.dim)), wd(size_t(g.dim));
      g.anchor_index(j, jd);
      cdouble acc(0.0, 0.0);
      for (int64_t s = 0; s < g.cells; ++s) {
        g.anchor_index(s, wd);
        int64_t t = 0;
        for (int k = 0; k < g.dim; ++k) t += int64_t(wd[size_t(k)]) * jd[size_t(k)];
        t = ((t % m) + m) % m;
        const double ang = -2.0 * M_PI * double(t) / double(m);  // conjugate basis
        const cdouble basis(std::cos(ang), std::sin(ang));
        if (exact) {
          acc += spec.coeffs[size_t(s)] * basis;
        } else {
          const cdouble qcoef = qc(sys, spec.coeffs[size_t(s)]);
          const cdouble qb = qc(sys, basis);
          const cdouble prod = qc(sys, qcoef * qb);
          acc = qc(sys, acc + prod);
          if (!finite(acc))
            throw transform_overflow("idft: overflow at anchor " + std::to_string(j), j);
        }
      }
      values[size_t(j)] = acc;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return values;
}

}  // namespace

std::vector<cdouble> idft_complex(const spectrum& spec, const precision_system& sys) {
  return idft_impl(spec, sys, true);
}

std::vector<cdouble> idft_complex_serial(const spectrum& spec, const precision_system& sys) {
  return idft_impl(spec, sys, false);
}

scalar_field idft(const spectrum& spec, const precision_system& sys) {
  auto complex_values = idft_complex(spec, sys);
  scalar_field field;
  field.grid = spec.grid;
  field.values.resize(complex_values.size());
  for (size_t i = 0; i < complex_values.size(); ++i)
    field.values[i] = complex_values[i].real();
  return field;
}

spectrum truncate(const spectrum& spec, const mode_mask& mask) {
  if (!(mask.grid == spec.grid)) throw std::invalid_argument("truncate: grid mismatch");
  spectrum out = spec;
  for (int64_t s = 0; s < spec.grid.cells; ++s)
    if (!mask.keep[size_t(s)]) out.coeffs[size_t(s)] = cdouble(0.0, 0.0);
  return out;
}

namespace {

// In-place radix-2 FFT with the +i sign convention.
void fft_line(std::vector<cdouble>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / double(len);
    const cdouble wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const cdouble u = a[i + k];
        const cdouble v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace

spectrum fft_fast(const scalar_field& field) {
  const grid& g = field.grid;
  const int m = g.subdivisions;
  if (!is_pow2(m))
    throw std::invalid_argument("fft_fast: m must be a power of two; use dft instead");

  std::vector<cdouble> data(size_t(g.cells));
  for (int64_t j = 0; j < g.cells; ++j) data[size_t(j)] = field.values[size_t(j)];

  // transform along each axis; axis k has stride m^(d-1-k)
  int64_t stride = 1;
  for (int axis = g.dim - 1; axis >= 0; --axis) {
    const int64_t lines = g.cells / m;
#pragma omp parallel for schedule(static) if (lines > 4)
    for (int64_t line = 0; line < lines; ++line) {
      // base offset of this line: insert a zero digit at `axis`
      const int64_t block = line / stride;
      const int64_t rem = line % stride;
      const int64_t base = block * stride * m + rem;
      std::vector<cdouble> buf(static_cast<size_t>(m));
      for (int t = 0; t < m; ++t) buf[size_t(t)] = data[size_t(base + t * stride)];
      fft_line(buf);
      for (int t = 0; t < m; ++t) data[size_t(base + t * stride)] = buf[size_t(t)];
    }
    stride *= m;
  }

  spectrum spec;
  spec.grid = g;
  spec.precision_used = precision_system::exact();
  spec.coeffs.resize(size_t(g.cells));
  const double inv_n = 1.0 / double(g.cells);
  for (int64_t s = 0; s < g.cells; ++s) spec.coeffs[size_t(s)] = data[size_t(s)] * inv_n;
  return spec;
}

void spectrum_to_csv(std::ostream& out, const spectrum& spec) {
  const grid& g = spec.grid;
  for (int k = 1; k <= g.dim; ++k) out << "omega_" << k << ',';
  out << "re,im\n";
  std::vector<int> omega(size_t(g.dim));
  for (int64_t s = 0; s < g.cells; ++s) {
    spec.omega_at(s, omega);
    for (int k = 0; k < g.dim; ++k) out << omega[size_t(k)] << ',';
    out << fmt_double(spec.coeffs[size_t(s)].real()) << ','
        << fmt_double(spec.coeffs[size_t(s)].imag()) << '\n';
  }
}

}  // namespace fnolab
