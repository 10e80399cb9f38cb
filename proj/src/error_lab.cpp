#include "fnolab/error_lab.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fnolab/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fnolab {

namespace {

bool all_zero(std::span<const int> omega) {
  return std::all_of(omega.begin(), omega.end(), [](int v) { return v == 0; });
}

// integral of x * exp(2 pi i a x) over [0,1] for integer a
cdouble product_axis_integral(int a) {
  if (a == 0) return {0.5, 0.0};
  return {0.0, -1.0 / (2.0 * M_PI * double(a))};
}

// integral of sin(2 pi f x) * exp(2 pi i w x) over [0,1] for integer f >= 0:
// (i/2)([w == f] - [w == -f])
cdouble sine_axis_integral(int f, int w) {
  if (f == 0) return {0.0, 0.0};
  cdouble r(0.0, 0.0);
  if (w == f) r += cdouble(0.0, 0.5);
  if (w == -f) r -= cdouble(0.0, 0.5);
  return r;
}

// Left-anchor Riemann sum of f * phi_omega at resolution q*m per axis.
cdouble reference_sum(const test_function& f, int d, int m_ref, std::span<const int> omega) {
  grid g = build_grid(d, m_ref);
  std::vector<int> idx(static_cast<size_t>(d));
  std::vector<double> x(static_cast<size_t>(d));
  cdouble acc(0.0, 0.0);
  const double inv_n = 1.0 / double(g.cells);
  for (int64_t j = 0; j < g.cells; ++j) {
    g.anchor_index(j, idx);
    for (int k = 0; k < d; ++k) x[size_t(k)] = double(idx[size_t(k)]) / double(m_ref);
    acc += f(x) * basis_eval(omega, x) * inv_n;
  }
  return acc;
}

cdouble continuous_integral(const test_function& f, const grid& g, std::span<const int> omega,
                            double discrete_gap_hint) {
  const int d = g.dim;
  switch (f.kind()) {
    case test_function::family::constant: {
      return all_zero(omega) ? cdouble(f.constant_value(), 0.0) : cdouble(0.0, 0.0);
    }
    case test_function::family::product: {
      cdouble p(1.0, 0.0);
      for (int k = 0; k < d; ++k) p *= product_axis_integral(omega[size_t(k)]);
      return p;
    }
    case test_function::family::alias_sine: {
      for (int k = 1; k < d; ++k)
        if (omega[size_t(k)] != 0) return {0.0, 0.0};
      return f.amplitude() * sine_axis_integral(f.freq(), omega[0]);
    }
    case test_function::family::multi_tone: {
      // tone k occupies the diagonal frequencies +/- (k,...,k)
      cdouble r(0.0, 0.0);
      const auto& amps = f.amps();
      const auto& phases = f.phases();
      for (size_t k = 0; k < amps.size(); ++k) {
        const int fk = int(k + 1);
        bool plus = true, minus = true;
        for (int a = 0; a < d; ++a) {
          if (omega[size_t(a)] != fk) plus = false;
          if (omega[size_t(a)] != -fk) minus = false;
        }
        // a sin(t + phi) = a/(2i) (e^{i phi} e^{it} - e^{-i phi} e^{-it})
        const cdouble half_over_i(0.0, -0.5);
        if (minus) r += amps[k] * half_over_i * std::polar(1.0, phases[k]);
        if (plus) r -= amps[k] * half_over_i * std::polar(1.0, -phases[k]);
      }
      return r;
    }
    case test_function::family::custom: {
      const int budget = f.quadrature_budget();
      if (budget < 4)
        throw std::invalid_argument("disc_error: custom function without a reference-quadrature budget");
      const int m_hi = g.subdivisions * budget;
      const int m_lo = m_hi / 2;
      const cdouble s_lo = reference_sum(f, d, m_lo, omega);
      const cdouble s_hi = reference_sum(f, d, m_hi, omega);
      const cdouble extrapolated = 2.0 * s_hi - s_lo;  // first-order Richardson
      const double est = std::abs(s_hi - s_lo);
      if (discrete_gap_hint > 0.0 && est * 100.0 > discrete_gap_hint)
        throw std::runtime_error(
            "disc_error: reference quadrature not accurate enough for this gap; "
            "increase the quadrature budget");
      return extrapolated;
    }
  }
  return {0.0, 0.0};
}

}  // namespace

double disc_error(const test_function& f, const grid& g, std::span<const int> omega) {
  if (int(omega.size()) != g.dim) throw std::invalid_argument("disc_error: omega dim mismatch");
  scalar_field field = sample(f, g);
  const cdouble discrete = dft_coeff(field, precision_system::exact(), omega);
  if (f.kind() == test_function::family::custom) {
    // two-stage: integral first with a crude hint, then the accuracy check
    const cdouble integral = continuous_integral(f, g, omega, 0.0);
    const double gap = std::abs(integral - discrete);
    (void)continuous_integral(f, g, omega, gap);  // re-check with the measured gap
    return gap;
  }
  return std::abs(continuous_integral(f, g, omega, 0.0) - discrete);
}

double prec_error(const test_function& f, const grid& g, const precision_system& sys,
                  std::span<const int> omega) {
  if (int(omega.size()) != g.dim) throw std::invalid_argument("prec_error: omega dim mismatch");
  if (sys.is_exact()) return 0.0;
  scalar_field field = sample(f, g);
  const int m = g.subdivisions;
  const double inv_n = 1.0 / double(g.cells);
  std::vector<int> idx(size_t(g.dim));
  cdouble exact_sum(0.0, 0.0), quant_sum(0.0, 0.0);
  for (int64_t j = 0; j < g.cells; ++j) {
    g.anchor_index(j, idx);
    int64_t t = 0;
    for (int k = 0; k < g.dim; ++k) t += int64_t(omega[size_t(k)]) * idx[size_t(k)];
    t = ((t % m) + m) % m;
    const double ang = 2.0 * M_PI * double(t) / double(m);
    const cdouble basis(std::cos(ang), std::sin(ang));
    const double v = field.values[size_t(j)];
    exact_sum += v * basis * inv_n;
    quant_sum += sys.quantize(v) * sys.quantize(basis) * inv_n;
  }
  return std::abs(exact_sum - quant_sum);
}

double disc_upper_bound(double M, double L, int d, int64_t n, double omega_norm,
                        const bound_constants& consts) {
  if (d < 1 || n < 1) throw std::invalid_argument("disc_upper_bound: bad d or n");
  return consts.c2 * std::sqrt(double(d)) * (M * omega_norm + L) *
         std::pow(double(n), -1.0 / double(d));
}

double disc_lower_witness_direct(int d, int m) {
  if (d < 1 || m < 1) throw std::invalid_argument("disc_lower_witness: bad d or m");
  // per-axis anchor sum (1/m) sum_{i=0}^{m-1} (i/m) sin(2 pi i / m)
  double axis = 0.0;
  for (int i = 0; i < m; ++i)
    axis += (double(i) / double(m)) * std::sin(2.0 * M_PI * double(i) / double(m));
  axis /= double(m);
  const double axis_integral = -1.0 / (2.0 * M_PI);  // integral of x sin(2 pi x)
  return std::fabs(std::pow(axis_integral, d) - std::pow(axis, d));
}

double disc_lower_witness(int d, int m) {
  if (d < 1 || m < 1) throw std::invalid_argument("disc_lower_witness: bad d or m");
  if (m == 1) return disc_lower_witness_direct(d, m);
  const double axis_sum = -0.5 * double(m) / std::tan(M_PI / double(m));  // -(m/2)cot(pi/m)
  const double discrete = std::pow(axis_sum / double(m) / double(m), d);
  const double integral = std::pow(-1.0 / (2.0 * M_PI), d);
  return std::fabs(integral - discrete);
}

double prec_upper_bound(double M, const precision_system& sys, const bound_constants& consts) {
  if (sys.is_exact()) return 0.0;
  return consts.c * sys.relative_epsilon() * M;
}

double worst_midpoint(const precision_system& sys, double M) {
  if (sys.is_exact()) throw std::domain_error("worst_midpoint: exact system has no midpoints");
  if (!(M > 0.0)) throw std::invalid_argument("worst_midpoint: M must be positive");
  const double lo = M / 2.0, hi = M;
  // dense scan for the largest rounding error, then bisect to the tie point
  const int steps = 200000;
  double best_y = 0.0, best_err = -1.0;
  for (int i = 1; i < steps; ++i) {
    const double y = lo + (hi - lo) * double(i) / double(steps);
    const double err = std::fabs(y - sys.quantize(y));
    if (err > best_err) {
      best_err = err;
      best_y = y;
    }
  }
  // refine: walk toward the boundary where q() flips between neighbors
  double a = best_y, qa = sys.quantize(a);
  double step = (hi - lo) / double(steps);
  double b = (qa <= a) ? std::min(hi, a + step) : std::max(lo, a - step);
  if (sys.quantize(b) == qa) return best_y;  // flat region; scan already optimal
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (a + b);
    if (sys.quantize(mid) == qa)
      a = mid;
    else
      b = mid;
  }
  const double y = a;  // last point still rounding to qa, adjacent to the tie
  return y;
}

double constant_witness_prec_error(const precision_system& sys, double y) {
  if (sys.is_exact()) return 0.0;
  return std::fabs(y - sys.quantize(y) * sys.quantize(1.0));
}

std::pair<double, double> general_disc_bounds(double M, double L, int d, int64_t n) {
  (void)M;
  if (d < 1 || n < 1) throw std::invalid_argument("general_disc_bounds: bad d or n");
  const int m = int(std::llround(std::pow(double(n), 1.0 / double(d))));
  int64_t check = 1;
  for (int k = 0; k < d; ++k) check *= m;
  if (check != n) throw std::invalid_argument("general_disc_bounds: n is not m^d");
  const double upper = L * std::sqrt(double(d)) * std::pow(double(n), -1.0 / double(d));
  const double axis_sum = double(m - 1) / (2.0 * double(m));  // (1/m) sum i/m
  const double lower = std::fabs(std::pow(0.5, d) - std::pow(axis_sum, d));
  return {lower, upper};
}

double general_gap(const test_function& f, const grid& g) {
  scalar_field field = sample(f, g);
  double sum = 0.0;
  for (double v : field.values) sum += v;
  sum /= double(g.cells);
  double integral = 0.0;
  switch (f.kind()) {
    case test_function::family::product:
      integral = std::pow(0.5, g.dim);
      break;
    case test_function::family::constant:
      integral = f.constant_value();
      break;
    case test_function::family::alias_sine:
    case test_function::family::multi_tone:
      integral = 0.0;  // pure tones integrate to zero over full periods
      break;
    case test_function::family::custom: {
      std::vector<int> zero(size_t(g.dim), 0);
      cdouble ref = continuous_integral(f, g, zero, 0.0);
      integral = ref.real();
      break;
    }
  }
  return std::fabs(integral - sum);
}

double aliasing_demo(double M, int omega, const grid& g) {
  if (g.dim != 1) throw std::invalid_argument("aliasing_demo: d=1 only");
  if (omega < 1) throw std::invalid_argument("aliasing_demo: omega must be >= 1");
  const test_function alias = test_function::alias_sine(M, g.subdivisions + omega);
  const int w[1] = {omega};
  return disc_error(alias, g, w);
}

test_function resolve_function_token(const std::string& token, uint64_t seed, int max_tones,
                                     double alias_amplitude, int alias_freq_offset) {
  if (token == "product") return test_function::product();
  if (token == "multitone") return test_function::multi_tone_random(seed, max_tones);
  if (token == "const") return test_function::constant(1.0);
  if (token.rfind("const:", 0) == 0) return test_function::constant(std::stod(token.substr(6)));
  if (token == "alias") return test_function::alias_sine(alias_amplitude, alias_freq_offset);
  throw std::invalid_argument("unknown function token: " + token);
}

std::vector<error_report> bounds_sweep(const sweep_config& config) {
  struct row_spec {
    std::string fn;
    std::string sys;
    int d, m, omega;
  };
  std::vector<row_spec> rows;
  for (const auto& fn : config.fns)
    for (const auto& sys : config.systems)
      for (int d : config.dims)
        for (int m : config.ms)
          for (int omega : config.omegas) rows.push_back({fn, sys, d, m, omega});

  std::vector<error_report> out(rows.size());
  std::exception_ptr failure = nullptr;

#ifdef _OPENMP
  const int workers = config.workers > 0 ? config.workers : omp_get_max_threads();
#else
  const int workers = 1;
  (void)workers;
#endif

  const int64_t row_count = int64_t(rows.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers) if (row_count > 1)
  for (int64_t i = 0; i < row_count; ++i) {
    if (failure) continue;
    try {
      const auto& r = rows[size_t(i)];
      if (r.fn == "alias" && r.d != 1)
        throw std::invalid_argument("aliasing demo is d=1 only");
      const grid g = build_grid(r.d, r.m);
      const test_function fn = resolve_function_token(r.fn, config.seed, config.max_tones,
                                                      config.alias_amplitude,
                                                      g.subdivisions + r.omega);
      const precision_system sys = precision_system::from_token(r.sys);
      std::vector<int> omega(size_t(r.d), r.omega);

      error_report rep;
      rep.d = r.d;
      rep.m = r.m;
      rep.n = g.cells;
      rep.omega = r.omega;
      rep.M = fn.bound(r.d).value();
      rep.L = fn.lipschitz(r.d).value();
      rep.sys = sys.token();
      rep.disc_err = disc_error(fn, g, omega);
      rep.disc_upper = disc_upper_bound(rep.M, rep.L, r.d, g.cells, freq_norm(omega),
                                        config.consts);
      rep.disc_lower_witness = disc_lower_witness(r.d, r.m);
      rep.prec_err = prec_error(fn, g, sys, omega);
      rep.prec_upper = prec_upper_bound(rep.M, sys, config.consts);
      rep.prec_lower_witness =
          sys.is_exact() ? 0.0
                         : constant_witness_prec_error(sys, worst_midpoint(sys, rep.M));
      rep.disc_violation = rep.disc_err > rep.disc_upper;
      rep.prec_violation = rep.prec_err > rep.prec_upper;
      out[size_t(i)] = rep;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

void write_row(std::ostream& o, const error_report& r) {
  o << r.d << ',' << r.m << ',' << r.n << ',' << r.omega << ',' << fmt_double(r.M) << ','
    << fmt_double(r.L) << ',' << r.sys << ',' << fmt_double(r.disc_err) << ','
    << fmt_double(r.disc_upper) << ',' << fmt_double(r.disc_lower_witness) << ','
    << fmt_double(r.prec_err) << ',' << fmt_double(r.prec_upper) << ','
    << fmt_double(r.prec_lower_witness) << '\n';
}

}  // namespace

void write_error_report_csv(std::ostream& out, std::span<const error_report> rows) {
  out << error_report_header << '\n';
  for (const auto& r : rows) write_row(out, r);
}

void write_violations_csv(std::ostream& out, std::span<const error_report> rows) {
  out << error_report_header << ",violation\n";
  for (const auto& r : rows) {
    if (!r.disc_violation && !r.prec_violation) continue;
    out << r.d << ',' << r.m << ',' << r.n << ',' << r.omega << ',' << fmt_double(r.M) << ','
        << fmt_double(r.L) << ',' << r.sys << ',' << fmt_double(r.disc_err) << ','
        << fmt_double(r.disc_upper) << ',' << fmt_double(r.disc_lower_witness) << ','
        << fmt_double(r.prec_err) << ',' << fmt_double(r.prec_upper) << ','
        << fmt_double(r.prec_lower_witness) << ','
        << (r.disc_violation ? "disc" : "prec") << '\n';
  }
}

}  // namespace fnolab
