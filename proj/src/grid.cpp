#include "fnolab/grid.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fnolab/util.hpp"

namespace fnolab {

grid build_grid(int d, int m) {
  if (d < 1) throw std::invalid_argument("build_grid: d must be >= 1");
  if (m < 1) throw std::invalid_argument("build_grid: m must be >= 1");
  int64_t n = 1;
  for (int k = 0; k < d; ++k) {
    if (n > (int64_t(1) << 40) / m)
      throw std::invalid_argument("build_grid: m^d exceeds addressable size");
    n *= m;
  }
  return grid{d, m, n};
}

void grid::anchor_index(int64_t j, std::span<int> idx) const {
  for (int k = dim - 1; k >= 0; --k) {
    idx[size_t(k)] = int(j % subdivisions);
    j /= subdivisions;
  }
}

void grid::anchor_point(int64_t j, std::span<double> x) const {
  for (int k = dim - 1; k >= 0; --k) {
    x[size_t(k)] = double(j % subdivisions) / double(subdivisions);
    j /= subdivisions;
  }
}

std::vector<double> grid::anchor(int64_t j) const {
  std::vector<double> x(static_cast<size_t>(dim));
  anchor_point(j, x);
  return x;
}

int64_t grid::flat_index(std::span<const int> idx) const {
  int64_t j = 0;
  for (int k = 0; k < dim; ++k) j = j * subdivisions + idx[size_t(k)];
  return j;
}

test_function test_function::product() { return test_function{}; }

test_function test_function::constant(double y) {
  test_function f;
  f.family_ = family::constant;
  f.constant_ = y;
  return f;
}

test_function test_function::alias_sine(double amplitude, int freq) {
  if (freq < 0) throw std::invalid_argument("alias_sine: freq must be >= 0");
  test_function f;
  f.family_ = family::alias_sine;
  f.amplitude_ = amplitude;
  f.freq_ = freq;
  return f;
}

test_function test_function::multi_tone(std::vector<double> amps, std::vector<double> phases) {
  if (amps.size() != phases.size())
    throw std::invalid_argument("multi_tone: amps/phases size mismatch");
  test_function f;
  f.family_ = family::multi_tone;
  f.amps_ = std::move(amps);
  f.phases_ = std::move(phases);
  return f;
}

test_function test_function::multi_tone_random(uint64_t seed, int max_freq) {
  if (max_freq < 1) throw std::invalid_argument("multi_tone_random: max_freq must be >= 1");
  rng r(seed);
  const double ratio = r.uniform(0.4, 0.7);  // decay ratio, drawn once per experiment
  std::vector<double> amps(static_cast<size_t>(max_freq)), phases(static_cast<size_t>(max_freq));
  double a = 1.0;
  for (int k = 0; k < max_freq; ++k) {
    a *= ratio;
    amps[size_t(k)] = a;
    phases[size_t(k)] = r.uniform(0.0, 2.0 * M_PI);
  }
  return multi_tone(std::move(amps), std::move(phases));
}

test_function test_function::custom(std::function<double(std::span<const double>)> fn,
                                    int quadrature_budget) {
  test_function f;
  f.family_ = family::custom;
  f.fn_ = std::move(fn);
  f.quadrature_budget_ = quadrature_budget;
  return f;
}

double test_function::operator()(std::span<const double> x) const {
  switch (family_) {
    case family::product: {
      double p = 1.0;
      for (double c : x) p *= c;
      return p;
    }
    case family::constant:
      return constant_;
    case family::alias_sine:
      return amplitude_ * std::sin(2.0 * M_PI * double(freq_) * x[0]);
    case family::multi_tone: {
      double s = 0.0;
      for (double c : x) s += c;
      double v = 0.0;
      for (size_t k = 0; k < amps_.size(); ++k)
        v += amps_[k] * std::sin(2.0 * M_PI * double(k + 1) * s + phases_[k]);
      return v;
    }
    case family::custom:
      return fn_(x);
  }
  return 0.0;
}

double test_function::sample_at(const fnolab::grid& g, std::span<const int> idx) const {
  const int m = g.subdivisions;
  switch (family_) {
    case family::alias_sine: {
      // phase-reduced: freq*(i/m) and (freq mod m)*(i/m) give identical samples
      const int64_t t = (int64_t(freq_) * idx[0]) % m;
      return amplitude_ * std::sin(2.0 * M_PI * double(t) / double(m));
    }
    case family::multi_tone: {
      int64_t s = 0;
      for (int c : idx) s += c;
      double v = 0.0;
      for (size_t k = 0; k < amps_.size(); ++k) {
        const int64_t t = (int64_t(k + 1) * s) % m;
        v += amps_[k] * std::sin(2.0 * M_PI * double(t) / double(m) + phases_[k]);
      }
      return v;
    }
    default: {
      std::vector<double> x(idx.size());
      for (size_t k = 0; k < idx.size(); ++k) x[k] = double(idx[k]) / double(m);
      return (*this)(x);
    }
  }
}

std::optional<double> test_function::bound(int d) const {
  switch (family_) {
    case family::product:
      return 1.0;
    case family::constant:
      return std::fabs(constant_);
    case family::alias_sine:
      return std::fabs(amplitude_);
    case family::multi_tone: {
      double s = 0.0;
      for (double a : amps_) s += std::fabs(a);
      return s;
    }
    case family::custom:
      return std::nullopt;
  }
  (void)d;
  return std::nullopt;
}

std::optional<double> test_function::lipschitz(int d) const {
  switch (family_) {
    case family::product:
      return std::sqrt(double(d));
    case family::constant:
      return 0.0;
    case family::alias_sine:
      return 2.0 * M_PI * double(freq_) * std::fabs(amplitude_);
    case family::multi_tone: {
      double s = 0.0;
      for (size_t k = 0; k < amps_.size(); ++k)
        s += std::fabs(amps_[k]) * 2.0 * M_PI * double(k + 1);
      return s * std::sqrt(double(d));
    }
    case family::custom:
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

scalar_field sample_impl(const test_function& f, const grid& g, bool parallel) {
  scalar_field field;
  field.grid = g;
  field.values.assign(size_t(g.cells), 0.0);
  field.bound = f.bound(g.dim);
  field.lipschitz = f.lipschitz(g.dim);
  int64_t bad = -1;

#pragma omp parallel for schedule(static) if (parallel && g.cells > 1024)
  for (int64_t j = 0; j < g.cells; ++j) {
    std::vector<int> idx(size_t(g.dim));
    g.anchor_index(j, idx);
    const double v = f.sample_at(g, idx);
    if (!std::isfinite(v)) {
#pragma omp critical
      bad = (bad < 0 || j < bad) ? j : bad;
    }
    field.values[size_t(j)] = v;
  }
  if (bad >= 0)
    throw std::runtime_error("sample: non-finite value at anchor " + std::to_string(bad));
  return field;
}

}  // namespace

scalar_field sample(const test_function& f, const grid& g) { return sample_impl(f, g, true); }

scalar_field sample_serial(const test_function& f, const grid& g) {
  return sample_impl(f, g, false);
}

double estimate_lipschitz(const scalar_field& field) {
  const grid& g = field.grid;
  const int m = g.subdivisions;
  double worst = 0.0;
  std::vector<int> idx(size_t(g.dim));
  for (int64_t j = 0; j < g.cells; ++j) {
    g.anchor_index(j, idx);
    int64_t stride = 1;
    for (int axis = g.dim - 1; axis >= 0; --axis) {
      if (idx[size_t(axis)] + 1 < m) {
        const double dv =
            std::fabs(field.values[size_t(j + stride)] - field.values[size_t(j)]);
        worst = std::max(worst, dv * double(m));
      }
      stride *= m;
    }
  }
  return worst;
}

void field_to_csv(std::ostream& out, const scalar_field& field) {
  const grid& g = field.grid;
  out << g.dim << ',' << g.subdivisions << '\n';
  std::vector<int> idx(size_t(g.dim));
  for (int64_t j = 0; j < g.cells; ++j) {
    g.anchor_index(j, idx);
    for (int k = 0; k < g.dim; ++k) out << idx[size_t(k)] << ',';
    out << fmt_double(field.values[size_t(j)]) << '\n';
  }
}

scalar_field field_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("field_from_csv: empty input");
  auto head = split(line, ',');
  if (head.size() != 2) throw std::runtime_error("field_from_csv: bad header");
  const int d = std::stoi(head[0]);
  const int m = std::stoi(head[1]);
  scalar_field field;
  field.grid = build_grid(d, m);
  field.values.assign(size_t(field.grid.cells), 0.0);
  std::vector<int> idx(static_cast<size_t>(d));
  int64_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != size_t(d) + 1) throw std::runtime_error("field_from_csv: bad row");
    for (int k = 0; k < d; ++k) idx[size_t(k)] = std::stoi(cols[size_t(k)]);
    field.values[size_t(field.grid.flat_index(idx))] = std::stod(cols[size_t(d)]);
    ++rows;
  }
  if (rows != field.grid.cells) throw std::runtime_error("field_from_csv: row count mismatch");
  return field;
}

}  // namespace fnolab
