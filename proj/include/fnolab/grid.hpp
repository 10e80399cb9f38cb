#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace fnolab {

// Uniform partition of [0,1]^d into n = m^d hypercube cells. The anchor of
// cell j is its vertex closest to the origin, xi_j = (i1/m, ..., id/m), and
// anchors are enumerated in row-major order of (i1, ..., id) with the last
// index varying fastest.
struct grid {
  int dim = 1;
  int subdivisions = 1;
  int64_t cells = 1;

  double cell_volume() const { return 1.0 / double(cells); }
  void anchor_index(int64_t j, std::span<int> idx) const;
  std::vector<double> anchor(int64_t j) const;
  void anchor_point(int64_t j, std::span<double> x) const;
  int64_t flat_index(std::span<const int> idx) const;

  bool operator==(const grid& other) const {
    return dim == other.dim && subdivisions == other.subdivisions;
  }
};

grid build_grid(int d, int m);

struct scalar_field {
  fnolab::grid grid;
  std::vector<double> values;
  std::optional<double> bound;      // sup-norm bound M, when known
  std::optional<double> lipschitz;  // Lipschitz constant L, when known
};

// Analytic test functions sampled onto grids. Tone-based variants evaluate
// grid samples through integer phase reduction so aliased frequencies produce
// bit-identical sample arrays.
class test_function {
 public:
  enum class family { product, constant, alias_sine, multi_tone, custom };

  static test_function product();
  static test_function constant(double y);
  static test_function alias_sine(double amplitude, int freq);
  // Tone k (1-based) contributes amps[k-1] * sin(2*pi*k*<1,x> + phases[k-1]).
  static test_function multi_tone(std::vector<double> amps, std::vector<double> phases);
  // Exponentially decaying amplitudes a_k = r^k with r drawn once per seed.
  static test_function multi_tone_random(uint64_t seed, int max_freq);
  // `quadrature_budget` enables reference quadrature in the error lab; 0 means
  // no budget (error-functional calls reject the function).
  static test_function custom(std::function<double(std::span<const double>)> fn,
                              int quadrature_budget = 0);

  family kind() const { return family_; }
  double operator()(std::span<const double> x) const;
  double sample_at(const fnolab::grid& g, std::span<const int> idx) const;

  std::optional<double> bound(int d) const;
  std::optional<double> lipschitz(int d) const;

  double constant_value() const { return constant_; }
  double amplitude() const { return amplitude_; }
  int freq() const { return freq_; }
  const std::vector<double>& amps() const { return amps_; }
  const std::vector<double>& phases() const { return phases_; }
  int quadrature_budget() const { return quadrature_budget_; }

 private:
  family family_ = family::product;
  double constant_ = 0.0;
  double amplitude_ = 0.0;
  int freq_ = 0;
  std::vector<double> amps_;
  std::vector<double> phases_;
  std::function<double(std::span<const double>)> fn_;
  int quadrature_budget_ = 0;
};

scalar_field sample(const test_function& f, const grid& g);
scalar_field sample_serial(const test_function& f, const grid& g);

// Max finite difference |dv|*m over axis-adjacent anchors; a lower bound on
// the true Lipschitz constant.
double estimate_lipschitz(const scalar_field& field);

// CSV layout: first line "d,m", then one row per anchor "i1,...,id,value".
void field_to_csv(std::ostream& out, const scalar_field& field);
scalar_field field_from_csv(std::istream& in);

}  // namespace fnolab
