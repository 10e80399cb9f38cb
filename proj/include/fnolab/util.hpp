#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fnolab {

// Deterministic RNG wrapper. Uniform doubles are derived from the raw 64-bit
// stream so results do not depend on the standard library's distribution
// implementations.
class rng {
 public:
  explicit rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  uint64_t next_u64() {
    // xorshift* keeps streams reproducible across platforms
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // standard normal via Box-Muller
  double normal();

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

uint64_t fnv1a64(std::span<const unsigned char> bytes);
uint64_t fnv1a64_file(const std::string& path);
std::string hex64(uint64_t v);

// Spearman rank correlation (average ranks on ties).
double spearman(std::span<const double> xs, std::span<const double> ys);

// Least-squares slope of y against x.
double regression_slope(std::span<const double> xs, std::span<const double> ys);

bool is_pow2(int64_t v);

// Round-trippable decimal formatting used by every CSV/JSON writer.
std::string fmt_double(double v);

std::vector<std::string> split(const std::string& s, char sep);
std::vector<int> parse_int_list(const std::string& s);

}  // namespace fnolab
