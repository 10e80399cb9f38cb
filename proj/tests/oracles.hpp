// Test-only oracles, independent of the library's implementation paths:
// a reference n-ary contraction, exhaustive contraction-order enumeration,
// and a bit-level binary16 decoder.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fnolab/contract.hpp"

namespace oracles {

using fnolab::cdouble;
using fnolab::einsum_spec;
using fnolab::tensor;

// Decodes an IEEE binary16 bit pattern to double from first principles.
inline double half_bits_to_double(uint16_t bits) {
  const int sign = (bits >> 15) & 1;
  const int exp = (bits >> 10) & 0x1f;
  const int frac = bits & 0x3ff;
  double v;
  if (exp == 0) {
    v = std::ldexp(double(frac), -24);  // subnormal
  } else if (exp == 31) {
    v = frac == 0 ? std::numeric_limits<double>::infinity()
                  : std::numeric_limits<double>::quiet_NaN();
  } else {
    v = std::ldexp(1.0 + double(frac) / 1024.0, exp - 15);
  }
  return sign ? -v : v;
}

// Plain n-ary contraction in native complex double arithmetic.
inline tensor reference_contract(const einsum_spec& spec, const std::vector<tensor>& operands) {
  std::string all;
  for (const auto& in : spec.inputs) all += in;
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::string contracted;
  for (char c : all)
    if (spec.output.find(c) == std::string::npos) contracted.push_back(c);

  std::map<char, int64_t> index;
  tensor out;
  for (char c : spec.output) out.shape.push_back(spec.dims.at(c));
  out.data.assign(size_t(std::max<int64_t>(out.elems(), 1)), cdouble(0, 0));

  auto flat_of = [&](const std::string& labels) {
    int64_t f = 0;
    for (char c : labels) f = f * spec.dims.at(c) + index.at(c);
    return f;
  };

  std::vector<char> loop(spec.output.begin(), spec.output.end());
  loop.insert(loop.end(), contracted.begin(), contracted.end());
  for (char c : loop) index[c] = 0;

  while (true) {
    cdouble term(1.0, 0.0);
    for (size_t i = 0; i < operands.size(); ++i)
      term *= operands[i].data[size_t(flat_of(spec.inputs[i]))];
    out.data[size_t(flat_of(spec.output))] += term;

    size_t axis = loop.size();
    while (axis-- > 0) {
      char c = loop[axis];
      if (++index[c] < spec.dims.at(c)) break;
      index[c] = 0;
      if (axis == 0) return out;
    }
    if (loop.empty()) return out;
  }
}

// Exhaustive pairwise-order enumeration. Reimplements the result-label rule
// and the live-set accounting from the planner contract so it can serve as an
// independent check of both planners.
struct order_enumeration {
  int64_t min_flops_any = -1;
  int64_t min_peak_greedy_reachable = -1;
};

namespace detail {

struct node {
  int id;
  std::string labels;
  bool intermediate;
};

inline std::string sorted_unique(std::string s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline int64_t elems_of(const einsum_spec& spec, const std::string& labels) {
  int64_t e = 1;
  for (char c : labels) e *= spec.dims.at(c);
  return e;
}

inline std::string step_result(const einsum_spec& spec, const std::vector<node>& alive, size_t i,
                               size_t j) {
  if (alive.size() == 2) return spec.output;
  std::string needed = spec.output;
  for (size_t k = 0; k < alive.size(); ++k)
    if (k != i && k != j) needed += alive[k].labels;
  needed = sorted_unique(needed);
  std::string uni = sorted_unique(alive[i].labels + alive[j].labels);
  std::string out;
  for (char c : uni)
    if (needed.find(c) != std::string::npos) out.push_back(c);
  return out;
}

inline void recurse(const einsum_spec& spec, std::vector<node> alive, int64_t flops_so_far,
                    int64_t live_elems, int64_t peak_so_far, bool greedy_reachable,
                    order_enumeration& result) {
  if (alive.size() == 1) {
    if (result.min_flops_any < 0 || flops_so_far < result.min_flops_any)
      result.min_flops_any = flops_so_far;
    if (greedy_reachable && (result.min_peak_greedy_reachable < 0 ||
                             peak_so_far < result.min_peak_greedy_reachable))
      result.min_peak_greedy_reachable = peak_so_far;
    return;
  }

  // elems of the best (smallest-result) pair, for greedy reachability
  int64_t min_elems = -1;
  for (size_t i = 0; i < alive.size(); ++i)
    for (size_t j = i + 1; j < alive.size(); ++j) {
      const int64_t e = elems_of(spec, step_result(spec, alive, i, j));
      if (min_elems < 0 || e < min_elems) min_elems = e;
    }

  for (size_t i = 0; i < alive.size(); ++i)
    for (size_t j = i + 1; j < alive.size(); ++j) {
      const std::string labels = step_result(spec, alive, i, j);
      const int64_t elems = elems_of(spec, labels);
      const int64_t flops =
          elems_of(spec, sorted_unique(alive[i].labels + alive[j].labels));
      const bool last = alive.size() == 2;

      const int64_t result_live = last ? 0 : elems;
      const int64_t current = live_elems + result_live;
      const int64_t freed = (alive[i].intermediate ? elems_of(spec, alive[i].labels) : 0) +
                            (alive[j].intermediate ? elems_of(spec, alive[j].labels) : 0);

      std::vector<node> next;
      for (size_t k = 0; k < alive.size(); ++k)
        if (k != i && k != j) next.push_back(alive[k]);
      next.push_back({0, labels, true});

      recurse(spec, std::move(next), flops_so_far + flops,
              live_elems + result_live - freed, std::max(peak_so_far, current),
              greedy_reachable && elems == min_elems, result);
    }
}

}  // namespace detail

inline order_enumeration enumerate_orders(const einsum_spec& spec) {
  std::vector<detail::node> alive;
  for (size_t i = 0; i < spec.inputs.size(); ++i)
    alive.push_back({int(i), spec.inputs[i], false});
  order_enumeration result;
  detail::recurse(spec, std::move(alive), 0, 0, 0, true, result);
  return result;
}

}  // namespace oracles
