#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <memory>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fnolab/precision.hpp"
#include "fnolab/spectral.hpp"

namespace fnolab {

// Validated einsum expression: lowercase labels, explicit output, no repeated
// labels within one operand, shared labels dimension-consistent. Singleton
// broadcast is disallowed; shapes must match exactly.
struct einsum_spec {
  std::string equation;
  std::vector<std::string> inputs;  // labels per operand
  std::string output;
  std::vector<std::vector<int64_t>> shapes;
  std::map<char, int64_t> dims;

  int64_t elems_of(const std::string& labels) const;
  std::string shape_token() const;  // "2x4x8x8;4x4x8x8"
};

einsum_spec parse_einsum(const std::string& equation,
                         const std::vector<std::vector<int64_t>>& shapes);

// How complex arithmetic is lowered to real arithmetic during execution:
//   all_real      every tensor viewed as real up front, one monolithic
//                 contraction (option A)
//   pairwise_real view-as-real around every pairwise step (option B)
//   hybrid        view-as-real only on steps whose result rank >= threshold,
//                 low-rank steps stay complex (option C)
struct lowering_mode {
  enum class kind { all_real, pairwise_real, hybrid };
  kind mode = kind::hybrid;
  int rank_threshold = 3;

  static lowering_mode all_real() { return {kind::all_real, 0}; }
  static lowering_mode pairwise_real() { return {kind::pairwise_real, 0}; }
  static lowering_mode hybrid(int threshold = 3);
  static lowering_mode from_token(const std::string& token);
  std::string token() const;
};

struct plan_step {
  int lhs = 0;  // operand ids: originals 0..k-1, intermediates k, k+1, ...
  int rhs = 0;
  int result_id = 0;
  std::string sub_equation;
  std::string result_labels;
  std::vector<int64_t> result_shape;
  int64_t result_elems = 0;
  int64_t flops = 0;
};

struct einsum_plan {
  einsum_spec spec;
  std::vector<plan_step> steps;
  int64_t peak_intermediate_elems = 0;  // live intermediates only
  int64_t total_flops = 0;
  std::string cache_key;
};

// Fills peak_intermediate_elems and total_flops by simulating the live set.
// Inputs and the final output are caller-owned and excluded from the peak.
void account_plan(einsum_plan& plan);

// Byte-weighted peak for a given element width (complex elements: 2 * width).
int64_t peak_intermediate_bytes(const einsum_plan& plan, const precision_system& sys);

// Repeatedly contracts the pair with the fewest result elements; ties broken
// by step flops, then by lowest operand-id pair.
einsum_plan plan_greedy(const einsum_spec& spec);

// Exact minimum total flops over all pairwise orders (subset DP); operand
// count is capped at 8.
einsum_plan plan_flop_optimal(const einsum_spec& spec);

struct tensor {
  std::vector<int64_t> shape;
  std::vector<cdouble> data;

  int64_t elems() const;
  static tensor zeros(std::vector<int64_t> shape);
};

// Executes the plan under the precision system and lowering mode. Every
// multiply-accumulate is re-quantized (round after operation). Overflow
// raises transform_overflow carrying the step index.
tensor execute(const einsum_plan& plan, std::span<const tensor> operands,
               const precision_system& sys, const lowering_mode& mode);

std::string cache_key(const einsum_spec& spec, const precision_system& sys,
                      const lowering_mode& mode);

// Concurrent readers, exclusive insertion, idempotent insert. Lookups never
// recompute on hit.
class plan_cache {
 public:
  std::shared_ptr<const einsum_plan> get_or_plan(const einsum_spec& spec,
                                                 const precision_system& sys,
                                                 const lowering_mode& mode);
  long long hits() const { return hits_.load(); }
  long long misses() const { return misses_.load(); }
  long long plans_computed() const { return plans_computed_.load(); }
  void clear();

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const einsum_plan>> map_;
  std::atomic<long long> hits_{0};
  std::atomic<long long> misses_{0};
  std::atomic<long long> plans_computed_{0};
};

struct contraction_case {
  std::string name;
  std::string equation;
  std::vector<std::vector<int64_t>> shapes;
};

// Desk-scale analogues of the contractions the planner is ablated on: the FNO
// spectral mix, a CP-factorized variant, and two chains.
std::vector<contraction_case> contraction_benchmark_suite();

}  // namespace fnolab
