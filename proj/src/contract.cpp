#include "fnolab/contract.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace fnolab {

namespace {

std::string sorted_unique(std::string labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

std::string label_union(const std::string& a, const std::string& b) {
  return sorted_unique(a + b);
}

std::string label_intersect(const std::string& a, const std::string& b) {
  std::string out;
  for (char c : a)
    if (b.find(c) != std::string::npos) out.push_back(c);
  return out;
}

}  // namespace

int64_t einsum_spec::elems_of(const std::string& labels) const {
  int64_t e = 1;
  for (char c : labels) e *= dims.at(c);
  return e;
}

std::string einsum_spec::shape_token() const {
  std::ostringstream os;
  for (size_t i = 0; i < shapes.size(); ++i) {
    if (i) os << ';';
    for (size_t k = 0; k < shapes[i].size(); ++k) {
      if (k) os << 'x';
      os << shapes[i][k];
    }
  }
  return os.str();
}

einsum_spec parse_einsum(const std::string& equation,
                         const std::vector<std::vector<int64_t>>& shapes) {
  const auto arrow = equation.find("->");
  if (arrow == std::string::npos)
    throw std::invalid_argument("einsum: missing '->' in equation: " + equation);
  const std::string lhs = equation.substr(0, arrow);
  const std::string out = equation.substr(arrow + 2);

  einsum_spec spec;
  spec.equation = equation;
  spec.output = out;
  spec.shapes = shapes;

  size_t start = 0;
  while (true) {
    const size_t comma = lhs.find(',', start);
    spec.inputs.push_back(lhs.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }

  if (spec.inputs.size() != shapes.size())
    throw std::invalid_argument("einsum: operand count does not match shape count");

  auto check_labels = [&](const std::string& labels) {
    for (char c : labels)
      if (c < 'a' || c > 'z')
        throw std::invalid_argument(std::string("einsum: invalid axis label '") + c + "'");
  };

  for (size_t i = 0; i < spec.inputs.size(); ++i) {
    const std::string& in = spec.inputs[i];
    if (in.empty()) throw std::invalid_argument("einsum: empty operand subscript");
    check_labels(in);
    if (sorted_unique(in).size() != in.size())
      throw std::invalid_argument("einsum: repeated label within one operand: " + in);
    if (in.size() != shapes[i].size())
      throw std::invalid_argument("einsum: rank mismatch for operand " + std::to_string(i));
    for (size_t k = 0; k < in.size(); ++k) {
      const int64_t dim = shapes[i][k];
      if (dim < 1) throw std::invalid_argument("einsum: dimensions must be positive");
      auto [it, inserted] = spec.dims.emplace(in[k], dim);
      if (!inserted && it->second != dim)
        throw std::invalid_argument(std::string("einsum: inconsistent dimension for label '") +
                                    in[k] + "'");
    }
  }

  check_labels(out);
  if (sorted_unique(out).size() != out.size())
    throw std::invalid_argument("einsum: repeated label in output: " + out);
  for (char c : out)
    if (!spec.dims.count(c))
      throw std::invalid_argument(std::string("einsum: output label '") + c +
                                  "' unbound (appears in no input)");
  return spec;
}

lowering_mode lowering_mode::hybrid(int threshold) {
  if (threshold < 1) throw std::invalid_argument("hybrid lowering: threshold must be >= 1");
  return {kind::hybrid, threshold};
}

lowering_mode lowering_mode::from_token(const std::string& token) {
  if (token == "allreal") return all_real();
  if (token == "pairwise") return pairwise_real();
  if (token == "hybrid") return hybrid();
  if (token.rfind("hybrid:", 0) == 0) return hybrid(std::stoi(token.substr(7)));
  throw std::invalid_argument("unknown lowering mode token: " + token);
}

std::string lowering_mode::token() const {
  switch (mode) {
    case kind::all_real:
      return "allreal";
    case kind::pairwise_real:
      return "pairwise";
    case kind::hybrid:
      return "hybrid:" + std::to_string(rank_threshold);
  }
  return "hybrid";
}

void account_plan(einsum_plan& plan) {
  const int originals = int(plan.spec.inputs.size());
  const int last_result = plan.steps.empty() ? -1 : plan.steps.back().result_id;
  std::map<int, int64_t> live;  // intermediate id -> elems
  int64_t peak = 0;
  int64_t flops = 0;
  for (const auto& step : plan.steps) {
    flops += step.flops;
    int64_t current = step.result_id == last_result ? 0 : step.result_elems;
    for (const auto& [id, elems] : live) current += elems;
    peak = std::max(peak, current);
    if (step.lhs >= originals) live.erase(step.lhs);
    if (step.rhs >= originals) live.erase(step.rhs);
    if (step.result_id != last_result) live[step.result_id] = step.result_elems;
  }
  plan.peak_intermediate_elems = peak;
  plan.total_flops = flops;
}

int64_t peak_intermediate_bytes(const einsum_plan& plan, const precision_system& sys) {
  int64_t width = 8;  // bytes per real component
  switch (sys.kind()) {
    case precision_kind::emu_half:
      width = 2;
      break;
    case precision_kind::emu_fp8_clip:
      width = 1;
      break;
    default:
      break;
  }
  return plan.peak_intermediate_elems * 2 * width;
}

namespace {

struct alive_operand {
  int id;
  std::string labels;
};

std::string result_labels_for(const std::string& a, const std::string& b,
                              const std::vector<alive_operand>& alive, size_t skip_i,
                              size_t skip_j, const einsum_spec& spec) {
  std::string needed = spec.output;
  for (size_t k = 0; k < alive.size(); ++k) {
    if (k == skip_i || k == skip_j) continue;
    needed += alive[k].labels;
  }
  needed = sorted_unique(needed);
  return label_intersect(label_union(a, b), needed);
}

plan_step make_step(const einsum_spec& spec, const alive_operand& a, const alive_operand& b,
                    const std::string& result_labels, int result_id) {
  plan_step step;
  step.lhs = a.id;
  step.rhs = b.id;
  step.result_id = result_id;
  step.result_labels = result_labels;
  step.sub_equation = a.labels + "," + b.labels + "->" + result_labels;
  step.result_shape.reserve(result_labels.size());
  for (char c : result_labels) step.result_shape.push_back(spec.dims.at(c));
  step.result_elems = spec.elems_of(result_labels);
  step.flops = spec.elems_of(label_union(a.labels, b.labels));
  return step;
}

}  // namespace

einsum_plan plan_greedy(const einsum_spec& spec) {
  if (spec.inputs.size() < 2)
    throw std::invalid_argument("plan_greedy: need at least two operands");

  einsum_plan plan;
  plan.spec = spec;

  std::vector<alive_operand> alive;
  for (size_t i = 0; i < spec.inputs.size(); ++i)
    alive.push_back({int(i), spec.inputs[i]});
  int next_id = int(spec.inputs.size());

  while (alive.size() > 1) {
    size_t best_i = 0, best_j = 1;
    std::string best_labels;
    int64_t best_elems = -1, best_flops = -1;
    for (size_t i = 0; i < alive.size(); ++i) {
      for (size_t j = i + 1; j < alive.size(); ++j) {
        std::string labels = alive.size() == 2
                                 ? spec.output
                                 : result_labels_for(alive[i].labels, alive[j].labels, alive,
                                                     i, j, spec);
        const int64_t elems = spec.elems_of(labels);
        const int64_t flops = spec.elems_of(label_union(alive[i].labels, alive[j].labels));
        const bool better =
            best_elems < 0 || elems < best_elems ||
            (elems == best_elems && flops < best_flops) ||
            (elems == best_elems && flops == best_flops &&
             std::minmax(alive[i].id, alive[j].id) <
                 std::minmax(alive[best_i].id, alive[best_j].id));
        if (better) {
          best_i = i;
          best_j = j;
          best_elems = elems;
          best_flops = flops;
          best_labels = labels;
        }
      }
    }
    plan.steps.push_back(make_step(spec, alive[best_i], alive[best_j], best_labels, next_id));
    alive[best_i] = {next_id, best_labels};
    alive.erase(alive.begin() + ptrdiff_t(best_j));
    ++next_id;
  }

  account_plan(plan);
  return plan;
}

namespace {

// Result labels of contracting a subset of original operands: labels inside
// the subset that are needed by operands outside it or by the output.
std::string subset_result_labels(const einsum_spec& spec, unsigned mask, unsigned full) {
  if (mask == full) return spec.output;
  std::string inside, outside = spec.output;
  for (size_t i = 0; i < spec.inputs.size(); ++i) {
    if (mask & (1u << i))
      inside += spec.inputs[i];
    else
      outside += spec.inputs[i];
  }
  return label_intersect(sorted_unique(inside), sorted_unique(outside));
}

struct dp_node {
  int64_t flops = -1;  // -1 = unset
  unsigned left = 0, right = 0;
};

int emit_steps(const einsum_spec& spec, const std::vector<dp_node>& dp,
               const std::vector<std::string>& labels_of, unsigned mask, unsigned full,
               int& next_id, einsum_plan& plan) {
  if ((mask & (mask - 1)) == 0) {  // single operand
    int idx = 0;
    while (!(mask & (1u << idx))) ++idx;
    return idx;
  }
  const dp_node& node = dp[mask];
  const int lhs = emit_steps(spec, dp, labels_of, node.left, full, next_id, plan);
  const int rhs = emit_steps(spec, dp, labels_of, node.right, full, next_id, plan);
  const alive_operand a{lhs, labels_of[node.left]};
  const alive_operand b{rhs, labels_of[node.right]};
  plan.steps.push_back(make_step(spec, a, b, labels_of[mask], next_id));
  return next_id++;
}

}  // namespace

einsum_plan plan_flop_optimal(const einsum_spec& spec) {
  const size_t k = spec.inputs.size();
  if (k < 2) throw std::invalid_argument("plan_flop_optimal: need at least two operands");
  if (k > 8) throw std::invalid_argument("plan_flop_optimal: operand count capped at 8");

  const unsigned full = (1u << k) - 1;
  std::vector<dp_node> dp(full + 1);
  std::vector<std::string> labels_of(full + 1);
  for (unsigned mask = 1; mask <= full; ++mask)
    labels_of[mask] = (mask & (mask - 1)) == 0
                          ? spec.inputs[size_t(__builtin_ctz(mask))]
                          : subset_result_labels(spec, mask, full);

  for (unsigned mask = 1; mask <= full; ++mask) {
    if ((mask & (mask - 1)) == 0) {
      dp[mask].flops = 0;
      continue;
    }
    // iterate proper submasks; canonical split: left < right numerically
    for (unsigned left = (mask - 1) & mask; left; left = (left - 1) & mask) {
      const unsigned right = mask ^ left;
      if (left > right) continue;
      if (dp[left].flops < 0 || dp[right].flops < 0) continue;
      const int64_t step =
          spec.elems_of(label_union(labels_of[left], labels_of[right]));
      const int64_t total = dp[left].flops + dp[right].flops + step;
      if (dp[mask].flops < 0 || total < dp[mask].flops) {
        dp[mask].flops = total;
        dp[mask].left = left;
        dp[mask].right = right;
      }
    }
  }

  einsum_plan plan;
  plan.spec = spec;
  int next_id = int(k);
  emit_steps(spec, dp, labels_of, full, full, next_id, plan);
  account_plan(plan);
  return plan;
}

int64_t tensor::elems() const {
  int64_t e = 1;
  for (int64_t d : shape) e *= d;
  return e;
}

tensor tensor::zeros(std::vector<int64_t> shape) {
  tensor t;
  t.shape = std::move(shape);
  t.data.assign(size_t(t.elems()), cdouble(0.0, 0.0));
  return t;
}

namespace {

struct quant {
  const precision_system* sys;
  bool exact;
  double q(double x) const { return exact ? x : sys->quantize(x); }
};

std::vector<int64_t> strides_for(const std::string& labels, const einsum_spec& spec) {
  std::vector<int64_t> s(labels.size());
  int64_t acc = 1;
  for (size_t k = labels.size(); k-- > 0;) {
    s[k] = acc;
    acc *= spec.dims.at(labels[k]);
  }
  return s;
}

// stride of each loop label within a tensor laid out by `labels` (0 if absent)
std::vector<int64_t> loop_strides(const std::string& loop_labels, const std::string& labels,
                                  const einsum_spec& spec) {
  auto own = strides_for(labels, spec);
  std::vector<int64_t> out(loop_labels.size(), 0);
  for (size_t i = 0; i < loop_labels.size(); ++i) {
    const size_t pos = labels.find(loop_labels[i]);
    if (pos != std::string::npos) out[i] = own[pos];
  }
  return out;
}

void check_finite_or_throw(const tensor& t, int step_index) {
  for (const cdouble& z : t.data)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw transform_overflow(
          "execute: non-finite result at contraction step " + std::to_string(step_index),
          step_index);
}

// Pairwise contraction with native complex arithmetic, quantized per op.
tensor contract_pair_complex(const einsum_spec& spec, const std::string& la,
                             const std::string& lb, const std::string& lo, const tensor& a,
                             const tensor& b, const quant& qz) {
  std::string contracted;
  for (char c : label_union(la, lb))
    if (lo.find(c) == std::string::npos) contracted.push_back(c);

  tensor out = tensor::zeros([&] {
    std::vector<int64_t> shape;
    for (char c : lo) shape.push_back(spec.dims.at(c));
    return shape;
  }());

  const auto oa = loop_strides(lo, la, spec), ob = loop_strides(lo, lb, spec);
  const auto ca = loop_strides(contracted, la, spec), cb = loop_strides(contracted, lb, spec);
  std::vector<int64_t> cdims;
  for (char c : contracted) cdims.push_back(spec.dims.at(c));
  int64_t inner = 1;
  for (int64_t d : cdims) inner *= d;

  const int64_t out_elems = out.elems();
  std::vector<int64_t> oidx(lo.size(), 0);
  for (int64_t o = 0; o < out_elems; ++o) {
    int64_t a_base = 0, b_base = 0;
    for (size_t k = 0; k < lo.size(); ++k) {
      a_base += oidx[k] * oa[k];
      b_base += oidx[k] * ob[k];
    }
    cdouble acc(0.0, 0.0);
    std::vector<int64_t> cidx(contracted.size(), 0);
    int64_t a_off = a_base, b_off = b_base;
    for (int64_t c = 0; c < inner; ++c) {
      const cdouble term = a.data[size_t(a_off)] * b.data[size_t(b_off)];
      const cdouble qterm(qz.q(term.real()), qz.q(term.imag()));
      acc = cdouble(qz.q(acc.real() + qterm.real()), qz.q(acc.imag() + qterm.imag()));
      // odometer over contracted axes, last axis fastest
      for (size_t k = contracted.size(); k-- > 0;) {
        if (++cidx[k] < cdims[k]) {
          a_off += ca[k];
          b_off += cb[k];
          break;
        }
        a_off -= ca[k] * (cdims[k] - 1);
        b_off -= cb[k] * (cdims[k] - 1);
        cidx[k] = 0;
      }
    }
    out.data[size_t(o)] = acc;
    for (size_t k = lo.size(); k-- > 0;) {
      if (++oidx[k] < out.shape[k]) break;
      oidx[k] = 0;
    }
  }
  return out;
}

// Pairwise contraction through the view-as-real route: four real
// accumulations combined as (ac - bd) + (ad + bc)i.
tensor contract_pair_real(const einsum_spec& spec, const std::string& la, const std::string& lb,
                          const std::string& lo, const tensor& a, const tensor& b,
                          const quant& qz) {
  std::string contracted;
  for (char c : label_union(la, lb))
    if (lo.find(c) == std::string::npos) contracted.push_back(c);

  tensor out = tensor::zeros([&] {
    std::vector<int64_t> shape;
    for (char c : lo) shape.push_back(spec.dims.at(c));
    return shape;
  }());

  const auto oa = loop_strides(lo, la, spec), ob = loop_strides(lo, lb, spec);
  const auto ca = loop_strides(contracted, la, spec), cb = loop_strides(contracted, lb, spec);
  std::vector<int64_t> cdims;
  for (char c : contracted) cdims.push_back(spec.dims.at(c));
  int64_t inner = 1;
  for (int64_t d : cdims) inner *= d;

  const int64_t out_elems = out.elems();
  std::vector<int64_t> oidx(lo.size(), 0);
  for (int64_t o = 0; o < out_elems; ++o) {
    int64_t a_base = 0, b_base = 0;
    for (size_t k = 0; k < lo.size(); ++k) {
      a_base += oidx[k] * oa[k];
      b_base += oidx[k] * ob[k];
    }
    double ac = 0, bd = 0, ad = 0, bc = 0;
    std::vector<int64_t> cidx(contracted.size(), 0);
    int64_t a_off = a_base, b_off = b_base;
    for (int64_t c = 0; c < inner; ++c) {
      const double ar = a.data[size_t(a_off)].real(), ai = a.data[size_t(a_off)].imag();
      const double br = b.data[size_t(b_off)].real(), bi = b.data[size_t(b_off)].imag();
      ac = qz.q(ac + qz.q(ar * br));
      bd = qz.q(bd + qz.q(ai * bi));
      ad = qz.q(ad + qz.q(ar * bi));
      bc = qz.q(bc + qz.q(ai * br));
      for (size_t k = contracted.size(); k-- > 0;) {
        if (++cidx[k] < cdims[k]) {
          a_off += ca[k];
          b_off += cb[k];
          break;
        }
        a_off -= ca[k] * (cdims[k] - 1);
        b_off -= cb[k] * (cdims[k] - 1);
        cidx[k] = 0;
      }
    }
    out.data[size_t(o)] = cdouble(qz.q(ac - bd), qz.q(ad + bc));
    for (size_t k = lo.size(); k-- > 0;) {
      if (++oidx[k] < out.shape[k]) break;
      oidx[k] = 0;
    }
  }
  return out;
}

// Option A: no pairwise decomposition, every operand viewed as real up front
// and one monolithic loop nest over all labels.
tensor contract_all_real(const einsum_spec& spec, std::span<const tensor> operands,
                         const quant& qz) {
  const std::string out_labels = spec.output;
  std::string all;
  for (const auto& in : spec.inputs) all += in;
  all = sorted_unique(all);
  std::string contracted;
  for (char c : all)
    if (out_labels.find(c) == std::string::npos) contracted.push_back(c);

  tensor out = tensor::zeros([&] {
    std::vector<int64_t> shape;
    for (char c : out_labels) shape.push_back(spec.dims.at(c));
    return shape;
  }());

  const size_t k = operands.size();
  std::vector<std::vector<int64_t>> ostr(k), cstr(k);
  for (size_t i = 0; i < k; ++i) {
    ostr[i] = loop_strides(out_labels, spec.inputs[i], spec);
    cstr[i] = loop_strides(contracted, spec.inputs[i], spec);
  }
  std::vector<int64_t> cdims;
  for (char c : contracted) cdims.push_back(spec.dims.at(c));
  int64_t inner = 1;
  for (int64_t d : cdims) inner *= d;

  const int64_t out_elems = out.elems();
  std::vector<int64_t> oidx(out_labels.size(), 0);
  std::vector<int64_t> base(k), off(k);
  for (int64_t o = 0; o < out_elems; ++o) {
    for (size_t i = 0; i < k; ++i) {
      base[i] = 0;
      for (size_t a = 0; a < out_labels.size(); ++a) base[i] += oidx[a] * ostr[i][a];
      off[i] = base[i];
    }
    double acc_re = 0, acc_im = 0;
    std::vector<int64_t> cidx(contracted.size(), 0);
    for (int64_t c = 0; c < inner; ++c) {
      // running product of all factors in real arithmetic
      double p_re = operands[0].data[size_t(off[0])].real();
      double p_im = operands[0].data[size_t(off[0])].imag();
      for (size_t i = 1; i < k; ++i) {
        const double fr = operands[i].data[size_t(off[i])].real();
        const double fi = operands[i].data[size_t(off[i])].imag();
        const double re = qz.q(qz.q(p_re * fr) - qz.q(p_im * fi));
        const double im = qz.q(qz.q(p_re * fi) + qz.q(p_im * fr));
        p_re = re;
        p_im = im;
      }
      acc_re = qz.q(acc_re + p_re);
      acc_im = qz.q(acc_im + p_im);
      for (size_t a = contracted.size(); a-- > 0;) {
        if (++cidx[a] < cdims[a]) {
          for (size_t i = 0; i < k; ++i) off[i] += cstr[i][a];
          break;
        }
        for (size_t i = 0; i < k; ++i) off[i] -= cstr[i][a] * (cdims[a] - 1);
        cidx[a] = 0;
      }
    }
    out.data[size_t(o)] = cdouble(acc_re, acc_im);
    for (size_t a = out_labels.size(); a-- > 0;) {
      if (++oidx[a] < out.shape[a]) break;
      oidx[a] = 0;
    }
  }
  return out;
}

}  // namespace

tensor execute(const einsum_plan& plan, std::span<const tensor> operands,
               const precision_system& sys, const lowering_mode& mode) {
  const einsum_spec& spec = plan.spec;
  if (operands.size() != spec.inputs.size())
    throw std::invalid_argument("execute: operand count mismatch");
  for (size_t i = 0; i < operands.size(); ++i) {
    std::vector<int64_t> expected;
    for (char c : spec.inputs[i]) expected.push_back(spec.dims.at(c));
    if (operands[i].shape != expected)
      throw std::invalid_argument("execute: shape mismatch for operand " + std::to_string(i));
    for (const cdouble& z : operands[i].data)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("execute: non-finite input operand");
  }

  const quant qz{&sys, sys.is_exact()};

  if (mode.mode == lowering_mode::kind::all_real) {
    tensor out = contract_all_real(spec, operands, qz);
    check_finite_or_throw(out, 0);
    return out;
  }

  std::map<int, tensor> storage;
  const int originals = int(spec.inputs.size());
  auto fetch = [&](int id) -> const tensor& {
    if (id < originals) return operands[size_t(id)];
    return storage.at(id);
  };

  tensor result;
  for (size_t s = 0; s < plan.steps.size(); ++s) {
    const plan_step& step = plan.steps[s];
    const auto arrow = step.sub_equation.find("->");
    const auto comma = step.sub_equation.find(',');
    const std::string la = step.sub_equation.substr(0, comma);
    const std::string lb = step.sub_equation.substr(comma + 1, arrow - comma - 1);
    const std::string lo = step.sub_equation.substr(arrow + 2);

    const bool view_as_real =
        mode.mode == lowering_mode::kind::pairwise_real ||
        (mode.mode == lowering_mode::kind::hybrid &&
         int(step.result_shape.size()) >= mode.rank_threshold);

    tensor t = view_as_real
                   ? contract_pair_real(spec, la, lb, lo, fetch(step.lhs), fetch(step.rhs), qz)
                   : contract_pair_complex(spec, la, lb, lo, fetch(step.lhs), fetch(step.rhs),
                                           qz);
    check_finite_or_throw(t, int(s));

    if (step.lhs >= originals) storage.erase(step.lhs);
    if (step.rhs >= originals) storage.erase(step.rhs);
    if (s + 1 == plan.steps.size())
      result = std::move(t);
    else
      storage[step.result_id] = std::move(t);
  }
  return result;
}

std::string cache_key(const einsum_spec& spec, const precision_system& sys,
                      const lowering_mode& mode) {
  return spec.equation + "|" + spec.shape_token() + "|" + sys.token() + "|" + mode.token();
}

std::shared_ptr<const einsum_plan> plan_cache::get_or_plan(const einsum_spec& spec,
                                                           const precision_system& sys,
                                                           const lowering_mode& mode) {
  const std::string key = cache_key(spec, sys, mode);
  {
    std::shared_lock lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      hits_.fetch_add(1);
      return it->second;
    }
  }
  misses_.fetch_add(1);
  auto plan = std::make_shared<einsum_plan>(plan_greedy(spec));
  plan->cache_key = key;
  plans_computed_.fetch_add(1);
  {
    std::unique_lock lock(mu_);
    auto it = map_.emplace(key, plan).first;
    return it->second;  // idempotent: first inserted plan wins
  }
}

void plan_cache::clear() {
  std::unique_lock lock(mu_);
  map_.clear();
  hits_ = 0;
  misses_ = 0;
  plans_computed_ = 0;
}

std::vector<contraction_case> contraction_benchmark_suite() {
  return {
      {"fno_mix", "bixy,ioxy->boxy", {{2, 4, 8, 8}, {4, 4, 8, 8}}},
      {"cp_mix", "bixy,r,ri,ro,rx,ry->boxy",
       {{2, 4, 8, 8}, {3}, {3, 4}, {3, 4}, {3, 8}, {3, 8}}},
      {"chain3", "ab,bc,cd->ad", {{2, 100}, {100, 2}, {2, 100}}},
      {"chain4", "ab,bc,cd,de->ae", {{2, 16}, {16, 4}, {4, 16}, {16, 2}}},
  };
}

}  // namespace fnolab
