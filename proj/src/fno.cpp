#include "fnolab/fno.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fnolab/util.hpp"

namespace fnolab {

stabilizer stabilizer::hard_clip(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("hard_clip: c must be positive");
  return {kind::hard_clip, c};
}

stabilizer stabilizer::from_token(const std::string& token) {
  if (token == "none") return none();
  if (token == "tanh") return tanh();
  if (token == "2sigma") return two_sigma_clip();
  if (token == "hardclip") return hard_clip(5.0);
  if (token.rfind("hardclip:", 0) == 0) return hard_clip(std::stod(token.substr(9)));
  throw std::invalid_argument("unknown stabilizer token: " + token);
}

std::string stabilizer::token() const {
  switch (mode) {
    case kind::none:
      return "none";
    case kind::tanh:
      return "tanh";
    case kind::two_sigma_clip:
      return "2sigma";
    case kind::hard_clip:
      return "hardclip:" + fmt_double(clip);
  }
  return "none";
}

precision_mode precision_mode::mixed_with(const precision_system& s) {
  if (s.is_exact()) throw std::invalid_argument("mixed precision requires a non-exact system");
  precision_mode m;
  m.mixed = true;
  m.sys = s;
  return m;
}

precision_mode precision_mode::from_token(const std::string& token) {
  if (token == "full") return full();
  if (token.rfind("mixed:", 0) == 0)
    return mixed_with(precision_system::from_token(token.substr(6)));
  throw std::invalid_argument("unknown precision mode token: " + token);
}

std::string precision_mode::token() const {
  return mixed ? "mixed:" + sys.token() : std::string("full");
}

precision_schedule::phase precision_schedule::phase_of(int step, int total_steps) const {
  if (total_steps < 1) throw std::invalid_argument("phase_of: total_steps must be >= 1");
  const double frac = (double(step) + 0.5) / double(total_steps);
  if (frac < f_mixed) return phase::mixed;
  if (frac < f_mixed + f_amp) return phase::amp;
  return phase::full;
}

const char* precision_schedule::phase_name(phase p) {
  switch (p) {
    case phase::mixed:
      return "mixed";
    case phase::amp:
      return "amp";
    case phase::full:
      return "full";
  }
  return "full";
}

const char* stage_name(forward_stage s) {
  switch (s) {
    case forward_stage::pre_fft:
      return "pre-FFT";
    case forward_stage::fft:
      return "FFT";
    case forward_stage::contraction:
      return "contraction";
    case forward_stage::ifft:
      return "iFFT";
    case forward_stage::skip:
      return "skip";
  }
  return "unknown";
}

field_batch field_batch::zeros(const fnolab::grid& g, int batch, int channels) {
  field_batch fb;
  fb.grid = g;
  fb.batch = batch;
  fb.channels = channels;
  fb.data.assign(size_t(batch) * size_t(channels) * size_t(g.cells), 0.0);
  return fb;
}

field_batch stabilize(const field_batch& x, const stabilizer& stab) {
  field_batch out = x;
  const int64_t n = x.grid.cells;
  for (int b = 0; b < x.batch; ++b) {
    for (int c = 0; c < x.channels; ++c) {
      double* v = &out.data[(size_t(b) * size_t(x.channels) + size_t(c)) * size_t(n)];
      switch (stab.mode) {
        case stabilizer::kind::none:
          break;
        case stabilizer::kind::tanh:
          for (int64_t j = 0; j < n; ++j) v[j] = std::tanh(v[j]);
          break;
        case stabilizer::kind::hard_clip:
          for (int64_t j = 0; j < n; ++j) v[j] = std::clamp(v[j], -stab.clip, stab.clip);
          break;
        case stabilizer::kind::two_sigma_clip: {
          double mean = 0.0;
          for (int64_t j = 0; j < n; ++j) mean += v[j];
          mean /= double(n);
          double var = 0.0;
          for (int64_t j = 0; j < n; ++j) var += (v[j] - mean) * (v[j] - mean);
          var /= double(n);
          const double sigma = std::sqrt(var);
          const double lo = mean - 2.0 * sigma, hi = mean + 2.0 * sigma;
          for (int64_t j = 0; j < n; ++j) v[j] = std::clamp(v[j], lo, hi);
          break;
        }
      }
    }
  }
  return out;
}

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

// Basis table phi[mode][anchor] for the layer's kept modes on a grid.
std::vector<cdouble> basis_table(const std::vector<std::vector<int>>& modes, const grid& g) {
  const int m = g.subdivisions;
  std::vector<cdouble> table(modes.size() * size_t(g.cells));
  std::vector<int> idx(size_t(g.dim));
  for (size_t w = 0; w < modes.size(); ++w) {
    for (int k = 0; k < g.dim; ++k)
      if (std::abs(modes[w][size_t(k)]) > m / 2)
        throw std::invalid_argument("forward: grid too coarse for the layer's kept modes");
    for (int64_t j = 0; j < g.cells; ++j) {
      g.anchor_index(j, idx);
      int64_t t = 0;
      for (int k = 0; k < g.dim; ++k) t += int64_t(modes[w][size_t(k)]) * idx[size_t(k)];
      t = ((t % m) + m) % m;
      const double ang = 2.0 * M_PI * double(t) / double(m);
      table[w * size_t(g.cells) + size_t(j)] = cdouble(std::cos(ang), std::sin(ang));
    }
  }
  return table;
}

struct qreal {
  const precision_system* sys;
  bool exact;
  double operator()(double x) const { return exact ? x : sys->quantize(x); }
  cdouble operator()(cdouble z) const {
    return exact ? z : cdouble(sys->quantize(z.real()), sys->quantize(z.imag()));
  }
};

bool finite(cdouble z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Truncated forward transform on the kept modes, quantized per op:
// coeff = sum_j q(q(v_j) * q(phi)) / n with the 1/n folded into each term.
void fft_kept_modes(const field_batch& s, const std::vector<cdouble>& table, size_t n_modes,
                    const precision_system& sys, std::vector<cdouble>& out) {
  const int64_t n = s.grid.cells;
  const double inv_n = 1.0 / double(n);
  const qreal q{&sys, sys.is_exact()};
  const size_t lanes = size_t(s.batch) * size_t(s.channels);
  out.assign(lanes * n_modes, cdouble(0, 0));

  std::exception_ptr failure = nullptr;
  const int64_t total = int64_t(lanes * n_modes);
#pragma omp parallel for schedule(static) if (total > 8)
  for (int64_t t = 0; t < total; ++t) {
    if (failure) continue;
    try {
      const size_t lane = size_t(t) / n_modes;
      const size_t w = size_t(t) % n_modes;
      const double* v = &s.data[lane * size_t(n)];
      const cdouble* phi = &table[w * size_t(n)];
      cdouble acc(0, 0);
      if (q.exact) {
        for (int64_t j = 0; j < n; ++j) acc += v[j] * phi[j] * inv_n;
      } else {
        for (int64_t j = 0; j < n; ++j) {
          const double qv = sys.quantize(v[j]);
          const cdouble qb = q(phi[j]);
          const cdouble prod = q(qv * qb);
          const cdouble term = q(prod * inv_n);
          acc = q(acc + term);
          if (!finite(acc) || !std::isfinite(qv))
            throw transform_overflow("overflow in forward transform", int64_t(w));
        }
      }
      out[lane * n_modes + w] = acc;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Inverse transform from the kept modes (no normalization), real part kept.
// `conjugate_basis` distinguishes the inverse (true) from its adjoint (false).
void ifft_kept_modes(const std::vector<cdouble>& coeffs, const std::vector<cdouble>& table,
                     size_t n_modes, const grid& g, int lanes_count,
                     const precision_system& sys, field_batch& out_fields, int out_channels) {
  const int64_t n = g.cells;
  const qreal q{&sys, sys.is_exact()};
  (void)out_channels;

  std::exception_ptr failure = nullptr;
  const int64_t total = int64_t(lanes_count) * n;
#pragma omp parallel for schedule(static) if (total > 8)
  for (int64_t t = 0; t < total; ++t) {
    if (failure) continue;
    try {
      const size_t lane = size_t(t) / size_t(n);
      const int64_t j = t % n;
      const cdouble* c = &coeffs[lane * n_modes];
      cdouble acc(0, 0);
      if (q.exact) {
        for (size_t w = 0; w < n_modes; ++w)
          acc += c[w] * std::conj(table[w * size_t(n) + size_t(j)]);
      } else {
        for (size_t w = 0; w < n_modes; ++w) {
          const cdouble qc_ = q(c[w]);
          const cdouble qb = q(std::conj(table[w * size_t(n) + size_t(j)]));
          const cdouble prod = q(qc_ * qb);
          acc = q(acc + prod);
          if (!finite(acc))
            throw transform_overflow("overflow in inverse transform", j);
        }
      }
      out_fields.data[lane * size_t(n) + size_t(j)] = acc.real();
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Adjoint of the real-part inverse transform: g_hat = sum_j a_j phi(x_j),
// quantized like the forward pass.
void ifft_adjoint(const field_batch& a, const std::vector<cdouble>& table, size_t n_modes,
                  const precision_system& sys, std::vector<cdouble>& out) {
  const int64_t n = a.grid.cells;
  const qreal q{&sys, sys.is_exact()};
  const size_t lanes = size_t(a.batch) * size_t(a.channels);
  out.assign(lanes * n_modes, cdouble(0, 0));

  std::exception_ptr failure = nullptr;
  const int64_t total = int64_t(lanes * n_modes);
#pragma omp parallel for schedule(static) if (total > 8)
  for (int64_t t = 0; t < total; ++t) {
    if (failure) continue;
    try {
      const size_t lane = size_t(t) / n_modes;
      const size_t w = size_t(t) % n_modes;
      const double* v = &a.data[lane * size_t(n)];
      const cdouble* phi = &table[w * size_t(n)];
      cdouble acc(0, 0);
      if (q.exact) {
        for (int64_t j = 0; j < n; ++j) acc += v[j] * phi[j];
      } else {
        for (int64_t j = 0; j < n; ++j) {
          const double qv = sys.quantize(v[j]);
          const cdouble qb = q(phi[j]);
          const cdouble prod = q(qv * qb);
          acc = q(acc + prod);
          if (!finite(acc))
            throw transform_overflow("overflow in inverse-transform adjoint", int64_t(w));
        }
      }
      out[lane * n_modes + w] = acc;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Adjoint of the truncated forward transform: g_j = Re(sum_w g_hat_w
// conj(phi_w(x_j))) / n, quantized like the inverse pass.
void fft_adjoint(const std::vector<cdouble>& ghat, const std::vector<cdouble>& table,
                 size_t n_modes, const grid& g, int lanes_count, const precision_system& sys,
                 field_batch& out) {
  const int64_t n = g.cells;
  const double inv_n = 1.0 / double(n);
  const qreal q{&sys, sys.is_exact()};

  std::exception_ptr failure = nullptr;
  const int64_t total = int64_t(lanes_count) * n;
#pragma omp parallel for schedule(static) if (total > 8)
  for (int64_t t = 0; t < total; ++t) {
    if (failure) continue;
    try {
      const size_t lane = size_t(t) / size_t(n);
      const int64_t j = t % n;
      const cdouble* c = &ghat[lane * n_modes];
      cdouble acc(0, 0);
      if (q.exact) {
        for (size_t w = 0; w < n_modes; ++w)
          acc += c[w] * std::conj(table[w * size_t(n) + size_t(j)]) * inv_n;
      } else {
        for (size_t w = 0; w < n_modes; ++w) {
          const cdouble qc_ = q(c[w]);
          const cdouble qb = q(std::conj(table[w * size_t(n) + size_t(j)]));
          const cdouble prod = q(qc_ * qb);
          const cdouble term = q(prod * inv_n);
          acc = q(acc + term);
          if (!finite(acc)) throw transform_overflow("overflow in transform adjoint", j);
        }
      }
      out.data[lane * size_t(n) + size_t(j)] = acc.real();
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

plan_cache& layer_plan_cache() {
  static plan_cache cache;
  return cache;
}

// b: batch, i: channels in, o: channels out, w: kept modes
tensor spectral_contract(const std::string& equation, const tensor& lhs, const tensor& rhs,
                         const precision_system& sys, const lowering_mode& mode) {
  const einsum_spec spec = parse_einsum(equation, {lhs.shape, rhs.shape});
  auto plan = layer_plan_cache().get_or_plan(spec, sys, mode);
  const tensor ops[2] = {lhs, rhs};
  return execute(*plan, ops, sys, mode);
}

}  // namespace

precision_placement placement_of(const precision_mode& mode) {
  precision_placement place;
  if (mode.mixed) {
    place.fft = mode.sys;
    place.contraction = mode.sys;
  }
  return place;
}

spectral_layer make_layer(int channels_in, int channels_out, const grid& g, int mode_cutoff,
                          const stabilizer& stab, const precision_mode& precision,
                          uint64_t seed) {
  spectral_layer layer;
  layer.channels_in = channels_in;
  layer.channels_out = channels_out;
  layer.grid = g;
  layer.stab = stab;
  layer.precision = precision;

  const mode_mask mask = mode_mask::cutoff(g, mode_cutoff);
  std::vector<int> omega(size_t(g.dim));
  spectrum probe;
  probe.grid = g;
  for (int64_t s = 0; s < g.cells; ++s) {
    if (!mask.keep[size_t(s)]) continue;
    probe.omega_at(s, omega);
    layer.modes.emplace_back(omega.begin(), omega.end());
  }

  rng r(seed);
  const double r_std = 1.0 / std::sqrt(double(channels_in) * double(layer.modes.size()));
  const double w_std = 1.0 / std::sqrt(double(channels_in));
  layer.R.resize(size_t(channels_in) * size_t(channels_out) * layer.modes.size());
  layer.W.resize(size_t(channels_in) * size_t(channels_out));
  for (auto& z : layer.R)
    z = cdouble(r.normal() * r_std * M_SQRT1_2, r.normal() * r_std * M_SQRT1_2);
  for (auto& w : layer.W) w = r.normal() * w_std;
  return layer;
}

forward_trace forward(const spectral_layer& layer, const field_batch& v) {
  return forward(layer, v, placement_of(layer.precision));
}

forward_trace forward(const spectral_layer& layer, const field_batch& v,
                      const precision_placement& place) {
  if (v.channels != layer.channels_in)
    throw std::invalid_argument("forward: channel count mismatch");
  for (double x : v.data)
    if (!std::isfinite(x)) throw std::invalid_argument("forward: non-finite input");

  const grid& g = v.grid;
  const size_t n_modes = layer.modes.size();
  const auto table = basis_table(layer.modes, g);

  forward_trace tr;
  tr.input = v;

  // pre-FFT stabilizer (spectral branch only; the skip path sees raw v)
  tr.stabilized = stabilize(v, layer.stab);
  for (double x : tr.stabilized.data)
    if (!std::isfinite(x))
      throw stage_error(forward_stage::pre_fft, "non-finite value after stabilizer");

  // forward FFT + mode truncation
  try {
    fft_kept_modes(tr.stabilized, table, n_modes, place.fft, tr.t_hat);
  } catch (const transform_overflow& e) {
    throw stage_error(forward_stage::fft, std::string("FFT stage: ") + e.what());
  }

  // per-mode channel mix through the contraction planner
  try {
    tensor vin;
    vin.shape = {v.batch, layer.channels_in, int64_t(n_modes)};
    vin.data = tr.t_hat;
    tensor weights;
    weights.shape = {layer.channels_in, layer.channels_out, int64_t(n_modes)};
    weights.data = layer.R;
    tensor mixed =
        spectral_contract("biw,iow->bow", vin, weights, place.contraction, layer.lowering);
    tr.u_hat = std::move(mixed.data);
  } catch (const transform_overflow& e) {
    throw stage_error(forward_stage::contraction, std::string("contraction stage: ") + e.what());
  }

  // inverse FFT, real part
  tr.spectral = field_batch::zeros(g, v.batch, layer.channels_out);
  try {
    ifft_kept_modes(tr.u_hat, table, n_modes, g, v.batch * layer.channels_out, place.fft,
                    tr.spectral, layer.channels_out);
  } catch (const transform_overflow& e) {
    throw stage_error(forward_stage::ifft, std::string("iFFT stage: ") + e.what());
  }

  // skip path W v plus spectral branch, then the activation
  tr.pre_activation = field_batch::zeros(g, v.batch, layer.channels_out);
  for (int b = 0; b < v.batch; ++b)
    for (int co = 0; co < layer.channels_out; ++co)
      for (int64_t j = 0; j < g.cells; ++j) {
        double z = tr.spectral.at(b, co, j);
        for (int ci = 0; ci < layer.channels_in; ++ci)
          z += layer.w_at(ci, co) * v.at(b, ci, j);
        tr.pre_activation.at(b, co, j) = z;
      }
  for (double x : tr.pre_activation.data)
    if (!std::isfinite(x)) throw stage_error(forward_stage::skip, "non-finite value in skip sum");

  tr.output = tr.pre_activation;
  if (layer.gelu)
    for (double& x : tr.output.data) x = gelu(x);
  return tr;
}

layer_grads backward(const spectral_layer& layer, const forward_trace& trace,
                     const field_batch& upstream) {
  return backward(layer, trace, upstream, placement_of(layer.precision));
}

layer_grads backward(const spectral_layer& layer, const forward_trace& trace,
                     const field_batch& upstream, const precision_placement& place) {
  const grid& g = trace.input.grid;
  const int64_t n = g.cells;
  const int B = trace.input.batch;
  const size_t n_modes = layer.modes.size();
  if (upstream.batch != B || upstream.channels != layer.channels_out)
    throw std::invalid_argument("backward: upstream shape mismatch");
  const auto table = basis_table(layer.modes, g);

  // through the activation
  field_batch a = upstream;
  if (layer.gelu) {
    for (size_t i = 0; i < a.data.size(); ++i)
      a.data[i] *= gelu_grad(trace.pre_activation.data[i]);
  }

  layer_grads grads;
  grads.grad_input = field_batch::zeros(g, B, layer.channels_in);
  grads.grad_W.assign(layer.W.size(), 0.0);
  grads.grad_R.assign(layer.R.size(), cdouble(0, 0));

  // skip path: grad_W[i][o] = sum_{b,j} a[b,o,j] v[b,i,j]; grad_v through W
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < layer.channels_out; ++co)
      for (int ci = 0; ci < layer.channels_in; ++ci) {
        double gw = 0.0;
        const double w = layer.w_at(ci, co);
        for (int64_t j = 0; j < n; ++j) {
          const double av = a.at(b, co, j);
          gw += av * trace.input.at(b, ci, j);
          grads.grad_input.at(b, ci, j) += w * av;
        }
        grads.grad_W[size_t(ci) * size_t(layer.channels_out) + size_t(co)] += gw;
      }

  // adjoint of Re(iFFT): g_u_hat[b,o,w] = sum_j a[b,o,j] phi_w(x_j)
  std::vector<cdouble> g_u_hat;
  try {
    ifft_adjoint(a, table, n_modes, place.fft, g_u_hat);
  } catch (const transform_overflow& e) {
    throw stage_error(forward_stage::ifft, std::string("iFFT adjoint: ") + e.what());
  }

  // contraction adjoints: grad_R = g_u_hat . conj(t_hat); g_t_hat = g_u_hat . conj(R)
  std::vector<cdouble> g_t_hat;
  try {
    tensor gu;
    gu.shape = {B, layer.channels_out, int64_t(n_modes)};
    gu.data = g_u_hat;

    tensor t_conj;
    t_conj.shape = {B, layer.channels_in, int64_t(n_modes)};
    t_conj.data.resize(trace.t_hat.size());
    for (size_t i = 0; i < trace.t_hat.size(); ++i) t_conj.data[i] = std::conj(trace.t_hat[i]);

    tensor r_conj;
    r_conj.shape = {layer.channels_in, layer.channels_out, int64_t(n_modes)};
    r_conj.data.resize(layer.R.size());
    for (size_t i = 0; i < layer.R.size(); ++i) r_conj.data[i] = std::conj(layer.R[i]);

    tensor gr = spectral_contract("bow,biw->iow", gu, t_conj, place.contraction, layer.lowering);
    grads.grad_R = std::move(gr.data);
    tensor gt = spectral_contract("bow,iow->biw", gu, r_conj, place.contraction, layer.lowering);
    g_t_hat = std::move(gt.data);
  } catch (const transform_overflow& e) {
    throw stage_error(forward_stage::contraction,
                      std::string("contraction adjoint: ") + e.what());
  }

  // adjoint of the truncated forward FFT back to the stabilized field
  field_batch g_s = field_batch::zeros(g, B, layer.channels_in);
  try {
    fft_adjoint(g_t_hat, table, n_modes, g, B * layer.channels_in, place.fft, g_s);
  } catch (const transform_overflow& e) {
    throw stage_error(forward_stage::fft, std::string("FFT adjoint: ") + e.what());
  }

  // stabilizer adjoint, full precision
  for (int b = 0; b < B; ++b)
    for (int ci = 0; ci < layer.channels_in; ++ci) {
      const size_t lane = (size_t(b) * size_t(layer.channels_in) + size_t(ci)) * size_t(n);
      const double* v = &trace.input.data[lane];
      const double* s = &trace.stabilized.data[lane];
      const double* gs = &g_s.data[lane];
      double* gv = &grads.grad_input.data[lane];
      switch (layer.stab.mode) {
        case stabilizer::kind::none:
          for (int64_t j = 0; j < n; ++j) gv[j] += gs[j];
          break;
        case stabilizer::kind::tanh:
          for (int64_t j = 0; j < n; ++j) gv[j] += gs[j] * (1.0 - s[j] * s[j]);
          break;
        case stabilizer::kind::hard_clip:
          for (int64_t j = 0; j < n; ++j)
            if (std::fabs(v[j]) <= layer.stab.clip) gv[j] += gs[j];
          break;
        case stabilizer::kind::two_sigma_clip: {
          double mean = 0.0;
          for (int64_t j = 0; j < n; ++j) mean += v[j];
          mean /= double(n);
          double var = 0.0;
          for (int64_t j = 0; j < n; ++j) var += (v[j] - mean) * (v[j] - mean);
          var /= double(n);
          const double sigma = std::sqrt(var);
          const double lo = mean - 2.0 * sigma, hi = mean + 2.0 * sigma;
          double g_hi = 0.0, g_lo = 0.0;
          for (int64_t j = 0; j < n; ++j) {
            if (v[j] > hi)
              g_hi += gs[j];
            else if (v[j] < lo)
              g_lo += gs[j];
            else
              gv[j] += gs[j];
          }
          if ((g_hi != 0.0 || g_lo != 0.0) && sigma > 0.0) {
            // clipped outputs move with the bounds, which depend on every input
            for (int64_t j = 0; j < n; ++j) {
              const double dsig = (v[j] - mean) / (double(n) * sigma);
              gv[j] += g_hi * (1.0 / double(n) + 2.0 * dsig);
              gv[j] += g_lo * (1.0 / double(n) - 2.0 * dsig);
            }
          }
          break;
        }
      }
    }

  return grads;
}

scalar_field poisson_solve(const scalar_field& f) {
  const auto exact = precision_system::exact();
  spectrum spec = dft(f, exact);
  const int m = f.grid.subdivisions;
  std::vector<int> omega(size_t(f.grid.dim));
  for (int64_t s = 0; s < f.grid.cells; ++s) {
    spec.omega_at(s, omega);
    double norm2 = 0.0;
    for (int w : omega) norm2 += double(w) * double(w);
    spec.coeffs[size_t(s)] /= 1.0 + 4.0 * M_PI * M_PI * norm2;
  }
  (void)m;
  return idft(spec, exact);
}

toy_task toy_task::poisson(int d, int m, int train_count, int test_count, uint64_t seed,
                           double input_scale, int max_freq) {
  toy_task task;
  task.grid = build_grid(d, m);
  const int total = train_count + test_count;
  for (int i = 0; i < total; ++i) {
    const uint64_t sample_seed = seed * 0x9e3779b97f4a7c15ull + uint64_t(i) + 1;
    scalar_field input = sample(test_function::multi_tone_random(sample_seed, max_freq), task.grid);
    double peak = 0.0;
    for (double v : input.values) peak = std::max(peak, std::fabs(v));
    const double scale = peak > 0.0 ? 0.1 * input_scale / peak : 1.0;
    for (double& v : input.values) v *= scale;
    input.bound = 0.1 * input_scale;
    scalar_field target = poisson_solve(input);
    if (i < train_count) {
      task.train_inputs.push_back(input);
      task.train_targets.push_back(std::move(target));
    } else {
      task.test_inputs.push_back(input);
      task.test_targets.push_back(std::move(target));
    }
  }
  return task;
}

double relative_l2(const field_batch& pred, const field_batch& target) {
  if (pred.data.size() != target.data.size())
    throw std::invalid_argument("relative_l2: shape mismatch");
  const size_t per = size_t(pred.channels) * size_t(pred.grid.cells);
  double total = 0.0;
  for (int b = 0; b < pred.batch; ++b) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < per; ++i) {
      const double d = pred.data[size_t(b) * per + i] - target.data[size_t(b) * per + i];
      num += d * d;
      den += target.data[size_t(b) * per + i] * target.data[size_t(b) * per + i];
    }
    total += den > 0.0 ? std::sqrt(num) / std::sqrt(den) : std::sqrt(num);
  }
  return total / double(pred.batch);
}

namespace {

field_batch pack_fields(const std::vector<scalar_field>& fields) {
  if (fields.empty()) throw std::invalid_argument("pack_fields: empty set");
  field_batch fb = field_batch::zeros(fields[0].grid, int(fields.size()), 1);
  for (size_t b = 0; b < fields.size(); ++b)
    std::copy(fields[b].values.begin(), fields[b].values.end(),
              fb.data.begin() + ptrdiff_t(b * size_t(fields[0].grid.cells)));
  return fb;
}

// Gradient of the squared relative-L2 objective mean_b (||d_b|| / ||t_b||)^2.
// The squared form keeps SGD steps proportional to the residual; traces still
// report the plain relative L2.
field_batch relative_l2_grad(const field_batch& pred, const field_batch& target) {
  field_batch g = field_batch::zeros(pred.grid, pred.batch, pred.channels);
  const size_t per = size_t(pred.channels) * size_t(pred.grid.cells);
  for (int b = 0; b < pred.batch; ++b) {
    double den = 0.0;
    for (size_t i = 0; i < per; ++i)
      den += target.data[size_t(b) * per + i] * target.data[size_t(b) * per + i];
    const double scale = 2.0 / (double(pred.batch) * (den > 0 ? den : 1.0));
    for (size_t i = 0; i < per; ++i)
      g.data[size_t(b) * per + i] =
          scale * (pred.data[size_t(b) * per + i] - target.data[size_t(b) * per + i]);
  }
  return g;
}

precision_placement placement_for_phase(precision_schedule::phase p,
                                        const precision_system& sys) {
  precision_placement place;
  switch (p) {
    case precision_schedule::phase::mixed:
      place.fft = sys;
      place.contraction = sys;
      break;
    case precision_schedule::phase::amp:
      place.contraction = sys;  // FFTs stay full
      break;
    case precision_schedule::phase::full:
      break;
  }
  return place;
}

}  // namespace

model make_model(const toy_task& task, const train_config& cfg) {
  model mdl;
  for (int l = 0; l < cfg.layers; ++l) {
    spectral_layer layer = make_layer(1, 1, task.grid, cfg.mode_cutoff, cfg.stab, cfg.mode,
                                      cfg.seed * 1000003ull + uint64_t(l));
    layer.gelu = (l + 1 < cfg.layers);  // linear head
    mdl.layers.push_back(std::move(layer));
  }
  return mdl;
}

field_batch model_forward(const model& mdl, const field_batch& v,
                          const precision_placement& place) {
  field_batch x = v;
  for (const auto& layer : mdl.layers) x = forward(layer, x, place).output;
  return x;
}

training_trace train(const toy_task& task, const train_config& cfg, model* trained) {
  training_trace trace;
  model mdl = make_model(task, cfg);

  const field_batch train_x = pack_fields(task.train_inputs);
  const field_batch train_y = pack_fields(task.train_targets);
  const field_batch test_x = pack_fields(task.test_inputs);
  const field_batch test_y = pack_fields(task.test_targets);

  std::vector<std::vector<cdouble>> mom_R(mdl.layers.size());
  std::vector<std::vector<double>> mom_W(mdl.layers.size());
  for (size_t l = 0; l < mdl.layers.size(); ++l) {
    mom_R[l].assign(mdl.layers[l].R.size(), cdouble(0, 0));
    mom_W[l].assign(mdl.layers[l].W.size(), 0.0);
  }

  precision_placement place = placement_of(cfg.mode);
  std::string phase_label = cfg.mode.token();

  for (int step = 0; step < cfg.steps; ++step) {
    if (cfg.schedule) {
      const auto ph = cfg.schedule->phase_of(step, cfg.steps);
      place = placement_for_phase(ph, cfg.schedule->sys);
      phase_label = precision_schedule::phase_name(ph);
    }

    trace_row row;
    row.step = step;
    row.phase = phase_label;
    try {
      std::vector<forward_trace> layer_traces;
      field_batch x = train_x;
      for (const auto& layer : mdl.layers) {
        layer_traces.push_back(forward(layer, x, place));
        x = layer_traces.back().output;
      }
      const double loss = relative_l2(x, train_y);
      row.loss = loss;
      if (!std::isfinite(loss)) {
        row.nonfinite_stage = "loss";
        trace.rows.push_back(row);
        trace.diverged = true;
        trace.divergence_step = step;
        trace.divergence_stage = "loss";
        break;
      }

      field_batch upstream = relative_l2_grad(x, train_y);
      for (size_t l = mdl.layers.size(); l-- > 0;) {
        layer_grads grads = backward(mdl.layers[l], layer_traces[l], upstream, place);
        upstream = std::move(grads.grad_input);
        auto& layer = mdl.layers[l];
        for (size_t i = 0; i < layer.R.size(); ++i) {
          mom_R[l][i] = cfg.momentum * mom_R[l][i] + grads.grad_R[i];
          layer.R[i] -= cfg.lr * mom_R[l][i];
        }
        for (size_t i = 0; i < layer.W.size(); ++i) {
          mom_W[l][i] = cfg.momentum * mom_W[l][i] + grads.grad_W[i];
          layer.W[i] -= cfg.lr * mom_W[l][i];
        }
      }
      trace.rows.push_back(row);
    } catch (const stage_error& e) {
      row.loss = std::numeric_limits<double>::quiet_NaN();
      row.nonfinite_stage = stage_name(e.stage());
      trace.rows.push_back(row);
      trace.diverged = true;
      trace.divergence_step = step;
      trace.divergence_stage = stage_name(e.stage());
      break;
    }
  }

  if (!trace.rows.empty()) trace.final_train_loss = trace.rows.back().loss;
  if (!trace.diverged) {
    try {
      trace.final_test_loss = relative_l2(model_forward(mdl, test_x, place), test_y);
    } catch (const stage_error& e) {
      trace.diverged = true;
      trace.divergence_stage = stage_name(e.stage());
      trace.final_test_loss = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    trace.final_test_loss = std::numeric_limits<double>::quiet_NaN();
  }

  if (trained) *trained = std::move(mdl);
  return trace;
}

void trace_to_csv(std::ostream& out, const training_trace& trace) {
  out << "step,phase,loss,nonfinite_stage\n";
  for (const auto& row : trace.rows)
    out << row.step << ',' << row.phase << ',' << fmt_double(row.loss) << ','
        << row.nonfinite_stage << '\n';
}

void save_model(std::ostream& out, const model& mdl) {
  nlohmann::json header;
  header["version"] = 1;
  auto& layers = header["layers"];
  layers = nlohmann::json::array();
  for (const auto& layer : mdl.layers) {
    nlohmann::json j;
    j["channels_in"] = layer.channels_in;
    j["channels_out"] = layer.channels_out;
    j["d"] = layer.grid.dim;
    j["m"] = layer.grid.subdivisions;
    j["modes"] = layer.modes;
    j["stabilizer"] = layer.stab.token();
    j["precision"] = layer.precision.token();
    j["lowering"] = layer.lowering.token();
    j["gelu"] = layer.gelu;
    layers.push_back(std::move(j));
  }
  out << header.dump() << '\n';
  for (const auto& layer : mdl.layers) {
    for (const cdouble& z : layer.R) {
      const double re = z.real(), im = z.imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof re);
      out.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
    for (double w : layer.W) out.write(reinterpret_cast<const char*>(&w), sizeof w);
  }
}

model load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_model: missing header");
  const auto header = nlohmann::json::parse(line);
  if (header.at("version").get<int>() != 1)
    throw std::runtime_error("load_model: unsupported version");
  model mdl;
  for (const auto& j : header.at("layers")) {
    spectral_layer layer;
    layer.channels_in = j.at("channels_in").get<int>();
    layer.channels_out = j.at("channels_out").get<int>();
    layer.grid = build_grid(j.at("d").get<int>(), j.at("m").get<int>());
    layer.modes = j.at("modes").get<std::vector<std::vector<int>>>();
    layer.stab = stabilizer::from_token(j.at("stabilizer").get<std::string>());
    layer.precision = precision_mode::from_token(j.at("precision").get<std::string>());
    layer.lowering = lowering_mode::from_token(j.at("lowering").get<std::string>());
    layer.gelu = j.at("gelu").get<bool>();
    layer.R.resize(size_t(layer.channels_in) * size_t(layer.channels_out) * layer.modes.size());
    layer.W.resize(size_t(layer.channels_in) * size_t(layer.channels_out));
    for (auto& z : layer.R) {
      double re = 0, im = 0;
      in.read(reinterpret_cast<char*>(&re), sizeof re);
      in.read(reinterpret_cast<char*>(&im), sizeof im);
      z = cdouble(re, im);
    }
    for (auto& w : layer.W) in.read(reinterpret_cast<char*>(&w), sizeof w);
    if (!in) throw std::runtime_error("load_model: truncated weight data");
    mdl.layers.push_back(std::move(layer));
  }
  return mdl;
}

std::vector<mode_ablation_row> mode_ablation(const toy_task& task, const train_config& base,
                                             const std::vector<int>& cutoffs,
                                             const std::vector<std::string>& precisions) {
  std::vector<mode_ablation_row> rows;
  for (int cutoff : cutoffs) {
    for (const auto& token : precisions) {
      train_config cfg = base;
      cfg.mode_cutoff = cutoff;
      cfg.mode = precision_mode::from_token(token);
      const auto t0 = std::chrono::steady_clock::now();
      const training_trace trace = train(task, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      mode_ablation_row row;
      row.cutoff = cutoff;
      row.precision = token;
      row.final_test_loss = trace.final_test_loss;
      row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      rows.push_back(row);
    }
  }
  return rows;
}

freq_experiment_result frequency_error_run(const test_function& tones, int m) {
  if (tones.kind() != test_function::family::multi_tone)
    throw std::invalid_argument("frequency_error_run: multi-tone function required");
  const grid g = build_grid(1, m);
  const scalar_field field = sample(tones, g);
  const spectrum exact = dft(field, precision_system::exact());
  const spectrum half = dft(field, precision_system::half());

  freq_experiment_result result;
  const auto& amps = tones.amps();
  std::vector<double> freqs, pcts;
  for (size_t k = 0; k < amps.size(); ++k) {
    freq_error_row row;
    row.freq = int(k + 1);
    row.amplitude = amps[k];
    row.abs_err = std::abs(half.coeffs[k + 1] - exact.coeffs[k + 1]);
    row.pct_err = row.amplitude > 0.0 ? 100.0 * row.abs_err / row.amplitude : 0.0;
    freqs.push_back(double(row.freq));
    pcts.push_back(row.pct_err);
    result.rows.push_back(row);
  }
  result.spearman_freq_vs_pct = amps.empty() ? 0.0 : spearman(freqs, pcts);
  return result;
}

freq_experiment_result synthetic_frequency_experiment(uint64_t seed, int max_freq, int m) {
  return frequency_error_run(test_function::multi_tone_random(seed, max_freq), m);
}

}  // namespace fnolab
