#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fnolab/contract.hpp"
#include "fnolab/grid.hpp"
#include "fnolab/precision.hpp"
#include "fnolab/spectral.hpp"

namespace fnolab {

// Bounded elementwise maps applied to the spectral branch before the forward
// FFT. two_sigma_clip clips to [mean - 2 sigma, mean + 2 sigma] per field.
struct stabilizer {
  enum class kind { none, tanh, hard_clip, two_sigma_clip };
  kind mode = kind::none;
  double clip = 5.0;

  static stabilizer none() { return {kind::none, 0.0}; }
  static stabilizer tanh() { return {kind::tanh, 0.0}; }
  static stabilizer hard_clip(double c);
  static stabilizer two_sigma_clip() { return {kind::two_sigma_clip, 0.0}; }
  static stabilizer from_token(const std::string& token);  // none|tanh|hardclip[:c]|2sigma
  std::string token() const;
};

// full: everything exact. mixed: forward FFT, contraction, and inverse FFT
// (plus their adjoints) run under `sys`; all else stays full precision.
struct precision_mode {
  bool mixed = false;
  precision_system sys;

  static precision_mode full() { return {}; }
  static precision_mode mixed_with(const precision_system& s);
  static precision_mode from_token(const std::string& token);  // "full" | "mixed:<sys>"
  std::string token() const;
};

// 25% mixed, 50% contraction-only ("amp"), 25% full, in that order.
struct precision_schedule {
  double f_mixed = 0.25;
  double f_amp = 0.50;
  double f_full = 0.25;
  precision_system sys = precision_system::half();

  enum class phase { mixed, amp, full };
  phase phase_of(int step, int total_steps) const;
  static const char* phase_name(phase p);
};

enum class forward_stage { pre_fft, fft, contraction, ifft, skip };
const char* stage_name(forward_stage s);

class stage_error : public std::runtime_error {
 public:
  stage_error(forward_stage stage, const std::string& what)
      : std::runtime_error(what), stage_(stage) {}
  forward_stage stage() const { return stage_; }

 private:
  forward_stage stage_;
};

// Batch of multi-channel fields on a shared grid, laid out [batch][channel][cell].
struct field_batch {
  fnolab::grid grid;
  int batch = 0;
  int channels = 0;
  std::vector<double> data;

  static field_batch zeros(const fnolab::grid& g, int batch, int channels);
  double& at(int b, int c, int64_t j) { return data[(size_t(b) * channels + c) * grid.cells + j]; }
  double at(int b, int c, int64_t j) const {
    return data[(size_t(b) * size_t(channels) + size_t(c)) * size_t(grid.cells) + size_t(j)];
  }
};

field_batch stabilize(const field_batch& x, const stabilizer& stab);

// One spectral convolution block: sigma(W v + iFFT(R . T_K(FFT(stabilize(v))))).
// R lives only on the kept modes (signed multi-indices), so a trained layer
// can be evaluated on finer grids of the same dimension.
struct spectral_layer {
  int channels_in = 1;
  int channels_out = 1;
  fnolab::grid grid;                       // grid the mask was built on
  std::vector<std::vector<int>> modes;     // kept signed multi-indices, ordered
  std::vector<cdouble> R;                  // [in][out][mode]
  std::vector<double> W;                   // [in][out]
  stabilizer stab;
  precision_mode precision;
  lowering_mode lowering = lowering_mode::hybrid(3);
  bool gelu = true;  // identity activation hook for analytic tests

  cdouble& r_at(int ci, int co, size_t mode) {
    return R[(size_t(ci) * size_t(channels_out) + size_t(co)) * modes.size() + mode];
  }
  cdouble r_at(int ci, int co, size_t mode) const {
    return R[(size_t(ci) * size_t(channels_out) + size_t(co)) * modes.size() + mode];
  }
  double& w_at(int ci, int co) { return W[size_t(ci) * size_t(channels_out) + size_t(co)]; }
  double w_at(int ci, int co) const { return W[size_t(ci) * size_t(channels_out) + size_t(co)]; }
};

spectral_layer make_layer(int channels_in, int channels_out, const grid& g, int mode_cutoff,
                          const stabilizer& stab, const precision_mode& precision,
                          uint64_t seed);

// Per-op precision placement for the three complex stages.
struct precision_placement {
  precision_system fft = precision_system::exact();
  precision_system contraction = precision_system::exact();
};
precision_placement placement_of(const precision_mode& mode);

struct forward_trace {
  field_batch input;
  field_batch stabilized;
  std::vector<cdouble> t_hat;  // [b][in][mode]
  std::vector<cdouble> u_hat;  // [b][out][mode]
  field_batch spectral;        // real part of the inverse transform
  field_batch pre_activation;  // W v + spectral
  field_batch output;
};

forward_trace forward(const spectral_layer& layer, const field_batch& v);
forward_trace forward(const spectral_layer& layer, const field_batch& v,
                      const precision_placement& place);

struct layer_grads {
  field_batch grad_input;
  std::vector<cdouble> grad_R;
  std::vector<double> grad_W;
};

layer_grads backward(const spectral_layer& layer, const forward_trace& trace,
                     const field_batch& upstream);
layer_grads backward(const spectral_layer& layer, const forward_trace& trace,
                     const field_batch& upstream, const precision_placement& place);

// Synthetic operator-learning task: multi-tone inputs, targets through the
// spectral multiplier 1 / (1 + 4 pi^2 |omega|^2).
struct toy_task {
  fnolab::grid grid;
  std::vector<scalar_field> train_inputs, train_targets;
  std::vector<scalar_field> test_inputs, test_targets;

  static toy_task poisson(int d, int m, int train_count, int test_count, uint64_t seed,
                          double input_scale = 1.0, int max_freq = 10);
};

scalar_field poisson_solve(const scalar_field& f);

double relative_l2(const field_batch& pred, const field_batch& target);

struct train_config {
  int steps = 500;
  double lr = 1e-4;
  double momentum = 0.9;
  int layers = 1;
  int mode_cutoff = 16;
  stabilizer stab;
  precision_mode mode;
  std::optional<precision_schedule> schedule;  // overrides `mode` when set
  uint64_t seed = 1;
};

struct trace_row {
  int step = 0;
  std::string phase;
  double loss = 0.0;
  std::string nonfinite_stage;  // empty while the run is healthy
};

struct training_trace {
  std::vector<trace_row> rows;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  bool diverged = false;
  int divergence_step = -1;
  std::string divergence_stage;
};

struct model {
  std::vector<spectral_layer> layers;
};

model make_model(const toy_task& task, const train_config& cfg);
field_batch model_forward(const model& mdl, const field_batch& v, const precision_placement& place);

training_trace train(const toy_task& task, const train_config& cfg, model* trained = nullptr);

// CSV layout: step,phase,loss,nonfinite_stage
void trace_to_csv(std::ostream& out, const training_trace& trace);

void save_model(std::ostream& out, const model& mdl);
model load_model(std::istream& in);

struct mode_ablation_row {
  int cutoff = 0;
  std::string precision;
  double final_test_loss = 0.0;
  double wall_ms = 0.0;
};
std::vector<mode_ablation_row> mode_ablation(const toy_task& task, const train_config& base,
                                             const std::vector<int>& cutoffs,
                                             const std::vector<std::string>& precisions);

struct freq_error_row {
  int freq = 0;
  double amplitude = 0.0;
  double abs_err = 0.0;
  double pct_err = 0.0;
};
struct freq_experiment_result {
  std::vector<freq_error_row> rows;
  double spearman_freq_vs_pct = 0.0;
};

freq_experiment_result frequency_error_run(const test_function& tones, int m);
freq_experiment_result synthetic_frequency_experiment(uint64_t seed, int max_freq = 10,
                                                      int m = 256);

}  // namespace fnolab
