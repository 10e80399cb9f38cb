#include "fnolab/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fnolab/contract.hpp"
#include "fnolab/error_lab.hpp"
#include "fnolab/fno.hpp"
#include "fnolab/util.hpp"

namespace fnolab::cli {

namespace {

using nlohmann::json;

class stage_timer {
 public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  void stop(const std::string& name) {
    const auto t1 = std::chrono::steady_clock::now();
    stages_.emplace_back(name, std::chrono::duration<double, std::milli>(t1 - t0_).count());
    t0_ = t1;
  }
  const std::vector<std::pair<std::string, double>>& stages() const { return stages_; }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, double>> stages_;
};

// Every run emits <out>.manifest.json: version, config echo, per-stage wall
// time, seed, and digests of the written data files.
void write_manifest(const std::string& out_path, const std::string& subcommand, uint64_t seed,
                    const std::map<std::string, std::string>& config, const stage_timer& timer,
                    const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "fnolab";
  m["version"] = tool_version;
  m["subcommand"] = subcommand;
  m["seed"] = seed;
  m["config"] = config;
  json stages = json::object();
  for (const auto& [name, ms] : timer.stages()) stages[name + "_ms"] = ms;
  m["stages"] = stages;
  json outs = json::array();
  for (const auto& path : outputs) {
    json o;
    o["path"] = path;
    o["fnv1a64"] = hex64(fnv1a64_file(path));
    outs.push_back(o);
  }
  m["outputs"] = outs;
  std::ofstream f(out_path + ".manifest.json");
  f << m.dump(2) << '\n';
}

std::string list_token(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string list_token(const std::vector<std::string>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

json report_row_json(const error_report& r) {
  json j;
  j["d"] = r.d;
  j["m"] = r.m;
  j["n"] = r.n;
  j["omega"] = r.omega;
  j["M"] = r.M;
  j["L"] = r.L;
  j["sys"] = r.sys;
  j["disc_err"] = r.disc_err;
  j["disc_upper"] = r.disc_upper;
  j["disc_lower_witness"] = r.disc_lower_witness;
  j["prec_err"] = r.prec_err;
  j["prec_upper"] = r.prec_upper;
  j["prec_lower_witness"] = r.prec_lower_witness;
  return j;
}

int cmd_bounds(const std::string& out, const std::string& format, uint64_t seed, int workers,
               const std::string& fn, const std::vector<std::string>& d_list,
               const std::vector<std::string>& m_list, const std::vector<std::string>& w_list,
               const std::vector<std::string>& sys_list, int tones, double alias_m, double c2,
               double c) {
  sweep_config cfg;
  cfg.dims.clear();
  cfg.ms.clear();
  cfg.omegas.clear();
  for (const auto& s : d_list)
    for (int v : parse_int_list(s)) cfg.dims.push_back(v);
  for (const auto& s : m_list)
    for (int v : parse_int_list(s)) cfg.ms.push_back(v);
  for (const auto& s : w_list)
    for (int v : parse_int_list(s)) cfg.omegas.push_back(v);
  cfg.fns = {fn};
  cfg.systems.clear();
  for (const auto& s : sys_list) cfg.systems.push_back(s);
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.max_tones = tones;
  cfg.alias_amplitude = alias_m;
  cfg.consts.c2 = c2;
  cfg.consts.c = c;

  if (fn == "alias")
    for (int d : cfg.dims)
      if (d != 1) throw CLI::ValidationError("--fn alias", "aliasing demo is d=1 only");

  stage_timer timer;
  const auto rows = bounds_sweep(cfg);
  timer.stop("sweep");

  const std::string violations_path = out + ".violations.csv";
  if (format == "json") {
    json doc = json::array();
    for (const auto& r : rows) doc.push_back(report_row_json(r));
    std::ofstream f(out);
    f << doc.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    write_error_report_csv(f, rows);
  }
  {
    std::ofstream f(violations_path);
    write_violations_csv(f, rows);
  }
  timer.stop("write");

  int violations = 0;
  for (const auto& r : rows) violations += (r.disc_violation || r.prec_violation) ? 1 : 0;
  std::cout << "bounds: " << rows.size() << " rows, " << violations << " violations -> " << out
            << "\n";

  std::map<std::string, std::string> echo{
      {"fn", fn},           {"d", list_token(cfg.dims)},
      {"m", list_token(cfg.ms)},  {"omega", list_token(cfg.omegas)},
      {"sys", list_token(cfg.systems)}, {"tones", std::to_string(tones)},
      {"format", format},
  };
  write_manifest(out, "bounds", seed, echo, timer, {out, violations_path});
  return 0;
}

void print_plan(std::ostream& os, const std::string& title, const einsum_plan& plan) {
  os << title << ":\n";
  for (size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    os << "  step " << i << ": (" << s.lhs << "," << s.rhs << ") " << s.sub_equation << "  shape [";
    for (size_t k = 0; k < s.result_shape.size(); ++k)
      os << (k ? "," : "") << s.result_shape[k];
    os << "] elems " << s.result_elems << " flops " << s.flops << "\n";
  }
  os << "  peak_intermediate_elems " << plan.peak_intermediate_elems << ", total_flops "
     << plan.total_flops << "\n";
}

json plan_json(const einsum_plan& plan, const lowering_mode& mode) {
  json doc;
  doc["equation"] = plan.spec.equation;
  json shapes = json::array();
  for (const auto& s : plan.spec.shapes) shapes.push_back(s);
  doc["shapes"] = shapes;
  json steps = json::array();
  for (const auto& s : plan.steps) {
    json j;
    j["lhs"] = s.lhs;
    j["rhs"] = s.rhs;
    j["sub"] = s.sub_equation;
    j["shape"] = s.result_shape;
    j["elems"] = s.result_elems;
    j["flops"] = s.flops;
    steps.push_back(std::move(j));
  }
  doc["steps"] = steps;
  doc["peak_elems"] = plan.peak_intermediate_elems;
  doc["flops"] = plan.total_flops;
  doc["mode"] = mode.token();
  return doc;
}

int cmd_plan(const std::string& out, const std::string& equation, const std::string& shapes_token,
             const std::string& mode_token, const std::string& sys_token, bool as_json,
             bool byte_weighted) {
  std::vector<std::vector<int64_t>> shapes;
  for (const auto& group : split(shapes_token, ';')) {
    std::vector<int64_t> shape;
    for (const auto& dim : split(group, 'x')) shape.push_back(std::stoll(dim));
    shapes.push_back(std::move(shape));
  }

  const einsum_spec spec = parse_einsum(equation, shapes);
  const lowering_mode mode = lowering_mode::from_token(mode_token);
  const precision_system sys = precision_system::from_token(sys_token);

  einsum_plan greedy = plan_greedy(spec);
  greedy.cache_key = cache_key(spec, sys, mode);
  einsum_plan optimal = plan_flop_optimal(spec);
  optimal.cache_key = greedy.cache_key;

  std::ostringstream body;
  if (as_json) {
    json doc = json::array({plan_json(greedy, mode), plan_json(optimal, mode)});
    body << doc.dump(2) << '\n';
  } else {
    print_plan(body, "greedy (memory)", greedy);
    print_plan(body, "flop-optimal", optimal);
    body << "peak comparison: greedy " << greedy.peak_intermediate_elems << " elems vs optimal "
         << optimal.peak_intermediate_elems << " elems\n";
    if (byte_weighted)
      body << "byte-weighted peaks (" << sys.token() << "): greedy "
           << peak_intermediate_bytes(greedy, sys) << " B vs optimal "
           << peak_intermediate_bytes(optimal, sys) << " B\n";
  }

  std::cout << body.str();
  if (!out.empty()) {
    std::ofstream f(out);
    f << body.str();
  }
  return 0;
}

int cmd_train(const std::string& out, const std::string& format, uint64_t seed,
              const std::string& mode_token, const std::string& schedule_token,
              const std::string& stab_token, int steps, double lr, double momentum, int layers,
              int mode_cutoff, int d, int m, int train_count, int test_count,
              double input_scale, const std::string& weights_path) {
  train_config cfg;
  cfg.steps = steps;
  cfg.lr = lr;
  cfg.momentum = momentum;
  cfg.layers = layers;
  cfg.mode_cutoff = mode_cutoff;
  cfg.stab = stabilizer::from_token(stab_token);
  cfg.seed = seed;
  if (!schedule_token.empty()) {
    if (schedule_token != "default")
      throw CLI::ValidationError("--schedule", "only the 'default' schedule is defined");
    precision_schedule sched;
    sched.sys = cfg.mode.mixed ? cfg.mode.sys : precision_system::half();
    if (mode_token.rfind("mixed:", 0) == 0)
      sched.sys = precision_system::from_token(mode_token.substr(6));
    cfg.schedule = sched;
  } else {
    cfg.mode = precision_mode::from_token(mode_token);
  }

  stage_timer timer;
  const toy_task task = toy_task::poisson(d, m, train_count, test_count, seed, input_scale);
  timer.stop("task");

  model trained;
  const training_trace trace = train(task, cfg, &trained);
  timer.stop("train");

  if (format == "json") {
    json doc;
    doc["rows"] = json::array();
    for (const auto& r : trace.rows) {
      json j;
      j["step"] = r.step;
      j["phase"] = r.phase;
      j["loss"] = r.loss;
      j["nonfinite_stage"] = r.nonfinite_stage;
      doc["rows"].push_back(std::move(j));
    }
    doc["final_train_loss"] = trace.final_train_loss;
    doc["final_test_loss"] = trace.final_test_loss;
    doc["diverged"] = trace.diverged;
    std::ofstream f(out);
    f << doc.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    trace_to_csv(f, trace);
  }
  std::vector<std::string> outputs{out};
  if (!weights_path.empty()) {
    std::ofstream wf(weights_path, std::ios::binary);
    save_model(wf, trained);
    outputs.push_back(weights_path);
  }
  timer.stop("write");

  if (trace.diverged)
    std::cout << "train: diverged at step " << trace.divergence_step << " (stage "
              << trace.divergence_stage << "), trace -> " << out << "\n";
  else
    std::cout << "train: " << trace.rows.size() << " steps, final test loss "
              << fmt_double(trace.final_test_loss) << " -> " << out << "\n";

  std::map<std::string, std::string> echo{
      {"mode", mode_token},       {"schedule", schedule_token},
      {"stabilizer", stab_token}, {"steps", std::to_string(steps)},
      {"lr", fmt_double(lr)},     {"layers", std::to_string(layers)},
      {"modes", std::to_string(mode_cutoff)},
      {"d", std::to_string(d)},   {"m", std::to_string(m)},
      {"input_scale", fmt_double(input_scale)},
      {"format", format},
  };
  write_manifest(out, "train", seed, echo, timer, outputs);
  return 0;
}

int cmd_spectrum(const std::string& out, const std::string& format, uint64_t seed, int seeds,
                 int max_freq, int m, bool alias, double alias_amp, int alias_omega) {
  stage_timer timer;
  if (alias) {
    const grid g = build_grid(1, m);
    const double err = aliasing_demo(alias_amp, alias_omega, g);
    timer.stop("alias");
    std::cout << "aliasing demo: M=" << fmt_double(alias_amp) << " omega=" << alias_omega
              << " m=" << m << " disc_error=" << fmt_double(err) << "\n";
    if (!out.empty()) {
      std::ofstream f(out);
      f << "M,omega,m,disc_error\n"
        << fmt_double(alias_amp) << ',' << alias_omega << ',' << m << ',' << fmt_double(err)
        << '\n';
      timer.stop("write");
      std::map<std::string, std::string> echo{{"alias", "1"},
                                              {"M", fmt_double(alias_amp)},
                                              {"omega", std::to_string(alias_omega)},
                                              {"m", std::to_string(m)}};
      write_manifest(out, "spectrum", seed, echo, timer, {out});
    }
    return 0;
  }

  std::vector<freq_experiment_result> runs;
  double trend_sum = 0.0;
  for (int i = 0; i < seeds; ++i) {
    runs.push_back(synthetic_frequency_experiment(seed + uint64_t(i), max_freq, m));
    trend_sum += runs.back().spearman_freq_vs_pct;
  }
  const double trend = seeds > 0 ? trend_sum / seeds : 0.0;
  timer.stop("experiment");

  if (format == "json") {
    json doc;
    doc["rows"] = json::array();
    for (const auto& run : runs)
      for (const auto& r : run.rows) {
        json j;
        j["freq"] = r.freq;
        j["amplitude"] = r.amplitude;
        j["abs_err"] = r.abs_err;
        j["pct_err"] = r.pct_err;
        doc["rows"].push_back(std::move(j));
      }
    doc["mean_spearman"] = trend;
    std::ofstream f(out);
    f << doc.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    f << "freq,amplitude,abs_err,pct_err\n";
    for (const auto& run : runs)
      for (const auto& r : run.rows)
        f << r.freq << ',' << fmt_double(r.amplitude) << ',' << fmt_double(r.abs_err) << ','
          << fmt_double(r.pct_err) << '\n';
  }
  timer.stop("write");

  std::cout << "spectrum: " << seeds << " seeds, mean Spearman(freq, pct_err) = "
            << fmt_double(trend) << " -> " << out << "\n";

  std::map<std::string, std::string> echo{{"seeds", std::to_string(seeds)},
                                          {"max_freq", std::to_string(max_freq)},
                                          {"m", std::to_string(m)},
                                          {"mean_spearman", fmt_double(trend)},
                                          {"format", format}};
  write_manifest(out, "spectrum", seed, echo, timer, {out});
  return 0;
}

int cmd_modes(const std::string& out, const std::string& format, uint64_t seed,
              const std::string& k_token, const std::string& precisions_token, int steps,
              double lr, int layers, int d, int m, int train_count, int test_count) {
  train_config base;
  base.steps = steps;
  base.lr = lr;
  base.layers = layers;
  base.seed = seed;

  stage_timer timer;
  const toy_task task = toy_task::poisson(d, m, train_count, test_count, seed);
  timer.stop("task");

  const std::vector<int> cutoffs = parse_int_list(k_token);
  const std::vector<std::string> precisions = split(precisions_token, ',');
  const auto rows = mode_ablation(task, base, cutoffs, precisions);
  timer.stop("ablation");

  if (format == "json") {
    json doc = json::array();
    for (const auto& r : rows) {
      json j;
      j["K"] = r.cutoff;
      j["precision"] = r.precision;
      j["final_test_loss"] = r.final_test_loss;
      j["wall_ms"] = r.wall_ms;
      doc.push_back(std::move(j));
    }
    std::ofstream f(out);
    f << doc.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    f << "K,precision,final_test_loss,wall_ms\n";
    for (const auto& r : rows)
      f << r.cutoff << ',' << r.precision << ',' << fmt_double(r.final_test_loss) << ','
        << fmt_double(r.wall_ms) << '\n';
  }
  timer.stop("write");

  std::cout << "modes: " << rows.size() << " configurations -> " << out << "\n";
  std::map<std::string, std::string> echo{{"K", k_token},
                                          {"precisions", precisions_token},
                                          {"steps", std::to_string(steps)},
                                          {"d", std::to_string(d)},
                                          {"m", std::to_string(m)},
                                          {"format", format}};
  write_manifest(out, "modes", seed, echo, timer, {out});
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"fnolab: mixed-precision Fourier-operator error lab"};
  app.set_config("--config", "", "flat key=value config file; flags override file values");
  app.require_subcommand(1);

  std::string out = "report.csv";
  std::string format = "csv";
  uint64_t seed = 1;
  int workers = 0;
  app.add_option("--out", out, "output data file")->capture_default_str();
  app.add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--workers", workers, "sweep worker pool size (0 = auto)")
      ->capture_default_str();

  // bounds
  auto* bounds = app.add_subcommand("bounds", "discretization/precision bound sweeps");
  std::vector<std::string> d_list{"1"}, m_list{"4"}, w_list{"1"}, sys_list{"exact"};
  std::string fn = "product";
  int tones = 5;
  double alias_amp = 1.0, c2 = 2.0, c = 4.0;
  bounds->add_option("--d", d_list, "dimensions, comma separated");
  bounds->add_option("--m", m_list, "subdivisions per axis, comma separated");
  bounds->add_option("--omega", w_list, "frequencies, comma separated");
  bounds->add_option("--fn", fn, "product|const[:y]|multitone|alias")->capture_default_str();
  bounds->add_option("--sys", sys_list, "precision tokens");
  bounds->add_option("--tones", tones, "multitone tone count")->capture_default_str();
  bounds->add_option("--M", alias_amp, "alias witness amplitude")->capture_default_str();
  bounds->add_option("--c2", c2, "discretization bound constant")->capture_default_str();
  bounds->add_option("--c", c, "precision bound constant")->capture_default_str();

  // plan
  auto* plan = app.add_subcommand("plan", "contraction planner comparison");
  std::string equation = "bixy,ioxy->boxy";
  std::string shapes_token = "2x4x8x8;4x4x8x8";
  std::string mode_token = "hybrid:3";
  std::string plan_sys = "half";
  bool as_json = false, byte_weighted = false;
  plan->add_option("--eq", equation, "einsum equation")->capture_default_str();
  plan->add_option("--shapes", shapes_token, "operand shapes, e.g. 2x4x8x8;4x4x8x8")
      ->capture_default_str();
  plan->add_option("--mode", mode_token, "allreal|pairwise|hybrid[:t]")->capture_default_str();
  plan->add_option("--sys", plan_sys, "precision token (cache key, byte weights)")
      ->capture_default_str();
  plan->add_flag("--json", as_json, "emit plans as a JSON array [greedy, flop-optimal]");
  plan->add_flag("--bytes", byte_weighted, "also report byte-weighted peaks");

  // train
  auto* train_cmd = app.add_subcommand("train", "toy spectral-layer training runs");
  std::string train_mode = "full";
  std::string schedule_token = "";
  std::string stab_token = "none";
  std::string weights_path = "";
  int steps = 500, layers = 1, mode_cutoff = 16, d = 1, m = 64;
  int train_count = 24, test_count = 8;
  double lr = 1e-4, momentum = 0.9, input_scale = 1.0;
  train_cmd->add_option("--mode", train_mode, "full|mixed:<sys>")->capture_default_str();
  train_cmd->add_option("--schedule", schedule_token, "precision schedule (default)");
  train_cmd->add_option("--stabilizer", stab_token, "none|tanh|hardclip[:c]|2sigma")
      ->capture_default_str();
  train_cmd->add_option("--steps", steps)->capture_default_str();
  train_cmd->add_option("--lr", lr)->capture_default_str();
  train_cmd->add_option("--momentum", momentum)->capture_default_str();
  train_cmd->add_option("--layers", layers)->capture_default_str();
  train_cmd->add_option("--modes", mode_cutoff, "frequency mode cutoff K")->capture_default_str();
  train_cmd->add_option("--d", d)->capture_default_str();
  train_cmd->add_option("--m", m)->capture_default_str();
  train_cmd->add_option("--train-count", train_count)->capture_default_str();
  train_cmd->add_option("--test-count", test_count)->capture_default_str();
  train_cmd->add_option("--input-scale", input_scale)->capture_default_str();
  train_cmd->add_option("--weights", weights_path, "also save model weights here");

  // spectrum
  auto* spectrum_cmd = app.add_subcommand("spectrum", "half-precision frequency-error study");
  int seeds = 20, max_freq = 10, spec_m = 256;
  bool alias = false;
  double spec_alias_amp = 1.0;
  int alias_omega = 1;
  spectrum_cmd->add_option("--seeds", seeds)->capture_default_str();
  spectrum_cmd->add_option("--max-freq", max_freq)->capture_default_str();
  spectrum_cmd->add_option("--m", spec_m)->capture_default_str();
  spectrum_cmd->add_flag("--alias", alias, "run the aliasing demo instead");
  spectrum_cmd->add_option("--M", spec_alias_amp, "alias amplitude")->capture_default_str();
  spectrum_cmd->add_option("--omega", alias_omega, "alias base frequency")->capture_default_str();

  // modes
  auto* modes_cmd = app.add_subcommand("modes", "frequency-mode ablation");
  std::string k_token = "4,8,16,32";
  std::string precisions_token = "full,mixed:half";
  int ab_steps = 120, ab_layers = 1, ab_d = 1, ab_m = 64;
  int ab_train = 16, ab_test = 8;
  double ab_lr = 1e-4;
  modes_cmd->add_option("--K", k_token, "mode cutoffs")->capture_default_str();
  modes_cmd->add_option("--precisions", precisions_token)->capture_default_str();
  modes_cmd->add_option("--steps", ab_steps)->capture_default_str();
  modes_cmd->add_option("--lr", ab_lr)->capture_default_str();
  modes_cmd->add_option("--layers", ab_layers)->capture_default_str();
  modes_cmd->add_option("--d", ab_d)->capture_default_str();
  modes_cmd->add_option("--m", ab_m)->capture_default_str();
  modes_cmd->add_option("--train-count", ab_train)->capture_default_str();
  modes_cmd->add_option("--test-count", ab_test)->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (bounds->parsed())
      return cmd_bounds(out, format, seed, workers, fn, d_list, m_list, w_list, sys_list, tones,
                        alias_amp, c2, c);
    if (plan->parsed())
      return cmd_plan(out == "report.csv" ? "" : out, equation, shapes_token, mode_token,
                      plan_sys, as_json, byte_weighted);
    if (train_cmd->parsed())
      return cmd_train(out, format, seed, train_mode, schedule_token, stab_token, steps, lr,
                       momentum, layers, mode_cutoff, d, m, train_count, test_count, input_scale,
                       weights_path);
    if (spectrum_cmd->parsed())
      return cmd_spectrum(out, format, seed, seeds, max_freq, spec_m, alias, spec_alias_amp,
                          alias_omega);
    if (modes_cmd->parsed())
      return cmd_modes(out, format, seed, k_token, precisions_token, ab_steps, ab_lr, ab_layers,
                       ab_d, ab_m, ab_train, ab_test);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace fnolab::cli
