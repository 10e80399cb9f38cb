// Compares the OpenMP kernels against their serial references: quantized and
// exact transforms, and the bounds sweep with one vs all workers. Prints one
// CSV row per kernel/size.

#include <chrono>
#include <cstdio>
#include <string>

#include "fnolab/error_lab.hpp"
#include "fnolab/fno.hpp"
#include "fnolab/grid.hpp"
#include "fnolab/spectral.hpp"
#include "fnolab/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

template <typename F>
double time_ms(F&& fn, int reps) {
  const auto t0 = clock_type::now();
  for (int i = 0; i < reps; ++i) fn();
  return ms_since(t0) / reps;
}

void bench_dft(int m, const fnolab::precision_system& sys, int reps) {
  const auto g = fnolab::build_grid(1, m);
  const auto field = fnolab::sample(fnolab::test_function::multi_tone_random(7, 8), g);
  double checksum = 0;
  const double serial_ms = time_ms(
      [&] { checksum += std::abs(fnolab::dft_serial(field, sys).coeffs[1]); }, reps);
  const double parallel_ms =
      time_ms([&] { checksum += std::abs(fnolab::dft(field, sys).coeffs[1]); }, reps);
  std::printf("dft_%s,%d,%.3f,%.3f,%.2f\n", sys.token().c_str(), m, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
  (void)checksum;
}

void bench_sweep(int workers, int reps) {
  fnolab::sweep_config cfg;
  cfg.dims = {1, 2};
  cfg.ms = {4, 8, 16};
  cfg.omegas = {1, 2};
  cfg.fns = {"product"};
  cfg.systems = {"half"};
  cfg.workers = workers;
  double checksum = 0;
  const double ms =
      time_ms([&] { checksum += fnolab::bounds_sweep(cfg).front().disc_err; }, reps);
  std::printf("bounds_sweep_w%d,%zu,%.3f,,\n", workers, cfg.dims.size() * cfg.ms.size() * 2,
              ms);
  (void)checksum;
}

}  // namespace

int main(int argc, char** argv) {
  const bool smoke = argc > 1 && std::string(argv[1]) == "--smoke";
  const int reps = smoke ? 1 : 5;

#ifdef _OPENMP
  std::printf("# threads=%d\n", omp_get_max_threads());
#else
  std::printf("# threads=1 (no OpenMP)\n");
#endif
  std::printf("kernel,size,serial_ms,parallel_ms,speedup\n");

  bench_dft(smoke ? 64 : 256, fnolab::precision_system::exact(), reps);
  bench_dft(smoke ? 64 : 256, fnolab::precision_system::half(), reps);
  if (!smoke) bench_dft(512, fnolab::precision_system::half(), 2);
  bench_sweep(1, reps);
  bench_sweep(0, reps);
  return 0;
}
