// Serial reference vs OpenMP kernels: Gram matrix and finite-difference gradient.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "qek/align_train.hpp"
#include "qek/kernel.hpp"

using namespace qek;

template <typename F>
double seconds(F&& f, int repeats) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

int main(int argc, char** argv) {
  const int points = std::max(argc > 1 ? std::atoi(argv[1]) : 60, 5);
  const int layers = argc > 2 ? std::atoi(argv[2]) : 3;
  const AnsatzSpec spec{Architecture::DataWeaved, 5, layers};

  Rng rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix x(static_cast<std::size_t>(points), 5);
  for (double& v : x.data()) v = unit(rng);
  const auto theta = init_params(spec, 3);
  const KernelSetup setup{spec, theta, 1.0};

  std::printf("threads: %d, points: %d, layers: %d\n", omp_get_max_threads(), points, layers);

  KernelMatrix serial, parallel;
  const double t_serial = seconds([&] { serial = reference::kernel_matrix_serial(setup, x); }, 1);
  const double t_parallel = seconds([&] { parallel = kernel_matrix(setup, x); }, 3);
  double diff = 0.0;
  for (std::size_t i = 0; i < serial.size(); ++i)
    for (std::size_t j = 0; j < serial.size(); ++j) diff = std::max(diff, std::abs(serial(i, j) - parallel(i, j)));
  std::printf("gram   serial echo  %10.4f s\n", t_serial);
  std::printf("gram   openmp state %10.4f s  (speedup %.1fx, max |diff| %.2e)\n", t_parallel, t_serial / t_parallel,
              diff);

  const std::vector<std::size_t> rows{0, 1, 2, 3, 4};
  const LabeledSet batch{x.select_rows(rows), {0, 1, 0, 1, 2}};
  std::vector<double> g_serial, g_parallel;
  const double f_serial = seconds([&] { g_serial = reference::fd_gradient_serial(spec, theta, batch, 1e-3); }, 5);
  const double f_parallel = seconds([&] { g_parallel = fd_gradient(spec, theta, batch, 1e-3); }, 5);
  std::printf("fdgrad serial       %10.6f s\n", f_serial);
  std::printf("fdgrad openmp       %10.6f s  (speedup %.1fx, bit-identical: %s)\n", f_parallel, f_serial / f_parallel,
              g_serial == g_parallel ? "yes" : "no");
  return 0;
}
