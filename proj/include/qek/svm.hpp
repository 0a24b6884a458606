#pragma once

// C-SVC dual solved by SMO over a precomputed kernel, plus one-vs-rest
// multiclass wrapping.

#include <span>
#include <vector>

#include "qek/linalg.hpp"

namespace qek {

struct SmoOptions {
  double tolerance = 1e-3;  // stop when the maximal KKT violation drops below this
  int max_passes = 1000;    // sweeps of n pair updates
};

struct BinarySvmModel {
  std::vector<double> alphas;
  std::vector<int> labels;  // +1 / -1 per training point
  double bias = 0.0;
  double c = 1.0;
  int iterations = 0;
  bool converged = false;
};

/// Maximises sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij subject to 0 <= a_i <= C
/// and sum(a_i y_i) = 0. Throws std::invalid_argument when `y` has one class.
BinarySvmModel solve_dual(const Matrix& kernel, std::span<const int> y, double c = 1.0,
                          const SmoOptions& options = {});

/// The maximised dual objective for a given alpha vector.
double dual_objective(const Matrix& kernel, std::span<const int> y, std::span<const double> alphas);

/// sum_i a_i y_i k_row[i] + b.
double decision_value(const BinarySvmModel& model, std::span<const double> kernel_row);

struct OvrModel {
  std::vector<int> classes;  // ascending
  std::vector<BinarySvmModel> models;
};

OvrModel fit_ovr(const Matrix& train_kernel, std::span<const int> labels, double c = 1.0,
                 const SmoOptions& options = {});

/// One label per row of `cross_kernel` (test x train). Ties go to the smallest class id.
std::vector<int> predict(const OvrModel& model, const Matrix& cross_kernel);

double accuracy(std::span<const int> predicted, std::span<const int> actual);

}  // namespace qek
