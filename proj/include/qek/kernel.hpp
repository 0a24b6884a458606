#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qek/circuit.hpp"
#include "qek/linalg.hpp"
#include "qek/statesim.hpp"

namespace qek {

/// Raised when a kernel matrix carries no signal (all entries zero).
class DegenerateKernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Square Gram matrix of fidelity kernel values.
class KernelMatrix {
 public:
  KernelMatrix() = default;
  explicit KernelMatrix(std::size_t n) : values_(n, n) {}
  explicit KernelMatrix(Matrix values);

  std::size_t size() const { return values_.rows(); }
  double& operator()(std::size_t i, std::size_t j) { return values_(i, j); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  const Matrix& matrix() const { return values_; }

  friend bool operator==(const KernelMatrix&, const KernelMatrix&) = default;

 private:
  Matrix values_;
};

/// Everything needed to evaluate the embedding kernel for one parameter vector.
struct KernelSetup {
  AnsatzSpec spec;
  std::span<const double> theta;
  double feature_scale = 1.0;
};

/// |Phi(x)> = U(x, theta)|0>.
State embed(const KernelSetup& setup, std::span<const double> x);

/// |<0|U(x)^dagger U(x')|0>|^2, simulated through the Loschmidt echo circuit.
double kernel_value(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime);

/// Gram matrix over the rows of `points`. Embeds each point once and takes
/// squared overlaps; points and pairs are distributed over OpenMP threads.
/// Every entry is computed independently, so the result does not depend on the
/// thread count. The diagonal is exactly 1.
KernelMatrix kernel_matrix(const KernelSetup& setup, const Matrix& points);

/// Rows index `rows`, columns index `columns`.
Matrix cross_kernel(const KernelSetup& setup, const Matrix& rows, const Matrix& columns);

namespace reference {
/// Serial pairwise construction through `kernel_value`; kept for testing the
/// parallel path.
KernelMatrix kernel_matrix_serial(const KernelSetup& setup, const Matrix& points);
}  // namespace reference

/// +1 where labels agree, -1 where they differ.
Matrix ideal_kernel(std::span<const int> labels);

/// <K, K_ideal>_F / (n * ||K||_F). Throws DegenerateKernelError when K is zero.
double target_alignment(const KernelMatrix& kernel, std::span<const int> labels);

/// Finite-shot Loschmidt echo estimate of the kernel value.
double loschmidt_estimate(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime,
                          std::int64_t shots, std::uint64_t seed);

/// Exact probability of the swap-test ancilla reading 0, from a simulated
/// (2n + 1)-qubit register: ancilla, then U(x)|0>, then U(x')|0>.
double swap_test_ancilla_zero_probability(const KernelSetup& setup, std::span<const double> x,
                                          std::span<const double> x_prime);

/// 2 P(ancilla = 0) - 1 computed exactly.
double swap_test_kernel(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime);

/// Finite-shot swap-test estimate 2 P_hat - 1, clamped to [0, 1].
double swap_test_estimate(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime,
                          std::int64_t shots, std::uint64_t seed);

/// Writes `n=<size>` followed by one comma-separated row per line.
void write_kernel_csv(std::ostream& out, const KernelMatrix& kernel);
KernelMatrix read_kernel_csv(std::istream& in);

}  // namespace qek
