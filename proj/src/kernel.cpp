#include "qek/kernel.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace qek {

KernelMatrix::KernelMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) throw std::invalid_argument("KernelMatrix: matrix is not square");
}

namespace {

void check_width(const KernelSetup& setup, std::size_t width) {
  if (width != static_cast<std::size_t>(setup.spec.n_qubits))
    throw std::invalid_argument("kernel: feature vectors have " + std::to_string(width) + " entries, ansatz has " +
                                std::to_string(setup.spec.n_qubits) + " qubits");
}

std::vector<State> embed_rows(const KernelSetup& setup, const Matrix& points, const Circuit& ansatz) {
  std::vector<State> states(points.rows(), State(setup.spec.n_qubits));
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    states[static_cast<std::size_t>(i)] =
        run(bind_angles(ansatz, points.row(static_cast<std::size_t>(i)), setup.theta, setup.feature_scale));
  }
  return states;
}

}  // namespace

State embed(const KernelSetup& setup, std::span<const double> x) {
  check_width(setup, x.size());
  return run(bind_angles(build_ansatz(setup.spec), x, setup.theta, setup.feature_scale));
}

double kernel_value(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime) {
  check_width(setup, x.size());
  check_width(setup, x_prime.size());
  return zero_probability(run(echo_circuit(setup.spec, x, x_prime, setup.theta, setup.feature_scale)));
}

KernelMatrix kernel_matrix(const KernelSetup& setup, const Matrix& points) {
  check_width(setup, points.cols());
  const Circuit ansatz = build_ansatz(setup.spec);
  if (setup.theta.size() != static_cast<std::size_t>(setup.spec.param_count()))
    throw std::invalid_argument("kernel_matrix: parameter count mismatch");
  const std::vector<State> states = embed_rows(setup, points, ansatz);

  const std::size_t n = points.rows();
  KernelMatrix k(n);
  const auto pairs = static_cast<std::ptrdiff_t>(n * n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t p = 0; p < pairs; ++p) {
    const std::size_t i = static_cast<std::size_t>(p) / n;
    const std::size_t j = static_cast<std::size_t>(p) % n;
    if (j < i) continue;
    const double v = i == j ? 1.0 : std::norm(inner_product(states[i], states[j]));
    k(i, j) = v;
    k(j, i) = v;
  }
  return k;
}

Matrix cross_kernel(const KernelSetup& setup, const Matrix& rows, const Matrix& columns) {
  check_width(setup, rows.cols());
  check_width(setup, columns.cols());
  const Circuit ansatz = build_ansatz(setup.spec);
  const std::vector<State> a = embed_rows(setup, rows, ansatz);
  const std::vector<State> b = embed_rows(setup, columns, ansatz);

  Matrix out(rows.rows(), columns.rows());
  const auto total = static_cast<std::ptrdiff_t>(rows.rows() * columns.rows());
  const std::size_t nc = columns.rows();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < total; ++p) {
    const std::size_t i = static_cast<std::size_t>(p) / nc;
    const std::size_t j = static_cast<std::size_t>(p) % nc;
    out(i, j) = std::norm(inner_product(a[i], b[j]));
  }
  return out;
}

namespace reference {

KernelMatrix kernel_matrix_serial(const KernelSetup& setup, const Matrix& points) {
  check_width(setup, points.cols());
  const std::size_t n = points.rows();
  KernelMatrix k(n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kernel_value(setup, points.row(i), points.row(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace reference

Matrix ideal_kernel(std::span<const int> labels) {
  const std::size_t n = labels.size();
  Matrix ideal(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ideal(i, j) = labels[i] == labels[j] ? 1.0 : -1.0;
  return ideal;
}

double target_alignment(const KernelMatrix& kernel, std::span<const int> labels) {
  const std::size_t n = kernel.size();
  if (labels.size() != n)
    throw std::invalid_argument("target_alignment: " + std::to_string(labels.size()) + " labels for a " +
                                std::to_string(n) + "x" + std::to_string(n) + " kernel");
  if (n < 2) throw std::invalid_argument("target_alignment: needs at least two points");
  double inner = 0.0;
  double frob = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double k = kernel(i, j);
      inner += (labels[i] == labels[j] ? k : -k);
      frob += k * k;
    }
  }
  if (frob == 0.0) throw DegenerateKernelError("target_alignment: kernel matrix is identically zero");
  return inner / (static_cast<double>(n) * std::sqrt(frob));
}

double loschmidt_estimate(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime,
                          std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("loschmidt_estimate: shots must be >= 1");
  return sample_zero_probability(run(echo_circuit(setup.spec, x, x_prime, setup.theta, setup.feature_scale)), shots,
                                 seed);
}

double swap_test_ancilla_zero_probability(const KernelSetup& setup, std::span<const double> x,
                                          std::span<const double> x_prime) {
  const int n = setup.spec.n_qubits;
  if (2 * n + 1 > kMaxQubits) throw std::out_of_range("swap test: register too large to simulate");
  State reg = tensor_product(State(1), tensor_product(embed(setup, x), embed(setup, x_prime)));
  reg.apply(Gate{GateKind::H, 0});
  for (int q = 0; q < n; ++q) reg.apply_controlled_swap(0, 1 + q, 1 + n + q);
  reg.apply(Gate{GateKind::H, 0});
  return qubit_zero_probability(reg, 0);
}

double swap_test_kernel(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime) {
  return 2.0 * swap_test_ancilla_zero_probability(setup, x, x_prime) - 1.0;
}

double swap_test_estimate(const KernelSetup& setup, std::span<const double> x, std::span<const double> x_prime,
                          std::int64_t shots, std::uint64_t seed) {
  const double p = swap_test_ancilla_zero_probability(setup, x, x_prime);
  const double p_hat = sample_probability(p, shots, seed);
  return std::clamp(2.0 * p_hat - 1.0, 0.0, 1.0);
}

void write_kernel_csv(std::ostream& out, const KernelMatrix& kernel) {
  out << "n=" << kernel.size() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    for (std::size_t j = 0; j < kernel.size(); ++j) {
      if (j) out << ',';
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, kernel(i, j));
      out.write(buf, end - buf);
    }
    out << '\n';
  }
}

KernelMatrix read_kernel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("n=", 0) != 0)
    throw std::runtime_error("kernel csv: missing 'n=<int>' header");
  const std::size_t n = std::stoul(line.substr(2));
  KernelMatrix k(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("kernel csv: truncated at row " + std::to_string(i));
    std::istringstream row(line);
    std::string cell;
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("kernel csv: short row " + std::to_string(i));
      k(i, j) = std::stod(cell);
    }
  }
  return k;
}

}  // namespace qek
