#pragma once

// Test-only oracle: builds the full 2^n x 2^n unitary of a bound circuit from
// Kronecker products, independent of the in-place statevector kernels.

#include <Eigen/Dense>
#include <complex>

#include "qek/circuit.hpp"

namespace oracle {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Mat single(qek::GateKind kind, double angle) {
  using C = std::complex<double>;
  Mat m(2, 2);
  switch (kind) {
    case qek::GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      m << r, r, r, -r;
      break;
    }
    case qek::GateKind::RZ:
    case qek::GateKind::CRZ:
      m << std::exp(C(0, -angle / 2)), 0, 0, std::exp(C(0, angle / 2));
      break;
    case qek::GateKind::RY:
      m << std::cos(angle / 2), -std::sin(angle / 2), std::sin(angle / 2), std::cos(angle / 2);
      break;
  }
  return m;
}

/// Operator acting with `op` on qubit `q` (qubit 0 = leftmost factor).
inline Mat lift(const Mat& op, int q, int n) {
  Mat out = Mat::Identity(1, 1);
  for (int k = 0; k < n; ++k) out = kron(out, k == q ? op : Mat(Mat::Identity(2, 2)));
  return out;
}

inline Mat gate_matrix(const qek::Gate& g, int n) {
  if (g.kind != qek::GateKind::CRZ) return lift(single(g.kind, g.angle), g.target, n);
  Mat p0(2, 2), p1(2, 2);
  p0 << 1, 0, 0, 0;
  p1 << 0, 0, 0, 1;
  return lift(p0, g.control, n) + lift(p1, g.control, n) * lift(single(g.kind, g.angle), g.target, n);
}

inline Mat unitary(const qek::Circuit& bound) {
  const int n = bound.n_qubits;
  Mat u = Mat::Identity(1 << n, 1 << n);
  for (const auto& g : bound.gates) u = gate_matrix(g.resolved(), n) * u;
  return u;
}

inline Vec embed(const qek::Circuit& bound) { return unitary(bound).col(0); }

}  // namespace oracle
