#pragma once

// Dense statevector simulation for the small registers used by the embedding
// kernels. Qubit 0 is the most significant bit of a basis index, so on n
// qubits qubit q selects bit (n - 1 - q).

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace qek {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 20;

enum class GateKind { H, RZ, RY, CRZ };

const char* gate_name(GateKind kind);
bool is_two_qubit(GateKind kind);

/// A concrete gate with a resolved angle. `control` is only read for CRZ,
/// `angle` is ignored for H.
struct Gate {
  GateKind kind = GateKind::H;
  int target = 0;
  int control = -1;
  double angle = 0.0;
};

class State {
 public:
  /// |0...0> on `n_qubits` qubits; throws std::out_of_range outside [1, kMaxQubits].
  explicit State(int n_qubits);

  int num_qubits() const { return n_qubits_; }
  std::size_t dimension() const { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  std::span<Complex> amplitudes() { return amplitudes_; }

  double norm_squared() const;

  void apply(const Gate& gate);
  void apply(std::span<const Gate> gates);

  /// Fredkin gate: exchanges qubits `a` and `b` on the branch where `control` is 1.
  void apply_controlled_swap(int control, int a, int b);

 private:
  void check_qubit(int q) const;

  int n_qubits_;
  std::vector<Complex> amplitudes_;
};

State new_zero_state(int n_qubits);
State apply_gate(State state, const Gate& gate);

/// Kronecker product; `high` occupies the leading (most significant) qubits.
State tensor_product(const State& high, const State& low);

/// <a|b> = sum_k conj(a_k) b_k.
Complex inner_product(const State& a, const State& b);

/// |amplitude of |0...0>|^2.
double zero_probability(const State& state);

/// Marginal probability that `qubit` measures 0.
double qubit_zero_probability(const State& state, int qubit);

/// k / shots with k ~ Binomial(shots, p), drawn from a generator seeded by `seed`.
double sample_probability(double p, std::int64_t shots, std::uint64_t seed);

double sample_zero_probability(const State& state, std::int64_t shots, std::uint64_t seed);

}  // namespace qek
