#include "qek/statesim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "qek/rng.hpp"

namespace qek {

const char* gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::H: return "H";
    case GateKind::RZ: return "RZ";
    case GateKind::RY: return "RY";
    case GateKind::CRZ: return "CRZ";
  }
  return "?";
}

bool is_two_qubit(GateKind kind) { return kind == GateKind::CRZ; }

State::State(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw std::out_of_range("State: qubit count " + std::to_string(n_qubits) + " outside [1, " +
                            std::to_string(kMaxQubits) + "]");
  amplitudes_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  amplitudes_[0] = 1.0;
}

double State::norm_squared() const {
  double s = 0.0;
  for (const Complex& a : amplitudes_) s += std::norm(a);
  return s;
}

void State::check_qubit(int q) const {
  if (q < 0 || q >= n_qubits_)
    throw std::out_of_range("qubit index " + std::to_string(q) + " out of range for " +
                            std::to_string(n_qubits_) + " qubits");
}

void State::apply(const Gate& gate) {
  check_qubit(gate.target);
  const std::size_t tmask = std::size_t{1} << (n_qubits_ - 1 - gate.target);
  const std::size_t dim = amplitudes_.size();

  switch (gate.kind) {
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      for (std::size_t i = 0; i < dim; ++i) {
        if (i & tmask) continue;
        const Complex a0 = amplitudes_[i];
        const Complex a1 = amplitudes_[i | tmask];
        amplitudes_[i] = r * (a0 + a1);
        amplitudes_[i | tmask] = r * (a0 - a1);
      }
      break;
    }
    case GateKind::RY: {
      const double c = std::cos(gate.angle / 2.0);
      const double s = std::sin(gate.angle / 2.0);
      for (std::size_t i = 0; i < dim; ++i) {
        if (i & tmask) continue;
        const Complex a0 = amplitudes_[i];
        const Complex a1 = amplitudes_[i | tmask];
        amplitudes_[i] = c * a0 - s * a1;
        amplitudes_[i | tmask] = s * a0 + c * a1;
      }
      break;
    }
    case GateKind::RZ: {
      const Complex phase0 = std::polar(1.0, -gate.angle / 2.0);
      const Complex phase1 = std::polar(1.0, gate.angle / 2.0);
      for (std::size_t i = 0; i < dim; ++i) amplitudes_[i] *= (i & tmask) ? phase1 : phase0;
      break;
    }
    case GateKind::CRZ: {
      check_qubit(gate.control);
      if (gate.control == gate.target) throw std::invalid_argument("CRZ: control equals target");
      const std::size_t cmask = std::size_t{1} << (n_qubits_ - 1 - gate.control);
      const Complex phase0 = std::polar(1.0, -gate.angle / 2.0);
      const Complex phase1 = std::polar(1.0, gate.angle / 2.0);
      for (std::size_t i = 0; i < dim; ++i)
        if (i & cmask) amplitudes_[i] *= (i & tmask) ? phase1 : phase0;
      break;
    }
  }
}

void State::apply(std::span<const Gate> gates) {
  for (const Gate& g : gates) apply(g);
}

void State::apply_controlled_swap(int control, int a, int b) {
  check_qubit(control);
  check_qubit(a);
  check_qubit(b);
  if (control == a || control == b || a == b)
    throw std::invalid_argument("controlled swap: qubits must be distinct");
  const std::size_t cmask = std::size_t{1} << (n_qubits_ - 1 - control);
  const std::size_t amask = std::size_t{1} << (n_qubits_ - 1 - a);
  const std::size_t bmask = std::size_t{1} << (n_qubits_ - 1 - b);
  for (std::size_t i = 0; i < amplitudes_.size(); ++i) {
    // Visit each (a=1, b=0) index once and exchange it with its (a=0, b=1) partner.
    if ((i & cmask) && (i & amask) && !(i & bmask)) {
      std::swap(amplitudes_[i], amplitudes_[(i & ~amask) | bmask]);
    }
  }
}

State new_zero_state(int n_qubits) { return State(n_qubits); }

State apply_gate(State state, const Gate& gate) {
  state.apply(gate);
  return state;
}

State tensor_product(const State& high, const State& low) {
  State out(high.num_qubits() + low.num_qubits());
  auto dst = out.amplitudes();
  const auto h = high.amplitudes();
  const auto l = low.amplitudes();
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < l.size(); ++j) dst[i * l.size() + j] = h[i] * l[j];
  return out;
}

Complex inner_product(const State& a, const State& b) {
  if (a.num_qubits() != b.num_qubits())
    throw std::invalid_argument("inner_product: qubit counts differ (" +
                                std::to_string(a.num_qubits()) + " vs " +
                                std::to_string(b.num_qubits()) + ")");
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  Complex s{0.0, 0.0};
  for (std::size_t k = 0; k < x.size(); ++k) s += std::conj(x[k]) * y[k];
  return s;
}

double zero_probability(const State& state) { return std::norm(state.amplitudes()[0]); }

double qubit_zero_probability(const State& state, int qubit) {
  if (qubit < 0 || qubit >= state.num_qubits()) throw std::out_of_range("qubit_zero_probability: bad qubit");
  const std::size_t mask = std::size_t{1} << (state.num_qubits() - 1 - qubit);
  const auto amps = state.amplitudes();
  double p = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i)
    if (!(i & mask)) p += std::norm(amps[i]);
  return p;
}

double sample_probability(double p, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sampling needs at least one shot");
  p = std::clamp(p, 0.0, 1.0);
  Rng rng(seed);
  std::binomial_distribution<std::int64_t> draw(shots, p);
  return static_cast<double>(draw(rng)) / static_cast<double>(shots);
}

double sample_zero_probability(const State& state, std::int64_t shots, std::uint64_t seed) {
  return sample_probability(zero_probability(state), shots, seed);
}

}  // namespace qek
