#pragma once

// Parametric circuit templates for embedding kernels: feature and parameter
// layers, the three layer orderings, angle binding, adjoints, Loschmidt echo
// construction and the junction cancellation pass.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qek/statesim.hpp"

namespace qek {

enum class SourceKind { Const, Feature, Param, NegFeature, NegParam };

/// Where a gate angle comes from before binding.
struct AngleSource {
  SourceKind kind = SourceKind::Const;
  int index = 0;
  double value = 0.0;  // only meaningful for Const

  static AngleSource constant(double v) { return {SourceKind::Const, 0, v}; }
  static AngleSource feature(int i) { return {SourceKind::Feature, i, 0.0}; }
  static AngleSource param(int i) { return {SourceKind::Param, i, 0.0}; }

  bool is_feature() const { return kind == SourceKind::Feature || kind == SourceKind::NegFeature; }
  bool is_param() const { return kind == SourceKind::Param || kind == SourceKind::NegParam; }
  AngleSource negated() const;

  friend bool operator==(const AngleSource&, const AngleSource&) = default;
};

struct CircuitGate {
  GateKind kind = GateKind::H;
  int target = 0;
  int control = -1;
  AngleSource angle;
  /// The source the angle had before binding; equals `angle` in unbound templates.
  AngleSource origin;

  Gate resolved() const;
  friend bool operator==(const CircuitGate&, const CircuitGate&) = default;
};

struct Circuit {
  int n_qubits = 0;
  std::vector<CircuitGate> gates;

  std::size_t size() const { return gates.size(); }
  bool is_bound() const;
  void append(const Circuit& other);

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

enum class Architecture { DataFirst, DataLast, DataWeaved };

std::string_view architecture_name(Architecture arch);
/// Accepts "data-first", "data-last", "data-weaved"; throws std::invalid_argument otherwise.
Architecture parse_architecture(std::string_view name);

struct AnsatzSpec {
  Architecture arch = Architecture::DataWeaved;
  int n_qubits = 5;
  int n_param_layers = 1;

  /// 2 * n_qubits * n_param_layers.
  int param_count() const { return 2 * n_qubits * n_param_layers; }
  int feature_layer_count() const {
    return arch == Architecture::DataWeaved ? n_param_layers + 1 : n_param_layers;
  }
  void validate() const;
};

struct GateCounts {
  int one_qubit = 0;
  int two_qubit = 0;
  friend bool operator==(const GateCounts&, const GateCounts&) = default;
};

/// H on every qubit, then RZ(x_q) on every qubit.
Circuit feature_layer(int n_qubits);

/// RY(theta) on every qubit, then the CRZ ring q -> (q + 1) mod n.
/// Parameter indices start at 2 * n_qubits * layer_index.
Circuit param_layer(int n_qubits, int layer_index);

Circuit build_ansatz(const AnsatzSpec& spec);

/// Resolves every Feature/Param source to a constant; the pre-binding source is
/// kept in `origin`. Throws std::invalid_argument on length mismatch.
Circuit bind_angles(const Circuit& circuit, std::span<const double> x, std::span<const double> theta,
             double feature_scale = 1.0);

/// Reversed gate order with negated rotation sources.
Circuit adjoint(const Circuit& circuit);

/// U(x', theta) followed by U(x, theta)^dagger. Its zero-state probability is
/// the kernel value |<0|U(x)^dagger U(x')|0>|^2.
Circuit echo_circuit(const AnsatzSpec& spec, std::span<const double> x,
                     std::span<const double> x_prime, std::span<const double> theta,
                     double feature_scale = 1.0);

struct ErasureResult {
  Circuit circuit;
  int erased_gates = 0;
};

/// Cancels mirrored feature-independent gate pairs at the centre of an echo
/// circuit. Throws std::invalid_argument when the input is not a circuit
/// followed by its mirrored adjoint.
ErasureResult erase_redundant(const Circuit& echo);

GateCounts count_gates(const Circuit& circuit);

/// Applies a bound circuit to |0...0>.
State run(const Circuit& bound);

/// One gate per line: `KIND q[,c] source`. See README for the token grammar.
std::string dump(const Circuit& circuit);

}  // namespace qek
