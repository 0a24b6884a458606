#include "qek/circuit.hpp"

#include <charconv>
#include <stdexcept>

namespace qek {

AngleSource AngleSource::negated() const {
  switch (kind) {
    case SourceKind::Const: return constant(-value);
    case SourceKind::Feature: return {SourceKind::NegFeature, index, 0.0};
    case SourceKind::NegFeature: return {SourceKind::Feature, index, 0.0};
    case SourceKind::Param: return {SourceKind::NegParam, index, 0.0};
    case SourceKind::NegParam: return {SourceKind::Param, index, 0.0};
  }
  return *this;
}

Gate CircuitGate::resolved() const {
  if (angle.kind != SourceKind::Const) throw std::logic_error("CircuitGate::resolved: gate is not bound");
  return Gate{kind, target, control, angle.value};
}

bool Circuit::is_bound() const {
  for (const auto& g : gates)
    if (g.angle.kind != SourceKind::Const) return false;
  return true;
}

void Circuit::append(const Circuit& other) {
  if (other.n_qubits != n_qubits) throw std::invalid_argument("Circuit::append: qubit counts differ");
  gates.insert(gates.end(), other.gates.begin(), other.gates.end());
}

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::DataFirst: return "data-first";
    case Architecture::DataLast: return "data-last";
    case Architecture::DataWeaved: return "data-weaved";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "data-first") return Architecture::DataFirst;
  if (name == "data-last") return Architecture::DataLast;
  if (name == "data-weaved") return Architecture::DataWeaved;
  throw std::invalid_argument("unknown architecture '" + std::string(name) +
                              "' (expected data-first, data-last or data-weaved)");
}

void AnsatzSpec::validate() const {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw std::invalid_argument("ansatz: qubit count must be in [1, " + std::to_string(kMaxQubits) + "]");
  if (n_param_layers < 0) throw std::invalid_argument("ansatz: negative layer count");
}

namespace {

CircuitGate make_gate(GateKind kind, int target, int control, AngleSource src) {
  return CircuitGate{kind, target, control, src, src};
}

}  // namespace

Circuit feature_layer(int n_qubits) {
  Circuit c{n_qubits, {}};
  for (int q = 0; q < n_qubits; ++q) c.gates.push_back(make_gate(GateKind::H, q, -1, AngleSource::constant(0.0)));
  for (int q = 0; q < n_qubits; ++q) c.gates.push_back(make_gate(GateKind::RZ, q, -1, AngleSource::feature(q)));
  return c;
}

Circuit param_layer(int n_qubits, int layer_index) {
  Circuit c{n_qubits, {}};
  const int base = 2 * n_qubits * layer_index;
  for (int q = 0; q < n_qubits; ++q)
    c.gates.push_back(make_gate(GateKind::RY, q, -1, AngleSource::param(base + q)));
  if (n_qubits > 1) {
    for (int q = 0; q < n_qubits; ++q)
      c.gates.push_back(make_gate(GateKind::CRZ, (q + 1) % n_qubits, q, AngleSource::param(base + n_qubits + q)));
  }
  return c;
}

Circuit build_ansatz(const AnsatzSpec& spec) {
  spec.validate();
  const int n = spec.n_qubits;
  Circuit c{n, {}};
  switch (spec.arch) {
    case Architecture::DataFirst:
      for (int l = 0; l < spec.n_param_layers; ++l) {
        c.append(feature_layer(n));
        c.append(param_layer(n, l));
      }
      break;
    case Architecture::DataLast:
      for (int l = 0; l < spec.n_param_layers; ++l) {
        c.append(param_layer(n, l));
        c.append(feature_layer(n));
      }
      break;
    case Architecture::DataWeaved:
      c.append(feature_layer(n));
      for (int l = 0; l < spec.n_param_layers; ++l) {
        c.append(param_layer(n, l));
        c.append(feature_layer(n));
      }
      break;
  }
  return c;
}

namespace {

double resolve(const AngleSource& s, std::span<const double> x, std::span<const double> theta, double scale) {
  auto feature = [&](int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= x.size())
      throw std::invalid_argument("bind: feature index " + std::to_string(i) + " outside feature vector");
    return scale * x[static_cast<std::size_t>(i)];
  };
  auto param = [&](int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= theta.size())
      throw std::invalid_argument("bind: parameter index " + std::to_string(i) + " outside parameter vector");
    return theta[static_cast<std::size_t>(i)];
  };
  switch (s.kind) {
    case SourceKind::Const: return s.value;
    case SourceKind::Feature: return feature(s.index);
    case SourceKind::NegFeature: return -feature(s.index);
    case SourceKind::Param: return param(s.index);
    case SourceKind::NegParam: return -param(s.index);
  }
  return 0.0;
}

int max_param_index(const Circuit& c) {
  int m = -1;
  for (const auto& g : c.gates)
    if (g.angle.is_param()) m = std::max(m, g.angle.index);
  return m;
}

}  // namespace

Circuit bind_angles(const Circuit& circuit, std::span<const double> x, std::span<const double> theta,
             double feature_scale) {
  if (x.size() != static_cast<std::size_t>(circuit.n_qubits))
    throw std::invalid_argument("bind: feature vector has " + std::to_string(x.size()) + " entries, circuit has " +
                                std::to_string(circuit.n_qubits) + " qubits");
  if (static_cast<int>(theta.size()) < max_param_index(circuit) + 1)
    throw std::invalid_argument("bind: parameter vector too short (" + std::to_string(theta.size()) + ")");
  Circuit out = circuit;
  for (auto& g : out.gates) {
    g.angle = AngleSource::constant(resolve(g.angle, x, theta, feature_scale));
  }
  return out;
}

Circuit adjoint(const Circuit& circuit) {
  Circuit out{circuit.n_qubits, {}};
  out.gates.reserve(circuit.gates.size());
  for (auto it = circuit.gates.rbegin(); it != circuit.gates.rend(); ++it) {
    CircuitGate g = *it;
    if (g.kind != GateKind::H) {
      g.angle = g.angle.negated();
      g.origin = g.origin.negated();
    }
    out.gates.push_back(g);
  }
  return out;
}

Circuit echo_circuit(const AnsatzSpec& spec, std::span<const double> x, std::span<const double> x_prime,
                     std::span<const double> theta, double feature_scale) {
  if (theta.size() != static_cast<std::size_t>(spec.param_count()))
    throw std::invalid_argument("echo_circuit: expected " + std::to_string(spec.param_count()) +
                                " parameters, got " + std::to_string(theta.size()));
  const Circuit ansatz = build_ansatz(spec);
  Circuit echo = bind_angles(ansatz, x_prime, theta, feature_scale);
  echo.append(adjoint(bind_angles(ansatz, x, theta, feature_scale)));
  return echo;
}

namespace {

bool mirrors(const CircuitGate& forward, const CircuitGate& backward) {
  if (forward.kind != backward.kind || forward.target != backward.target) return false;
  if (is_two_qubit(forward.kind) && forward.control != backward.control) return false;
  if (forward.kind == GateKind::H) return true;
  return backward.origin == forward.origin.negated();
}

bool cancels(const CircuitGate& forward, const CircuitGate& backward) {
  if (forward.origin.is_feature()) return false;
  if (forward.kind == GateKind::H) return true;
  return backward.angle == forward.angle.negated();
}

}  // namespace

ErasureResult erase_redundant(const Circuit& echo) {
  const std::size_t total = echo.gates.size();
  if (total % 2 != 0) throw std::invalid_argument("erase_redundant: echo circuit has odd gate count");
  const std::size_t half = total / 2;
  for (std::size_t k = 0; k < half; ++k) {
    if (!mirrors(echo.gates[half - 1 - k], echo.gates[half + k]))
      throw std::invalid_argument("erase_redundant: gate " + std::to_string(half + k) +
                                  " is not the mirrored adjoint of gate " + std::to_string(half - 1 - k));
  }

  std::size_t k = 0;
  while (k < half && cancels(echo.gates[half - 1 - k], echo.gates[half + k])) ++k;

  ErasureResult result;
  result.circuit.n_qubits = echo.n_qubits;
  result.circuit.gates.assign(echo.gates.begin(), echo.gates.begin() + static_cast<std::ptrdiff_t>(half - k));
  result.circuit.gates.insert(result.circuit.gates.end(), echo.gates.begin() + static_cast<std::ptrdiff_t>(half + k),
                              echo.gates.end());
  result.erased_gates = static_cast<int>(2 * k);
  return result;
}

GateCounts count_gates(const Circuit& circuit) {
  GateCounts counts;
  for (const auto& g : circuit.gates) {
    if (is_two_qubit(g.kind))
      ++counts.two_qubit;
    else
      ++counts.one_qubit;
  }
  return counts;
}

State run(const Circuit& bound) {
  State s(bound.n_qubits);
  for (const auto& g : bound.gates) s.apply(g.resolved());
  return s;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string source_token(const AngleSource& s) {
  switch (s.kind) {
    case SourceKind::Const: return format_double(s.value);
    case SourceKind::Feature: return "x[" + std::to_string(s.index) + "]";
    case SourceKind::NegFeature: return "-x[" + std::to_string(s.index) + "]";
    case SourceKind::Param: return "t[" + std::to_string(s.index) + "]";
    case SourceKind::NegParam: return "-t[" + std::to_string(s.index) + "]";
  }
  return "?";
}

}  // namespace

std::string dump(const Circuit& circuit) {
  std::string out;
  for (const auto& g : circuit.gates) {
    out += gate_name(g.kind);
    out += ' ';
    out += std::to_string(g.target);
    if (is_two_qubit(g.kind)) out += "," + std::to_string(g.control);
    out += ' ';
    if (g.kind == GateKind::H) {
      out += '-';
    } else if (g.angle.kind == SourceKind::Const && g.origin.kind != SourceKind::Const) {
      out += source_token(g.origin) + "=" + format_double(g.angle.value);
    } else {
      out += source_token(g.angle);
    }
    out += '\n';
  }
  return out;
}

}  // namespace qek
