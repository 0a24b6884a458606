#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>

#include "qek/circuit.hpp"
#include "qek/rng.hpp"

using namespace qek;

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) v.empty() ? void() : void(x = d(rng));
  return v;
}

std::string kinds(const Circuit& c) {
  std::string s;
  for (const auto& g : c.gates) {
    s += gate_name(g.kind);
    s += std::to_string(g.target);
    if (g.kind == GateKind::CRZ) s += "<" + std::to_string(g.control);
    s += ' ';
  }
  return s;
}

double echo_probability(const AnsatzSpec& spec, std::span<const double> x, std::span<const double> xp,
                        std::span<const double> theta) {
  return zero_probability(run(echo_circuit(spec, x, xp, theta)));
}

}  // namespace

TEST_CASE("feature layer") {
  const Circuit f3 = feature_layer(3);
  CHECK(kinds(f3) == "H0 H1 H2 RZ0 RZ1 RZ2 ");
  for (int q = 0; q < 3; ++q) CHECK(f3.gates[3 + q].angle == AngleSource::feature(q));
  CHECK(kinds(feature_layer(1)) == "H0 RZ0 ");
  CHECK(count_gates(feature_layer(5)) == GateCounts{10, 0});
}

TEST_CASE("parameter layer") {
  const Circuit p3 = param_layer(3, 0);
  // CRZ written target<control.
  CHECK(kinds(p3) == "RY0 RY1 RY2 CRZ1<0 CRZ2<1 CRZ0<2 ");
  for (int k = 0; k < 6; ++k) CHECK(p3.gates[k].angle == AngleSource::param(k));
  CHECK(kinds(param_layer(1, 0)) == "RY0 ");
  CHECK(kinds(param_layer(2, 0)) == "RY0 RY1 CRZ1<0 CRZ0<1 ");

  const Circuit p5 = param_layer(5, 2);
  std::set<int> idx;
  for (const auto& g : p5.gates) idx.insert(g.angle.index);
  CHECK(*idx.begin() == 20);
  CHECK(*idx.rbegin() == 29);
  CHECK(idx.size() == 10);
}

TEST_CASE("ansatz layouts") {
  const Circuit f = feature_layer(2);
  const Circuit p0 = param_layer(2, 0);
  SUBCASE("data-first L=1 is F then P") {
    Circuit expected = f;
    expected.append(p0);
    CHECK(build_ansatz({Architecture::DataFirst, 2, 1}) == expected);
  }
  SUBCASE("data-last L=1 is P then F") {
    Circuit expected = p0;
    expected.append(f);
    CHECK(build_ansatz({Architecture::DataLast, 2, 1}) == expected);
  }
  SUBCASE("degenerate L=0") {
    CHECK(build_ansatz({Architecture::DataWeaved, 2, 0}) == f);
    CHECK(build_ansatz({Architecture::DataFirst, 2, 0}).gates.empty());
    CHECK(build_ansatz({Architecture::DataLast, 2, 0}).gates.empty());
  }
  SUBCASE("weaved carries one extra feature layer") {
    auto feature_layers = [](const Circuit& c) {
      int h = 0;
      for (const auto& g : c.gates) h += g.kind == GateKind::H;
      return h / 5;
    };
    CHECK(feature_layers(build_ansatz({Architecture::DataWeaved, 5, 2})) == 3);
    CHECK(feature_layers(build_ansatz({Architecture::DataLast, 5, 2})) == 2);
    CHECK(AnsatzSpec{Architecture::DataWeaved, 5, 2}.feature_layer_count() == 3);
    CHECK(AnsatzSpec{Architecture::DataLast, 5, 2}.feature_layer_count() == 2);
  }
  CHECK_THROWS_AS(build_ansatz({Architecture::DataFirst, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(build_ansatz({Architecture::DataFirst, 2, -1}), std::invalid_argument);
}

TEST_CASE("parameter count matches referenced indices") {
  for (auto arch : {Architecture::DataFirst, Architecture::DataLast, Architecture::DataWeaved})
    for (int n = 1; n <= 6; ++n)
      for (int l = 0; l <= 5; ++l) {
        const AnsatzSpec spec{arch, n, l};
        std::set<int> idx;
        for (const auto& g : build_ansatz(spec).gates)
          if (g.angle.is_param()) idx.insert(g.angle.index);
        // n = 1 has no ring, so its CRZ slots are never referenced.
        const int expected = n == 1 ? n * l : spec.param_count();
        CHECK(static_cast<int>(idx.size()) == expected);
        if (n > 1 && l > 0) CHECK(*idx.rbegin() == spec.param_count() - 1);
      }
}

TEST_CASE("binding") {
  const AnsatzSpec spec{Architecture::DataWeaved, 3, 1};
  const Circuit ansatz = build_ansatz(spec);
  SUBCASE("zero inputs give zero angles") {
    const std::vector<double> x(3, 0.0), theta(6, 0.0);
    const Circuit b = bind_angles(ansatz, x, theta);
    CHECK(b.is_bound());
    for (const auto& g : b.gates) CHECK(g.angle.value == 0.0);
  }
  SUBCASE("unit scale") {
    const std::vector<double> x{0.7, 0.1, 0.2}, theta(6, 0.0);
    const Circuit b = bind_angles(ansatz, x, theta, 1.0);
    CHECK(b.gates[3].kind == GateKind::RZ);
    CHECK(b.gates[3].angle.value == 0.7);
    CHECK(b.gates[3].origin == AngleSource::feature(0));
  }
  SUBCASE("2 pi scale") {
    const std::vector<double> x{0.5, 0.0, 0.0}, theta(6, 0.0);
    const Circuit b = bind_angles(ansatz, x, theta, 2 * std::numbers::pi);
    CHECK(b.gates[3].angle.value == doctest::Approx(std::numbers::pi).epsilon(1e-15));
  }
  SUBCASE("negated sources") {
    const std::vector<double> x{0.5, 0.25, 0.0}, theta{1, 2, 3, 4, 5, 6};
    const Circuit b = bind_angles(adjoint(ansatz), x, theta);
    for (const auto& g : b.gates) {
      if (g.origin.kind == SourceKind::NegFeature) CHECK(g.angle.value == -x[static_cast<std::size_t>(g.origin.index)]);
      if (g.origin.kind == SourceKind::NegParam) CHECK(g.angle.value == -theta[static_cast<std::size_t>(g.origin.index)]);
    }
  }
  const std::vector<double> short_x(2, 0.0), theta(6, 0.0), short_theta(5, 0.0);
  CHECK_THROWS_AS(bind_angles(ansatz, short_x, theta), std::invalid_argument);
  CHECK_THROWS_AS(bind_angles(ansatz, std::vector<double>(3, 0.0), short_theta), std::invalid_argument);
}

TEST_CASE("adjoint") {
  Circuit h{1, {}};
  h.gates.push_back({GateKind::H, 0, -1, AngleSource::constant(0), AngleSource::constant(0)});
  CHECK(adjoint(h) == h);

  Circuit c{1, {}};
  c.gates.push_back({GateKind::RZ, 0, -1, AngleSource::feature(0), AngleSource::feature(0)});
  c.gates.push_back({GateKind::RY, 0, -1, AngleSource::param(0), AngleSource::param(0)});
  const Circuit a = adjoint(c);
  REQUIRE(a.size() == 2);
  CHECK(a.gates[0].kind == GateKind::RY);
  CHECK(a.gates[0].angle.kind == SourceKind::NegParam);
  CHECK(a.gates[1].kind == GateKind::RZ);
  CHECK(a.gates[1].angle.kind == SourceKind::NegFeature);

  Rng rng(3);
  for (auto arch : {Architecture::DataFirst, Architecture::DataLast, Architecture::DataWeaved}) {
    const AnsatzSpec spec{arch, 3, 2};
    const Circuit ansatz = build_ansatz(spec);
    CHECK(adjoint(adjoint(ansatz)) == ansatz);
    const auto x = uniform(3, 0, 1, rng);
    const auto theta = uniform(12, 0, 6.28, rng);
    Circuit round = bind_angles(ansatz, x, theta);
    round.append(bind_angles(adjoint(ansatz), x, theta));
    const State s = run(round);
    CHECK(std::abs(s.amplitudes()[0] - Complex(1, 0)) < 1e-12);
  }
}

TEST_CASE("echo circuit") {
  Rng rng(4);
  const AnsatzSpec spec{Architecture::DataLast, 3, 2};
  const auto x = uniform(3, 0, 1, rng);
  const auto xp = uniform(3, 0, 1, rng);
  const auto theta = uniform(12, 0, 6.28, rng);
  CHECK(echo_probability(spec, x, x, theta) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(echo_circuit(spec, x, xp, theta).size() == 2 * build_ansatz(spec).size());

  const AnsatzSpec single{Architecture::DataWeaved, 1, 0};
  const std::vector<double> zero{0.0}, pi{std::numbers::pi}, none;
  CHECK(echo_probability(single, zero, pi, none) < 1e-30);
  CHECK_THROWS_AS(echo_circuit(spec, x, xp, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("erasure examples") {
  Rng rng(5);
  const auto x = uniform(3, 0, 1, rng);
  const auto xp = uniform(3, 0, 1, rng);
  SUBCASE("data-first L=1 loses its whole parameter layer") {
    const AnsatzSpec spec{Architecture::DataFirst, 3, 1};
    const auto theta = uniform(6, 0, 6.28, rng);
    const ErasureResult r = erase_redundant(echo_circuit(spec, x, xp, theta));
    CHECK(r.erased_gates == 2 * static_cast<int>(param_layer(3, 0).size()));
    // What remains is F(x') F(x)^dagger.
    const AnsatzSpec bare{Architecture::DataWeaved, 3, 0};
    CHECK(r.circuit == echo_circuit(bare, x, xp, {}));
  }
  SUBCASE("data-weaved has nothing to erase") {
    const AnsatzSpec spec{Architecture::DataWeaved, 3, 1};
    CHECK(erase_redundant(echo_circuit(spec, x, xp, uniform(6, 0, 6.28, rng))).erased_gates == 0);
  }
  SUBCASE("data-last has nothing to erase") {
    const AnsatzSpec spec{Architecture::DataLast, 3, 2};
    CHECK(erase_redundant(echo_circuit(spec, x, xp, uniform(12, 0, 6.28, rng))).erased_gates == 0);
  }
  SUBCASE("data-first L=3 reduces to the data-weaved L=2 echo") {
    const auto theta = uniform(18, 0, 6.28, rng);
    const ErasureResult r = erase_redundant(echo_circuit({Architecture::DataFirst, 3, 3}, x, xp, theta));
    const Circuit weaved =
        echo_circuit({Architecture::DataWeaved, 3, 2}, x, xp, std::span<const double>(theta).first(12));
    CHECK(r.circuit == weaved);
  }
  SUBCASE("unbound templates cancel too") {
    const Circuit a = build_ansatz({Architecture::DataFirst, 2, 1});
    Circuit echo = a;
    echo.append(adjoint(a));
    CHECK(erase_redundant(echo).erased_gates == 2 * static_cast<int>(param_layer(2, 0).size()));
  }
}

TEST_CASE("erasure rejects malformed input") {
  const Circuit a = build_ansatz({Architecture::DataFirst, 2, 1});
  Circuit odd = a;
  odd.gates.push_back(a.gates.front());
  Circuit echo = a;
  echo.append(adjoint(a));
  CHECK_THROWS_AS(erase_redundant(odd), std::invalid_argument);
  Circuit broken = echo;
  broken.gates.back().target = 1;
  CHECK_THROWS_AS(erase_redundant(broken), std::invalid_argument);
  Circuit doubled = a;
  doubled.append(a);  // not mirrored
  CHECK_THROWS_AS(erase_redundant(doubled), std::invalid_argument);
}

TEST_CASE("erasure preserves the echo value on random bindings") {
  Rng rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto arch = static_cast<Architecture>(trial % 3);
    const int n = 1 + trial % 4;
    const int l = trial % 4;
    const AnsatzSpec spec{arch, n, l};
    const auto x = uniform(static_cast<std::size_t>(n), 0, 1, rng);
    const auto xp = uniform(static_cast<std::size_t>(n), 0, 1, rng);
    const auto theta = uniform(static_cast<std::size_t>(spec.param_count()), 0, 6.28, rng);
    const Circuit echo = echo_circuit(spec, x, xp, theta);
    const double before = zero_probability(run(echo));
    const double after = zero_probability(run(erase_redundant(echo).circuit));
    worst = std::max(worst, std::abs(before - after));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("data-first equals data-weaved with one layer fewer") {
  Rng rng(7);
  double worst = 0.0;
  for (int l = 1; l <= 4; ++l)
    for (int trial = 0; trial < 25; ++trial) {
      const int n = 2 + trial % 3;
      const AnsatzSpec first{Architecture::DataFirst, n, l};
      const AnsatzSpec weaved{Architecture::DataWeaved, n, l - 1};
      const auto x = uniform(static_cast<std::size_t>(n), 0, 1, rng);
      const auto xp = uniform(static_cast<std::size_t>(n), 0, 1, rng);
      const auto theta = uniform(static_cast<std::size_t>(first.param_count()), 0, 6.28, rng);
      const double a = echo_probability(first, x, xp, theta);
      const double b = echo_probability(weaved, x, xp,
                                        std::span<const double>(theta).first(static_cast<std::size_t>(weaved.param_count())));
      worst = std::max(worst, std::abs(a - b));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("data-first L=1 ignores its parameters") {
  Rng rng(8);
  const AnsatzSpec spec{Architecture::DataFirst, 3, 1};
  const auto x = uniform(3, 0, 1, rng);
  const auto xp = uniform(3, 0, 1, rng);
  const double base = echo_probability(spec, x, xp, std::vector<double>(6, 0.0));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial)
    worst = std::max(worst, std::abs(echo_probability(spec, x, xp, uniform(6, 0, 6.28, rng)) - base));
  CHECK(worst < 1e-10);
}

TEST_CASE("gate counts") {
  CHECK(count_gates(build_ansatz({Architecture::DataLast, 10, 3})) == GateCounts{90, 30});
  CHECK(count_gates(build_ansatz({Architecture::DataWeaved, 10, 2})) == GateCounts{80, 20});
  CHECK(count_gates(Circuit{3, {}}) == GateCounts{0, 0});
}

TEST_CASE("debug dump format") {
  const Circuit a = build_ansatz({Architecture::DataFirst, 2, 1});
  CHECK(dump(a) ==
        "H 0 -\nH 1 -\nRZ 0 x[0]\nRZ 1 x[1]\nRY 0 t[0]\nRY 1 t[1]\nCRZ 1,0 t[2]\nCRZ 0,1 t[3]\n");
  const std::vector<double> x{0.5, 0.25}, theta{1, 2, 3, 4};
  const std::string bound = dump(adjoint(bind_angles(a, x, theta)));
  CHECK(bound.rfind("CRZ 0,1 -t[3]=-4\n", 0) == 0);
  CHECK(bound.find("RZ 1 -x[1]=-0.25\n") != std::string::npos);
}
