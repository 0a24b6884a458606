#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "qek/align_train.hpp"
#include "qek/kernel.hpp"

using namespace qek;

namespace {

LabeledSet random_set(std::size_t rows, int width, int classes, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LabeledSet s{Matrix(rows, static_cast<std::size_t>(width)), {}};
  for (double& v : s.features.data()) v = unit(rng) * std::numbers::pi;
  for (std::size_t i = 0; i < rows; ++i) s.labels.push_back(static_cast<int>(i) % classes);
  return s;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("init_params") {
  CHECK(init_params(AnsatzSpec{Architecture::DataFirst, 3, 0}, 1).empty());
  const AnsatzSpec spec{Architecture::DataLast, 5, 3};
  const auto a = init_params(spec, 7);
  CHECK(a.size() == 30);
  CHECK(a == init_params(spec, 7));
  CHECK(a != init_params(spec, 8));
  for (double v : a) {
    CHECK(v >= 0.0);
    CHECK(v < 2 * std::numbers::pi);
  }
  const auto smaller = init_params(AnsatzSpec{Architecture::DataWeaved, 5, 1}, 7);
  CHECK(std::equal(smaller.begin(), smaller.end(), a.begin()));
}

TEST_CASE("batch alignment examples") {
  const AnsatzSpec spec{Architecture::DataWeaved, 2, 1};
  const auto theta = init_params(spec, 3);
  SUBCASE("two identical points with one label") {
    const LabeledSet batch{Matrix::from_rows({{0.4, 1.1}, {0.4, 1.1}}), {2, 2}};
    CHECK(batch_alignment(spec, theta, batch) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single-label batches are positive") {
    Rng rng(41);
    for (int t = 0; t < 20; ++t) {
      LabeledSet batch = random_set(5, 2, 1, rng);
      CHECK(batch_alignment(spec, init_params(spec, static_cast<std::uint64_t>(t)), batch) > 0.0);
    }
  }
  SUBCASE("data-first single layer ignores its parameters") {
    Rng rng(42);
    const AnsatzSpec first{Architecture::DataFirst, 3, 1};
    const LabeledSet batch = random_set(6, 3, 2, rng);
    const double base = batch_alignment(first, init_params(first, 0), batch);
    for (std::uint64_t s = 1; s < 20; ++s)
      CHECK(std::abs(batch_alignment(first, init_params(first, s), batch) - base) < 1e-12);
  }
  SUBCASE("too small a batch") {
    const LabeledSet batch{Matrix::from_rows({{0.4, 1.1}}), {0}};
    CHECK_THROWS_AS(batch_alignment(spec, theta, batch), std::invalid_argument);
  }
}

TEST_CASE("finite-difference gradient") {
  Rng rng(43);
  SUBCASE("data-first single layer has no gradient") {
    for (int n = 1; n <= 4; ++n) {
      const AnsatzSpec spec{Architecture::DataFirst, n, 1};
      const LabeledSet batch = random_set(5, n, 2, rng);
      CHECK(norm(fd_gradient(spec, init_params(spec, 5), batch, 1e-3)) < 1e-8);
    }
  }
  SUBCASE("no parameters") {
    const AnsatzSpec spec{Architecture::DataLast, 2, 0};
    CHECK(fd_gradient(spec, {}, random_set(4, 2, 2, rng), 1e-3).empty());
  }
  SUBCASE("step size consistency") {
    const AnsatzSpec spec{Architecture::DataWeaved, 3, 2};
    for (int t = 0; t < 5; ++t) {
      const auto theta = init_params(spec, static_cast<std::uint64_t>(t));
      const LabeledSet batch = random_set(5, 3, 2, rng);
      const auto coarse = fd_gradient(spec, theta, batch, 1e-3);
      const auto fine = fd_gradient(spec, theta, batch, 1e-5);
      for (std::size_t i = 0; i < coarse.size(); ++i) CHECK(std::abs(coarse[i] - fine[i]) < 1e-4);
    }
  }
  SUBCASE("matches the one-sided derivative of the objective") {
    const AnsatzSpec spec{Architecture::DataLast, 2, 1};
    const auto theta = init_params(spec, 11);
    const LabeledSet batch = random_set(4, 2, 2, rng);
    const auto g = fd_gradient(spec, theta, batch, 1e-4);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto plus = theta;
      plus[i] += 1e-7;
      const double forward = (batch_alignment(spec, plus, batch) - batch_alignment(spec, theta, batch)) / 1e-7;
      CHECK(std::abs(g[i] - forward) < 1e-5);
    }
  }
  SUBCASE("parallel equals serial reference bit for bit") {
    const AnsatzSpec spec{Architecture::DataWeaved, 4, 2};
    const auto theta = init_params(spec, 12);
    const LabeledSet batch = random_set(5, 4, 3, rng);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    const auto par = fd_gradient(spec, theta, batch, 1e-3);
    omp_set_num_threads(saved);
    CHECK(par == reference::fd_gradient_serial(spec, theta, batch, 1e-3));
  }
  SUBCASE("bad epsilon") {
    const AnsatzSpec spec{Architecture::DataLast, 2, 1};
    CHECK_THROWS_AS(fd_gradient(spec, init_params(spec, 0), random_set(4, 2, 2, rng), 0.0), std::invalid_argument);
  }
}

TEST_CASE("a small full-batch ascent step never lowers alignment") {
  Rng rng(44);
  std::uniform_int_distribution<int> arch(0, 2), layers(1, 3);
  for (int t = 0; t < 20; ++t) {
    const AnsatzSpec spec{static_cast<Architecture>(arch(rng)), 3, layers(rng)};
    const auto theta = init_params(spec, static_cast<std::uint64_t>(100 + t));
    const LabeledSet set = random_set(6, 3, 2, rng);
    const auto grad = fd_gradient(spec, theta, set, 1e-3);
    auto next = theta;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += 1e-2 * grad[i];
    CHECK(batch_alignment(spec, next, set) >= batch_alignment(spec, theta, set) - 1e-6);
  }
}

TEST_CASE("sample_batch") {
  Rng rng(45);
  for (int t = 0; t < 100; ++t) {
    const auto idx = sample_batch(10, 5, rng);
    CHECK(idx.size() == 5);
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 5);
    for (auto i : idx) CHECK(i < 10);
  }
  CHECK_THROWS_AS(sample_batch(3, 5, rng), std::invalid_argument);
}

TEST_CASE("training loop") {
  Rng rng(46);
  const LabeledSet train_set = random_set(12, 3, 3, rng);
  const LabeledSet test_set = random_set(6, 3, 3, rng);
  TrainConfig cfg;
  cfg.spec = AnsatzSpec{Architecture::DataWeaved, 3, 1};
  cfg.iterations = 20;
  cfg.checkpoint_every = 8;

  SUBCASE("checkpoint schedule") {
    const TrainResult r = train(cfg, train_set, test_set);
    REQUIRE(r.trace.size() == 4);
    CHECK(r.trace[0].iteration == 0);
    CHECK(r.trace[1].iteration == 8);
    CHECK(r.trace[2].iteration == 16);
    CHECK(r.trace[3].iteration == 20);
    CHECK(r.initial_params == init_params(cfg.spec, cfg.init_seed));
    CHECK(r.params != r.initial_params);
    for (const auto& p : r.trace) {
      CHECK(p.test_accuracy >= 0.0);
      CHECK(p.test_accuracy <= 1.0);
    }
  }
  SUBCASE("zero iterations") {
    cfg.iterations = 0;
    const TrainResult r = train(cfg, train_set, test_set);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].iteration == 0);
    CHECK(r.params == r.initial_params);
  }
  SUBCASE("determinism") {
    const TrainResult a = train(cfg, train_set, test_set);
    const TrainResult b = train(cfg, train_set, test_set);
    CHECK(a.params == b.params);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      CHECK(a.trace[i].alignment == b.trace[i].alignment);
      CHECK(a.trace[i].test_accuracy == b.trace[i].test_accuracy);
    }
  }
  SUBCASE("data-first single layer keeps a flat trace") {
    cfg.spec = AnsatzSpec{Architecture::DataFirst, 3, 1};
    const TrainResult r = train(cfg, train_set, test_set);
    for (std::size_t i = 0; i < r.params.size(); ++i) CHECK(std::abs(r.params[i] - r.initial_params[i]) < 1e-8);
    for (const auto& p : r.trace) CHECK(std::abs(p.alignment - r.trace[0].alignment) < 1e-8);
  }
  SUBCASE("erased layer gives the same trace") {
    cfg.spec = AnsatzSpec{Architecture::DataFirst, 3, 2};
    cfg.init_seed = 9;
    const TrainResult first = train(cfg, train_set, test_set);
    TrainConfig weaved = cfg;
    weaved.spec = AnsatzSpec{Architecture::DataWeaved, 3, 1};
    const auto full = init_params(cfg.spec, cfg.init_seed);
    weaved.initial_params = std::vector<double>(full.begin(), full.begin() + weaved.spec.param_count());
    const TrainResult w = train(weaved, train_set, test_set);
    REQUIRE(first.trace.size() == w.trace.size());
    for (std::size_t i = 0; i < w.trace.size(); ++i) {
      CHECK(std::abs(first.trace[i].alignment - w.trace[i].alignment) < 1e-8);
      CHECK(first.trace[i].test_accuracy == w.trace[i].test_accuracy);
    }
  }
  SUBCASE("configuration errors") {
    TrainConfig bad = cfg;
    bad.batch_size = 1;
    CHECK_THROWS_AS(train(bad, train_set, test_set), std::invalid_argument);
    bad = cfg;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train(bad, train_set, test_set), std::invalid_argument);
    bad = cfg;
    bad.initial_params = std::vector<double>{1.0};
    CHECK_THROWS_AS(train(bad, train_set, test_set), std::invalid_argument);
    bad = cfg;
    bad.spec.n_qubits = 4;
    CHECK_THROWS_AS(train(bad, train_set, test_set), std::invalid_argument);
  }
}

TEST_CASE("trace csv round trip") {
  const AlignmentTrace trace{{0, 0.25, 0.5, 0.0}, {250, std::nan(""), 1.0, 1.5}};
  std::stringstream ss;
  write_trace_csv(ss, trace);
  CHECK(ss.str() == "iteration,alignment,test_accuracy,elapsed_seconds\n0,0.25,0.5,0\n250,nan,1,1.5\n");
  const AlignmentTrace back = read_trace_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].alignment == 0.25);
  CHECK(std::isnan(back[1].alignment));
  CHECK(back[1].iteration == 250);
  std::stringstream bad("it,a\n");
  CHECK_THROWS(read_trace_csv(bad));
}
