#include "qek/align_train.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qek/kernel.hpp"

namespace qek {

void TrainConfig::validate() const {
  spec.validate();
  if (iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("train: batch size must be >= 2");
  if (checkpoint_every < 1) throw std::invalid_argument("train: checkpoint interval must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (!(fd_epsilon > 0.0)) throw std::invalid_argument("train: finite-difference step must be positive");
  if (!(svm_c > 0.0)) throw std::invalid_argument("train: C must be positive");
  if (initial_params && initial_params->size() != static_cast<std::size_t>(spec.param_count()))
    throw std::invalid_argument("train: initial parameter vector has wrong length");
}

std::vector<double> init_params(const AnsatzSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<double> theta(static_cast<std::size_t>(spec.param_count()));
  for (double& t : theta) t = angle(rng);
  return theta;
}

double batch_alignment(const AnsatzSpec& spec, std::span<const double> theta, const LabeledSet& batch,
                       double feature_scale) {
  if (batch.features.rows() < 2) throw std::invalid_argument("batch_alignment: batch needs at least two points");
  const KernelSetup setup{spec, theta, feature_scale};
  return target_alignment(kernel_matrix(setup, batch.features), batch.labels);
}

namespace {

double central_difference(const AnsatzSpec& spec, std::span<const double> theta, const LabeledSet& batch,
                          double epsilon, double feature_scale, std::size_t i) {
  std::vector<double> shifted(theta.begin(), theta.end());
  shifted[i] = theta[i] + epsilon;
  const double up = batch_alignment(spec, shifted, batch, feature_scale);
  shifted[i] = theta[i] - epsilon;
  const double down = batch_alignment(spec, shifted, batch, feature_scale);
  return (up - down) / (2.0 * epsilon);
}

}  // namespace

std::vector<double> fd_gradient(const AnsatzSpec& spec, std::span<const double> theta, const LabeledSet& batch,
                                double epsilon, double feature_scale) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("fd_gradient: epsilon must be positive");
  std::vector<double> grad(theta.size());
  const auto n = static_cast<std::ptrdiff_t>(theta.size());
  // Each component is independent; nested kernel loops run serially inside.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    grad[static_cast<std::size_t>(i)] =
        central_difference(spec, theta, batch, epsilon, feature_scale, static_cast<std::size_t>(i));
  }
  return grad;
}

namespace reference {

std::vector<double> fd_gradient_serial(const AnsatzSpec& spec, std::span<const double> theta,
                                       const LabeledSet& batch, double epsilon, double feature_scale) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("fd_gradient: epsilon must be positive");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    grad[i] = central_difference(spec, theta, batch, epsilon, feature_scale, i);
  return grad;
}

}  // namespace reference

std::vector<std::size_t> sample_batch(std::size_t population, std::size_t batch_size, Rng& rng) {
  if (batch_size > population)
    throw std::invalid_argument("sample_batch: batch of " + std::to_string(batch_size) + " from " +
                                std::to_string(population) + " points");
  std::vector<std::size_t> pool(population);
  for (std::size_t i = 0; i < population; ++i) pool[i] = i;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(batch_size);
  return pool;
}

CheckpointMetrics evaluate_checkpoint(const AnsatzSpec& spec, std::span<const double> theta,
                                      const LabeledSet& train_set, const LabeledSet& test_set,
                                      double feature_scale, double svm_c) {
  const KernelSetup setup{spec, theta, feature_scale};
  const KernelMatrix k_train = kernel_matrix(setup, train_set.features);
  CheckpointMetrics m;
  try {
    m.alignment = target_alignment(k_train, train_set.labels);
  } catch (const DegenerateKernelError&) {
    m.alignment = std::numeric_limits<double>::quiet_NaN();
  }
  const OvrModel svm = fit_ovr(k_train.matrix(), train_set.labels, svm_c);
  const Matrix k_cross = cross_kernel(setup, test_set.features, train_set.features);
  m.test_accuracy = accuracy(predict(svm, k_cross), test_set.labels);
  return m;
}

TrainResult train(const TrainConfig& config, const LabeledSet& train_set, const LabeledSet& test_set) {
  config.validate();
  const auto width = static_cast<std::size_t>(config.spec.n_qubits);
  if (train_set.features.cols() != width || test_set.features.cols() != width)
    throw std::invalid_argument("train: feature width does not match the qubit count");
  if (train_set.features.rows() < static_cast<std::size_t>(config.batch_size))
    throw std::invalid_argument("train: training set smaller than the batch size");

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  TrainResult result;
  result.initial_params = config.initial_params ? *config.initial_params : init_params(config.spec, config.init_seed);
  result.params = result.initial_params;
  auto& theta = result.params;

  auto checkpoint = [&](int iteration) {
    const CheckpointMetrics m =
        evaluate_checkpoint(config.spec, theta, train_set, test_set, config.feature_scale, config.svm_c);
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    result.trace.push_back(TracePoint{iteration, m.alignment, m.test_accuracy, elapsed});
  };

  checkpoint(0);
  Rng batch_rng(config.batch_seed);
  LabeledSet batch;
  batch.labels.resize(static_cast<std::size_t>(config.batch_size));
  for (int it = 1; it <= config.iterations; ++it) {
    const auto idx = sample_batch(train_set.features.rows(), static_cast<std::size_t>(config.batch_size), batch_rng);
    batch.features = train_set.features.select_rows(idx);
    for (std::size_t b = 0; b < idx.size(); ++b) batch.labels[b] = train_set.labels[idx[b]];

    if (!theta.empty()) {
      try {
        const auto grad = fd_gradient(config.spec, theta, batch, config.fd_epsilon, config.feature_scale);
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += config.learning_rate * grad[i];
      } catch (const DegenerateKernelError&) {
        // A batch with an all-zero kernel carries no gradient; skip the step.
      }
    }
    if (it % config.checkpoint_every == 0 || it == config.iterations) checkpoint(it);
  }
  return result;
}

void write_trace_csv(std::ostream& out, const AlignmentTrace& trace) {
  out << "iteration,alignment,test_accuracy,elapsed_seconds\n";
  char buf[64];
  auto put = [&](double v) {
    if (std::isnan(v)) {
      out << "nan";
      return;
    }
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, end - buf);
  };
  for (const auto& p : trace) {
    out << p.iteration << ',';
    put(p.alignment);
    out << ',';
    put(p.test_accuracy);
    out << ',';
    put(p.elapsed_seconds);
    out << '\n';
  }
}

AlignmentTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "iteration,alignment,test_accuracy,elapsed_seconds")
    throw std::runtime_error("trace csv: unexpected header");
  AlignmentTrace trace;
  auto number = [](const std::string& s) {
    return s == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c, d;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c, ',') ||
        !std::getline(row, d, ','))
      throw std::runtime_error("trace csv: malformed row '" + line + "'");
    trace.push_back(TracePoint{std::stoi(a), number(b), number(c), number(d)});
  }
  return trace;
}

}  // namespace qek
