#pragma once

// Kernel-target alignment training: minibatch alignment objective, central
// finite-difference gradients and a plain gradient-ascent loop that
// checkpoints full-training-set alignment and SVM test accuracy.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qek/circuit.hpp"
#include "qek/linalg.hpp"
#include "qek/rng.hpp"
#include "qek/svm.hpp"

namespace qek {

struct LabeledSet {
  Matrix features;
  std::vector<int> labels;
};

struct TrainConfig {
  AnsatzSpec spec;
  int iterations = 5000;
  int batch_size = 5;
  int checkpoint_every = 250;
  double learning_rate = 0.2;
  double fd_epsilon = 1e-3;
  std::uint64_t init_seed = 0;
  std::uint64_t batch_seed = 1;
  double feature_scale = 1.0;
  double svm_c = 1.0;
  /// Overrides init_params(spec, init_seed) when set.
  std::optional<std::vector<double>> initial_params;

  void validate() const;
};

struct TracePoint {
  int iteration = 0;
  double alignment = 0.0;  // NaN when the checkpoint kernel was degenerate
  double test_accuracy = 0.0;
  double elapsed_seconds = 0.0;
};

using AlignmentTrace = std::vector<TracePoint>;

struct TrainResult {
  std::vector<double> initial_params;
  std::vector<double> params;
  AlignmentTrace trace;
};

/// Entries i.i.d. uniform on [0, 2 pi). The first k entries only depend on the
/// seed, so a spec with fewer layers draws a prefix of a larger one.
std::vector<double> init_params(const AnsatzSpec& spec, std::uint64_t seed);

double batch_alignment(const AnsatzSpec& spec, std::span<const double> theta, const LabeledSet& batch,
                       double feature_scale = 1.0);

/// Central differences, one objective pair per parameter, evaluated in parallel.
std::vector<double> fd_gradient(const AnsatzSpec& spec, std::span<const double> theta, const LabeledSet& batch,
                                double epsilon, double feature_scale = 1.0);

namespace reference {
std::vector<double> fd_gradient_serial(const AnsatzSpec& spec, std::span<const double> theta,
                                       const LabeledSet& batch, double epsilon, double feature_scale = 1.0);
}  // namespace reference

/// Batch indices for one iteration: distinct, drawn uniformly without replacement.
std::vector<std::size_t> sample_batch(std::size_t population, std::size_t batch_size, Rng& rng);

struct CheckpointMetrics {
  double alignment = 0.0;
  double test_accuracy = 0.0;
};

/// Full-train alignment plus accuracy of a freshly fitted one-vs-rest SVM on the test set.
CheckpointMetrics evaluate_checkpoint(const AnsatzSpec& spec, std::span<const double> theta,
                                      const LabeledSet& train_set, const LabeledSet& test_set,
                                      double feature_scale, double svm_c);

TrainResult train(const TrainConfig& config, const LabeledSet& train_set, const LabeledSet& test_set);

/// `iteration,alignment,test_accuracy,elapsed_seconds`
void write_trace_csv(std::ostream& out, const AlignmentTrace& trace);
AlignmentTrace read_trace_csv(std::istream& in);

}  // namespace qek
