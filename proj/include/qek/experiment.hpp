#pragma once

// Experiment plumbing shared by the command-line tool: configuration,
// dataset preparation, single training runs with model files, the
// architecture x layers x repetition sweep, and the erasure report.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "qek/align_train.hpp"
#include "qek/circuit.hpp"
#include "qek/datasets.hpp"
#include "qek/kernel.hpp"

namespace qek {

/// Configuration problems; the CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string dataset = "wine";
  std::vector<Architecture> architectures{Architecture::DataFirst, Architecture::DataLast, Architecture::DataWeaved};
  int layers_min = 1;
  int layers_max = 5;
  int repetitions = 25;
  int n_qubits = 5;
  int iterations = 5000;
  int batch_size = 5;
  int checkpoint_every = 250;
  double learning_rate = 0.2;
  double fd_epsilon = 1e-3;
  double feature_scale = 1.0;
  double svm_c = 1.0;
  double train_fraction = 0.75;
  int split_candidates = 25;
  std::uint64_t split_seed = 0;
  ReduceMethod reduce = ReduceMethod::Pca;
  std::size_t subsample_cap = 0;  // 0 keeps every row
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::string manifest;  // empty: built-in manifest
  std::uint64_t master_seed = 0;
  int jobs = 1;

  void validate() const;
};

/// Flat key/value JSON; unknown keys are rejected. Keys absent from `json`
/// keep the values already in `base`.
ExperimentConfig config_from_json(const nlohmann::json& json, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& config);

const Manifest& manifest_for(const ExperimentConfig& config);

/// `<data_dir>/<name>.csv` when present, else the native file named in the manifest.
std::filesystem::path dataset_path(const std::string& data_dir, const DatasetSchema& schema);

struct PreparedData {
  Dataset dataset;  // normalised and reduced to n_qubits features
  std::uint64_t split_seed = 0;
  Split split;
};

PreparedData prepare_dataset(const ExperimentConfig& config);

std::uint64_t run_seed(std::uint64_t master, Architecture arch, int layers, int repetition);

TrainConfig make_train_config(const ExperimentConfig& config, Architecture arch, int layers, std::uint64_t seed);

struct RunRecord {
  Architecture arch = Architecture::DataWeaved;
  int layers = 0;
  std::uint64_t seed = 0;
  TrainResult result;
  GateCounts gates;
  double elapsed_seconds = 0.0;

  double final_accuracy() const { return result.trace.back().test_accuracy; }
  double final_alignment() const { return result.trace.back().alignment; }
};

RunRecord run_training(const ExperimentConfig& config, const PreparedData& data, Architecture arch, int layers,
                       std::uint64_t seed);

std::string trace_file_name(const std::string& dataset, Architecture arch, int layers, std::uint64_t seed);
std::string model_file_name(const std::string& dataset, Architecture arch, int layers, std::uint64_t seed);

nlohmann::json model_to_json(const ExperimentConfig& config, const PreparedData& data, const RunRecord& run);

struct EvaluationResult {
  double test_accuracy = 0.0;
  KernelMatrix train_gram;
};

/// Rebuilds the split recorded in `model`, recomputes the kernel blocks with
/// the stored parameters and refits the SVM.
EvaluationResult evaluate_model(const nlohmann::json& model, const std::string& data_dir);

struct SweepReport {
  std::size_t grid_cells = 0;
  std::size_t completed = 0;
  std::size_t skipped = 0;
  std::size_t errors = 0;
  double total_seconds = 0.0;
};

inline constexpr const char* kSummaryHeader =
    "dataset,arch,layers,rep,seed,final_accuracy,final_alignment,elapsed_seconds,one_qubit_gates,two_qubit_gates";

/// Runs every missing grid cell, appending one row per cell to
/// `<out_dir>/summary.csv`, then rewrites `<out_dir>/summary_stats.csv`.
SweepReport run_sweep(const ExperimentConfig& config, std::ostream* progress = nullptr);

/// Per (dataset, arch, layers): run count, error count, accuracy mean/median/quartiles, mean alignment and time.
void write_summary_stats(const std::filesystem::path& summary_csv, const std::filesystem::path& stats_csv);

struct EraseCheckReport {
  AnsatzSpec spec;
  GateCounts before;
  GateCounts after;
  int erased_gates = 0;
  int trials = 0;
  double max_deviation = 0.0;
  bool passed = false;
};

EraseCheckReport erase_check(const AnsatzSpec& spec, int trials = 100, std::uint64_t seed = 0);
void print_erase_report(std::ostream& out, const EraseCheckReport& report);

}  // namespace qek
