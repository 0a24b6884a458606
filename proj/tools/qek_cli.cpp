// qek: experiment runner for embedding-kernel architectures.
//
// Exit codes: 0 ok, 2 usage/config, 3 I/O or network, 4 numeric failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qek/experiment.hpp"

namespace {

using namespace qek;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct Overrides {
  std::optional<std::string> dataset, arch, reduce, data_dir, out_dir, manifest;
  std::optional<int> layers, layers_min, layers_max, repetitions, qubits, iterations, batch_size, checkpoint_every,
      split_candidates, jobs;
  std::optional<double> learning_rate, fd_epsilon, feature_scale, c, train_fraction;
  std::optional<std::uint64_t> split_seed, master_seed;
  std::optional<std::size_t> subsample_cap;
};

void add_training_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--iterations", o.iterations, "Optimisation steps (default 5000)");
  cmd->add_option("--batch-size", o.batch_size, "Minibatch size (default 5)");
  cmd->add_option("--checkpoint-every", o.checkpoint_every, "Checkpoint interval (default 250)");
  cmd->add_option("--learning-rate", o.learning_rate, "Gradient-ascent step (default 0.2)");
  cmd->add_option("--fd-epsilon", o.fd_epsilon, "Central-difference step (default 1e-3)");
  cmd->add_option("--qubits", o.qubits, "Qubits / reduced feature count (default 5)");
  cmd->add_option("--C", o.c, "SVM regularisation (default 1.0)");
  cmd->add_option("--feature-scale", o.feature_scale, "Multiplier applied to features before encoding (default 1)");
  cmd->add_option("--train-fraction", o.train_fraction, "Per-class training fraction (default 0.75)");
  cmd->add_option("--split-candidates", o.split_candidates, "Candidate splits to choose from (default 25)");
  cmd->add_option("--split-seed", o.split_seed, "First candidate split seed (default 0)");
  cmd->add_option("--reduce", o.reduce, "Feature reduction: pca or truncate (default pca)");
  cmd->add_option("--subsample-cap", o.subsample_cap, "Keep at most this many rows per class (0 = all)");
  cmd->add_option("--data-dir", o.data_dir, "Dataset directory (default data, or $QEK_DATA_DIR)");
  cmd->add_option("--out", o.out_dir, "Output directory (default out, or $QEK_OUT_DIR)");
  cmd->add_option("--manifest", o.manifest, "Dataset manifest file (default: built in)");
}

ExperimentConfig base_config() {
  ExperimentConfig c;
  if (const char* out = std::getenv("QEK_OUT_DIR")) c.out_dir = out;
  if (const char* data = std::getenv("QEK_DATA_DIR")) c.data_dir = data;
  return c;
}

ExperimentConfig apply(ExperimentConfig c, const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (o.dataset) j["dataset"] = *o.dataset;
  if (o.arch) j["arch"] = *o.arch;
  if (o.layers) j["layers"] = *o.layers;
  if (o.layers_min) j["layers_min"] = *o.layers_min;
  if (o.layers_max) j["layers_max"] = *o.layers_max;
  if (o.repetitions) j["repetitions"] = *o.repetitions;
  if (o.qubits) j["n_qubits"] = *o.qubits;
  if (o.iterations) j["iterations"] = *o.iterations;
  if (o.batch_size) j["batch_size"] = *o.batch_size;
  if (o.checkpoint_every) j["checkpoint_every"] = *o.checkpoint_every;
  if (o.learning_rate) j["learning_rate"] = *o.learning_rate;
  if (o.fd_epsilon) j["fd_epsilon"] = *o.fd_epsilon;
  if (o.feature_scale) j["feature_scale"] = *o.feature_scale;
  if (o.c) j["C"] = *o.c;
  if (o.train_fraction) j["train_fraction"] = *o.train_fraction;
  if (o.split_candidates) j["split_candidates"] = *o.split_candidates;
  if (o.split_seed) j["split_seed"] = *o.split_seed;
  if (o.reduce) j["reduce"] = *o.reduce;
  if (o.subsample_cap) j["subsample_cap"] = *o.subsample_cap;
  if (o.data_dir) j["data_dir"] = *o.data_dir;
  if (o.out_dir) j["out"] = *o.out_dir;
  if (o.manifest) j["manifest"] = *o.manifest;
  if (o.master_seed) j["master_seed"] = *o.master_seed;
  if (o.jobs) j["jobs"] = *o.jobs;
  return config_from_json(j, std::move(c));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

int cmd_fetch(const std::string& name, const std::optional<std::string>& data_dir,
              const std::optional<std::string>& manifest_path) {
  ExperimentConfig c = base_config();
  if (data_dir) c.data_dir = *data_dir;
  if (manifest_path) c.manifest = *manifest_path;
  const DatasetSchema& schema = manifest_for(c).find(name);
  const fs::path dest = fs::path(c.data_dir) / schema.file;
  const FetchStatus status = fetch(schema, dest);
  std::cout << name << ": " << (status == FetchStatus::Cached ? "cached" : "downloaded") << " (" << dest.string()
            << ")\n";
  return 0;
}

int cmd_train(ExperimentConfig c, std::uint64_t seed) {
  if (c.layers_min != c.layers_max) throw ConfigError("train takes a single --layers value");
  if (c.architectures.size() != 1) throw ConfigError("train takes a single --arch value");
  c.validate();
  const PreparedData data = prepare_dataset(c);
  const Architecture arch = c.architectures.front();
  const RunRecord run = run_training(c, data, arch, c.layers_min, seed);

  fs::create_directories(c.out_dir);
  const fs::path trace_path = fs::path(c.out_dir) / trace_file_name(c.dataset, arch, c.layers_min, seed);
  const fs::path model_path = fs::path(c.out_dir) / model_file_name(c.dataset, arch, c.layers_min, seed);
  std::ostringstream trace;
  write_trace_csv(trace, run.result.trace);
  write_text(trace_path, trace.str());
  write_text(model_path, model_to_json(c, data, run).dump(2) + "\n");

  std::cout << "dataset " << c.dataset << " (" << data.split.train.size() << " train / " << data.split.test.size()
            << " test, split seed " << data.split_seed << ")\n";
  std::cout << "initial alignment " << run.result.trace.front().alignment << ", final alignment "
            << run.final_alignment() << ", test accuracy " << run.final_accuracy() << '\n';
  std::cout << "gates: one_qubit=" << run.gates.one_qubit << " two_qubit=" << run.gates.two_qubit << ", "
            << run.elapsed_seconds << " s\n";
  std::cout << "trace: " << trace_path.string() << "\nmodel: " << model_path.string() << '\n';
  return 0;
}

int cmd_sweep(ExperimentConfig c) {
  const SweepReport r = run_sweep(c, &std::cerr);
  std::cout << "grid cells " << r.grid_cells << ", ran " << r.completed << ", skipped " << r.skipped << ", errors "
            << r.errors << ", " << r.total_seconds << " s\n";
  std::cout << "summary: " << (fs::path(c.out_dir) / "summary.csv").string() << '\n';
  return r.errors > 0 ? kExitNumeric : 0;
}

int cmd_evaluate(const std::string& model_path, const std::optional<std::string>& dataset,
                 const std::optional<std::string>& data_dir, const std::optional<std::string>& gram_path) {
  std::ifstream in(model_path);
  if (!in) throw ConfigError("cannot open model file " + model_path);
  nlohmann::json model;
  try {
    in >> model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(model_path + ": " + e.what());
  }
  if (dataset && model.value("dataset", "") != *dataset)
    throw ConfigError("model was trained on " + model.value("dataset", std::string("?")) + ", not " + *dataset);
  std::string dir = data_dir.value_or("");
  if (dir.empty())
    if (const char* env = std::getenv("QEK_DATA_DIR")) dir = env;
  const EvaluationResult r = evaluate_model(model, dir);
  std::cout.precision(17);
  std::cout << "test accuracy " << r.test_accuracy << '\n';
  if (gram_path) {
    std::ostringstream csv;
    write_kernel_csv(csv, r.train_gram);
    write_text(*gram_path, csv.str());
    std::cout << "gram matrix: " << *gram_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-kernel architecture experiments"};
  app.require_subcommand(1);

  Overrides o;
  std::optional<std::string> config_path;
  std::uint64_t seed = 0;

  std::string fetch_name;
  auto* fetch_cmd = app.add_subcommand("fetch", "Download and verify a dataset");
  fetch_cmd->add_option("dataset", fetch_name, "hayes-roth, heart, seeds or wine")->required();
  fetch_cmd->add_option("--data-dir", o.data_dir, "Destination directory (default data)");
  fetch_cmd->add_option("--manifest", o.manifest, "Dataset manifest file");

  auto* train_cmd = app.add_subcommand("train", "Train one kernel and write its trace and model");
  train_cmd->add_option("--config", config_path, "Flat JSON config; flags take precedence");
  train_cmd->add_option("--dataset", o.dataset, "Dataset name");
  train_cmd->add_option("--arch", o.arch, "data-first, data-last or data-weaved");
  train_cmd->add_option("--layers", o.layers, "Parameter layers");
  train_cmd->add_option("--seed", seed, "Run seed (parameter init and batches)");
  add_training_flags(train_cmd, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run the architecture x layers x repetition grid");
  sweep_cmd->add_option("--config", config_path, "Flat JSON config")->required();
  sweep_cmd->add_option("--dataset", o.dataset, "Dataset name");
  sweep_cmd->add_option("--arch", o.arch, "Comma-separated architectures");
  sweep_cmd->add_option("--layers-min", o.layers_min, "Smallest layer count");
  sweep_cmd->add_option("--layers-max", o.layers_max, "Largest layer count");
  sweep_cmd->add_option("--repetitions", o.repetitions, "Models per cell");
  sweep_cmd->add_option("--master-seed", o.master_seed, "Seed all run seeds derive from");
  sweep_cmd->add_option("--jobs", o.jobs, "Concurrent grid cells");
  add_training_flags(sweep_cmd, o);

  std::string arch_name = "data-first";
  int layers = 1, qubits = 5, trials = 100;
  bool dump_circuits = false;
  auto* erase_cmd = app.add_subcommand("erase-check", "Report junction cancellation in the echo circuit");
  erase_cmd->add_option("--arch", arch_name, "Architecture")->required();
  erase_cmd->add_option("--layers", layers, "Parameter layers")->required();
  erase_cmd->add_option("--qubits", qubits, "Qubits")->required();
  erase_cmd->add_option("--trials", trials, "Random bindings for the value check (default 100)");
  erase_cmd->add_option("--seed", seed, "Seed for the random bindings");
  erase_cmd->add_flag("--dump", dump_circuits, "Print the circuits before and after");

  std::string model_path;
  std::optional<std::string> gram_path;
  auto* eval_cmd = app.add_subcommand("evaluate", "Recompute test accuracy for a trained model");
  eval_cmd->add_option("--model", model_path, "Model JSON written by train")->required();
  eval_cmd->add_option("--dataset", o.dataset, "Expected dataset name");
  eval_cmd->add_option("--data-dir", o.data_dir, "Dataset directory");
  eval_cmd->add_option("--gram", gram_path, "Write the training Gram matrix as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fetch_cmd) return cmd_fetch(fetch_name, o.data_dir, o.manifest);
    if (*train_cmd || *sweep_cmd) {
      ExperimentConfig c = base_config();
      if (config_path) c = load_config(*config_path, c);
      c = apply(c, o);
      return *train_cmd ? cmd_train(c, seed) : cmd_sweep(c);
    }
    if (*erase_cmd) {
      const AnsatzSpec spec{parse_architecture(arch_name), qubits, layers};
      const EraseCheckReport r = erase_check(spec, trials, seed);
      print_erase_report(std::cout, r);
      if (dump_circuits) {
        Rng rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> x(static_cast<std::size_t>(qubits)), xp(x.size());
        for (double& v : x) v = unit(rng);
        for (double& v : xp) v = unit(rng);
        const std::vector<double> theta = init_params(spec, seed);
        const Circuit echo = echo_circuit(spec, x, xp, theta);
        std::cout << "--- echo circuit\n" << dump(echo) << "--- after erasure\n" << dump(erase_redundant(echo).circuit);
      }
      return r.passed ? 0 : kExitNumeric;
    }
    if (*eval_cmd) return cmd_evaluate(model_path, o.dataset, o.data_dir, gram_path);
  } catch (const UnknownDatasetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NetworkError& e) {
    std::cerr << "error: " << e.what() << " (network problem; retry later)\n";
    return kExitIo;
  } catch (const ChecksumMismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DatasetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
