#include "qek/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "qek/rng.hpp"

namespace qek {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset name is empty");
  if (architectures.empty()) throw ConfigError("no architectures selected");
  if (layers_min < 0 || layers_max < layers_min) throw ConfigError("layer range is empty");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (n_qubits < 1 || n_qubits > kMaxQubits) throw ConfigError("qubit count out of range");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  if (checkpoint_every < 1) throw ConfigError("checkpoint interval must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(fd_epsilon > 0.0)) throw ConfigError("finite-difference step must be positive");
  if (!(svm_c > 0.0)) throw ConfigError("C must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
  if (split_candidates < 1) throw ConfigError("split candidates must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<Architecture> parse_architectures(const json& value) {
  std::vector<Architecture> out;
  auto add = [&](const std::string& s) {
    try {
      out.push_back(parse_architecture(s));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  if (value.is_string()) {
    std::stringstream ss(value.get<std::string>());
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) add(part);
  } else if (value.is_array()) {
    for (const auto& v : value) add(v.get<std::string>());
  } else {
    throw ConfigError("config key 'arch' must be a string or an array of strings");
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  static const std::set<std::string> known = {
      "dataset", "arch", "layers", "layers_min", "layers_max", "repetitions", "n_qubits", "iterations",
      "batch_size", "checkpoint_every", "learning_rate", "fd_epsilon", "feature_scale", "C", "train_fraction",
      "split_candidates", "split_seed", "reduce", "subsample_cap", "data_dir", "out", "manifest", "master_seed",
      "jobs"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  read_key(j, "dataset", c.dataset);
  if (j.contains("arch")) c.architectures = parse_architectures(j.at("arch"));
  if (j.contains("layers")) {
    read_key(j, "layers", c.layers_min);
    c.layers_max = c.layers_min;
  }
  read_key(j, "layers_min", c.layers_min);
  read_key(j, "layers_max", c.layers_max);
  read_key(j, "repetitions", c.repetitions);
  read_key(j, "n_qubits", c.n_qubits);
  read_key(j, "iterations", c.iterations);
  read_key(j, "batch_size", c.batch_size);
  read_key(j, "checkpoint_every", c.checkpoint_every);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "fd_epsilon", c.fd_epsilon);
  read_key(j, "feature_scale", c.feature_scale);
  read_key(j, "C", c.svm_c);
  read_key(j, "train_fraction", c.train_fraction);
  read_key(j, "split_candidates", c.split_candidates);
  read_key(j, "split_seed", c.split_seed);
  if (j.contains("reduce")) {
    try {
      c.reduce = parse_reduce_method(j.at("reduce").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  read_key(j, "subsample_cap", c.subsample_cap);
  read_key(j, "data_dir", c.data_dir);
  read_key(j, "out", c.out_dir);
  read_key(j, "manifest", c.manifest);
  read_key(j, "master_seed", c.master_seed);
  read_key(j, "jobs", c.jobs);
  return c;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

json config_to_json(const ExperimentConfig& c) {
  json arch = json::array();
  for (auto a : c.architectures) arch.push_back(std::string(architecture_name(a)));
  return json{{"dataset", c.dataset},
              {"arch", arch},
              {"layers_min", c.layers_min},
              {"layers_max", c.layers_max},
              {"repetitions", c.repetitions},
              {"n_qubits", c.n_qubits},
              {"iterations", c.iterations},
              {"batch_size", c.batch_size},
              {"checkpoint_every", c.checkpoint_every},
              {"learning_rate", c.learning_rate},
              {"fd_epsilon", c.fd_epsilon},
              {"feature_scale", c.feature_scale},
              {"C", c.svm_c},
              {"train_fraction", c.train_fraction},
              {"split_candidates", c.split_candidates},
              {"split_seed", c.split_seed},
              {"reduce", std::string(reduce_method_name(c.reduce))},
              {"subsample_cap", c.subsample_cap},
              {"data_dir", c.data_dir},
              {"out", c.out_dir},
              {"manifest", c.manifest},
              {"master_seed", c.master_seed},
              {"jobs", c.jobs}};
}

const Manifest& manifest_for(const ExperimentConfig& config) {
  if (config.manifest.empty()) return builtin_manifest();
  static std::mutex mu;
  static std::map<std::string, Manifest> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(config.manifest);
  if (it == cache.end()) it = cache.emplace(config.manifest, load_manifest(config.manifest)).first;
  return it->second;
}

fs::path dataset_path(const std::string& data_dir, const DatasetSchema& schema) {
  const fs::path canonical = fs::path(data_dir) / (schema.name + ".csv");
  if (fs::exists(canonical)) return canonical;
  return fs::path(data_dir) / schema.file;
}

PreparedData prepare_dataset(const ExperimentConfig& config) {
  const DatasetSchema& schema = manifest_for(config).find(config.dataset);
  Dataset ds = load(schema, dataset_path(config.data_dir, schema));
  if (config.subsample_cap > 0) ds = subsample_per_class(ds, config.subsample_cap, config.split_seed);
  ds = normalize_minmax(ds);
  if (ds.features.cols() < static_cast<std::size_t>(config.n_qubits))
    throw ConfigError(config.dataset + " has " + std::to_string(ds.features.cols()) + " usable features, fewer than " +
                      std::to_string(config.n_qubits) + " qubits");
  ds = reduce_features(ds, static_cast<std::size_t>(config.n_qubits), config.reduce);

  PreparedData out;
  out.split_seed = select_split(ds, config.split_candidates, config.train_fraction, config.split_seed);
  out.split = stratified_split(ds, config.train_fraction, out.split_seed);
  out.dataset = std::move(ds);
  return out;
}

std::uint64_t run_seed(std::uint64_t master, Architecture arch, int layers, int repetition) {
  return derive_seed(master, {static_cast<std::uint64_t>(arch), static_cast<std::uint64_t>(layers),
                              static_cast<std::uint64_t>(repetition)});
}

TrainConfig make_train_config(const ExperimentConfig& c, Architecture arch, int layers, std::uint64_t seed) {
  TrainConfig t;
  t.spec = AnsatzSpec{arch, c.n_qubits, layers};
  t.iterations = c.iterations;
  t.batch_size = c.batch_size;
  t.checkpoint_every = c.checkpoint_every;
  t.learning_rate = c.learning_rate;
  t.fd_epsilon = c.fd_epsilon;
  t.init_seed = seed;
  t.batch_seed = derive_seed(seed, {1});
  t.feature_scale = c.feature_scale;
  t.svm_c = c.svm_c;
  return t;
}

RunRecord run_training(const ExperimentConfig& config, const PreparedData& data, Architecture arch, int layers,
                       std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord run;
  run.arch = arch;
  run.layers = layers;
  run.seed = seed;
  const TrainConfig tc = make_train_config(config, arch, layers, seed);
  run.result = train(tc, data.split.train.labeled(), data.split.test.labeled());
  run.gates = count_gates(build_ansatz(tc.spec));
  run.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

std::string trace_file_name(const std::string& dataset, Architecture arch, int layers, std::uint64_t seed) {
  return "trace_" + dataset + "_" + std::string(architecture_name(arch)) + "_" + std::to_string(layers) + "_" +
         std::to_string(seed) + ".csv";
}

std::string model_file_name(const std::string& dataset, Architecture arch, int layers, std::uint64_t seed) {
  return "model_" + dataset + "_" + std::string(architecture_name(arch)) + "_" + std::to_string(layers) + "_" +
         std::to_string(seed) + ".json";
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json model_to_json(const ExperimentConfig& config, const PreparedData& data, const RunRecord& run) {
  json cfg = config_to_json(config);
  cfg["arch"] = json::array({std::string(architecture_name(run.arch))});
  cfg["layers_min"] = cfg["layers_max"] = run.layers;
  return json{{"format", "qek-model"},
              {"version", 1},
              {"config", cfg},
              {"dataset", config.dataset},
              {"arch", std::string(architecture_name(run.arch))},
              {"layers", run.layers},
              {"n_qubits", config.n_qubits},
              {"seed", run.seed},
              {"split_seed", data.split_seed},
              {"theta", run.result.params},
              {"metrics",
               {{"final_accuracy", run.final_accuracy()},
                {"final_alignment", finite_or_null(run.final_alignment())},
                {"initial_alignment", finite_or_null(run.result.trace.front().alignment)},
                {"elapsed_seconds", run.elapsed_seconds},
                {"one_qubit_gates", run.gates.one_qubit},
                {"two_qubit_gates", run.gates.two_qubit}}}};
}

EvaluationResult evaluate_model(const json& model, const std::string& data_dir) {
  if (!model.is_object() || model.value("format", "") != "qek-model")
    throw ConfigError("not a qek model file (missing format tag)");
  ExperimentConfig config;
  try {
    config = config_from_json(model.at("config"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  if (!data_dir.empty()) config.data_dir = data_dir;
  const PreparedData data = prepare_dataset(config);
  if (model.contains("split_seed") && model.at("split_seed").get<std::uint64_t>() != data.split_seed)
    throw ConfigError("model file: recorded split seed does not match the rebuilt split");

  const AnsatzSpec spec{parse_architecture(model.at("arch").get<std::string>()), config.n_qubits,
                        model.at("layers").get<int>()};
  const std::vector<double> theta = model.at("theta").get<std::vector<double>>();
  if (theta.size() != static_cast<std::size_t>(spec.param_count()))
    throw ConfigError("model file: theta has the wrong length for its ansatz");

  EvaluationResult out;
  const CheckpointMetrics m = evaluate_checkpoint(spec, theta, data.split.train.labeled(),
                                                  data.split.test.labeled(), config.feature_scale, config.svm_c);
  out.test_accuracy = m.test_accuracy;
  out.train_gram = kernel_matrix(KernelSetup{spec, theta, config.feature_scale}, data.split.train.features);
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

using CellKey = std::tuple<std::string, std::string, int, int>;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::set<CellKey> completed_cells(const fs::path& summary) {
  std::set<CellKey> done;
  std::ifstream in(summary);
  std::string line;
  if (!std::getline(in, line)) return done;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    // A row cut short by a crash is not counted as done.
    if (cells.size() != 10) continue;
    done.emplace(cells[0], cells[1], std::stoi(cells[2]), std::stoi(cells[3]));
  }
  return done;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Rewrites the summary keeping only complete, newline-terminated rows so appends start on a clean line.
void repair_summary(const fs::path& summary) {
  std::ifstream in(summary, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::vector<std::string> lines;
  std::size_t pos = 0;
  for (std::size_t nl; (nl = text.find('\n', pos)) != std::string::npos; pos = nl + 1)
    lines.push_back(text.substr(pos, nl - pos));
  std::ofstream out(summary, std::ios::trunc);
  out << kSummaryHeader << '\n';
  for (std::size_t i = 1; i < lines.size(); ++i)
    if (split_csv(lines[i]).size() == 10) out << lines[i] << '\n';
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

SweepReport run_sweep(const ExperimentConfig& config, std::ostream* progress) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const PreparedData data = prepare_dataset(config);

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  const fs::path summary = out_dir / "summary.csv";

  std::set<CellKey> done;
  if (fs::exists(summary)) {
    repair_summary(summary);
    done = completed_cells(summary);
  } else {
    std::ofstream(summary) << kSummaryHeader << '\n';
  }

  struct Cell {
    Architecture arch;
    int layers;
    int rep;
  };
  std::vector<Cell> todo;
  SweepReport report;
  for (Architecture arch : config.architectures)
    for (int layers = config.layers_min; layers <= config.layers_max; ++layers)
      for (int rep = 0; rep < config.repetitions; ++rep) {
        ++report.grid_cells;
        if (done.count({config.dataset, std::string(architecture_name(arch)), layers, rep}))
          ++report.skipped;
        else
          todo.push_back({arch, layers, rep});
      }

  std::mutex write_mu;
  std::ofstream sink(summary, std::ios::app);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const Cell cell = todo[k];
      const std::uint64_t seed = run_seed(config.master_seed, cell.arch, cell.layers, cell.rep);
      std::string row;
      bool failed = false;
      std::ostringstream prefix;
      prefix << config.dataset << ',' << architecture_name(cell.arch) << ',' << cell.layers << ',' << cell.rep << ','
             << seed << ',';
      try {
        const RunRecord run = run_training(config, data, cell.arch, cell.layers, seed);
        std::ofstream(out_dir / trace_file_name(config.dataset, cell.arch, cell.layers, seed))
            << [&] {
                 std::ostringstream t;
                 write_trace_csv(t, run.result.trace);
                 return t.str();
               }();
        row = prefix.str() + format_number(run.final_accuracy()) + ',' + format_number(run.final_alignment()) + ',' +
              format_number(run.elapsed_seconds) + ',' + std::to_string(run.gates.one_qubit) + ',' +
              std::to_string(run.gates.two_qubit);
      } catch (const std::exception& e) {
        failed = true;
        const GateCounts g = count_gates(build_ansatz(AnsatzSpec{cell.arch, config.n_qubits, cell.layers}));
        row = prefix.str() + "error,error,0," + std::to_string(g.one_qubit) + ',' + std::to_string(g.two_qubit);
        if (progress) {
          std::lock_guard lock(write_mu);
          *progress << "cell " << architecture_name(cell.arch) << " L=" << cell.layers << " rep=" << cell.rep
                    << " failed: " << e.what() << '\n';
        }
      }
      std::lock_guard lock(write_mu);
      sink << row << '\n';
      sink.flush();
      ++report.completed;
      if (failed) ++report.errors;
      if (progress)
        *progress << "[" << report.completed + report.skipped << "/" << report.grid_cells << "] "
                  << architecture_name(cell.arch) << " L=" << cell.layers << " rep=" << cell.rep << '\n';
    }
  };

  const int threads = std::min<int>(config.jobs, static_cast<int>(std::max<std::size_t>(todo.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  sink.close();

  write_summary_stats(summary, out_dir / "summary_stats.csv");
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_summary_stats(const fs::path& summary_csv, const fs::path& stats_csv) {
  struct Group {
    std::size_t runs = 0;
    std::size_t errors = 0;
    std::vector<double> accuracy;
    std::vector<double> alignment;
    std::vector<double> seconds;
  };
  std::map<std::tuple<std::string, std::string, int>, Group> groups;
  std::ifstream in(summary_csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c = split_csv(line);
    if (c.size() != 10) continue;
    Group& g = groups[{c[0], c[1], std::stoi(c[2])}];
    ++g.runs;
    if (c[5] == "error") {
      ++g.errors;
      continue;
    }
    g.accuracy.push_back(std::stod(c[5]));
    if (c[6] != "nan") g.alignment.push_back(std::stod(c[6]));
    g.seconds.push_back(std::stod(c[7]));
  }

  std::ofstream out(stats_csv, std::ios::trunc);
  out << "dataset,arch,layers,runs,errors,mean_accuracy,median_accuracy,q1_accuracy,q3_accuracy,"
         "mean_alignment,mean_elapsed_seconds\n";
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  for (const auto& [key, g] : groups) {
    const auto& [dataset, arch, layers] = key;
    out << dataset << ',' << arch << ',' << layers << ',' << g.runs << ',' << g.errors << ',';
    if (g.accuracy.empty()) {
      out << "nan,nan,nan,nan,";
    } else {
      out << format_number(mean(g.accuracy)) << ',' << format_number(quantile(g.accuracy, 0.5)) << ','
          << format_number(quantile(g.accuracy, 0.25)) << ',' << format_number(quantile(g.accuracy, 0.75)) << ',';
    }
    out << format_number(mean(g.alignment)) << ',' << format_number(mean(g.seconds)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Erasure report

EraseCheckReport erase_check(const AnsatzSpec& spec, int trials, std::uint64_t seed) {
  spec.validate();
  EraseCheckReport report;
  report.spec = spec;
  report.trials = trials;

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const auto n = static_cast<std::size_t>(spec.n_qubits);
  std::vector<double> x(n), xp(n), theta(static_cast<std::size_t>(spec.param_count()));

  bool first = true;
  for (int t = 0; t < trials; ++t) {
    for (double& v : x) v = unit(rng);
    for (double& v : xp) v = unit(rng);
    for (double& v : theta) v = angle(rng);
    const Circuit echo = echo_circuit(spec, x, xp, theta);
    const ErasureResult erased = erase_redundant(echo);
    if (first) {
      report.before = count_gates(echo);
      report.after = count_gates(erased.circuit);
      report.erased_gates = erased.erased_gates;
      first = false;
    }
    const double dev = std::abs(zero_probability(run(echo)) - zero_probability(run(erased.circuit)));
    report.max_deviation = std::max(report.max_deviation, dev);
  }
  if (first) {
    const Circuit echo = echo_circuit(spec, x, xp, theta);
    const ErasureResult erased = erase_redundant(echo);
    report.before = count_gates(echo);
    report.after = count_gates(erased.circuit);
    report.erased_gates = erased.erased_gates;
  }
  report.passed = report.max_deviation < 1e-12;
  return report;
}

void print_erase_report(std::ostream& out, const EraseCheckReport& r) {
  out << "ansatz: " << architecture_name(r.spec.arch) << ", " << r.spec.n_param_layers << " parameter layer(s), "
      << r.spec.n_qubits << " qubit(s)\n";
  out << "echo gates before: one_qubit=" << r.before.one_qubit << " two_qubit=" << r.before.two_qubit << '\n';
  out << "echo gates after:  one_qubit=" << r.after.one_qubit << " two_qubit=" << r.after.two_qubit << '\n';
  out << "erased gates: " << r.erased_gates << '\n';
  out << "value check (" << r.trials << " random bindings, max |dp| = " << r.max_deviation
      << "): " << (r.passed ? "PASS" : "FAIL") << '\n';
}

}  // namespace qek
