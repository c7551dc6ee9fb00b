#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ascii/session.hpp"

namespace ascii {

// Where one experiment's data comes from: a synthetic blob draw per
// replication, or a file that is bootstrap-resampled per replication.
struct DataSource {
  enum class Kind { blob, csv };
  Kind kind = Kind::blob;
  BlobSpec blob;                // blob: seed is derived per replication
  std::filesystem::path path;  // csv
  CsvOptions csv;
};

struct ExperimentConfig {
  std::string name;
  uint64_t seed = 0;
  int replications = 1;
  double train_fraction = 0.5;
  int max_rounds = 10;
  Variant variant = Variant::ascii;
  TransportKind transport = TransportKind::inproc;
  bool lean_messages = false;
  StopSpec stop;
  DataSource dataset;
  PartitionSpec partition;
  std::vector<WeakModelSpec> learners;  // one entry = same spec for all agents
  std::filesystem::path output_dir = "out";

  void validate() const;  // ConfigError
};

// Strict JSON parse: unknown keys are errors.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Hash of the fields that define the learning task (data, partition, seeds,
// learners, stopping) but not how it is executed (variant, transport, lean
// messages, output paths). Runs with equal fingerprints are comparable
// replication-for-replication.
uint64_t task_fingerprint(const ExperimentConfig& config);

// One replication's data, identical for every protocol variant and
// baseline at the same (config, index).
struct ReplicationData {
  Dataset train_full;  // all feature columns
  Dataset test_full;
  std::vector<Dataset> train_slices;
  std::vector<Dataset> test_slices;
};

ReplicationData build_replication_data(const ExperimentConfig& config,
                                       int replication);

// Per-replication session seed / learner seed.
uint64_t replication_seed(const ExperimentConfig& config, int replication);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SessionResult> replications;  // index = replication
  double mean_test_accuracy = 0.0;    // over non-aborted replications
  double stderr_test_accuracy = 0.0;  // sample stddev / sqrt(count)
  double mean_completed_rounds = 0.0;
  double wall_seconds = 0.0;
};

// Runs every replication (optionally on `jobs` threads; replication k
// always uses seed base+k, so the thread count never changes results).
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 1);

// Local reference runs trained with the same per-replication data.
enum class BaselineKind {
  single,       // boosting on agent 1's columns only
  oracle,       // boosting on all columns pooled
  ensemble_ada  // independent per-agent boosting with a plurality vote
};

BaselineKind parse_baseline_kind(const std::string& name);
const char* baseline_kind_name(BaselineKind kind);

struct BaselineResult {
  BaselineKind kind = BaselineKind::single;
  std::vector<double> test_accuracies;  // per replication
  std::vector<int> rounds;
  double mean_test_accuracy = 0.0;
  double stderr_test_accuracy = 0.0;
};

BaselineResult run_baseline(const ExperimentConfig& config, BaselineKind kind,
                            int jobs = 1);

// Writes metrics.csv (deterministic: no clocks, fixed float formatting),
// summary.json, session_log.jsonl, and checkpoint.bin (first non-aborted
// replication's ensemble, reloaded and re-checked against its stored test
// predictions before the function returns).
void write_outputs(const ExperimentResult& result,
                   const std::filesystem::path& dir);

// Serialized ensemble snapshot.
struct Checkpoint {
  int num_agents = 0;
  int num_classes = 0;
  Variant variant = Variant::ascii;
  std::vector<std::vector<EnsembleComponent>> components;  // per agent
};

void save_checkpoint(const Checkpoint& snapshot,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Joint test predictions from a snapshot: additive scores for the chain
// variants, per-agent plurality for the independent variant.
std::vector<int> checkpoint_predict(const Checkpoint& snapshot,
                                    const std::vector<Dataset>& test_slices);

// Merges finished runs (directories containing metrics.csv + summary.json)
// into one long-format CSV plus a stdout comparison table. Refuses to mix
// different tasks unless `force` is set.
void emit_report(const std::vector<std::filesystem::path>& run_dirs,
                 const std::filesystem::path& out_csv, bool force);

// Aggregate helpers shared by harness and tests.
double mean_of(const std::vector<double>& xs);
double stderr_of(const std::vector<double>& xs);  // sample stddev / sqrt(n)

}  // namespace ascii
