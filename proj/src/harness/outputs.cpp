#include <cstdio>
#include <fstream>
#include <sstream>

#include "ascii/harness.hpp"
#include "ascii/wire.hpp"
#include "json.hpp"

namespace ascii {
namespace {

using nlohmann::json;

constexpr uint32_t kCheckpointMagic = 0x42435341;  // "ASCB"
constexpr uint16_t kCheckpointVersion = 1;

std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string alphas_field(const RoundMetrics& metrics) {
  std::string out;
  for (size_t i = 0; i < metrics.alphas.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(metrics.alphas[i].first) + ':' +
           fmt_g17(metrics.alphas[i].second);
  }
  return out;
}

void write_metrics_csv(const ExperimentResult& result,
                       const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << "# task=" << hex16(task_fingerprint(result.config))
      << " name=" << result.config.name << "\n";
  out << "replication,round,train_accuracy,test_accuracy,holdout_error,"
         "cumulative_bytes,alphas\n";
  for (size_t k = 0; k < result.replications.size(); ++k) {
    const SessionResult& rep = result.replications[k];
    for (const RoundMetrics& rm : rep.rounds) {
      out << k << ',' << rm.round << ',' << fmt_g17(rm.train_accuracy) << ','
          << fmt_g17(rm.test_accuracy) << ',';
      if (rm.holdout_error) out << fmt_g17(*rm.holdout_error);
      out << ',' << rm.cumulative_round_bytes << ',' << alphas_field(rm)
          << "\n";
    }
  }
  if (!out) throw ConfigError("failed writing " + file.string());
}

void write_summary_json(const ExperimentResult& result,
                        const std::filesystem::path& file) {
  json summary;
  summary["name"] = result.config.name;
  summary["task"] = hex16(task_fingerprint(result.config));
  summary["variant"] = variant_name(result.config.variant);
  summary["transport"] = transport_name(result.config.transport);
  summary["lean_messages"] = result.config.lean_messages;
  summary["replications"] = result.config.replications;
  summary["mean_test_accuracy"] = result.mean_test_accuracy;
  summary["stderr_test_accuracy"] = result.stderr_test_accuracy;
  summary["mean_completed_rounds"] = result.mean_completed_rounds;
  summary["wall_seconds"] = result.wall_seconds;

  json reps = json::array();
  for (size_t k = 0; k < result.replications.size(); ++k) {
    const SessionResult& rep = result.replications[k];
    json row;
    row["replication"] = k;
    row["test_accuracy"] = rep.test_accuracy;
    row["completed_rounds"] = rep.completed_rounds;
    row["stop_reason"] = rep.stop_reason;
    row["aborted"] = rep.aborted;
    if (rep.aborted) row["abort_reason"] = rep.abort_reason;
    row["protocol_bytes"] = rep.cost.protocol_bytes;
    row["interchange_bytes"] = rep.cost.interchange_bytes;
    row["baseline_bytes"] = rep.cost.baseline_bytes;
    row["cost_ratio"] = rep.cost.ratio;
    reps.push_back(row);
  }
  summary["per_replication"] = reps;

  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << summary.dump(2) << "\n";
}

void write_session_log(const ExperimentResult& result,
                       const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  for (size_t k = 0; k < result.replications.size(); ++k) {
    for (const CostRecord& record : result.replications[k].wire_log) {
      json line;
      line["replication"] = k;
      line["seq"] = record.seq;
      line["round"] = record.round;
      line["sender"] = record.sender;
      line["kind"] = message_kind_name(record.kind);
      line["bytes"] = record.bytes;
      out << line.dump() << "\n";
    }
  }
}

void write_checkpoint_with_check(const ExperimentResult& result,
                                 const std::filesystem::path& file) {
  int chosen = -1;
  for (size_t k = 0; k < result.replications.size(); ++k)
    if (!result.replications[k].aborted) {
      chosen = static_cast<int>(k);
      break;
    }
  if (chosen < 0) return;  // nothing finished; no snapshot

  const SessionResult& rep = result.replications[static_cast<size_t>(chosen)];
  Checkpoint snapshot;
  snapshot.num_agents = rep.num_agents;
  snapshot.num_classes = rep.num_classes;
  snapshot.variant = result.config.variant;
  snapshot.components = rep.components;
  save_checkpoint(snapshot, file);

  // Round-trip insurance: the reloaded ensemble must reproduce the stored
  // test predictions on freshly rebuilt replication data.
  Checkpoint reloaded = load_checkpoint(file);
  ReplicationData data = build_replication_data(result.config, chosen);
  std::vector<int> predictions =
      checkpoint_predict(reloaded, data.test_slices);
  if (predictions != rep.test_predictions)
    throw std::runtime_error(
        "checkpoint verification failed: reloaded ensemble disagrees with "
        "the session's test predictions");
}

}  // namespace

void save_checkpoint(const Checkpoint& snapshot,
                     const std::filesystem::path& path) {
  std::vector<uint8_t> blob;
  wire::put_u32(blob, kCheckpointMagic);
  wire::put_u16(blob, kCheckpointVersion);
  wire::put_i32(blob, snapshot.num_agents);
  wire::put_i32(blob, snapshot.num_classes);
  wire::put_u8(blob, static_cast<uint8_t>(snapshot.variant));
  if (snapshot.components.size() != static_cast<size_t>(snapshot.num_agents))
    throw std::invalid_argument("checkpoint: one component list per agent");
  for (const auto& list : snapshot.components) {
    wire::put_u32(blob, static_cast<uint32_t>(list.size()));
    for (const EnsembleComponent& c : list) {
      wire::put_i32(blob, c.round);
      wire::put_i32(blob, c.agent);
      wire::put_f64(blob, c.alpha);
      std::vector<uint8_t> model = c.model->save();
      wire::put_u32(blob, static_cast<uint32_t>(model.size()));
      blob.insert(blob.end(), model.begin(), model.end());
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size()));
  if (!out) throw ConfigError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("checkpoint: cannot open " + path.string());
  std::vector<uint8_t> blob((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  wire::Reader reader(blob);
  if (reader.u32() != kCheckpointMagic)
    throw ParseError("checkpoint: bad magic");
  if (reader.u16() != kCheckpointVersion)
    throw ParseError("checkpoint: unsupported version");
  Checkpoint snapshot;
  snapshot.num_agents = reader.i32();
  snapshot.num_classes = reader.i32();
  snapshot.variant = static_cast<Variant>(reader.u8());
  if (snapshot.num_agents < 1 || snapshot.num_classes < 2)
    throw ParseError("checkpoint: implausible header");
  for (int m = 0; m < snapshot.num_agents; ++m) {
    uint32_t count = reader.u32();
    std::vector<EnsembleComponent> list;
    list.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
      EnsembleComponent c;
      c.round = reader.i32();
      c.agent = reader.i32();
      c.alpha = reader.f64();
      uint32_t len = reader.u32();
      c.model = load_weak_model(reader.bytes(len));
      list.push_back(std::move(c));
    }
    snapshot.components.push_back(std::move(list));
  }
  reader.expect_end("checkpoint");
  return snapshot;
}

std::vector<int> checkpoint_predict(const Checkpoint& snapshot,
                                    const std::vector<Dataset>& test_slices) {
  if (test_slices.size() != snapshot.components.size())
    throw std::invalid_argument(
        "checkpoint_predict: one test slice per agent required");
  const size_t rows = test_slices[0].rows();
  const int K = snapshot.num_classes;

  if (snapshot.variant == Variant::ensemble_adaboost) {
    std::vector<std::vector<int>> votes;
    for (size_t m = 0; m < snapshot.components.size(); ++m) {
      if (snapshot.components[m].empty()) continue;
      PartialScoreMatrix scores =
          partial_scores(snapshot.components[m], static_cast<int>(m + 1),
                         test_slices[m].features, K);
      votes.push_back(argmax_classes(scores));
    }
    if (votes.empty()) return std::vector<int>(rows, 1);
    return plurality_vote(votes, K);
  }

  std::vector<FeatureMatrix> slices;
  slices.reserve(test_slices.size());
  for (const Dataset& slice : test_slices) slices.push_back(slice.features);
  return predict_joint(snapshot.components, slices, rows, K);
}

void write_outputs(const ExperimentResult& result,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_metrics_csv(result, dir / "metrics.csv");
  write_summary_json(result, dir / "summary.json");
  write_session_log(result, dir / "session_log.jsonl");
  write_checkpoint_with_check(result, dir / "checkpoint.bin");
}

void emit_report(const std::vector<std::filesystem::path>& run_dirs,
                 const std::filesystem::path& out_csv, bool force) {
  if (run_dirs.empty()) throw ConfigError("report: no run directories given");

  struct Run {
    json summary;
    std::vector<std::string> metric_rows;  // without comment/header
  };
  std::vector<Run> runs;
  for (const std::filesystem::path& dir : run_dirs) {
    Run run;
    {
      std::ifstream in(dir / "summary.json");
      if (!in)
        throw ConfigError("report: missing " + (dir / "summary.json").string());
      try {
        in >> run.summary;
      } catch (const json::exception& e) {
        throw ConfigError("report: bad summary in " + dir.string() + ": " +
                          e.what());
      }
    }
    {
      std::ifstream in(dir / "metrics.csv");
      if (!in)
        throw ConfigError("report: missing " + (dir / "metrics.csv").string());
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("replication,", 0) == 0)
          continue;
        run.metric_rows.push_back(line);
      }
    }
    runs.push_back(std::move(run));
  }

  const std::string task = runs[0].summary.value("task", "");
  for (const Run& run : runs)
    if (run.summary.value("task", "") != task && !force)
      throw ConfigError(
          "report: runs cover different tasks; pass --force to merge anyway");

  std::ofstream out(out_csv);
  if (!out) throw ConfigError("cannot write " + out_csv.string());
  out << "name,variant,transport,replication,round,train_accuracy,"
         "test_accuracy,holdout_error,cumulative_bytes,alphas\n";
  for (const Run& run : runs) {
    const std::string prefix = run.summary.value("name", "?") + "," +
                               run.summary.value("variant", "?") + "," +
                               run.summary.value("transport", "?") + ",";
    for (const std::string& row : run.metric_rows) out << prefix << row << "\n";
  }

  for (const Run& run : runs) {
    std::vector<double> ratios;
    for (const json& rep : run.summary.value("per_replication", json::array()))
      if (!rep.value("aborted", false))
        ratios.push_back(rep.value("cost_ratio", 0.0));
    std::printf(
        "%-24s %-18s %-7s reps=%3d acc=%.4f +/- %.4f rounds=%.1f "
        "cost_ratio=%.1f\n",
        run.summary.value("name", "?").c_str(),
        run.summary.value("variant", "?").c_str(),
        run.summary.value("transport", "?").c_str(),
        run.summary.value("replications", 0),
        run.summary.value("mean_test_accuracy", 0.0),
        run.summary.value("stderr_test_accuracy", 0.0),
        run.summary.value("mean_completed_rounds", 0.0),
        mean_of(ratios));
  }
}

}  // namespace ascii
