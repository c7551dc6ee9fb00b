#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ascii/harness.hpp"
#include "json.hpp"

namespace ascii {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void expect_keys(const json& obj, const std::string& where,
                 const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) bad(where, "unknown key '" + key + "'");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    bad(key, e.what());
  }
}

std::string require_string(const json& obj, const std::string& key,
                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    bad(where, "missing required string '" + key + "'");
  return it->get<std::string>();
}

WeakKind parse_weak_kind(const std::string& name) {
  if (name == "stump") return WeakKind::stump;
  if (name == "tree") return WeakKind::tree;
  if (name == "forest") return WeakKind::forest;
  if (name == "logistic") return WeakKind::logistic;
  throw ConfigError("config: unknown learner kind '" + name +
                    "' (expected stump, tree, forest, or logistic)");
}

WeakModelSpec parse_learner(const json& obj) {
  expect_keys(obj, "learners[]",
              {"kind", "depth", "num_trees", "learning_rate", "iterations",
               "l2", "bootstrap", "feature_subsample"});
  WeakModelSpec spec;
  spec.kind = parse_weak_kind(require_string(obj, "kind", "learners[]"));
  spec.depth = get_or(obj, "depth", spec.depth);
  spec.num_trees = get_or(obj, "num_trees", spec.num_trees);
  spec.learning_rate = get_or(obj, "learning_rate", spec.learning_rate);
  spec.iterations = get_or(obj, "iterations", spec.iterations);
  spec.l2 = get_or(obj, "l2", spec.l2);
  spec.bootstrap = get_or(obj, "bootstrap", spec.bootstrap);
  spec.feature_subsample = get_or(obj, "feature_subsample", spec.feature_subsample);
  spec.validate();
  return spec;
}

DataSource parse_dataset(const json& obj) {
  DataSource source;
  std::string type = require_string(obj, "type", "dataset");
  if (type == "blob") {
    expect_keys(obj, "dataset",
                {"type", "samples", "informative", "redundant", "classes",
                 "cluster_std", "center_min", "center_max"});
    source.kind = DataSource::Kind::blob;
    source.blob.n = get_or<size_t>(obj, "samples", 0);
    source.blob.informative = get_or(obj, "informative", source.blob.informative);
    source.blob.redundant = get_or(obj, "redundant", source.blob.redundant);
    source.blob.classes = get_or(obj, "classes", source.blob.classes);
    source.blob.cluster_std = get_or(obj, "cluster_std", source.blob.cluster_std);
    source.blob.center_min = get_or(obj, "center_min", source.blob.center_min);
    source.blob.center_max = get_or(obj, "center_max", source.blob.center_max);
    if (source.blob.n == 0) bad("dataset", "blob needs samples > 0");
    source.blob.validate();
  } else if (type == "csv") {
    expect_keys(obj, "dataset",
                {"type", "path", "label_column", "delimiter", "id_column"});
    source.kind = DataSource::Kind::csv;
    source.path = require_string(obj, "path", "dataset");
    source.csv.label_column = require_string(obj, "label_column", "dataset");
    std::string delim = get_or<std::string>(obj, "delimiter", ",");
    if (delim.size() != 1) bad("dataset", "delimiter must be one character");
    source.csv.delimiter = delim[0];
    if (obj.contains("id_column") && !obj["id_column"].is_null())
      source.csv.id_column = obj["id_column"].get<std::string>();
  } else {
    bad("dataset", "unknown type '" + type + "' (expected blob or csv)");
  }
  return source;
}

PartitionSpec parse_partition(const json& obj) {
  expect_keys(obj, "partition", {"strategy", "agents", "assignments"});
  PartitionSpec spec;
  std::string strategy = get_or<std::string>(obj, "strategy", "even");
  if (strategy == "even") {
    spec.strategy = PartitionStrategy::even;
  } else if (strategy == "random") {
    spec.strategy = PartitionStrategy::random;
  } else if (strategy == "explicit") {
    spec.strategy = PartitionStrategy::explicit_sets;
  } else {
    bad("partition", "unknown strategy '" + strategy +
                         "' (expected even, random, or explicit)");
  }
  spec.agents = get_or(obj, "agents", 1);
  if (obj.contains("assignments")) {
    if (spec.strategy != PartitionStrategy::explicit_sets)
      bad("partition", "assignments requires the explicit strategy");
    spec.assignments =
        obj["assignments"].get<std::vector<std::vector<size_t>>>();
    spec.agents = static_cast<int>(spec.assignments.size());
  } else if (spec.strategy == PartitionStrategy::explicit_sets) {
    bad("partition", "explicit strategy needs assignments");
  }
  if (spec.agents < 1) bad("partition", "agents must be >= 1");
  return spec;
}

StopSpec parse_stop(const json& obj) {
  expect_keys(obj, "stop", {"criterion", "patience", "fraction"});
  StopSpec spec;
  spec.criterion =
      parse_stop_criterion(get_or<std::string>(obj, "criterion", "alpha_threshold"));
  spec.patience = get_or(obj, "patience", spec.patience);
  spec.fraction = get_or(obj, "fraction", spec.fraction);
  return spec;
}

void append_learner(std::string& out, const WeakModelSpec& spec) {
  out += weak_kind_name(spec.kind);
  out += '|';
  out += std::to_string(spec.depth) + '|' + std::to_string(spec.num_trees);
  out += '|';
  out += fmt_g17(spec.learning_rate) + '|' + std::to_string(spec.iterations);
  out += '|';
  out += fmt_g17(spec.l2) + '|' + std::to_string(spec.bootstrap) + '|' +
         std::to_string(spec.feature_subsample);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("config: name must not be empty");
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      throw ConfigError(
          "config: name may contain only letters, digits, '_' and '-'");
  if (replications < 1) throw ConfigError("config: replications must be >= 1");
  if (max_rounds < 1) throw ConfigError("config: max_rounds must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("config: train_fraction must lie in (0, 1)");
  if (learners.empty()) throw ConfigError("config: learners must not be empty");
  if (learners.size() != 1 &&
      learners.size() != static_cast<size_t>(partition.agents))
    throw ConfigError(
        "config: learners must hold one shared spec or exactly one per "
        "agent");
  for (const WeakModelSpec& spec : learners) spec.validate();
  if (dataset.kind == DataSource::Kind::csv &&
      !std::filesystem::exists(dataset.path))
    throw ConfigError("config: dataset file not found: " +
                      dataset.path.string());
  if (variant == Variant::ensemble_adaboost &&
      stop.criterion == StopSpec::Criterion::holdout)
    throw ConfigError(
        "config: holdout stopping is incompatible with the independent "
        "per-agent variant");
  if (lean_messages && alpha_rule_for(variant) == AlphaRule::chain &&
      partition.agents > 2)
    throw ConfigError(
        "config: lean_messages supports at most two agents under the chain "
        "variants");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  expect_keys(root, "top level",
              {"name", "seed", "replications", "train_fraction", "max_rounds",
               "variant", "transport", "lean_messages", "stop", "dataset",
               "partition", "learners", "output_dir"});

  ExperimentConfig config;
  config.name = require_string(root, "name", "top level");
  config.seed = get_or<uint64_t>(root, "seed", 0);
  config.replications = get_or(root, "replications", 1);
  config.train_fraction = get_or(root, "train_fraction", 0.5);
  config.max_rounds = get_or(root, "max_rounds", 10);
  config.variant = parse_variant(get_or<std::string>(root, "variant", "ascii"));
  config.transport =
      parse_transport(get_or<std::string>(root, "transport", "inproc"));
  config.lean_messages = get_or(root, "lean_messages", false);
  if (root.contains("stop")) config.stop = parse_stop(root["stop"]);
  if (!root.contains("dataset")) bad("top level", "missing dataset");
  config.dataset = parse_dataset(root["dataset"]);
  if (root.contains("partition"))
    config.partition = parse_partition(root["partition"]);
  if (!root.contains("learners") || !root["learners"].is_array() ||
      root["learners"].empty())
    bad("top level", "learners must be a non-empty array");
  for (const json& item : root["learners"])
    config.learners.push_back(parse_learner(item));
  config.output_dir = get_or<std::string>(root, "output_dir",
                                          "out/" + config.name);
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

uint64_t task_fingerprint(const ExperimentConfig& config) {
  std::string canon;
  canon += "seed=" + std::to_string(config.seed);
  canon += ";reps=" + std::to_string(config.replications);
  canon += ";train=" + fmt_g17(config.train_fraction);
  canon += ";rounds=" + std::to_string(config.max_rounds);
  canon += ";stop=" + std::string(stop_criterion_name(config.stop.criterion));
  if (config.stop.criterion == StopSpec::Criterion::holdout)
    canon += "," + std::to_string(config.stop.patience) + "," +
             fmt_g17(config.stop.fraction);
  canon += ";data=";
  if (config.dataset.kind == DataSource::Kind::blob) {
    const BlobSpec& b = config.dataset.blob;
    canon += "blob," + std::to_string(b.n) + "," +
             std::to_string(b.informative) + "," + std::to_string(b.redundant) +
             "," + std::to_string(b.classes) + "," + fmt_g17(b.cluster_std) +
             "," + fmt_g17(b.center_min) + "," + fmt_g17(b.center_max);
  } else {
    canon += "csv," + config.dataset.path.filename().string() + "," +
             config.dataset.csv.label_column + "," +
             std::string(1, config.dataset.csv.delimiter) + "," +
             config.dataset.csv.id_column.value_or("");
  }
  canon += ";part=" + std::to_string(static_cast<int>(config.partition.strategy)) +
           "," + std::to_string(config.partition.agents);
  for (const auto& columns : config.partition.assignments) {
    canon += ",[";
    for (size_t c : columns) canon += std::to_string(c) + " ";
    canon += "]";
  }
  canon += ";learners=";
  for (const WeakModelSpec& spec : config.learners) {
    append_learner(canon, spec);
    canon += "&";
  }
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "single") return BaselineKind::single;
  if (name == "oracle") return BaselineKind::oracle;
  if (name == "ensemble") return BaselineKind::ensemble_ada;
  throw ConfigError("unknown baseline '" + name +
                    "' (expected single, oracle, or ensemble)");
}

const char* baseline_kind_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::single: return "single";
    case BaselineKind::oracle: return "oracle";
    case BaselineKind::ensemble_ada: return "ensemble";
  }
  return "?";
}

}  // namespace ascii
