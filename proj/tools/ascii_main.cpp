#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ascii/harness.hpp"

namespace {

using namespace ascii;

void apply_overrides(ExperimentConfig& config, const CLI::App* cmd,
                     uint64_t seed, const std::string& transport,
                     const std::string& out_dir) {
  if (cmd->count("--seed")) config.seed = seed;
  if (cmd->count("--transport")) config.transport = parse_transport(transport);
  if (cmd->count("--out")) config.output_dir = out_dir;
}

int run_command(const std::string& config_path, const CLI::App* cmd,
                uint64_t seed, const std::string& transport,
                const std::string& out_dir, int jobs) {
  ExperimentConfig config = load_experiment_config(config_path);
  apply_overrides(config, cmd, seed, transport, out_dir);
  ExperimentResult result = run_experiment(config, jobs);
  write_outputs(result, config.output_dir);

  int aborted = 0;
  for (const SessionResult& rep : result.replications)
    if (rep.aborted) ++aborted;
  std::printf(
      "%s variant=%s transport=%s reps=%d acc=%.4f +/- %.4f rounds=%.1f "
      "wall=%.1fs -> %s\n",
      config.name.c_str(), variant_name(config.variant),
      transport_name(config.transport), config.replications,
      result.mean_test_accuracy, result.stderr_test_accuracy,
      result.mean_completed_rounds, result.wall_seconds,
      config.output_dir.string().c_str());
  if (aborted) {
    std::printf("warning: %d replication(s) aborted\n", aborted);
    for (size_t k = 0; k < result.replications.size(); ++k)
      if (result.replications[k].aborted)
        std::printf("  replication %zu: %s\n", k,
                    result.replications[k].abort_reason.c_str());
  }
  return 0;
}

int generate_command(const std::string& config_path, const CLI::App* cmd,
                     uint64_t seed, const std::string& out_file,
                     const std::string& delimiter) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (config.dataset.kind != DataSource::Kind::blob)
    throw ConfigError("generate: the config must describe a blob dataset");
  if (delimiter.size() != 1)
    throw ConfigError("generate: delimiter must be one character");
  BlobSpec spec = config.dataset.blob;
  spec.seed = cmd->count("--seed") ? seed : config.seed;
  Dataset data = generate_blobs(spec);
  const std::filesystem::path out_path(out_file);
  if (out_path.has_parent_path())
    std::filesystem::create_directories(out_path.parent_path());
  save_csv(data, out_path, delimiter[0]);
  std::printf("wrote %zu rows x %zu features (%d classes) -> %s\n",
              data.rows(), data.cols(), data.labels.num_classes,
              out_file.c_str());
  return 0;
}

int baseline_command(const std::string& config_path, const CLI::App* cmd,
                     uint64_t seed, const std::string& kind_name, int jobs) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (cmd->count("--seed")) config.seed = seed;
  BaselineKind kind = parse_baseline_kind(kind_name);
  BaselineResult result = run_baseline(config, kind, jobs);
  std::printf("%s baseline=%s reps=%d acc=%.4f +/- %.4f\n",
              config.name.c_str(), baseline_kind_name(kind),
              config.replications, result.mean_test_accuracy,
              result.stderr_test_accuracy);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Cooperative boosting over vertically partitioned data: agents "
      "exchange per-sample ignorance scores and scalar vote weights instead "
      "of raw features."};
  app.require_subcommand(1);

  std::string config_path, out_path, transport, delimiter = ",";
  std::string baseline_kind = "single";
  uint64_t seed = 0;
  int jobs = 1;
  bool force = false;
  std::vector<std::string> run_dirs;

  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--out", out_path, "output directory override");
  run->add_option("--seed", seed, "base seed override");
  run->add_option("--transport", transport, "inproc or socket");
  run->add_option("--jobs", jobs, "parallel replications")
      ->check(CLI::PositiveNumber);

  CLI::App* generate =
      app.add_subcommand("generate", "Materialize a blob dataset as CSV");
  generate->add_option("--config", config_path, "experiment JSON")->required();
  generate->add_option("--out", out_path, "output CSV path")->required();
  generate->add_option("--seed", seed, "seed override");
  generate->add_option("--delimiter", delimiter, "CSV delimiter");

  CLI::App* baseline =
      app.add_subcommand("baseline", "Run a local reference model");
  baseline->add_option("--config", config_path, "experiment JSON")->required();
  baseline->add_option("--kind", baseline_kind, "single, oracle, or ensemble");
  baseline->add_option("--seed", seed, "base seed override");
  baseline->add_option("--jobs", jobs, "parallel replications")
      ->check(CLI::PositiveNumber);

  CLI::App* report =
      app.add_subcommand("report", "Merge finished runs into one CSV");
  report->add_option("dirs", run_dirs, "run output directories")->required();
  report->add_option("--out", out_path, "merged CSV path");
  report->add_flag("--force", force, "merge runs from different tasks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run)
      return run_command(config_path, run, seed, transport, out_path, jobs);
    if (*generate)
      return generate_command(config_path, generate, seed, out_path,
                              delimiter);
    if (*baseline)
      return baseline_command(config_path, baseline, seed, baseline_kind,
                              jobs);
    if (*report) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(),
                                              run_dirs.end());
      emit_report(dirs, out_path.empty() ? "report.csv" : out_path, force);
      return 0;
    }
  } catch (const ascii::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ascii::ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const ascii::ProtocolError& e) {
    std::fprintf(stderr, "protocol error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
