#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "ascii/harness.hpp"

namespace ascii {
namespace {

constexpr uint64_t kBlobStream = 0x626c6f62;   // data draw per replication
constexpr uint64_t kSplitStream = 0x73706c69;  // train/test row split

std::vector<WeakModelSpec> agent_learners(const ExperimentConfig& config,
                                          uint64_t rep_seed) {
  std::vector<WeakModelSpec> specs;
  const int M = config.partition.agents;
  specs.reserve(static_cast<size_t>(M));
  for (int m = 0; m < M; ++m) {
    WeakModelSpec spec = config.learners.size() == 1
                             ? config.learners[0]
                             : config.learners[static_cast<size_t>(m)];
    spec.seed = rep_seed;
    specs.push_back(spec);
  }
  return specs;
}

SessionConfig session_config(const ExperimentConfig& config, int replication) {
  SessionConfig session;
  session.variant = config.variant;
  session.transport = config.transport;
  session.max_rounds = config.max_rounds;
  session.seed = replication_seed(config, replication);
  session.lean_messages = config.lean_messages;
  session.stop = config.stop;
  session.learners = agent_learners(config, session.seed);
  return session;
}

// Runs `body(k)` for every replication, optionally on a small pool. Work is
// indexed, never handed out by completion order, so results are identical
// for any thread count.
template <typename Body>
void for_each_replication(int replications, int jobs, Body body) {
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto work = [&] {
    for (;;) {
      int k = next.fetch_add(1);
      if (k >= replications) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::clamp(jobs, 1, replications);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

uint64_t replication_seed(const ExperimentConfig& config, int replication) {
  return config.seed + static_cast<uint64_t>(replication);
}

ReplicationData build_replication_data(const ExperimentConfig& config,
                                       int replication) {
  const uint64_t rep_seed = replication_seed(config, replication);
  ReplicationData data;
  if (config.dataset.kind == DataSource::Kind::blob) {
    BlobSpec spec = config.dataset.blob;
    spec.seed = mix_seed(rep_seed, {kBlobStream});
    Dataset all = generate_blobs(spec);
    auto [train, test] = split_train_test(all, config.train_fraction,
                                          mix_seed(rep_seed, {kSplitStream}));
    data.train_full = std::move(train);
    data.test_full = std::move(test);
  } else {
    Dataset all = load_csv(config.dataset.path, config.dataset.csv);
    auto pairs = bootstrap_replications(all, replication + 1,
                                        config.train_fraction, config.seed);
    data.train_full = std::move(pairs.back().first);
    data.test_full = std::move(pairs.back().second);
  }

  PartitionSpec part = config.partition;
  part.seed = config.seed;  // column ownership is fixed across replications
  data.train_slices = partition_vertical(data.train_full, part);
  data.test_slices = partition_vertical(data.test_full, part);
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.config = config;
  result.replications.resize(static_cast<size_t>(config.replications));
  for_each_replication(config.replications, jobs, [&](int k) {
    ReplicationData data = build_replication_data(config, k);
    result.replications[static_cast<size_t>(k)] = run_session(
        session_config(config, k), data.train_slices, data.test_slices);
  });

  std::vector<double> accuracies, rounds;
  for (const SessionResult& rep : result.replications) {
    if (rep.aborted) continue;
    accuracies.push_back(rep.test_accuracy);
    rounds.push_back(static_cast<double>(rep.completed_rounds));
  }
  result.mean_test_accuracy = mean_of(accuracies);
  result.stderr_test_accuracy = stderr_of(accuracies);
  result.mean_completed_rounds = mean_of(rounds);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return result;
}

BaselineResult run_baseline(const ExperimentConfig& config, BaselineKind kind,
                            int jobs) {
  config.validate();
  BaselineResult result;
  result.kind = kind;

  if (kind == BaselineKind::ensemble_ada) {
    ExperimentConfig alt = config;
    alt.variant = Variant::ensemble_adaboost;
    alt.stop.criterion = StopSpec::Criterion::alpha_threshold;
    alt.lean_messages = false;
    ExperimentResult runs = run_experiment(alt, jobs);
    for (const SessionResult& rep : runs.replications) {
      result.test_accuracies.push_back(rep.test_accuracy);
      result.rounds.push_back(rep.completed_rounds);
    }
    result.mean_test_accuracy = runs.mean_test_accuracy;
    result.stderr_test_accuracy = runs.stderr_test_accuracy;
    return result;
  }

  result.test_accuracies.resize(static_cast<size_t>(config.replications));
  result.rounds.resize(static_cast<size_t>(config.replications));
  for_each_replication(config.replications, jobs, [&](int k) {
    ReplicationData data = build_replication_data(config, k);
    const Dataset& train = kind == BaselineKind::single
                               ? data.train_slices[0]
                               : data.train_full;
    const Dataset& test = kind == BaselineKind::single ? data.test_slices[0]
                                                       : data.test_full;
    WeakModelSpec learner = config.learners[0];
    learner.seed = replication_seed(config, k);
    BoostResult boosted =
        boost_single(train.labels, train.features, learner, config.max_rounds);
    std::vector<int> predictions =
        boosted.predict(test.features, train.labels.num_classes);
    result.test_accuracies[static_cast<size_t>(k)] =
        accuracy(predictions, test.labels);
    result.rounds[static_cast<size_t>(k)] =
        static_cast<int>(boosted.trajectory.size());
  });

  result.mean_test_accuracy = mean_of(result.test_accuracies);
  result.stderr_test_accuracy = stderr_of(result.test_accuracies);
  return result;
}

}  // namespace ascii
