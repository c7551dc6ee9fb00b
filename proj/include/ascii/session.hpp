#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ascii/channels.hpp"
#include "ascii/dataset.hpp"
#include "ascii/protocol.hpp"

namespace ascii {

// When a run ends, beyond the intrinsic rule that an agent whose weighted
// accuracy falls to chance discards its model and schedules a stop.
struct StopSpec {
  enum class Criterion {
    alpha_threshold,  // intrinsic rule only, run to max_rounds otherwise
    holdout,          // also stop when holdout error stops improving
  };
  Criterion criterion = Criterion::alpha_threshold;
  int patience = 3;        // holdout: rounds without improvement
  double fraction = 0.2;   // holdout: trailing share of training rows held out
};

StopSpec::Criterion parse_stop_criterion(const std::string& name);
const char* stop_criterion_name(StopSpec::Criterion c);

struct SessionConfig {
  Variant variant = Variant::ascii;
  TransportKind transport = TransportKind::inproc;
  int max_rounds = 10;
  uint64_t seed = 0;
  // Drop the accumulator block from round messages. Valid whenever no agent
  // needs scores of more than one within-round predecessor: always for the
  // own-accuracy variant, and for two agents under the chain variants.
  bool lean_messages = false;
  StopSpec stop;
  std::vector<WeakModelSpec> learners;  // one per agent

  // Test hooks. forced_orders overrides the visit order per round;
  // drop_channels_after_round severs every channel once that round's
  // metrics are in, exercising the abort-and-salvage path.
  std::vector<std::vector<int>> forced_orders;
  int drop_channels_after_round = 0;  // 0 = never
};

struct RoundMetrics {
  int round = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> holdout_error;
  // (agent, vote weight) for every agent that acted, in visit order.
  // Discarded components appear with their non-positive weight.
  std::vector<std::pair<int, double>> alphas;
  size_t cumulative_round_bytes = 0;
};

struct SessionResult {
  int num_agents = 0;
  int num_classes = 0;
  size_t fit_rows = 0;      // training rows the protocol ran on
  size_t holdout_rows = 0;  // trailing rows reserved for the stop rule
  size_t test_rows = 0;

  std::vector<std::vector<EnsembleComponent>> components;  // per agent
  std::vector<RoundMetrics> rounds;
  int completed_rounds = 0;
  std::string stop_reason;

  std::vector<int> test_predictions;
  double test_accuracy = 0.0;

  bool aborted = false;
  std::string abort_reason;

  std::vector<CostRecord> wire_log;
  CostReport cost;
};

// Runs one full training session over vertically partitioned data.
//
// train_slices[m] and test_slices[m] hold agent m+1's private columns;
// labels and ids ride along in every slice. Training rows are aligned by a
// sample-id handshake (agents proceed on the sorted intersection of their
// id sets; label checksums must agree). Test rows must arrive pre-aligned.
//
// Agent 1 owns the task: it coordinates round boundaries, evaluates the
// per-round metrics from in-memory score traces (instrumentation, never
// wire traffic), decides stops, and aggregates the final test scores that
// the assisting agents ship as predict messages.
//
// Channel loss mid-run aborts the session but returns everything salvaged
// through the last completed round.
SessionResult run_session(const SessionConfig& config,
                          const std::vector<Dataset>& train_slices,
                          const std::vector<Dataset>& test_slices);

}  // namespace ascii
