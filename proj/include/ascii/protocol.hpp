#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ascii/core_math.hpp"
#include "ascii/learners.hpp"
#include "ascii/types.hpp"

namespace ascii {

// Training variants selectable in experiment configs.
enum class Variant {
  ascii,              // vote weights from the within-round score accumulator
  ascii_simple,       // vote weights from own weighted accuracy only
  ascii_random,       // ascii with a fresh seeded agent order every round
  ensemble_adaboost,  // independent per-agent boosting, plurality label vote
};

// Maps a config string to a Variant; unknown names raise ConfigError.
Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);

// How an agent turns its fit into a vote weight during a round.
enum class AlphaRule {
  chain,       // discount by predecessors' accumulated votes
  individual,  // own weighted accuracy only
};

inline AlphaRule alpha_rule_for(Variant v) {
  return v == Variant::ascii_simple ? AlphaRule::individual : AlphaRule::chain;
}

// One agent's local training state: its private feature slice plus the
// label coding every agent shares over the aligned samples.
struct AgentState {
  int agent = 1;  // 1-based; agent 1 owns the classification task
  FeatureMatrix features;
  LabelMatrix codes;
  WeakModelSpec learner;
  std::vector<EnsembleComponent> components;

  size_t rows() const { return features.rows; }
  int num_classes() const { return codes.num_classes(); }
};

AgentState make_agent_state(int agent, FeatureMatrix slice,
                            const ClassVector& labels, WeakModelSpec learner);

// Seed for the single weak fit an agent performs in a given round. Shared
// by every training path so equal (seed, round, agent) triples always train
// the same model.
uint64_t fit_seed(uint64_t base, int round, int agent);

// Agent visit order for round `t`. The base protocol uses the identity
// order; the shuffled variant draws a fresh permutation per round from the
// shared seed, so every agent can derive it locally without extra traffic.
std::vector<int> round_order(Variant v, int num_agents, int round,
                             uint64_t seed);

// Result of one agent's turn within a round.
struct RoundStep {
  int round = 0;
  int agent = 0;
  double alpha = 0.0;
  double r_bar = 0.0;  // weighted accuracy under the incoming weights
  bool kept = false;   // false when alpha <= 0: the component is discarded
  RewardVector reward;
  IgnoranceVector ignorance;  // outgoing weights
  ScoreAccumulator acc;       // outgoing accumulator
  std::shared_ptr<const WeakModel> model;
};

// One agent's turn: fit a weak model against the incoming weights, compute
// the vote weight under `rule`, reweight toward the misclassified samples,
// and extend the accumulator with the alpha-weighted coded votes. A vote
// weight <= 0 (weighted accuracy at or below chance) discards the component
// and passes both vectors through unchanged.
RoundStep agent_round_step(const AgentState& state, const IgnoranceVector& w,
                           const ScoreAccumulator& acc, int round,
                           AlphaRule rule);

struct ChainRoundResult {
  std::vector<RoundStep> steps;    // in visit order
  IgnoranceVector next_ignorance;  // routed to the first agent of round t+1
  bool stop_after_round = false;   // some agent fell to chance accuracy
  std::string stop_reason;
};

// Executes one full round over `order` (1-based agent ids, a permutation of
// the state indices). Kept components are appended to their agents' state.
// A non-positive vote weight anywhere discards that component, finishes the
// round, and requests a stop once the round is over.
ChainRoundResult run_round_chain(std::vector<AgentState>& states,
                                 const std::vector<int>& order,
                                 const IgnoranceVector& w, int round,
                                 AlphaRule rule);

struct TwoAgentRoundResult {
  RoundStep lead;    // the task owner: vote weight from its own accuracy
  RoundStep assist;  // the helper: vote weight from the paired closed form
  IgnoranceVector next_ignorance;
  bool stop_after_round = false;
  std::string stop_reason;
};

// The literal two-agent round: the lead fits and weights itself on its own
// weighted accuracy, reweights, hands off; the assistant fits against the
// updated weights, weights itself with the paired closed form, reweights,
// and routes the result back for round t+1.
TwoAgentRoundResult run_round_two_agent(AgentState& lead, AgentState& assist,
                                        const IgnoranceVector& w, int round);

// Score block for one agent: the alpha-weighted coded votes of its
// components over the given feature rows. Every component must have been
// trained on matching columns.
PartialScoreMatrix partial_scores(
    const std::vector<EnsembleComponent>& components, int agent,
    const FeatureMatrix& slice, int K);

// Sums score blocks in the given order and takes the row-wise argmax, ties
// to the lowest class. All blocks must agree on rows and classes.
std::vector<int> aggregate_predict(
    const std::vector<PartialScoreMatrix>& blocks, size_t rows, int K);

// Joint prediction over vertical slices: slices[m] holds agent m+1's
// columns for the same rows in the same order. An agent that owns
// components but lacks a matching slice is a hard error.
std::vector<int> predict_joint(
    const std::vector<std::vector<EnsembleComponent>>& per_agent,
    const std::vector<FeatureMatrix>& slices, size_t rows, int K);

// Plurality vote over per-voter label predictions, ties to the lowest
// class. Every voter must cover all rows.
std::vector<int> plurality_vote(const std::vector<std::vector<int>>& votes,
                                int K);

// Fraction of predictions matching the labels.
double accuracy(const std::vector<int>& predicted, const ClassVector& labels);

struct BoostRound {
  int round = 0;
  double alpha = 0.0;
  double r_bar = 0.0;
  std::vector<double> weights;  // after this round's update, normalized
};

struct BoostResult {
  std::vector<EnsembleComponent> components;
  std::vector<BoostRound> trajectory;  // kept rounds only
  std::string stop_reason;             // empty when all rounds ran

  std::vector<int> predict(const FeatureMatrix& X, int K) const;
};

// Plain single-party multiclass boosting: fit against the current weights,
// weight the model by log(r_bar/(1-r_bar)) + log(K-1), multiply the
// misclassified samples' weights by e^alpha, renormalize, repeat. Stops
// (discarding the final fit) when weighted accuracy falls to chance. The
// degenerate one-agent interchange reduces to exactly this trajectory.
BoostResult boost_single(const ClassVector& y, const FeatureMatrix& X,
                         const WeakModelSpec& learner, int max_rounds,
                         int agent = 1);

}  // namespace ascii
