#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ascii/protocol.hpp"

namespace ascii {
namespace {

constexpr uint64_t kFitStream = 0x666974;    // "fit"
constexpr uint64_t kOrderStream = 0x6f726472;  // "ordr"

void check_weight_alignment(const AgentState& state, const IgnoranceVector& w,
                            const ScoreAccumulator& acc) {
  if (w.size() != state.rows() || acc.scores.size() != state.rows())
    throw std::invalid_argument(
        "agent_round_step: weights, accumulator, and features disagree on "
        "sample count");
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "ascii") return Variant::ascii;
  if (name == "ascii_simple") return Variant::ascii_simple;
  if (name == "ascii_random") return Variant::ascii_random;
  if (name == "ensemble_adaboost") return Variant::ensemble_adaboost;
  throw ConfigError("unknown variant '" + name +
                    "' (expected ascii, ascii_simple, ascii_random, or "
                    "ensemble_adaboost)");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::ascii: return "ascii";
    case Variant::ascii_simple: return "ascii_simple";
    case Variant::ascii_random: return "ascii_random";
    case Variant::ensemble_adaboost: return "ensemble_adaboost";
  }
  return "?";
}

AgentState make_agent_state(int agent, FeatureMatrix slice,
                            const ClassVector& labels, WeakModelSpec learner) {
  slice.validate();
  labels.validate();
  if (slice.rows != labels.size())
    throw std::invalid_argument(
        "make_agent_state: feature rows and labels disagree");
  learner.validate();
  AgentState state;
  state.agent = agent;
  state.features = std::move(slice);
  state.codes = encode_labels(labels);
  state.learner = learner;
  return state;
}

uint64_t fit_seed(uint64_t base, int round, int agent) {
  return mix_seed(base, {kFitStream, static_cast<uint64_t>(round),
                         static_cast<uint64_t>(agent)});
}

std::vector<int> round_order(Variant v, int num_agents, int round,
                             uint64_t seed) {
  std::vector<int> order(num_agents);
  std::iota(order.begin(), order.end(), 1);
  if (v == Variant::ascii_random) {
    Rng rng(mix_seed(seed, {kOrderStream, static_cast<uint64_t>(round)}));
    rng.shuffle(order);
  }
  return order;
}

RoundStep agent_round_step(const AgentState& state, const IgnoranceVector& w,
                           const ScoreAccumulator& acc, int round,
                           AlphaRule rule) {
  check_weight_alignment(state, w, acc);

  WeakModelSpec spec = state.learner;
  spec.seed = fit_seed(state.learner.seed, round, state.agent);
  WstResult fit = wst(state.codes, state.features, w, spec);

  RoundStep step;
  step.round = round;
  step.agent = state.agent;
  step.reward = std::move(fit.reward);
  step.model = std::move(fit.model);
  step.r_bar = weighted_accuracy(w, step.reward);

  const int K = state.num_classes();
  step.alpha = rule == AlphaRule::chain
                   ? compute_alpha_chain(w, acc, step.reward, K)
                   : compute_alpha_lead(step.r_bar, K);
  step.kept = step.alpha > 0.0;

  if (step.kept) {
    step.ignorance = update_ignorance(w, step.reward, step.alpha);
    step.acc = acc;
    const double agree = step.alpha * code_agree(K);
    const double disagree = step.alpha * code_disagree(K);
    for (size_t i = 0; i < step.reward.size(); ++i)
      step.acc.scores[i] += step.reward.values[i] ? agree : disagree;
  } else {
    step.ignorance = w;
    step.acc = acc;
  }
  return step;
}

ChainRoundResult run_round_chain(std::vector<AgentState>& states,
                                 const std::vector<int>& order,
                                 const IgnoranceVector& w, int round,
                                 AlphaRule rule) {
  if (states.empty()) throw std::invalid_argument("run_round_chain: no agents");
  if (order.size() != states.size())
    throw std::invalid_argument(
        "run_round_chain: order must visit every agent exactly once");

  ChainRoundResult result;
  IgnoranceVector current = w;
  ScoreAccumulator acc = ScoreAccumulator::zeros(w.size(), round);
  for (int agent : order) {
    if (agent < 1 || static_cast<size_t>(agent) > states.size())
      throw std::invalid_argument("run_round_chain: agent index out of range");
    AgentState& state = states[static_cast<size_t>(agent - 1)];
    RoundStep step = agent_round_step(state, current, acc, round, rule);
    current = step.ignorance;
    acc = step.acc;
    if (step.kept) {
      state.components.push_back(
          EnsembleComponent{round, state.agent, step.alpha, step.model});
    } else if (!result.stop_after_round) {
      result.stop_after_round = true;
      result.stop_reason =
          "agent " + std::to_string(state.agent) + ": " +
          should_stop(step.r_bar, step.alpha, state.num_classes()).reason;
    }
    result.steps.push_back(std::move(step));
  }
  result.next_ignorance = std::move(current);
  return result;
}

TwoAgentRoundResult run_round_two_agent(AgentState& lead, AgentState& assist,
                                        const IgnoranceVector& w, int round) {
  if (lead.rows() != assist.rows())
    throw std::invalid_argument(
        "run_round_two_agent: agents disagree on sample count");
  const int K = lead.num_classes();

  TwoAgentRoundResult result;

  WeakModelSpec lead_spec = lead.learner;
  lead_spec.seed = fit_seed(lead.learner.seed, round, lead.agent);
  WstResult lead_fit = wst(lead.codes, lead.features, w, lead_spec);
  RoundStep& a = result.lead;
  a.round = round;
  a.agent = lead.agent;
  a.reward = std::move(lead_fit.reward);
  a.model = std::move(lead_fit.model);
  a.r_bar = weighted_accuracy(w, a.reward);
  a.alpha = compute_alpha_lead(a.r_bar, K);
  a.kept = a.alpha > 0.0;
  a.ignorance = a.kept ? update_ignorance(w, a.reward, a.alpha) : w;
  if (a.kept)
    lead.components.push_back(
        EnsembleComponent{round, lead.agent, a.alpha, a.model});

  WeakModelSpec assist_spec = assist.learner;
  assist_spec.seed = fit_seed(assist.learner.seed, round, assist.agent);
  WstResult assist_fit = wst(assist.codes, assist.features, a.ignorance,
                             assist_spec);
  RoundStep& b = result.assist;
  b.round = round;
  b.agent = assist.agent;
  b.reward = std::move(assist_fit.reward);
  b.model = std::move(assist_fit.model);
  b.r_bar = weighted_accuracy(a.ignorance, b.reward);
  // A discarded lead component contributes nothing within the round, so the
  // assistant falls back to weighting itself on its own accuracy.
  b.alpha = a.kept ? compute_alpha_follow(a.ignorance, a.reward, b.reward,
                                          a.alpha, K)
                   : compute_alpha_lead(b.r_bar, K);
  b.kept = b.alpha > 0.0;
  b.ignorance = b.kept ? update_ignorance(a.ignorance, b.reward, b.alpha)
                       : a.ignorance;
  if (b.kept)
    assist.components.push_back(
        EnsembleComponent{round, assist.agent, b.alpha, b.model});

  if (!a.kept || !b.kept) {
    const RoundStep& bad = a.kept ? b : a;
    result.stop_after_round = true;
    result.stop_reason = "agent " + std::to_string(bad.agent) + ": " +
                         should_stop(bad.r_bar, bad.alpha, K).reason;
  }
  result.next_ignorance = result.assist.ignorance;
  return result;
}

PartialScoreMatrix partial_scores(
    const std::vector<EnsembleComponent>& components, int agent,
    const FeatureMatrix& slice, int K) {
  PartialScoreMatrix block = PartialScoreMatrix::zeros(agent, slice.rows, K);
  for (const EnsembleComponent& c : components) {
    if (!c.model) throw std::invalid_argument("partial_scores: missing model");
    add_votes(block, c.model->predict_all(slice), c.alpha);
  }
  return block;
}

std::vector<int> aggregate_predict(
    const std::vector<PartialScoreMatrix>& blocks, size_t rows, int K) {
  PartialScoreMatrix total = PartialScoreMatrix::zeros(0, rows, K);
  for (const PartialScoreMatrix& block : blocks) {
    if (block.rows != rows || block.num_classes != K)
      throw std::invalid_argument(
          "aggregate_predict: score blocks disagree on shape");
    for (size_t i = 0; i < block.scores.size(); ++i)
      total.scores[i] += block.scores[i];
  }
  return argmax_classes(total);
}

std::vector<int> predict_joint(
    const std::vector<std::vector<EnsembleComponent>>& per_agent,
    const std::vector<FeatureMatrix>& slices, size_t rows, int K) {
  std::vector<PartialScoreMatrix> blocks;
  for (size_t m = 0; m < per_agent.size(); ++m) {
    if (per_agent[m].empty()) continue;
    if (m >= slices.size() || slices[m].rows != rows)
      throw std::invalid_argument(
          "predict_joint: agent " + std::to_string(m + 1) +
          " owns trained models but supplied no matching feature rows");
    blocks.push_back(partial_scores(per_agent[m], static_cast<int>(m + 1),
                                    slices[m], K));
  }
  return aggregate_predict(blocks, rows, K);
}

std::vector<int> plurality_vote(const std::vector<std::vector<int>>& votes,
                                int K) {
  if (votes.empty()) throw std::invalid_argument("plurality_vote: no voters");
  const size_t rows = votes.front().size();
  for (const auto& v : votes)
    if (v.size() != rows)
      throw std::invalid_argument("plurality_vote: voters disagree on rows");
  std::vector<int> out(rows);
  std::vector<int> counts(static_cast<size_t>(K));
  for (size_t i = 0; i < rows; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& v : votes) {
      if (v[i] < 1 || v[i] > K)
        throw std::invalid_argument("plurality_vote: label out of range");
      ++counts[static_cast<size_t>(v[i] - 1)];
    }
    int best = 1;
    for (int k = 2; k <= K; ++k)
      if (counts[static_cast<size_t>(k - 1)] > counts[static_cast<size_t>(best - 1)])
        best = k;
    out[i] = best;
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const ClassVector& labels) {
  if (predicted.size() != labels.size())
    throw std::invalid_argument("accuracy: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy: no samples");
  size_t hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == labels.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<int> BoostResult::predict(const FeatureMatrix& X, int K) const {
  PartialScoreMatrix block = partial_scores(components, 0, X, K);
  return argmax_classes(block);
}

BoostResult boost_single(const ClassVector& y, const FeatureMatrix& X,
                         const WeakModelSpec& learner, int max_rounds,
                         int agent) {
  if (max_rounds < 1)
    throw std::invalid_argument("boost_single: max_rounds must be >= 1");
  const int K = y.num_classes;
  LabelMatrix codes = encode_labels(y);
  const size_t n = y.size();

  BoostResult result;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  for (int t = 1; t <= max_rounds; ++t) {
    WeakModelSpec spec = learner;
    spec.seed = fit_seed(learner.seed, t, agent);
    IgnoranceVector wv{w};
    WstResult fit = wst(codes, X, wv, spec);

    double hit = 0.0, total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      total += w[i];
      if (fit.reward.values[i]) hit += w[i];
    }
    const double r_bar = hit / total;
    if (r_bar <= 1.0 / K) {
      result.stop_reason = "weighted accuracy at or below chance";
      break;
    }
    const double r = clamp_rate(r_bar);
    const double alpha = std::log(r / (1.0 - r)) + std::log(K - 1.0);

    const double bump = safe_exp(alpha);
    double z = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (!fit.reward.values[i]) w[i] *= bump;
      z += w[i];
    }
    for (double& wi : w) wi /= z;

    result.components.push_back(EnsembleComponent{t, agent, alpha, fit.model});
    result.trajectory.push_back(BoostRound{t, alpha, r_bar, w});
  }
  return result;
}

}  // namespace ascii
