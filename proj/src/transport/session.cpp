#include <algorithm>
#include <climits>
#include <cmath>
#include <condition_variable>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "ascii/session.hpp"

namespace ascii {
namespace {

// ---------------------------------------------------------------------------
// Instrumentation: per-round score traces shared between agent threads and
// the coordinator. This is how the harness observes per-round accuracy; it
// never touches the wire, so the cost meter sees only real protocol bytes.

struct RoundTrace {
  int position = 0;  // index within the round's visit order
  double alpha = 0.0;
  double r_bar = 0.0;
  bool kept = false;
  std::vector<double> fit_delta;      // alpha-weighted votes, fit rows
  std::vector<double> holdout_delta;  // empty when no holdout
  std::vector<double> test_delta;
};

class TraceBoard {
 public:
  explicit TraceBoard(int agents)
      : agents_(agents), last_round_(static_cast<size_t>(agents) + 1, INT_MAX) {}

  void post(int agent, int round, RoundTrace trace) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      posts_[{round, agent}] = std::move(trace);
    }
    cv_.notify_all();
  }

  // Declares that `agent` will post nothing after `round`.
  void mark_done(int agent, int round) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      last_round_[static_cast<size_t>(agent)] = round;
    }
    cv_.notify_all();
  }

  // Blocks until every agent has either posted `round` or finished earlier;
  // returns the round's traces as (agent, trace) sorted by position.
  std::vector<std::pair<int, RoundTrace>> collect(int round) {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] {
      if (poisoned_) return true;
      for (int a = 1; a <= agents_; ++a)
        if (last_round_[static_cast<size_t>(a)] >= round &&
            posts_.find({round, a}) == posts_.end())
          return false;
      return true;
    });
    if (poisoned_) throw ProtocolError("session aborted");
    std::vector<std::pair<int, RoundTrace>> out;
    for (int a = 1; a <= agents_; ++a) {
      auto it = posts_.find({round, a});
      if (it == posts_.end()) continue;
      out.emplace_back(a, std::move(it->second));
      posts_.erase(it);
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
      return x.second.position < y.second.position;
    });
    return out;
  }

  void poison() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      poisoned_ = true;
    }
    cv_.notify_all();
  }

 private:
  int agents_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::pair<int, int>, RoundTrace> posts_;  // (round, agent)
  std::vector<int> last_round_;
  bool poisoned_ = false;
};

// ---------------------------------------------------------------------------

struct AgentData {
  AgentState state;  // fit rows only
  ClassVector fit_labels;
  FeatureMatrix holdout_features;  // rows == 0 when no holdout
  ClassVector holdout_labels;
  FeatureMatrix test_features;
  ClassVector test_labels;
  std::vector<std::string> test_ids;
};

struct SessionCtx {
  const SessionConfig& cfg;
  int num_agents;
  int num_classes;
  AlphaRule rule;
  std::vector<std::vector<int>> orders;  // index t-1, chain variants only
  std::unique_ptr<ChannelMesh> mesh;     // null when single-agent
  CostLedger ledger;
  TraceBoard board;
  std::vector<std::vector<EnsembleComponent>> components;  // filled on exit

  std::mutex err_mu;
  std::string first_error;

  SessionCtx(const SessionConfig& c, int m, int k)
      : cfg(c),
        num_agents(m),
        num_classes(k),
        rule(alpha_rule_for(c.variant)),
        board(m),
        components(static_cast<size_t>(m)) {}

  void fail(const std::string& what) {
    {
      std::lock_guard<std::mutex> lock(err_mu);
      if (first_error.empty()) first_error = what;
    }
    if (mesh) mesh->drop_all();
    board.poison();
  }

  bool failed() {
    std::lock_guard<std::mutex> lock(err_mu);
    return !first_error.empty();
  }

  void send(int from, int to, const Message& msg, int round_for_log) {
    std::vector<uint8_t> frame = serialize_message(msg);
    ledger.record(round_for_log, from, message_kind(msg), frame.size());
    mesh->link(from, to).send(frame);
  }

  Message recv(int me) { return deserialize(mesh->inbox(me).pop()); }
};

// ---------------------------------------------------------------------------
// Alignment

std::vector<std::string> sorted_ids(const Dataset& data) {
  std::vector<std::string> ids = data.sample_ids;
  std::sort(ids.begin(), ids.end());
  return ids;
}

uint64_t digest_for(const Dataset& data, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, int> label_of;
  label_of.reserve(data.sample_ids.size());
  for (size_t i = 0; i < data.sample_ids.size(); ++i)
    label_of[data.sample_ids[i]] = data.labels.labels[i];
  std::vector<int> labels;
  labels.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = label_of.find(id);
    if (it == label_of.end())
      throw ProtocolError("alignment produced an id this agent does not hold");
    labels.push_back(it->second);
  }
  return label_digest(ids, labels);
}

std::vector<std::string> intersect_sorted(const std::vector<std::string>& a,
                                          const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

// Ring-style id alignment: agent 1 starts with its sorted ids, every agent
// intersects and forwards, and the last agent broadcasts the final
// intersection plus a label checksum that every receiver verifies against
// its own labels.
std::vector<std::string> run_handshake(SessionCtx& ctx, int me,
                                       const Dataset& train) {
  const int M = ctx.num_agents;
  const std::vector<std::string> mine = sorted_ids(train);

  auto expect_handshake = [&](int sender) {
    Message msg = ctx.recv(me);
    const auto* hs = std::get_if<HandshakeMessage>(&msg);
    if (!hs)
      throw ProtocolError("expected an alignment message, got " +
                          std::string(message_kind_name(message_kind(msg))));
    if (hs->sender != sender)
      throw ProtocolError("alignment message from agent " +
                          std::to_string(hs->sender) + ", expected agent " +
                          std::to_string(sender));
    return *hs;
  };

  std::vector<std::string> final_ids;
  if (me == M) {
    HandshakeMessage incoming = expect_handshake(M - 1);
    final_ids = intersect_sorted(incoming.sample_ids, mine);
    if (final_ids.empty())
      throw ProtocolError("no overlapping samples between agents");
    HandshakeMessage out{me, final_ids, digest_for(train, final_ids)};
    for (int peer = 1; peer < M; ++peer) ctx.send(me, peer, out, 0);
  } else {
    if (me == 1) {
      ctx.send(me, 2, HandshakeMessage{me, mine, digest_for(train, mine)}, 0);
    } else {
      HandshakeMessage incoming = expect_handshake(me - 1);
      std::vector<std::string> merged =
          intersect_sorted(incoming.sample_ids, mine);
      ctx.send(me, me + 1,
               HandshakeMessage{me, merged, digest_for(train, merged)}, 0);
    }
    HandshakeMessage final_msg = expect_handshake(M);
    final_ids = final_msg.sample_ids;
    if (final_ids.empty())
      throw ProtocolError("no overlapping samples between agents");
    if (digest_for(train, final_ids) != final_msg.label_digest)
      throw ProtocolError(
          "label checksum mismatch: agents disagree on the labels of the "
          "shared samples");
  }
  return final_ids;
}

AgentData build_agent_data(const SessionCtx& ctx, int me, const Dataset& train,
                           const Dataset& test,
                           const std::vector<std::string>& aligned_ids) {
  std::unordered_map<std::string, size_t> row_of;
  row_of.reserve(train.sample_ids.size());
  for (size_t i = 0; i < train.sample_ids.size(); ++i)
    row_of[train.sample_ids[i]] = i;
  std::vector<size_t> rows;
  rows.reserve(aligned_ids.size());
  for (const std::string& id : aligned_ids) rows.push_back(row_of.at(id));
  Dataset aligned = select_rows(train, rows);

  const size_t n = aligned.rows();
  size_t n_hold = 0;
  if (ctx.cfg.stop.criterion == StopSpec::Criterion::holdout) {
    n_hold = static_cast<size_t>(std::llround(
        ctx.cfg.stop.fraction * static_cast<double>(n)));
    n_hold = std::min(std::max<size_t>(n_hold, 1), n - 1);
  }
  const size_t n_fit = n - n_hold;

  std::vector<size_t> fit_rows(n_fit), hold_rows(n_hold);
  std::iota(fit_rows.begin(), fit_rows.end(), 0);
  std::iota(hold_rows.begin(), hold_rows.end(), n_fit);
  Dataset fit = select_rows(aligned, fit_rows);
  Dataset hold = select_rows(aligned, hold_rows);

  AgentData data;
  data.state =
      make_agent_state(me, fit.features, fit.labels,
                       ctx.cfg.learners[static_cast<size_t>(me - 1)]);
  data.fit_labels = fit.labels;
  if (n_hold > 0) {
    data.holdout_features = hold.features;
    data.holdout_labels = hold.labels;
  }
  data.test_features = test.features;
  data.test_labels = test.labels;
  data.test_ids = test.sample_ids;
  return data;
}

// ---------------------------------------------------------------------------
// Shared helpers

std::vector<double> vote_delta(const WeakModel& model, double alpha,
                               const FeatureMatrix& X, int K) {
  if (X.rows == 0) return {};
  PartialScoreMatrix block = PartialScoreMatrix::zeros(0, X.rows, K);
  add_votes(block, model.predict_all(X), alpha);
  return std::move(block.scores);
}

RoundTrace make_trace(const AgentData& data, const RoundStep& step,
                      int position, int K) {
  RoundTrace trace;
  trace.position = position;
  trace.alpha = step.alpha;
  trace.r_bar = step.r_bar;
  trace.kept = step.kept;
  if (step.kept) {
    trace.fit_delta =
        vote_delta(*step.model, step.alpha, data.state.features, K);
    trace.holdout_delta =
        vote_delta(*step.model, step.alpha, data.holdout_features, K);
    trace.test_delta =
        vote_delta(*step.model, step.alpha, data.test_features, K);
  }
  return trace;
}

RoundMessage step_message(const RoundStep& step, bool lean, bool terminal) {
  RoundMessage msg;
  msg.round = step.round;
  msg.sender = step.agent;
  msg.alpha = step.alpha;
  msg.ignorance = step.ignorance.weights;
  msg.reward = step.reward.values;
  msg.has_accumulator = !lean;
  if (!lean) msg.accumulator = step.acc.scores;
  msg.terminal = terminal;
  return msg;
}

RoundMessage boundary_message(int round, int sender,
                              const IgnoranceVector& w) {
  RoundMessage msg;
  msg.round = round;
  msg.sender = sender;
  msg.ignorance = w.weights;
  msg.reward.assign(w.size(), 0);
  return msg;
}

RoundMessage terminal_message(int round, int sender) {
  RoundMessage msg;
  msg.round = round;
  msg.sender = sender;
  msg.terminal = true;
  return msg;
}

// Rebuilds the accumulator a round message implies. Mid-round receivers with
// a single predecessor can reconstruct it from (alpha, reward); deeper chain
// positions require it on the wire.
ScoreAccumulator acc_from_message(const RoundMessage& msg, int position,
                                  AlphaRule rule, int K) {
  ScoreAccumulator acc = ScoreAccumulator::zeros(msg.samples(), msg.round);
  if (msg.has_accumulator) {
    acc.scores = msg.accumulator;
    return acc;
  }
  if (rule != AlphaRule::chain || position == 0) return acc;
  if (position >= 2)
    throw ProtocolError(
        "round message lacks the accumulator needed at chain position " +
        std::to_string(position + 1));
  if (msg.alpha > 0.0) {
    const double agree = msg.alpha * code_agree(K);
    const double disagree = msg.alpha * code_disagree(K);
    for (size_t i = 0; i < acc.scores.size(); ++i)
      acc.scores[i] = msg.reward[i] ? agree : disagree;
  }
  return acc;
}

int position_of(const std::vector<int>& order, int agent) {
  auto it = std::find(order.begin(), order.end(), agent);
  return static_cast<int>(it - order.begin());
}

std::vector<int> flat_argmax(const std::vector<double>& scores, size_t rows,
                             int K) {
  PartialScoreMatrix block;
  block.rows = rows;
  block.num_classes = K;
  block.scores = scores;
  return argmax_classes(block);
}

// Either a token to act on, or the news that the run is over.
struct TokenOrTerminal {
  bool terminal = false;
  RoundMessage msg;
};

TokenOrTerminal recv_round(SessionCtx& ctx, int me, int round,
                           int expected_sender, size_t expected_n) {
  Message raw = ctx.recv(me);
  const auto* rm = std::get_if<RoundMessage>(&raw);
  if (!rm)
    throw ProtocolError("expected a round message, got " +
                        std::string(message_kind_name(message_kind(raw))));
  if (rm->terminal && rm->samples() == 0) return {true, *rm};
  if (rm->round != round || rm->sender != expected_sender)
    throw ProtocolError(
        "out-of-order round message: got (round " + std::to_string(rm->round) +
        ", agent " + std::to_string(rm->sender) + "), expected (round " +
        std::to_string(round) + ", agent " + std::to_string(expected_sender) +
        ")");
  if (rm->samples() != expected_n)
    throw ProtocolError("round message carries " +
                        std::to_string(rm->samples()) + " samples, expected " +
                        std::to_string(expected_n));
  return {false, *rm};
}

// ---------------------------------------------------------------------------
// Lead-side evaluation state

struct EvalState {
  std::vector<std::vector<double>> cum_fit, cum_hold, cum_test;  // per agent
  std::vector<int> kept_count;

  explicit EvalState(int agents)
      : cum_fit(static_cast<size_t>(agents)),
        cum_hold(static_cast<size_t>(agents)),
        cum_test(static_cast<size_t>(agents)),
        kept_count(static_cast<size_t>(agents), 0) {}

  static void add(std::vector<double>& cum, const std::vector<double>& delta) {
    if (delta.empty()) return;
    if (cum.empty()) cum.assign(delta.size(), 0.0);
    for (size_t i = 0; i < delta.size(); ++i) cum[i] += delta[i];
  }

  void absorb(int agent, const RoundTrace& trace) {
    if (!trace.kept) return;
    size_t m = static_cast<size_t>(agent - 1);
    add(cum_fit[m], trace.fit_delta);
    add(cum_hold[m], trace.holdout_delta);
    add(cum_test[m], trace.test_delta);
    ++kept_count[m];
  }

  // Joint additive scores, reduced in fixed agent order.
  std::vector<double> total(const std::vector<std::vector<double>>& cum,
                            size_t rows, int K) const {
    std::vector<double> out(rows * static_cast<size_t>(K), 0.0);
    for (const std::vector<double>& c : cum) {
      if (c.empty()) continue;
      for (size_t i = 0; i < out.size(); ++i) out[i] += c[i];
    }
    return out;
  }

  // Per-agent label votes (agents with at least one kept component).
  std::vector<int> vote(const std::vector<std::vector<double>>& cum,
                        size_t rows, int K) const {
    std::vector<std::vector<int>> votes;
    for (size_t m = 0; m < cum.size(); ++m) {
      if (kept_count[m] == 0) continue;
      std::vector<double> scores =
          cum[m].empty() ? std::vector<double>(rows * static_cast<size_t>(K), 0.0)
                         : cum[m];
      votes.push_back(flat_argmax(scores, rows, K));
    }
    if (votes.empty()) return std::vector<int>(rows, 1);
    return plurality_vote(votes, K);
  }
};

// ---------------------------------------------------------------------------
// Per-agent session bodies

// Chain variants, assisting agent (me != 1). Acts in every round until the
// task owner's stop notice arrives, then ships its test scores.
void chain_assistant(SessionCtx& ctx, int me, AgentData& data) {
  const int M = ctx.num_agents;
  const int K = ctx.num_classes;
  const size_t n = data.state.rows();

  bool got_terminal = false;
  for (int t = 1; t <= ctx.cfg.max_rounds && !got_terminal; ++t) {
    const std::vector<int>& order = ctx.orders[static_cast<size_t>(t - 1)];
    const int pos = position_of(order, me);

    IgnoranceVector w;
    ScoreAccumulator acc = ScoreAccumulator::zeros(n, t);
    bool inherited_terminal = false;
    if (pos == 0 && t == 1) {
      w = IgnoranceVector::uniform(n);
    } else {
      const int from = pos == 0 ? 1 : order[static_cast<size_t>(pos - 1)];
      TokenOrTerminal in = recv_round(ctx, me, t, from, n);
      if (in.terminal) {
        got_terminal = true;
        break;
      }
      acc = acc_from_message(in.msg, pos, ctx.rule, K);
      w.weights = std::move(in.msg.ignorance);
      inherited_terminal = pos > 0 && in.msg.terminal;
    }

    RoundStep step = agent_round_step(data.state, w, acc, t, ctx.rule);
    if (step.kept)
      data.state.components.push_back(
          EnsembleComponent{t, me, step.alpha, step.model});
    ctx.board.post(me, t, make_trace(data, step, pos, K));

    const bool terminal_now = inherited_terminal || !step.kept;
    const int next =
        pos < M - 1 ? order[static_cast<size_t>(pos + 1)] : 1;  // wrap to lead
    ctx.send(me, next, step_message(step, ctx.cfg.lean_messages, terminal_now),
             t);
  }

  // The stop notice doubles as the go-ahead for the prediction stage; it
  // keeps prediction traffic from overtaking round traffic in the task
  // owner's inbox.
  while (!got_terminal) {
    Message raw = ctx.recv(me);
    const auto* rm = std::get_if<RoundMessage>(&raw);
    if (!rm || !rm->terminal || rm->samples() != 0)
      throw ProtocolError("expected the stop notice after the last round");
    got_terminal = true;
  }

  // Prediction stage: ship the summed test-row votes to the task owner.
  PredictMessage predict;
  predict.sender = me;
  predict.num_classes = K;
  predict.sample_ids = data.test_ids;
  predict.scores = partial_scores(data.state.components, me,
                                  data.test_features, K)
                       .scores;
  ctx.send(me, 1, predict, 0);
}

struct LeadOutcome {
  std::vector<RoundMetrics> rounds;
  int completed_rounds = 0;
  std::string stop_reason;
  std::vector<int> test_predictions;
  double test_accuracy = 0.0;
  bool dropped = false;  // fault-injection hook fired
};

// Computes one round's metrics from the collected traces.
RoundMetrics round_metrics(SessionCtx& ctx, EvalState& eval,
                           const AgentData& lead, int t,
                           const std::vector<std::pair<int, RoundTrace>>& traces) {
  const int K = ctx.num_classes;
  for (const auto& [agent, trace] : traces) eval.absorb(agent, trace);

  RoundMetrics metrics;
  metrics.round = t;
  for (const auto& [agent, trace] : traces)
    metrics.alphas.emplace_back(agent, trace.alpha);

  const size_t n_fit = lead.state.rows();
  const size_t n_hold = lead.holdout_features.rows;
  const size_t n_test = lead.test_features.rows;
  const bool voting = ctx.cfg.variant == Variant::ensemble_adaboost;

  auto fit_pred = voting ? eval.vote(eval.cum_fit, n_fit, K)
                         : flat_argmax(eval.total(eval.cum_fit, n_fit, K),
                                       n_fit, K);
  auto test_pred = voting ? eval.vote(eval.cum_test, n_test, K)
                          : flat_argmax(eval.total(eval.cum_test, n_test, K),
                                        n_test, K);
  metrics.train_accuracy = accuracy(fit_pred, lead.fit_labels);
  metrics.test_accuracy = accuracy(test_pred, lead.test_labels);
  if (n_hold > 0) {
    auto hold_pred = voting
                         ? eval.vote(eval.cum_hold, n_hold, K)
                         : flat_argmax(eval.total(eval.cum_hold, n_hold, K),
                                       n_hold, K);
    metrics.holdout_error = 1.0 - accuracy(hold_pred, lead.holdout_labels);
  }
  return metrics;
}

std::string chance_stop_reason(const std::vector<std::pair<int, RoundTrace>>& traces,
                               int K) {
  for (const auto& [agent, trace] : traces)
    if (!trace.kept)
      return "agent " + std::to_string(agent) + ": " +
             should_stop(trace.r_bar, trace.alpha, K).reason;
  return "weighted accuracy at or below chance";
}

// Chain variants, task owner (agent 1). Runs on the caller thread; fills
// `out` incrementally so partial progress survives an abort.
void chain_lead(SessionCtx& ctx, AgentData& data, LeadOutcome& out) {
  const int M = ctx.num_agents;
  const int K = ctx.num_classes;
  const size_t n = data.state.rows();

  EvalState eval(M);
  std::vector<double> holdout_history;
  IgnoranceVector stored_w = IgnoranceVector::uniform(n);
  int stop_round = 0;

  for (int t = 1; t <= ctx.cfg.max_rounds; ++t) {
    const std::vector<int>& order = ctx.orders[static_cast<size_t>(t - 1)];
    const int pos = position_of(order, 1);

    IgnoranceVector w;
    ScoreAccumulator acc = ScoreAccumulator::zeros(n, t);
    bool inherited_terminal = false;
    if (pos == 0) {
      w = stored_w;
    } else {
      const int from = order[static_cast<size_t>(pos - 1)];
      TokenOrTerminal in = recv_round(ctx, 1, t, from, n);
      if (in.terminal)
        throw ProtocolError("task owner received an unexpected stop notice");
      acc = acc_from_message(in.msg, pos, ctx.rule, K);
      w.weights = std::move(in.msg.ignorance);
      inherited_terminal = in.msg.terminal;
    }

    RoundStep step = agent_round_step(data.state, w, acc, t, ctx.rule);
    if (step.kept)
      data.state.components.push_back(
          EnsembleComponent{t, 1, step.alpha, step.model});
    ctx.board.post(1, t, make_trace(data, step, pos, K));

    bool terminal_now = inherited_terminal || !step.kept;
    IgnoranceVector w_end;
    if (pos < M - 1) {
      ctx.send(1, order[static_cast<size_t>(pos + 1)],
               step_message(step, ctx.cfg.lean_messages, terminal_now), t);
      TokenOrTerminal complete =
          recv_round(ctx, 1, t, order[static_cast<size_t>(M - 1)], n);
      if (complete.terminal)
        throw ProtocolError("task owner received an unexpected stop notice");
      terminal_now = complete.msg.terminal;
      w_end.weights = std::move(complete.msg.ignorance);
    } else {
      w_end = step.ignorance;
    }

    auto traces = ctx.board.collect(t);
    out.rounds.push_back(round_metrics(ctx, eval, data, t, traces));
    out.completed_rounds = t;

    if (terminal_now) {
      out.stop_reason = chance_stop_reason(traces, K);
      stop_round = t;
    } else if (out.rounds.back().holdout_error) {
      holdout_history.push_back(*out.rounds.back().holdout_error);
      StopDecision hd =
          should_stop(1.0, 1.0, K, &holdout_history, ctx.cfg.stop.patience);
      if (hd.stop) {
        out.stop_reason = hd.reason;
        stop_round = t;
      }
    }
    if (stop_round == 0 && t == ctx.cfg.max_rounds) {
      out.stop_reason = "maximum rounds reached";
      stop_round = t;
    }

    if (ctx.cfg.drop_channels_after_round == t) {
      out.dropped = true;
      // Salvage what this round left before the channels go away.
      out.test_predictions = flat_argmax(eval.total(eval.cum_test,
                                                    data.test_features.rows, K),
                                         data.test_features.rows, K);
      out.test_accuracy = accuracy(out.test_predictions, data.test_labels);
      ctx.fail("injected channel loss after round " + std::to_string(t));
      return;
    }

    if (stop_round > 0) {
      for (int peer = 2; peer <= M; ++peer)
        ctx.send(1, peer, terminal_message(t, 1), t);
      break;
    }

    const int next_first = ctx.orders[static_cast<size_t>(t)][0];
    if (next_first == 1)
      stored_w = std::move(w_end);
    else
      ctx.send(1, next_first, boundary_message(t + 1, 1, w_end), t + 1);
  }

  // Prediction stage: collect one score shipment per assisting agent and
  // reduce in fixed agent order.
  const size_t n_test = data.test_features.rows;
  std::vector<std::vector<double>> shipped(static_cast<size_t>(M));
  shipped[0] =
      partial_scores(data.state.components, 1, data.test_features, K).scores;
  std::set<int> pending;
  for (int peer = 2; peer <= M; ++peer) pending.insert(peer);
  while (!pending.empty()) {
    Message raw = ctx.recv(1);
    const auto* pm = std::get_if<PredictMessage>(&raw);
    if (!pm)
      throw ProtocolError("expected a prediction message, got " +
                          std::string(message_kind_name(message_kind(raw))));
    if (!pending.count(pm->sender))
      throw ProtocolError("duplicate or unknown prediction sender " +
                          std::to_string(pm->sender));
    if (pm->sample_ids != data.test_ids)
      throw ProtocolError("prediction rows do not match the test samples");
    if (pm->num_classes != K)
      throw ProtocolError("prediction classes do not match");
    shipped[static_cast<size_t>(pm->sender - 1)] = pm->scores;
    pending.erase(pm->sender);
  }

  if (ctx.cfg.variant == Variant::ensemble_adaboost) {
    std::vector<std::vector<int>> votes;
    for (size_t m = 0; m < shipped.size(); ++m) {
      if (eval.kept_count[m] == 0) continue;
      votes.push_back(flat_argmax(shipped[m], n_test, K));
    }
    out.test_predictions = votes.empty()
                               ? std::vector<int>(n_test, 1)
                               : plurality_vote(votes, K);
  } else {
    std::vector<double> total(n_test * static_cast<size_t>(K), 0.0);
    for (const std::vector<double>& scores : shipped)
      for (size_t i = 0; i < total.size(); ++i) total[i] += scores[i];
    out.test_predictions = flat_argmax(total, n_test, K);
  }
  out.test_accuracy = accuracy(out.test_predictions, data.test_labels);
}

// Independent per-agent boosting, assisting agent. No interchange: train
// locally, post traces, wait for the stop notice, ship test scores.
void ensemble_assistant(SessionCtx& ctx, int me, AgentData& data) {
  const int K = ctx.num_classes;
  const size_t n = data.state.rows();

  IgnoranceVector w = IgnoranceVector::uniform(n);
  for (int t = 1; t <= ctx.cfg.max_rounds; ++t) {
    RoundStep step = agent_round_step(data.state, w,
                                      ScoreAccumulator::zeros(n, t), t,
                                      AlphaRule::individual);
    ctx.board.post(me, t, make_trace(data, step, me - 1, K));
    if (!step.kept) {
      ctx.board.mark_done(me, t);
      break;
    }
    data.state.components.push_back(
        EnsembleComponent{t, me, step.alpha, step.model});
    w = step.ignorance;
    if (t == ctx.cfg.max_rounds) ctx.board.mark_done(me, t);
  }

  Message raw = ctx.recv(me);
  const auto* rm = std::get_if<RoundMessage>(&raw);
  if (!rm || !rm->terminal)
    throw ProtocolError("expected the stop notice after local training");

  PredictMessage predict;
  predict.sender = me;
  predict.num_classes = K;
  predict.sample_ids = data.test_ids;
  predict.scores = partial_scores(data.state.components, me,
                                  data.test_features, K)
                       .scores;
  ctx.send(me, 1, predict, 0);
}

void ensemble_lead(SessionCtx& ctx, AgentData& data, LeadOutcome& out) {
  const int M = ctx.num_agents;
  const int K = ctx.num_classes;
  const size_t n = data.state.rows();

  // Own local training first; posts pile up for the per-round reduction.
  IgnoranceVector w = IgnoranceVector::uniform(n);
  for (int t = 1; t <= ctx.cfg.max_rounds; ++t) {
    RoundStep step = agent_round_step(data.state, w,
                                      ScoreAccumulator::zeros(n, t), t,
                                      AlphaRule::individual);
    ctx.board.post(1, t, make_trace(data, step, 0, K));
    if (!step.kept) {
      ctx.board.mark_done(1, t);
      break;
    }
    data.state.components.push_back(
        EnsembleComponent{t, 1, step.alpha, step.model});
    w = step.ignorance;
    if (t == ctx.cfg.max_rounds) ctx.board.mark_done(1, t);
  }

  EvalState eval(M);
  for (int t = 1; t <= ctx.cfg.max_rounds; ++t) {
    auto traces = ctx.board.collect(t);
    if (traces.empty()) break;
    out.rounds.push_back(round_metrics(ctx, eval, data, t, traces));
    out.completed_rounds = t;
  }
  out.stop_reason = out.completed_rounds < ctx.cfg.max_rounds
                        ? "all agents at or below chance accuracy"
                        : "maximum rounds reached";

  for (int peer = 2; peer <= M; ++peer)
    ctx.send(1, peer, terminal_message(out.completed_rounds, 1),
             out.completed_rounds);

  const size_t n_test = data.test_features.rows;
  std::vector<std::vector<double>> shipped(static_cast<size_t>(M));
  shipped[0] =
      partial_scores(data.state.components, 1, data.test_features, K).scores;
  std::set<int> pending;
  for (int peer = 2; peer <= M; ++peer) pending.insert(peer);
  while (!pending.empty()) {
    Message raw = ctx.recv(1);
    const auto* pm = std::get_if<PredictMessage>(&raw);
    if (!pm) throw ProtocolError("expected a prediction message");
    if (!pending.count(pm->sender))
      throw ProtocolError("duplicate or unknown prediction sender " +
                          std::to_string(pm->sender));
    if (pm->sample_ids != data.test_ids)
      throw ProtocolError("prediction rows do not match the test samples");
    shipped[static_cast<size_t>(pm->sender - 1)] = pm->scores;
    pending.erase(pm->sender);
  }
  std::vector<std::vector<int>> votes;
  for (size_t m = 0; m < shipped.size(); ++m) {
    if (eval.kept_count[m] == 0) continue;
    votes.push_back(flat_argmax(shipped[m], n_test, K));
  }
  out.test_predictions =
      votes.empty() ? std::vector<int>(n_test, 1) : plurality_vote(votes, K);
  out.test_accuracy = accuracy(out.test_predictions, data.test_labels);
}

// Single agent: the whole interchange degenerates to local boosting with
// the chain bookkeeping, no channels at all.
void single_agent_run(SessionCtx& ctx, AgentData& data, LeadOutcome& out) {
  const int K = ctx.num_classes;
  const size_t n = data.state.rows();

  EvalState eval(1);
  std::vector<double> holdout_history;
  IgnoranceVector w = IgnoranceVector::uniform(n);

  for (int t = 1; t <= ctx.cfg.max_rounds; ++t) {
    RoundStep step =
        agent_round_step(data.state, w, ScoreAccumulator::zeros(n, t), t,
                         ctx.rule);
    if (step.kept)
      data.state.components.push_back(
          EnsembleComponent{t, 1, step.alpha, step.model});
    w = step.ignorance;
    ctx.board.post(1, t, make_trace(data, step, 0, K));
    auto traces = ctx.board.collect(t);
    out.rounds.push_back(round_metrics(ctx, eval, data, t, traces));
    out.completed_rounds = t;

    if (!step.kept) {
      out.stop_reason = should_stop(step.r_bar, step.alpha, K).reason;
      break;
    }
    if (out.rounds.back().holdout_error) {
      holdout_history.push_back(*out.rounds.back().holdout_error);
      StopDecision hd =
          should_stop(1.0, 1.0, K, &holdout_history, ctx.cfg.stop.patience);
      if (hd.stop) {
        out.stop_reason = hd.reason;
        break;
      }
    }
    if (t == ctx.cfg.max_rounds) out.stop_reason = "maximum rounds reached";
  }

  out.test_predictions = flat_argmax(
      eval.total(eval.cum_test, data.test_features.rows, K),
      data.test_features.rows, K);
  out.test_accuracy = accuracy(out.test_predictions, data.test_labels);
}

void validate_inputs(const SessionConfig& cfg,
                     const std::vector<Dataset>& train_slices,
                     const std::vector<Dataset>& test_slices) {
  const size_t M = train_slices.size();
  if (M == 0) throw ConfigError("at least one agent required");
  if (test_slices.size() != M)
    throw ConfigError("train and test slice counts disagree");
  if (cfg.learners.size() != M)
    throw ConfigError("expected one learner spec per agent, got " +
                      std::to_string(cfg.learners.size()) + " for " +
                      std::to_string(M) + " agents");
  if (cfg.max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
  for (const WeakModelSpec& spec : cfg.learners) spec.validate();

  const AlphaRule rule = alpha_rule_for(cfg.variant);
  if (cfg.lean_messages && rule == AlphaRule::chain && M > 2)
    throw ConfigError(
        "lean_messages drops the accumulator, which chain vote weights need "
        "from the third agent on; use two agents or the own-accuracy "
        "variant");
  if (cfg.variant == Variant::ensemble_adaboost &&
      cfg.stop.criterion == StopSpec::Criterion::holdout)
    throw ConfigError(
        "holdout stopping needs a shared round boundary; the independent "
        "per-agent variant has none");
  if (cfg.stop.criterion == StopSpec::Criterion::holdout) {
    if (cfg.stop.patience < 1) throw ConfigError("patience must be >= 1");
    if (!(cfg.stop.fraction > 0.0 && cfg.stop.fraction < 1.0))
      throw ConfigError("holdout fraction must lie in (0, 1)");
  }

  int K = 0;
  for (size_t m = 0; m < M; ++m) {
    train_slices[m].validate();
    test_slices[m].validate();
    if (m == 0) {
      K = train_slices[m].labels.num_classes;
    } else if (train_slices[m].labels.num_classes != K ||
               test_slices[m].labels.num_classes != K) {
      throw ConfigError("agents disagree on the number of classes");
    }
    if (test_slices[m].sample_ids != test_slices[0].sample_ids ||
        test_slices[m].labels.labels != test_slices[0].labels.labels)
      throw ConfigError(
          "test slices must be pre-aligned: identical sample ids and labels "
          "for every agent");
  }
  if (test_slices[0].labels.num_classes != K)
    throw ConfigError("train and test class counts disagree");

  if (!cfg.forced_orders.empty()) {
    if (cfg.forced_orders.size() != static_cast<size_t>(cfg.max_rounds))
      throw ConfigError("forced_orders must cover every round");
    for (const std::vector<int>& order : cfg.forced_orders) {
      std::vector<int> sorted = order;
      std::sort(sorted.begin(), sorted.end());
      std::vector<int> expect(M);
      std::iota(expect.begin(), expect.end(), 1);
      if (sorted != expect)
        throw ConfigError("each forced order must be a permutation of 1..M");
    }
  }
}

}  // namespace

StopSpec::Criterion parse_stop_criterion(const std::string& name) {
  if (name == "alpha_threshold") return StopSpec::Criterion::alpha_threshold;
  if (name == "holdout") return StopSpec::Criterion::holdout;
  throw ConfigError("unknown stop criterion '" + name +
                    "' (expected alpha_threshold or holdout)");
}

const char* stop_criterion_name(StopSpec::Criterion c) {
  return c == StopSpec::Criterion::alpha_threshold ? "alpha_threshold"
                                                   : "holdout";
}

SessionResult run_session(const SessionConfig& config,
                          const std::vector<Dataset>& train_slices,
                          const std::vector<Dataset>& test_slices) {
  validate_inputs(config, train_slices, test_slices);
  const int M = static_cast<int>(train_slices.size());
  const int K = train_slices[0].labels.num_classes;

  SessionCtx ctx(config, M, K);
  if (config.variant != Variant::ensemble_adaboost) {
    ctx.orders.reserve(static_cast<size_t>(config.max_rounds));
    for (int t = 1; t <= config.max_rounds; ++t)
      ctx.orders.push_back(
          config.forced_orders.empty()
              ? round_order(config.variant, M, t, config.seed)
              : config.forced_orders[static_cast<size_t>(t - 1)]);
  }

  SessionResult result;
  result.num_agents = M;
  result.num_classes = K;
  LeadOutcome outcome;
  AgentData lead_data;

  if (M == 1) {
    std::vector<std::string> ids = sorted_ids(train_slices[0]);
    lead_data = build_agent_data(ctx, 1, train_slices[0], test_slices[0], ids);
    try {
      single_agent_run(ctx, lead_data, outcome);
    } catch (const std::exception& e) {
      ctx.fail(e.what());
    }
    ctx.components[0] = std::move(lead_data.state.components);
  } else {
    ctx.mesh = make_mesh(config.transport, M);

    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(M - 1));
    for (int m = 2; m <= M; ++m) {
      threads.emplace_back([&ctx, m, &train_slices, &test_slices] {
        AgentData data;
        try {
          std::vector<std::string> ids =
              run_handshake(ctx, m, train_slices[static_cast<size_t>(m - 1)]);
          data = build_agent_data(ctx, m,
                                  train_slices[static_cast<size_t>(m - 1)],
                                  test_slices[static_cast<size_t>(m - 1)], ids);
          if (ctx.cfg.variant == Variant::ensemble_adaboost)
            ensemble_assistant(ctx, m, data);
          else
            chain_assistant(ctx, m, data);
        } catch (const std::exception& e) {
          ctx.fail(e.what());
        }
        ctx.components[static_cast<size_t>(m - 1)] =
            std::move(data.state.components);
      });
    }

    try {
      std::vector<std::string> ids = run_handshake(ctx, 1, train_slices[0]);
      lead_data = build_agent_data(ctx, 1, train_slices[0], test_slices[0], ids);
      if (config.variant == Variant::ensemble_adaboost)
        ensemble_lead(ctx, lead_data, outcome);
      else
        chain_lead(ctx, lead_data, outcome);
    } catch (const std::exception& e) {
      ctx.fail(e.what());
    }
    ctx.components[0] = std::move(lead_data.state.components);

    for (std::thread& t : threads) t.join();
    ctx.mesh->drop_all();
  }

  result.fit_rows = lead_data.state.rows();
  result.holdout_rows = lead_data.holdout_features.rows;
  result.test_rows = lead_data.test_features.rows;
  result.rounds = std::move(outcome.rounds);
  result.completed_rounds = outcome.completed_rounds;
  result.stop_reason = outcome.stop_reason;
  result.test_predictions = std::move(outcome.test_predictions);
  result.test_accuracy = outcome.test_accuracy;
  result.components = std::move(ctx.components);

  if (ctx.failed()) {
    result.aborted = true;
    result.abort_reason = ctx.first_error;
    // Salvage stops at the last fully completed round.
    for (std::vector<EnsembleComponent>& list : result.components) {
      std::vector<EnsembleComponent> kept;
      for (EnsembleComponent& c : list)
        if (c.round <= result.completed_rounds) kept.push_back(std::move(c));
      list = std::move(kept);
    }
  }

  result.wire_log = ctx.ledger.records();
  std::vector<size_t> assist_cols;
  for (size_t m = 1; m < train_slices.size(); ++m)
    assist_cols.push_back(train_slices[m].cols());
  size_t full_train_rows = result.fit_rows + result.holdout_rows;
  result.cost = measure_cost(ctx.ledger, full_train_rows, assist_cols);

  // Attach cumulative interchange bytes to each metrics row.
  size_t running = 0;
  size_t idx = 0;
  const auto& series = result.cost.per_round_cumulative;
  for (RoundMetrics& rm : result.rounds) {
    while (idx < series.size() && series[idx].first <= rm.round)
      running = series[idx++].second;
    rm.cumulative_round_bytes = running;
  }
  return result;
}

}  // namespace ascii
