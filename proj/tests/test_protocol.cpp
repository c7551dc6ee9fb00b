#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "ascii/core_math.hpp"
#include "ascii/dataset.hpp"
#include "ascii/protocol.hpp"
#include "ascii/session.hpp"
#include "doctest.h"

using namespace ascii;

namespace {

BlobSpec blob_spec(size_t n, int informative, int classes, double spread,
                   uint64_t seed) {
  BlobSpec spec;
  spec.n = n;
  spec.informative = informative;
  spec.classes = classes;
  spec.cluster_std = spread;
  spec.seed = seed;
  return spec;
}

Dataset sort_by_ids(const Dataset& d) {
  std::vector<size_t> order(d.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return d.sample_ids[a] < d.sample_ids[b];
  });
  return select_rows(d, order);
}

AgentState state_from(int agent, const Dataset& d, WeakModelSpec learner) {
  return make_agent_state(agent, d.features, d.labels, learner);
}

WeakModelSpec stump_spec(uint64_t seed = 0) {
  WeakModelSpec s;
  s.kind = WeakKind::stump;
  s.seed = seed;
  return s;
}

// Two-agent setup with a deliberately uninformative second slice: one
// constant column, so agent 2's stump is a constant predictor.
struct TwoAgentData {
  Dataset lead;
  Dataset assist;
};

TwoAgentData useless_assistant(size_t n, uint64_t seed) {
  Dataset base = generate_blobs(blob_spec(n, 2, 2, 1.0, seed));
  TwoAgentData out;
  out.lead = base;
  out.assist = base;
  out.assist.features.cols = 1;
  out.assist.features.values.assign(n, 3.0);
  out.assist.features.column_names = {"flat"};
  return out;
}

SessionConfig base_config(int max_rounds = 4) {
  SessionConfig cfg;
  cfg.max_rounds = max_rounds;
  cfg.seed = 17;
  cfg.learners = {stump_spec()};
  return cfg;
}

// Vertical train/test slices for M agents from one blob dataset.
struct SlicedData {
  std::vector<Dataset> train;
  std::vector<Dataset> test;
  Dataset train_full;
  Dataset test_full;
};

SlicedData sliced_blobs(size_t n, int informative, int classes, double spread,
                        int agents, uint64_t seed) {
  Dataset all = generate_blobs(blob_spec(n, informative, classes, spread, seed));
  auto [train, test] = split_train_test(all, 0.7, seed + 1);
  PartitionSpec part;
  part.strategy = PartitionStrategy::even;
  part.agents = agents;
  SlicedData out;
  out.train = partition_vertical(train, part);
  out.test = partition_vertical(test, part);
  out.train_full = std::move(train);
  out.test_full = std::move(test);
  return out;
}

}  // namespace

TEST_CASE("agent_round_step: reward, reweighting and accumulator invariants") {
  Rng rng(60);
  Dataset d = generate_blobs(blob_spec(80, 2, 3, 2.0, 3));
  AgentState state = state_from(1, d, stump_spec(5));
  const int K = state.num_classes();

  IgnoranceVector w;
  w.weights.resize(d.rows());
  for (auto& v : w.weights) v = rng.uniform(0.2, 1.0);
  w.normalize();
  ScoreAccumulator acc = ScoreAccumulator::zeros(d.rows(), 2);
  for (auto& s : acc.scores) s = rng.uniform(-0.4, 0.4);

  for (AlphaRule rule : {AlphaRule::chain, AlphaRule::individual}) {
    CAPTURE(rule == AlphaRule::chain);
    RoundStep step = agent_round_step(state, w, acc, 2, rule);
    CHECK(step.round == 2);
    CHECK(step.agent == 1);
    REQUIRE(step.model != nullptr);

    auto pred = step.model->predict_all(state.features);
    for (size_t i = 0; i < d.rows(); ++i)
      CHECK(int(step.reward.values[i]) == int(pred[i] == d.labels.labels[i]));

    CHECK(step.r_bar == doctest::Approx(weighted_accuracy(w, step.reward)));
    CHECK(step.kept == (step.alpha > 0.0));
    REQUIRE(step.kept);  // informative slice: this fit must clear chance

    auto expect_w = update_ignorance(w, step.reward, step.alpha);
    for (size_t i = 0; i < d.rows(); ++i)
      CHECK(step.ignorance.weights[i] ==
            doctest::Approx(expect_w.weights[i]).epsilon(1e-12));
    CHECK(step.ignorance.is_normalized());

    for (size_t i = 0; i < d.rows(); ++i) {
      const double vote = step.reward.values[i] ? code_agree(K)
                                                : code_disagree(K);
      CHECK(step.acc.scores[i] ==
            doctest::Approx(acc.scores[i] + step.alpha * vote).epsilon(1e-12));
    }

    // The vote weight matches the matching closed form.
    const double expect_alpha =
        rule == AlphaRule::chain
            ? compute_alpha_chain(w, acc, step.reward, K)
            : compute_alpha_lead(step.r_bar, K);
    CHECK(step.alpha == doctest::Approx(expect_alpha).epsilon(1e-12));
  }

  // With a zero accumulator the two rules coincide.
  ScoreAccumulator zero = ScoreAccumulator::zeros(d.rows(), 1);
  RoundStep a = agent_round_step(state, w, zero, 1, AlphaRule::chain);
  RoundStep b = agent_round_step(state, w, zero, 1, AlphaRule::individual);
  CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-12));
}

TEST_CASE("agent_round_step: chance-level fits are discarded and passed through") {
  // 64 samples with a 32/32 class split: the uniform weights are dyadic, so
  // the constant predictor's weighted accuracy is exactly one half and the
  // vote weight exactly zero.
  TwoAgentData data = useless_assistant(64, 9);
  AgentState assist = state_from(2, data.assist, stump_spec());
  IgnoranceVector w = IgnoranceVector::uniform(64);
  ScoreAccumulator acc = ScoreAccumulator::zeros(64, 1);
  for (auto& s : acc.scores) s = 0.25;

  int ones = 0;
  for (size_t i = 0; i < 64; ++i)
    if (data.assist.labels.labels[i] == 1) ++ones;
  // Blob classes are balanced by construction.
  REQUIRE(ones == 32);

  RoundStep step = agent_round_step(assist, w, acc, 1, AlphaRule::chain);
  CHECK_FALSE(step.kept);
  CHECK(step.alpha <= 0.0);
  CHECK(step.ignorance.weights == w.weights);  // untouched hand-off
  CHECK(step.acc.scores == acc.scores);
}

TEST_CASE("run_round_two_agent: literal paired round matches the chain") {
  SlicedData data = sliced_blobs(140, 4, 3, 2.5, 2, 21);
  IgnoranceVector w0 = IgnoranceVector::uniform(data.train[0].rows());

  AgentState lead_a = state_from(1, data.train[0], stump_spec(3));
  AgentState assist_a = state_from(2, data.train[1], stump_spec(3));
  auto paired = run_round_two_agent(lead_a, assist_a, w0, 1);

  AgentState lead_b = state_from(1, data.train[0], stump_spec(3));
  AgentState assist_b = state_from(2, data.train[1], stump_spec(3));
  std::vector<AgentState> states;
  states.push_back(std::move(lead_b));
  states.push_back(std::move(assist_b));
  auto chained = run_round_chain(states, {1, 2}, w0, 1, AlphaRule::chain);

  REQUIRE(chained.steps.size() == 2);
  CHECK(std::fabs(paired.lead.alpha - chained.steps[0].alpha) <= 1e-12);
  CHECK(std::fabs(paired.assist.alpha - chained.steps[1].alpha) <= 1e-12);
  // The closed forms are algebraically equal but summed differently, so the
  // reweighted hand-offs agree to rounding, not bit for bit.
  REQUIRE(paired.next_ignorance.size() == chained.next_ignorance.size());
  for (size_t i = 0; i < paired.next_ignorance.size(); ++i)
    CHECK(std::fabs(paired.next_ignorance.weights[i] -
                    chained.next_ignorance.weights[i]) <= 1e-12);

  // The assistant's weight is the closed-form paired update evaluated at
  // the post-lead weights.
  const int K = 3;
  auto w1 = update_ignorance(w0, paired.lead.reward, paired.lead.alpha);
  const double follow = compute_alpha_follow(w1, paired.lead.reward,
                                             paired.assist.reward,
                                             paired.lead.alpha, K);
  CHECK(std::fabs(paired.assist.alpha - follow) <= 1e-12);

  // Components landed on their owners.
  CHECK(states[0].components.size() == 1);
  CHECK(states[1].components.size() == 1);
  CHECK(states[0].components[0].agent == 1);
  CHECK(states[1].components[0].round == 1);
}

TEST_CASE("run_round_chain: discard keeps the hand-off intact mid-chain") {
  // A constant predictor always picks the weighted majority class, so its
  // weighted accuracy can only hit chance exactly on a perfectly tied
  // split. 64 samples make the uniform masses dyadic and the 32/32 tie
  // float-exact, and visiting the flat agent first guarantees it sees the
  // untouched uniform weights.
  Dataset base = generate_blobs(blob_spec(64, 2, 2, 1.2, 31));
  Dataset flat = base;
  flat.features.cols = 1;
  flat.features.values.assign(64, 1.0);
  flat.features.column_names = {"flat"};

  Dataset left = select_columns(base, {0});
  Dataset right = select_columns(base, {1});

  std::vector<AgentState> states;
  states.push_back(state_from(1, left, stump_spec()));
  states.push_back(state_from(2, flat, stump_spec()));
  states.push_back(state_from(3, right, stump_spec()));

  IgnoranceVector w0 = IgnoranceVector::uniform(64);
  auto result = run_round_chain(states, {2, 1, 3}, w0, 1, AlphaRule::chain);

  REQUIRE(result.steps.size() == 3);
  CHECK(result.steps[0].agent == 2);
  CHECK_FALSE(result.steps[0].kept);
  CHECK(result.steps[0].alpha == 0.0);
  CHECK(result.stop_after_round);
  CHECK(result.stop_reason.find("agent 2") != std::string::npos);

  // The discarding agent forwards both vectors untouched, and the round
  // still finishes: the remaining agents act and keep their components.
  CHECK(result.steps[0].ignorance.weights == w0.weights);
  CHECK(result.steps[0].acc.scores == std::vector<double>(64, 0.0));
  CHECK(result.steps[1].kept);
  CHECK(result.steps[2].kept);

  // Agent 3 discounts against agent 1's accumulated votes.
  const double expect3 = compute_alpha_chain(result.steps[1].ignorance,
                                             result.steps[1].acc,
                                             result.steps[2].reward, 2);
  CHECK(std::fabs(result.steps[2].alpha - expect3) <= 1e-12);

  // Discarded fits leave no component behind.
  CHECK(states[0].components.size() == 1);
  CHECK(states[1].components.empty());
  CHECK(states[2].components.size() == 1);
}

TEST_CASE("fit_seed and round_order: deterministic scheduling") {
  CHECK(fit_seed(5, 1, 1) == fit_seed(5, 1, 1));
  std::set<uint64_t> seeds;
  for (int r = 1; r <= 4; ++r)
    for (int a = 1; a <= 4; ++a) seeds.insert(fit_seed(5, r, a));
  CHECK(seeds.size() == 16);

  for (Variant v : {Variant::ascii, Variant::ascii_simple,
                    Variant::ensemble_adaboost}) {
    auto order = round_order(v, 4, 3, 99);
    CHECK(order == std::vector<int>{1, 2, 3, 4});
  }

  bool saw_non_identity = false;
  std::vector<int> identity = {1, 2, 3, 4, 5};
  for (int r = 1; r <= 10; ++r) {
    auto order = round_order(Variant::ascii_random, 5, r, 99);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == identity);  // always a permutation
    CHECK(order == round_order(Variant::ascii_random, 5, r, 99));
    if (order != identity) saw_non_identity = true;
  }
  CHECK(saw_non_identity);
}

TEST_CASE("partial_scores and aggregate_predict: additive vote algebra") {
  Dataset d = generate_blobs(blob_spec(50, 2, 3, 2.0, 41));
  AgentState state = state_from(1, d, stump_spec(2));
  IgnoranceVector w = IgnoranceVector::uniform(50);
  ScoreAccumulator acc = ScoreAccumulator::zeros(50, 1);

  auto s1 = agent_round_step(state, w, acc, 1, AlphaRule::chain);
  state.components.push_back({1, 1, s1.alpha, s1.model});
  auto s2 = agent_round_step(state, s1.ignorance, s1.acc, 2, AlphaRule::chain);
  state.components.push_back({2, 1, s2.alpha, s2.model});

  auto block = partial_scores(state.components, 1, d.features, 3);
  CHECK(block.agent == 1);
  CHECK(block.rows == 50);

  PartialScoreMatrix manual = PartialScoreMatrix::zeros(1, 50, 3);
  add_votes(manual, s1.model->predict_all(d.features), s1.alpha);
  add_votes(manual, s2.model->predict_all(d.features), s2.alpha);
  for (size_t i = 0; i < 50; ++i)
    for (int k = 0; k < 3; ++k)
      CHECK(block.at(i, k) == doctest::Approx(manual.at(i, k)).epsilon(1e-12));

  auto joint = aggregate_predict({block}, 50, 3);
  CHECK(joint == argmax_classes(block));

  // predict_joint walks per-agent component lists against their slices.
  std::vector<std::vector<EnsembleComponent>> per_agent = {state.components};
  auto via_joint = predict_joint(per_agent, {d.features}, 50, 3);
  CHECK(via_joint == joint);

  PartialScoreMatrix wrong_rows = PartialScoreMatrix::zeros(2, 49, 3);
  CHECK_THROWS(aggregate_predict({block, wrong_rows}, 50, 3));
}

TEST_CASE("plurality_vote: majority and lowest-class ties") {
  CHECK(plurality_vote({{1, 2}, {1, 3}, {2, 3}}, 3) == std::vector<int>{1, 3});
  CHECK(plurality_vote({{1, 2}, {2, 1}}, 2) == std::vector<int>{1, 1});
  CHECK(plurality_vote({{3, 3, 3}}, 3) == std::vector<int>{3, 3, 3});
  CHECK_THROWS(plurality_vote({{1, 2}, {1}}, 2));
  CHECK_THROWS(plurality_vote({}, 2));
}

TEST_CASE("boost_single: trajectory bookkeeping and prediction") {
  Dataset d = generate_blobs(blob_spec(150, 3, 3, 2.0, 51));
  auto result = boost_single(d.labels, d.features, stump_spec(4), 8);

  REQUIRE_FALSE(result.components.empty());
  CHECK(result.components.size() == result.trajectory.size());
  for (size_t i = 0; i < result.trajectory.size(); ++i) {
    const auto& round = result.trajectory[i];
    CHECK(round.alpha > 0.0);
    CHECK(round.round == int(i) + 1);
    double total = 0.0;
    for (double v : round.weights) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Prediction equals the component-wise additive vote.
  std::vector<std::vector<EnsembleComponent>> per_agent = {result.components};
  auto expect = predict_joint(per_agent, {d.features}, d.rows(), 3);
  CHECK(result.predict(d.features, 3) == expect);
  CHECK(accuracy(result.predict(d.features, 3), d.labels) > 1.0 / 3);
}

TEST_CASE("boost_single: stops at chance accuracy") {
  // One constant feature: round one fits the constant majority class; with
  // a dyadic 32/32 split it sits exactly at chance and is discarded.
  Dataset d = generate_blobs(blob_spec(64, 2, 2, 1.0, 61));
  d.features.cols = 1;
  d.features.values.assign(64, 2.0);
  d.features.column_names = {"flat"};
  auto result = boost_single(d.labels, d.features, stump_spec(), 5);
  CHECK(result.components.empty());
  CHECK(result.stop_reason == "weighted accuracy at or below chance");
  // With no kept component every row falls back to the lowest class.
  auto pred = result.predict(d.features, 2);
  for (int c : pred) CHECK(c == 1);
}

TEST_CASE("run_session: one agent reproduces plain boosting exactly") {
  Dataset all = generate_blobs(blob_spec(160, 3, 3, 2.2, 71));
  auto [train, test] = split_train_test(all, 0.75, 5);
  Dataset train_sorted = sort_by_ids(train);
  Dataset test_sorted = sort_by_ids(test);

  SessionConfig cfg = base_config(6);
  cfg.learners = {stump_spec(12)};
  SessionResult session = run_session(cfg, {train_sorted}, {test_sorted});
  REQUIRE_FALSE(session.aborted);

  auto direct = boost_single(train_sorted.labels, train_sorted.features,
                             cfg.learners[0], cfg.max_rounds);

  REQUIRE(session.rounds.size() == direct.trajectory.size());
  for (size_t i = 0; i < session.rounds.size(); ++i) {
    REQUIRE(session.rounds[i].alphas.size() == 1);
    CHECK(std::fabs(session.rounds[i].alphas[0].second -
                    direct.trajectory[i].alpha) <= 1e-12);
  }
  CHECK(session.test_predictions ==
        direct.predict(test_sorted.features, 3));
  CHECK(session.wire_log.empty());  // nothing crossed any channel
  CHECK(session.cost.interchange_bytes == 0);
}

TEST_CASE("run_session: two-agent session replays the pure paired rounds") {
  SlicedData data = sliced_blobs(150, 4, 3, 3.0, 2, 81);
  // Pre-sort so the handshake's sorted-id order matches the local replay.
  for (auto& d : data.train) d = sort_by_ids(d);
  for (auto& d : data.test) d = sort_by_ids(d);

  SessionConfig cfg = base_config(3);
  cfg.seed = 7;
  cfg.learners = {stump_spec(7), stump_spec(7)};
  SessionResult session = run_session(cfg, data.train, data.test);
  REQUIRE_FALSE(session.aborted);
  REQUIRE(session.rounds.size() == 3);

  AgentState lead = state_from(1, data.train[0], stump_spec(7));
  AgentState assist = state_from(2, data.train[1], stump_spec(7));
  IgnoranceVector w = IgnoranceVector::uniform(data.train[0].rows());
  for (int t = 1; t <= 3; ++t) {
    auto round = run_round_two_agent(lead, assist, w, t);
    const auto& alphas = session.rounds[t - 1].alphas;
    REQUIRE(alphas.size() == 2);
    CHECK(alphas[0].first == 1);
    CHECK(alphas[1].first == 2);
    CHECK(std::fabs(alphas[0].second - round.lead.alpha) <= 1e-12);
    CHECK(std::fabs(alphas[1].second - round.assist.alpha) <= 1e-12);
    w = round.next_ignorance;
  }

  // Final predictions equal the joint additive vote of the replayed
  // components over the test slices.
  std::vector<std::vector<EnsembleComponent>> per_agent = {
      lead.components, assist.components};
  auto expect = predict_joint(per_agent,
                              {data.test[0].features, data.test[1].features},
                              data.test[0].rows(), 3);
  CHECK(session.test_predictions == expect);
}

TEST_CASE("run_session: alignment handshake intersects sample ids") {
  SlicedData data = sliced_blobs(120, 4, 2, 2.0, 2, 91);
  // Agent 2 is missing some training rows and has a few extras of its own.
  Dataset partial = select_rows(
      data.train[1],
      [&] {
        std::vector<size_t> keep;
        for (size_t i = 5; i < data.train[1].rows(); ++i) keep.push_back(i);
        return keep;
      }());
  // Graft three unknown-id rows onto agent 2.
  for (int extra = 0; extra < 3; ++extra) {
    partial.sample_ids.push_back("zz_extra_" + std::to_string(extra));
    partial.labels.labels.push_back(1 + extra % 2);
    for (size_t c = 0; c < partial.cols(); ++c)
      partial.features.values.push_back(0.0);
    partial.features.rows++;
  }
  partial.validate();

  SessionConfig cfg = base_config(2);
  cfg.learners = {stump_spec(), stump_spec()};
  SessionResult result = run_session(cfg, {data.train[0], partial}, data.test);
  REQUIRE_FALSE(result.aborted);
  CHECK(result.fit_rows == data.train[0].rows() - 5);
  CHECK(result.completed_rounds == 2);
}

TEST_CASE("run_session: disjoint ids abort with a protocol failure") {
  SlicedData data = sliced_blobs(100, 4, 2, 2.0, 2, 101);
  Dataset renamed = data.train[1];
  for (size_t i = 0; i < renamed.rows(); ++i)
    renamed.sample_ids[i] = "other_" + std::to_string(i);

  SessionConfig cfg = base_config(2);
  cfg.learners = {stump_spec(), stump_spec()};
  SessionResult result = run_session(cfg, {data.train[0], renamed}, data.test);
  CHECK(result.aborted);
  CHECK(result.abort_reason.find("no overlapping samples") != std::string::npos);
  CHECK(result.completed_rounds == 0);
}

TEST_CASE("run_session: diverging labels fail the checksum") {
  SlicedData data = sliced_blobs(100, 4, 2, 2.0, 2, 111);
  Dataset corrupted = data.train[1];
  corrupted.labels.labels[4] = corrupted.labels.labels[4] == 1 ? 2 : 1;

  SessionConfig cfg = base_config(2);
  cfg.learners = {stump_spec(), stump_spec()};
  SessionResult result =
      run_session(cfg, {data.train[0], corrupted}, data.test);
  CHECK(result.aborted);
  CHECK(result.abort_reason.find("label checksum") != std::string::npos);
}

TEST_CASE("run_session: configuration validation") {
  SlicedData data = sliced_blobs(100, 4, 2, 2.0, 2, 121);
  SessionConfig cfg = base_config(2);
  cfg.learners = {stump_spec(), stump_spec()};

  // Learner count must be 1:1 with agents.
  SessionConfig wrong_learners = cfg;
  wrong_learners.learners = {stump_spec(), stump_spec(), stump_spec()};
  CHECK_THROWS_AS(run_session(wrong_learners, data.train, data.test),
                  ConfigError);

  // Misaligned test slices are rejected up front.
  auto shuffled_test = data.test;
  std::swap(shuffled_test[1].sample_ids[0], shuffled_test[1].sample_ids[1]);
  CHECK_THROWS_AS(run_session(cfg, data.train, shuffled_test), ConfigError);

  // Lean mid-round messages cannot carry a three-agent chain.
  SlicedData three = sliced_blobs(100, 6, 2, 2.0, 3, 131);
  SessionConfig lean = base_config(2);
  lean.lean_messages = true;
  lean.learners = {stump_spec(), stump_spec(), stump_spec()};
  CHECK_THROWS_AS(run_session(lean, three.train, three.test), ConfigError);
  lean.variant = Variant::ascii_simple;  // no predecessor scores needed
  CHECK_NOTHROW(run_session(lean, three.train, three.test));

  // Forced orders must be permutations covering every round.
  SessionConfig forced = cfg;
  forced.forced_orders = {{1, 2}};  // one round short
  CHECK_THROWS_AS(run_session(forced, data.train, data.test), ConfigError);
  forced.forced_orders = {{1, 1}, {1, 2}};
  CHECK_THROWS_AS(run_session(forced, data.train, data.test), ConfigError);

  // Holdout stopping needs a compatible variant.
  SessionConfig ensemble_holdout = cfg;
  ensemble_holdout.variant = Variant::ensemble_adaboost;
  ensemble_holdout.stop.criterion = StopSpec::Criterion::holdout;
  CHECK_THROWS_AS(run_session(ensemble_holdout, data.train, data.test),
                  ConfigError);
}

TEST_CASE("run_session: severed channels salvage completed rounds") {
  SlicedData data = sliced_blobs(140, 4, 3, 2.5, 2, 141);
  SessionConfig cfg = base_config(5);
  cfg.learners = {stump_spec(), stump_spec()};
  cfg.drop_channels_after_round = 2;

  SessionResult result = run_session(cfg, data.train, data.test);
  CHECK(result.aborted);
  CHECK(result.abort_reason.find("after round 2") != std::string::npos);
  CHECK(result.completed_rounds == 2);
  CHECK(result.rounds.size() == 2);
  for (const auto& per_agent : result.components)
    for (const auto& c : per_agent) CHECK(c.round <= 2);
  // Salvaged predictions still cover every test row.
  CHECK(result.test_predictions.size() == data.test[0].rows());
  CHECK(result.test_accuracy > 0.0);
}

TEST_CASE("run_session: independent-ensemble variant uses plurality voting") {
  SlicedData data = sliced_blobs(160, 4, 2, 2.5, 2, 151);
  SessionConfig cfg = base_config(4);
  cfg.variant = Variant::ensemble_adaboost;
  cfg.learners = {stump_spec(3), stump_spec(3)};

  SessionResult result = run_session(cfg, data.train, data.test);
  REQUIRE_FALSE(result.aborted);
  REQUIRE(result.components.size() == 2);

  // Reconstruct: each agent votes its own additive ensemble over the test
  // rows exactly as supplied, then the session takes the plurality.
  std::vector<std::vector<int>> votes;
  votes.push_back(argmax_classes(
      partial_scores(result.components[0], 1, data.test[0].features, 2)));
  votes.push_back(argmax_classes(
      partial_scores(result.components[1], 2, data.test[1].features, 2)));
  CHECK(result.test_predictions == plurality_vote(votes, 2));

  // Every component weighted by its own accuracy, independently per agent.
  for (const auto& per_agent : result.components)
    for (const auto& c : per_agent) CHECK(c.alpha > 0.0);
}

TEST_CASE("run_session: determinism across repeats and transports") {
  SlicedData data = sliced_blobs(120, 4, 3, 2.5, 2, 161);
  SessionConfig cfg = base_config(3);
  cfg.learners = {stump_spec(9), stump_spec(9)};

  SessionResult a = run_session(cfg, data.train, data.test);
  SessionResult b = run_session(cfg, data.train, data.test);
  SessionConfig socket_cfg = cfg;
  socket_cfg.transport = TransportKind::socket;
  SessionResult c = run_session(socket_cfg, data.train, data.test);

  for (const SessionResult* other : {&b, &c}) {
    REQUIRE(other->rounds.size() == a.rounds.size());
    for (size_t i = 0; i < a.rounds.size(); ++i) {
      CHECK(other->rounds[i].alphas == a.rounds[i].alphas);
      CHECK(other->rounds[i].train_accuracy == a.rounds[i].train_accuracy);
      CHECK(other->rounds[i].test_accuracy == a.rounds[i].test_accuracy);
      CHECK(other->rounds[i].cumulative_round_bytes ==
            a.rounds[i].cumulative_round_bytes);
    }
    CHECK(other->test_predictions == a.test_predictions);
  }
}

TEST_CASE("run_session: lean messages change bytes, not results") {
  SlicedData data = sliced_blobs(120, 4, 3, 2.5, 2, 171);
  SessionConfig cfg = base_config(3);
  cfg.learners = {stump_spec(2), stump_spec(2)};
  SessionResult full = run_session(cfg, data.train, data.test);

  SessionConfig lean_cfg = cfg;
  lean_cfg.lean_messages = true;
  SessionResult lean = run_session(lean_cfg, data.train, data.test);

  REQUIRE(lean.rounds.size() == full.rounds.size());
  for (size_t i = 0; i < full.rounds.size(); ++i)
    CHECK(lean.rounds[i].alphas == full.rounds[i].alphas);
  CHECK(lean.test_predictions == full.test_predictions);
  CHECK(lean.cost.interchange_bytes < full.cost.interchange_bytes);
}

TEST_CASE("run_session: per-round metrics are coherent") {
  SlicedData data = sliced_blobs(150, 4, 3, 3.0, 3, 181);
  SessionConfig cfg = base_config(4);
  cfg.learners = {stump_spec(1), stump_spec(1), stump_spec(1)};
  SessionResult result = run_session(cfg, data.train, data.test);
  REQUIRE_FALSE(result.aborted);

  size_t last_bytes = 0;
  for (const auto& round : result.rounds) {
    CHECK(round.train_accuracy >= 0.0);
    CHECK(round.train_accuracy <= 1.0);
    CHECK(round.test_accuracy >= 0.0);
    CHECK(round.test_accuracy <= 1.0);
    CHECK(round.cumulative_round_bytes > last_bytes);
    last_bytes = round.cumulative_round_bytes;
    CHECK_FALSE(round.holdout_error.has_value());  // not a holdout run
    CHECK(round.alphas.size() == 3);
  }
  CHECK(result.cost.ratio > 0.0);
  CHECK(result.cost.protocol_bytes >= result.cost.interchange_bytes);
}

TEST_CASE("run_session: holdout stop reserves rows and reports a plateau") {
  SlicedData data = sliced_blobs(200, 4, 2, 4.0, 2, 191);
  SessionConfig cfg = base_config(25);
  cfg.learners = {stump_spec(3), stump_spec(3)};
  cfg.stop.criterion = StopSpec::Criterion::holdout;
  cfg.stop.patience = 2;
  cfg.stop.fraction = 0.25;

  SessionResult result = run_session(cfg, data.train, data.test);
  REQUIRE_FALSE(result.aborted);
  CHECK(result.holdout_rows == 35);  // a quarter of the 140 aligned rows
  CHECK(result.fit_rows == 105);
  for (const auto& round : result.rounds)
    CHECK(round.holdout_error.has_value());
  // A 25-round stump budget on noisy two-class data plateaus long before
  // the cap; the stop reason must say so.
  CHECK(result.completed_rounds < 25);
  CHECK(result.stop_reason == "holdout error plateau");
}

TEST_CASE("variant names: round trip and rejection") {
  for (const char* name :
       {"ascii", "ascii_simple", "ascii_random", "ensemble_adaboost"}) {
    CAPTURE(name);
    CHECK(std::string(variant_name(parse_variant(name))) == name);
  }
  CHECK_THROWS_AS(parse_variant("magic"), ConfigError);
  CHECK(parse_stop_criterion("holdout") == StopSpec::Criterion::holdout);
  CHECK(parse_stop_criterion("alpha_threshold") ==
        StopSpec::Criterion::alpha_threshold);
  CHECK_THROWS_AS(parse_stop_criterion("never"), ConfigError);
}
