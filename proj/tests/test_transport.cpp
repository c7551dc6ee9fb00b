#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>
#include <vector>

#include "ascii/channels.hpp"
#include "ascii/messages.hpp"
#include "doctest.h"

using namespace ascii;

namespace {

RoundMessage random_round_message(Rng& rng, bool allow_terminal = true) {
  RoundMessage m;
  m.round = 1 + int(rng.index(50));
  m.sender = 1 + int(rng.index(8));
  m.alpha = rng.uniform(-3.0, 3.0);
  if (allow_terminal && rng.uniform() < 0.1) {
    m.terminal = true;
    return m;  // terminal notices carry no samples
  }
  const size_t n = 1 + rng.index(40);
  m.ignorance.resize(n);
  double total = 0.0;
  for (auto& v : m.ignorance) total += (v = rng.uniform(0.01, 1.0));
  for (auto& v : m.ignorance) v /= total;
  m.reward.resize(n);
  for (auto& v : m.reward) v = rng.uniform() < 0.5;
  if (rng.uniform() < 0.6) {
    m.has_accumulator = true;
    m.accumulator.resize(n);
    for (auto& v : m.accumulator) v = rng.uniform(-5.0, 5.0);
  }
  return m;
}

void check_equal(const RoundMessage& a, const RoundMessage& b) {
  CHECK(a.round == b.round);
  CHECK(a.sender == b.sender);
  CHECK(a.alpha == b.alpha);
  CHECK(a.ignorance == b.ignorance);
  CHECK(a.reward == b.reward);
  CHECK(a.has_accumulator == b.has_accumulator);
  CHECK(a.accumulator == b.accumulator);
  CHECK(a.terminal == b.terminal);
}

}  // namespace

TEST_CASE("round messages: canonical serialization round trip") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    CAPTURE(trial);
    RoundMessage m = random_round_message(rng);
    auto frame = serialize(m);
    CHECK(frame.size() == round_message_bytes(m.samples(), m.has_accumulator));
    Message parsed = deserialize(frame);
    REQUIRE(message_kind(parsed) == MessageKind::round);
    check_equal(std::get<RoundMessage>(parsed), m);
    CHECK(serialize_message(parsed) == frame);  // one byte sequence per value
  }
}

TEST_CASE("predict and handshake messages: round trip") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    PredictMessage p;
    p.sender = 1 + int(rng.index(6));
    p.num_classes = 2 + int(rng.index(4));
    const size_t n = rng.index(20);
    for (size_t i = 0; i < n; ++i)
      p.sample_ids.push_back("id_" + std::to_string(rng.index(10000)) + "_" +
                             std::to_string(i));
    p.scores.resize(n * p.num_classes);
    for (auto& v : p.scores) v = rng.uniform(-4.0, 4.0);
    auto frame = serialize(p);
    Message parsed = deserialize(frame);
    REQUIRE(message_kind(parsed) == MessageKind::predict);
    const auto& q = std::get<PredictMessage>(parsed);
    CHECK(q.sender == p.sender);
    CHECK(q.num_classes == p.num_classes);
    CHECK(q.sample_ids == p.sample_ids);
    CHECK(q.scores == p.scores);
    CHECK(serialize_message(parsed) == frame);

    HandshakeMessage h;
    h.sender = 1 + int(rng.index(6));
    h.label_digest = rng.next_u64();
    for (size_t i = 0; i < rng.index(30); ++i)
      h.sample_ids.push_back(std::to_string(i));
    auto hframe = serialize(h);
    Message hparsed = deserialize(hframe);
    REQUIRE(message_kind(hparsed) == MessageKind::handshake);
    const auto& g = std::get<HandshakeMessage>(hparsed);
    CHECK(g.sender == h.sender);
    CHECK(g.label_digest == h.label_digest);
    CHECK(g.sample_ids == h.sample_ids);
  }
}

TEST_CASE("serialization rejects field-length disagreements") {
  RoundMessage m;
  m.round = 1;
  m.sender = 1;
  m.ignorance = {0.5, 0.5};
  m.reward = {1};  // one short
  CHECK_THROWS_AS(serialize(m), std::invalid_argument);
  m.reward = {1, 0};
  m.has_accumulator = true;
  m.accumulator = {0.1};  // one short
  CHECK_THROWS_AS(serialize(m), std::invalid_argument);
  m.accumulator = {0.1, 0.2};
  m.ignorance = {0.9, 0.9};  // protocol invariant: weights sum to one
  CHECK_THROWS_AS(serialize(m), std::invalid_argument);

  PredictMessage p;
  p.sender = 1;
  p.num_classes = 3;
  p.sample_ids = {"a", "b"};
  p.scores = {1.0, 2.0, 3.0};  // needs 2 * 3 entries
  CHECK_THROWS_AS(serialize(p), std::invalid_argument);
}

TEST_CASE("deserialization: truncation, corruption and trailing bytes") {
  Rng rng(9);
  RoundMessage m = random_round_message(rng, false);
  auto frame = serialize(m);

  for (size_t cut = 0; cut < frame.size(); ++cut) {
    CHECK_THROWS_AS(
        deserialize(std::span<const uint8_t>(frame.data(), cut)),
        ProtocolError);
  }

  auto trailing = frame;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize(trailing), ProtocolError);

  auto bad_kind = frame;
  bad_kind[4] = 77;
  CHECK_THROWS_AS(deserialize(bad_kind), ProtocolError);

  auto bad_version = frame;
  bad_version[5] = 0xFF;
  CHECK_THROWS_AS(deserialize(bad_version), ProtocolError);

  // Arbitrary single-byte corruption must parse cleanly or throw, never
  // crash or hang.
  for (size_t pos = 0; pos < frame.size(); ++pos) {
    auto copy = frame;
    copy[pos] ^= 0xFF;
    try {
      (void)deserialize(copy);
    } catch (const ProtocolError&) {
    }
  }
}

TEST_CASE("round_message_bytes: exact sizes") {
  CHECK(round_message_bytes(0, false) == serialize([] {
          RoundMessage t;
          t.terminal = true;
          t.round = 3;
          t.sender = 1;
          return t;
        }()).size());
  for (size_t n : {1ul, 7ul, 8ul, 9ul, 300ul, 1000ul}) {
    CAPTURE(n);
    RoundMessage m;
    m.round = 1;
    m.sender = 2;
    m.ignorance.assign(n, 1.0 / double(n));
    m.reward.assign(n, 1);
    CHECK(serialize(m).size() == round_message_bytes(n, false));
    m.has_accumulator = true;
    m.accumulator.assign(n, 0.0);
    CHECK(serialize(m).size() == round_message_bytes(n, true));
  }
  // The accumulator block costs exactly eight bytes per sample.
  CHECK(round_message_bytes(100, true) - round_message_bytes(100, false) == 800);
}

TEST_CASE("label_digest: order-sensitive and label-sensitive") {
  std::vector<std::string> ids = {"a", "b", "c"};
  std::vector<int> labels = {1, 2, 1};
  const uint64_t base = label_digest(ids, labels);
  CHECK(base == label_digest(ids, labels));
  CHECK(base != label_digest({"a", "c", "b"}, {1, 1, 2}));
  CHECK(base != label_digest(ids, {1, 2, 2}));
  CHECK(base != label_digest({"a", "b"}, {1, 2}));
}

TEST_CASE("mailbox: fifo order, blocking pop, close semantics") {
  Mailbox box;
  box.push({1, 2, 3});
  box.push({4});
  CHECK(box.pop() == std::vector<uint8_t>{1, 2, 3});
  CHECK(box.pop() == std::vector<uint8_t>{4});

  std::atomic<bool> got{false};
  std::thread reader([&] {
    auto f = box.pop();
    got = f == std::vector<uint8_t>{9};
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  box.push({9});
  reader.join();
  CHECK(got);

  box.push({5});
  box.close();
  CHECK(box.closed());
  CHECK(box.pop() == std::vector<uint8_t>{5});  // drains before failing
  CHECK_THROWS_AS(box.pop(), ProtocolError);

  // Close wakes a blocked reader with a lost-connection error.
  Mailbox other;
  std::atomic<bool> threw{false};
  std::thread blocked([&] {
    try {
      other.pop();
    } catch (const ProtocolError&) {
      threw = true;
    }
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  other.close();
  blocked.join();
  CHECK(threw);
}

TEST_CASE("channel meshes: delivery, ordering and byte accounting") {
  for (TransportKind kind : {TransportKind::inproc, TransportKind::socket}) {
    CAPTURE(std::string(transport_name(kind)));
    auto mesh = make_mesh(kind, 3);

    Rng rng(10);
    RoundMessage m1 = random_round_message(rng, false);
    RoundMessage m2 = random_round_message(rng, false);
    RoundMessage m3 = random_round_message(rng, false);
    auto f1 = serialize(m1);
    auto f2 = serialize(m2);
    auto f3 = serialize(m3);

    mesh->link(1, 2).send(f1);
    mesh->link(1, 2).send(f2);  // same link: order preserved
    mesh->link(3, 2).send(f3);
    mesh->link(2, 1).send(f3);

    CHECK(mesh->inbox(1).pop() == f3);
    // Agent 2 sees both agent 1 frames in send order; the agent 3 frame
    // interleaves arbitrarily.
    std::vector<std::vector<uint8_t>> got;
    got.push_back(mesh->inbox(2).pop());
    got.push_back(mesh->inbox(2).pop());
    got.push_back(mesh->inbox(2).pop());
    int first_from_1 = -1, second_from_1 = -1, from_3 = -1;
    for (int i = 0; i < 3; ++i) {
      if (got[i] == f1) first_from_1 = i;
      if (got[i] == f2) second_from_1 = i;
      if (got[i] == f3) from_3 = i;
    }
    REQUIRE(first_from_1 >= 0);
    REQUIRE(second_from_1 >= 0);
    REQUIRE(from_3 >= 0);
    CHECK(first_from_1 < second_from_1);

    CHECK(mesh->link(1, 2).bytes_sent() == f1.size() + f2.size());
    CHECK(mesh->link(3, 2).bytes_sent() == f3.size());
    CHECK(mesh->total_bytes_sent() ==
          f1.size() + f2.size() + 2 * f3.size());

    // Severed channels surface as lost connections on blocked receivers.
    std::atomic<bool> threw{false};
    std::thread waiter([&] {
      try {
        mesh->inbox(3).pop();
      } catch (const ProtocolError&) {
        threw = true;
      }
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    mesh->drop_all();
    waiter.join();
    CHECK(threw);
  }
}

TEST_CASE("channel meshes: both transports deliver identical frame bytes") {
  Rng rng(11);
  RoundMessage m = random_round_message(rng, false);
  auto frame = serialize(m);

  auto inproc = make_mesh(TransportKind::inproc, 2);
  inproc->link(1, 2).send(frame);
  auto via_inproc = inproc->inbox(2).pop();

  auto tcp = make_mesh(TransportKind::socket, 2);
  tcp->link(1, 2).send(frame);
  auto via_tcp = tcp->inbox(2).pop();

  CHECK(via_inproc == frame);
  CHECK(via_tcp == frame);
}

TEST_CASE("parse_transport: names map both ways") {
  CHECK(parse_transport("inproc") == TransportKind::inproc);
  CHECK(parse_transport("socket") == TransportKind::socket);
  CHECK_THROWS_AS(parse_transport("carrier-pigeon"), ConfigError);
  CHECK(std::string(transport_name(TransportKind::inproc)) == "inproc");
  CHECK(std::string(transport_name(TransportKind::socket)) == "socket");
}

TEST_CASE("cost ledger: totals always equal the record sum") {
  CostLedger ledger;
  ledger.record(0, 1, MessageKind::handshake, 100);
  ledger.record(1, 1, MessageKind::round, 4867);
  ledger.record(1, 2, MessageKind::round, 4867);
  ledger.record(2, 1, MessageKind::round, 2467);
  ledger.record(0, 2, MessageKind::predict, 350);

  auto records = ledger.records();
  REQUIRE(records.size() == 5);
  for (size_t i = 0; i < records.size(); ++i)
    CHECK(records[i].seq == i);  // global send order

  CHECK(ledger.total() == 100 + 4867 + 4867 + 2467 + 350);
  CHECK(ledger.total(MessageKind::round) == 4867 + 4867 + 2467);
  CHECK(ledger.total(MessageKind::handshake) == 100);
  CHECK(ledger.total_for_agent(1) == 100 + 4867 + 2467);
  CHECK(ledger.total_for_agent(2) == 4867 + 350);

  auto cumulative = ledger.cumulative_round_bytes();
  REQUIRE(cumulative.size() == 2);
  CHECK(cumulative[0] == std::pair<int, size_t>{1, 9734});
  CHECK(cumulative[1] == std::pair<int, size_t>{2, 12201});
}

TEST_CASE("measure_cost: interchange bytes against the raw-feature baseline") {
  CostLedger ledger;
  ledger.record(0, 1, MessageKind::handshake, 500);
  ledger.record(1, 1, MessageKind::round, 1000);
  ledger.record(1, 2, MessageKind::round, 1000);
  ledger.record(0, 2, MessageKind::predict, 200);

  auto report = measure_cost(ledger, 300, {4, 7});
  CHECK(report.protocol_bytes == 2700);
  CHECK(report.interchange_bytes == 2000);
  CHECK(report.baseline_bytes == 300 * (4 + 7) * 8);
  CHECK(report.ratio == doctest::Approx(26400.0 / 2000.0));
  REQUIRE(report.per_round_cumulative.size() == 1);
  CHECK(report.per_round_cumulative[0].second == 2000);

  CostLedger empty;
  auto none = measure_cost(empty, 300, {4});
  CHECK(none.interchange_bytes == 0);
  CHECK(none.ratio == 0.0);
}
