#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ascii/messages.hpp"

namespace ascii {

enum class TransportKind { inproc, socket };
TransportKind parse_transport(const std::string& name);  // ConfigError
const char* transport_name(TransportKind t);

// Unbounded FIFO of wire frames with blocking receive. Closing wakes all
// waiters; popping a closed, drained mailbox reports a lost connection.
class Mailbox {
 public:
  void push(std::vector<uint8_t> frame);
  std::vector<uint8_t> pop();  // blocks; ProtocolError once closed and empty
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<uint8_t>> queue_;
  bool closed_ = false;
};

// One directed half of a channel between two agents. Implementations carry
// the exact frame bytes; the receiving side's mailbox sees the same
// canonical sequence regardless of transport.
class Link {
 public:
  virtual ~Link() = default;
  virtual void send(const std::vector<uint8_t>& frame) = 0;
  // Bytes this endpoint pushed onto the wire, observed independently of any
  // ledger bookkeeping.
  virtual size_t bytes_sent() const = 0;
};

// Full set of channels for one session: inbox per agent, directed link per
// ordered agent pair. Destroying the mesh tears down sockets and pump
// threads.
class ChannelMesh {
 public:
  virtual ~ChannelMesh() = default;
  virtual Mailbox& inbox(int agent) = 0;
  virtual Link& link(int from, int to) = 0;
  // Severs every channel at once: inboxes close and blocked receivers see a
  // lost connection. Used for teardown and for fault-injection tests.
  virtual void drop_all() = 0;
  virtual size_t total_bytes_sent() const = 0;
};

// Same-process mesh: send pushes the frame straight into the peer's inbox.
std::unique_ptr<ChannelMesh> make_inproc_mesh(int num_agents);

// Loopback TCP mesh: one full-duplex connection per unordered agent pair,
// created eagerly (listen/connect/accept) before any training starts, with
// a reader thread per connection end feeding the owner's inbox. The bind
// address defaults to 127.0.0.1 and can be overridden with the
// ASCII_BIND_ADDRESS environment variable. Ports are ephemeral.
std::unique_ptr<ChannelMesh> make_tcp_mesh(int num_agents);

std::unique_ptr<ChannelMesh> make_mesh(TransportKind kind, int num_agents);

// One ledger entry per sent message, recorded at send time.
struct CostRecord {
  int round = 0;  // 0 for pre-round traffic (handshake) and predict stage
  int sender = 0;
  MessageKind kind = MessageKind::round;
  size_t bytes = 0;
  uint64_t seq = 0;  // global send order
};

// Byte-accurate transmission meter. Thread-safe; totals always equal the
// sum of the records.
class CostLedger {
 public:
  void record(int round, int sender, MessageKind kind, size_t bytes);
  std::vector<CostRecord> records() const;  // in send order
  size_t total() const;
  size_t total(MessageKind kind) const;
  size_t total_for_agent(int sender) const;
  // Cumulative interchange (round-kind) bytes through each round, keyed by
  // round number in ascending order.
  std::vector<std::pair<int, size_t>> cumulative_round_bytes() const;

 private:
  mutable std::mutex mu_;
  std::vector<CostRecord> records_;
};

// Transmission-cost report against the ship-the-raw-features baseline.
struct CostReport {
  size_t protocol_bytes = 0;     // every frame sent, all kinds
  size_t interchange_bytes = 0;  // round-kind frames only
  size_t baseline_bytes = 0;     // full assisting slices as 64-bit reals
  double ratio = 0.0;            // baseline / interchange; 0 when no rounds
  std::vector<std::pair<int, size_t>> per_round_cumulative;
};

// Baseline: every assisting agent ships its whole training slice
// (n_train x p_m 64-bit reals) to the task owner. `assist_cols` lists p_m
// for agents 2..M.
CostReport measure_cost(const CostLedger& ledger, size_t n_train,
                        const std::vector<size_t>& assist_cols);

}  // namespace ascii
