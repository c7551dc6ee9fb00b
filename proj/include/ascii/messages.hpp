#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ascii/common.hpp"

namespace ascii {

// Wire format: every message is one frame
//   [u32 big-endian length][u8 kind][u16 version][payload]
// where `length` counts everything after the length prefix. Scalars in the
// payload are little-endian; reals are 64-bit IEEE; strings are u32-length-
// prefixed UTF-8; reward bits are packed LSB-first, 8 samples per byte.
// Serialization is canonical: one byte sequence per message value.

inline constexpr uint16_t kWireVersion = 1;

enum class MessageKind : uint8_t {
  round = 1,      // one agent's turn: weights, vote weight, rewards, scores
  predict = 2,    // an agent's additive test-row scores for the aggregator
  handshake = 3,  // sample-id alignment and label checksum
};

const char* message_kind_name(MessageKind k);

// The per-turn interchange unit. A terminal message (n = 0, terminal set)
// tells the receiver the run is over. The accumulator is optional on the
// wire: round-boundary hand-offs never carry one (it resets every round),
// and lean mode drops it from mid-round messages too.
struct RoundMessage {
  int round = 0;
  int sender = 0;
  double alpha = 0.0;
  std::vector<double> ignorance;
  std::vector<uint8_t> reward;  // one 0/1 entry per sample
  bool has_accumulator = false;
  std::vector<double> accumulator;
  bool terminal = false;

  size_t samples() const { return ignorance.size(); }
};

// Final-stage score shipment: the sender's summed alpha-weighted votes over
// the named rows, one score row of `num_classes` reals per sample id.
struct PredictMessage {
  int sender = 0;
  int num_classes = 0;
  std::vector<std::string> sample_ids;
  std::vector<double> scores;  // sample_ids.size() * num_classes, row-major
};

// Alignment stage: the sender's view of the usable sample ids (sorted), and
// a checksum over the (id, label) pairs so silently divergent labels are
// caught before any training happens.
struct HandshakeMessage {
  int sender = 0;
  std::vector<std::string> sample_ids;
  uint64_t label_digest = 0;
};

using Message = std::variant<RoundMessage, PredictMessage, HandshakeMessage>;

// Canonical frame bytes. Field-length disagreements are rejected.
std::vector<uint8_t> serialize(const RoundMessage& msg);
std::vector<uint8_t> serialize(const PredictMessage& msg);
std::vector<uint8_t> serialize(const HandshakeMessage& msg);
std::vector<uint8_t> serialize_message(const Message& msg);

// Parses one complete frame (including the length prefix). Truncation, bad
// kind, bad version, or trailing bytes raise ProtocolError naming the
// offset.
Message deserialize(std::span<const uint8_t> frame);
MessageKind message_kind(const Message& msg);

// Exact wire size of a round message for n samples, with or without the
// accumulator block.
size_t round_message_bytes(size_t n, bool with_accumulator);

// Order-sensitive 64-bit FNV-1a digest over (id, label) pairs; used by the
// alignment handshake to confirm every agent holds the same labels for the
// intersected ids.
uint64_t label_digest(const std::vector<std::string>& ids,
                      const std::vector<int>& labels);

}  // namespace ascii
