#include <cmath>
#include <stdexcept>

#include "ascii/messages.hpp"
#include "ascii/wire.hpp"

namespace ascii {
namespace {

// Bytes between the length prefix and the payload.
constexpr size_t kTagBytes = 3;  // kind u8 + version u16

std::vector<uint8_t> pack_bits(const std::vector<uint8_t>& bits) {
  std::vector<uint8_t> packed((bits.size() + 7) / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1)
      throw std::invalid_argument("serialize: reward entries must be 0 or 1");
    if (bits[i]) packed[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  }
  return packed;
}

std::vector<uint8_t> unpack_bits(std::span<const uint8_t> packed, size_t n) {
  std::vector<uint8_t> bits(n);
  for (size_t i = 0; i < n; ++i)
    bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return bits;
}

std::vector<uint8_t> finish_frame(MessageKind kind,
                                  const std::vector<uint8_t>& payload) {
  std::vector<uint8_t> frame;
  frame.reserve(4 + kTagBytes + payload.size());
  wire::put_u32be(frame, static_cast<uint32_t>(kTagBytes + payload.size()));
  wire::put_u8(frame, static_cast<uint8_t>(kind));
  wire::put_u16(frame, kWireVersion);
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

// Guards element counts read off the wire before anything is allocated, so
// a corrupt count raises a parse error instead of a giant allocation.
void check_count(const wire::Reader& r, uint64_t count, size_t min_bytes_each,
                 const char* what) {
  if (count * min_bytes_each > r.remaining())
    throw ParseError(std::string(what) + " count " + std::to_string(count) +
                     " exceeds the remaining payload at offset " +
                     std::to_string(r.offset()));
}

RoundMessage read_round(wire::Reader& r) {
  RoundMessage msg;
  msg.round = r.i32();
  msg.sender = r.i32();
  const uint32_t n = r.u32();
  msg.alpha = r.f64();
  check_count(r, n, 8, "sample");
  msg.ignorance.resize(n);
  for (uint32_t i = 0; i < n; ++i) msg.ignorance[i] = r.f64();
  msg.reward = unpack_bits(r.bytes((n + 7) / 8), n);
  msg.has_accumulator = r.u8() != 0;
  if (msg.has_accumulator) {
    check_count(r, n, 8, "accumulator");
    msg.accumulator.resize(n);
    for (uint32_t i = 0; i < n; ++i) msg.accumulator[i] = r.f64();
  }
  msg.terminal = r.u8() != 0;
  return msg;
}

PredictMessage read_predict(wire::Reader& r) {
  PredictMessage msg;
  msg.sender = r.i32();
  const uint32_t rows = r.u32();
  msg.num_classes = r.i32();
  if (msg.num_classes < 2 || msg.num_classes > 4096)
    throw ParseError("predict message: implausible class count " +
                     std::to_string(msg.num_classes));
  check_count(r, uint64_t(rows) * (4 + 8 * uint64_t(msg.num_classes)), 1,
              "prediction row byte");
  msg.sample_ids.resize(rows);
  for (uint32_t i = 0; i < rows; ++i) msg.sample_ids[i] = r.string();
  msg.scores.resize(static_cast<size_t>(rows) *
                    static_cast<size_t>(msg.num_classes));
  for (double& s : msg.scores) s = r.f64();
  return msg;
}

HandshakeMessage read_handshake(wire::Reader& r) {
  HandshakeMessage msg;
  msg.sender = r.i32();
  const uint32_t count = r.u32();
  check_count(r, count, 4, "sample id");
  msg.sample_ids.resize(count);
  for (uint32_t i = 0; i < count; ++i) msg.sample_ids[i] = r.string();
  msg.label_digest = r.u64();
  return msg;
}

}  // namespace

const char* message_kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::round: return "round";
    case MessageKind::predict: return "predict";
    case MessageKind::handshake: return "handshake";
  }
  return "?";
}

std::vector<uint8_t> serialize(const RoundMessage& msg) {
  const size_t n = msg.ignorance.size();
  if (msg.reward.size() != n)
    throw std::invalid_argument(
        "serialize: reward and ignorance lengths disagree");
  if (msg.has_accumulator && msg.accumulator.size() != n)
    throw std::invalid_argument(
        "serialize: accumulator and ignorance lengths disagree");
  if (n > 0) {
    double total = 0.0;
    for (double w : msg.ignorance) total += w;
    if (std::abs(total - 1.0) > kNormTol)
      throw std::invalid_argument(
          "serialize: ignorance must be normalized to sum one");
  }

  std::vector<uint8_t> payload;
  payload.reserve(22 + 8 * n + (n + 7) / 8 +
                  (msg.has_accumulator ? 8 * n : 0));
  wire::put_i32(payload, msg.round);
  wire::put_i32(payload, msg.sender);
  wire::put_u32(payload, static_cast<uint32_t>(n));
  wire::put_f64(payload, msg.alpha);
  for (double w : msg.ignorance) wire::put_f64(payload, w);
  const std::vector<uint8_t> packed = pack_bits(msg.reward);
  payload.insert(payload.end(), packed.begin(), packed.end());
  wire::put_u8(payload, msg.has_accumulator ? 1 : 0);
  if (msg.has_accumulator)
    for (double a : msg.accumulator) wire::put_f64(payload, a);
  wire::put_u8(payload, msg.terminal ? 1 : 0);
  return finish_frame(MessageKind::round, payload);
}

std::vector<uint8_t> serialize(const PredictMessage& msg) {
  const size_t rows = msg.sample_ids.size();
  if (msg.num_classes < 1)
    throw std::invalid_argument("serialize: num_classes must be positive");
  if (msg.scores.size() != rows * static_cast<size_t>(msg.num_classes))
    throw std::invalid_argument(
        "serialize: score count must be rows * num_classes");

  std::vector<uint8_t> payload;
  wire::put_i32(payload, msg.sender);
  wire::put_u32(payload, static_cast<uint32_t>(rows));
  wire::put_i32(payload, msg.num_classes);
  for (const std::string& id : msg.sample_ids) wire::put_string(payload, id);
  for (double s : msg.scores) wire::put_f64(payload, s);
  return finish_frame(MessageKind::predict, payload);
}

std::vector<uint8_t> serialize(const HandshakeMessage& msg) {
  std::vector<uint8_t> payload;
  wire::put_i32(payload, msg.sender);
  wire::put_u32(payload, static_cast<uint32_t>(msg.sample_ids.size()));
  for (const std::string& id : msg.sample_ids) wire::put_string(payload, id);
  wire::put_u64(payload, msg.label_digest);
  return finish_frame(MessageKind::handshake, payload);
}

std::vector<uint8_t> serialize_message(const Message& msg) {
  return std::visit([](const auto& m) { return serialize(m); }, msg);
}

Message deserialize(std::span<const uint8_t> frame) {
  try {
    wire::Reader r(frame);
    const uint32_t length = r.u32be();
    if (length != r.remaining())
      throw ParseError("frame length " + std::to_string(length) +
                       " does not match body size " +
                       std::to_string(r.remaining()) + " at offset 0");
    const uint8_t kind = r.u8();
    const uint16_t version = r.u16();
    if (version != kWireVersion)
      throw ParseError("unsupported wire version " + std::to_string(version) +
                       " at offset 5");
    Message msg;
    switch (static_cast<MessageKind>(kind)) {
      case MessageKind::round: msg = read_round(r); break;
      case MessageKind::predict: msg = read_predict(r); break;
      case MessageKind::handshake: msg = read_handshake(r); break;
      default:
        throw ParseError("unknown message kind " + std::to_string(kind) +
                         " at offset 4");
    }
    r.expect_end("frame");
    return msg;
  } catch (const ParseError& e) {
    throw ProtocolError(std::string("invalid frame: ") + e.what());
  }
}

MessageKind message_kind(const Message& msg) {
  if (std::holds_alternative<RoundMessage>(msg)) return MessageKind::round;
  if (std::holds_alternative<PredictMessage>(msg)) return MessageKind::predict;
  return MessageKind::handshake;
}

size_t round_message_bytes(size_t n, bool with_accumulator) {
  return 4 + kTagBytes + 22 + 8 * n + (n + 7) / 8 +
         (with_accumulator ? 8 * n : 0);
}

uint64_t label_digest(const std::vector<std::string>& ids,
                      const std::vector<int>& labels) {
  if (ids.size() != labels.size())
    throw std::invalid_argument("label_digest: length mismatch");
  uint64_t h = 14695981039346656037ull;
  auto mix = [&h](uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (size_t i = 0; i < ids.size(); ++i) {
    for (char c : ids[i]) mix(static_cast<uint8_t>(c));
    mix(0);
    uint32_t label = static_cast<uint32_t>(labels[i]);
    for (int b = 0; b < 4; ++b) mix(static_cast<uint8_t>(label >> (8 * b)));
  }
  return h;
}

}  // namespace ascii
