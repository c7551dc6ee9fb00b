#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <map>

#include "ascii/channels.hpp"
#include "ascii/wire.hpp"

namespace ascii {

TransportKind parse_transport(const std::string& name) {
  if (name == "inproc") return TransportKind::inproc;
  if (name == "socket") return TransportKind::socket;
  throw ConfigError("unknown transport '" + name +
                    "' (expected inproc or socket)");
}

const char* transport_name(TransportKind t) {
  return t == TransportKind::inproc ? "inproc" : "socket";
}

void Mailbox::push(std::vector<uint8_t> frame) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return;  // late frames after teardown are dropped
    queue_.push_back(std::move(frame));
  }
  cv_.notify_one();
}

std::vector<uint8_t> Mailbox::pop() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return !queue_.empty() || closed_; });
  if (queue_.empty())
    throw ProtocolError("connection lost: channel closed while waiting");
  std::vector<uint8_t> frame = std::move(queue_.front());
  queue_.pop_front();
  return frame;
}

void Mailbox::close() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Mailbox::closed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return closed_;
}

namespace {

class InprocLink : public Link {
 public:
  explicit InprocLink(Mailbox* peer) : peer_(peer) {}

  void send(const std::vector<uint8_t>& frame) override {
    bytes_ += frame.size();
    peer_->push(frame);
  }

  size_t bytes_sent() const override { return bytes_; }

 private:
  Mailbox* peer_;
  std::atomic<size_t> bytes_{0};
};

class InprocMesh : public ChannelMesh {
 public:
  explicit InprocMesh(int num_agents) : inboxes_(num_agents) {
    for (int from = 1; from <= num_agents; ++from)
      for (int to = 1; to <= num_agents; ++to)
        if (from != to)
          links_[{from, to}] = std::make_unique<InprocLink>(&inboxes_[to - 1]);
  }

  ~InprocMesh() override { drop_all(); }

  Mailbox& inbox(int agent) override { return inboxes_.at(agent - 1); }

  Link& link(int from, int to) override {
    auto it = links_.find({from, to});
    if (it == links_.end())
      throw std::invalid_argument("no channel between the requested agents");
    return *it->second;
  }

  void drop_all() override {
    for (Mailbox& inbox : inboxes_) inbox.close();
  }

  size_t total_bytes_sent() const override {
    size_t total = 0;
    for (const auto& [key, link] : links_) total += link->bytes_sent();
    return total;
  }

 private:
  std::vector<Mailbox> inboxes_;
  std::map<std::pair<int, int>, std::unique_ptr<InprocLink>> links_;
};

[[noreturn]] void throw_errno(const std::string& what) {
  throw ProtocolError(what + ": " + std::strerror(errno));
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void write_all(int fd, const uint8_t* data, size_t size) {
  size_t sent = 0;
  while (sent < size) {
    ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("socket send failed");
    }
    sent += static_cast<size_t>(n);
  }
}

// Reads exactly `size` bytes; returns false on a clean EOF at a frame
// boundary, throws mid-frame.
bool read_all(int fd, uint8_t* data, size_t size, bool at_boundary) {
  size_t got = 0;
  while (got < size) {
    ssize_t n = ::recv(fd, data + got, size - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;  // reset by peer: treated as connection loss
    }
    if (n == 0) {
      if (got == 0 && at_boundary) return false;
      throw ProtocolError("connection lost: stream ended mid-frame");
    }
    got += static_cast<size_t>(n);
  }
  return true;
}

// One endpoint of an established TCP connection, with a reader thread that
// reassembles frames into the owning agent's inbox.
class TcpEndpoint : public Link {
 public:
  TcpEndpoint(int fd, Mailbox* owner_inbox) : fd_(fd) {
    set_nodelay(fd_);
    pump_ = std::thread([this, owner_inbox] { pump(owner_inbox); });
  }

  ~TcpEndpoint() override {
    shutdown();
    if (pump_.joinable()) pump_.join();
    ::close(fd_);
  }

  void send(const std::vector<uint8_t>& frame) override {
    std::lock_guard<std::mutex> lock(send_mu_);
    write_all(fd_, frame.data(), frame.size());
    bytes_ += frame.size();
  }

  size_t bytes_sent() const override { return bytes_; }

  void shutdown() { ::shutdown(fd_, SHUT_RDWR); }

 private:
  void pump(Mailbox* inbox) {
    try {
      for (;;) {
        uint8_t prefix[4];
        if (!read_all(fd_, prefix, 4, true)) break;
        uint32_t length = 0;
        for (uint8_t b : prefix) length = (length << 8) | b;
        std::vector<uint8_t> frame(4 + static_cast<size_t>(length));
        std::copy(prefix, prefix + 4, frame.begin());
        if (!read_all(fd_, frame.data() + 4, length, false)) break;
        inbox->push(std::move(frame));
      }
    } catch (const ProtocolError&) {
      // Fall through: the closing below surfaces the loss to the receiver.
    }
    inbox->close();
  }

  int fd_;
  std::mutex send_mu_;
  std::atomic<size_t> bytes_{0};
  std::thread pump_;
};

// Listens once on an ephemeral loopback port and hands out connected pairs.
std::pair<int, int> connected_pair(const char* bind_address) {
  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw_errno("socket creation failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  if (inet_pton(AF_INET, bind_address, &addr.sin_addr) != 1) {
    ::close(listener);
    throw ConfigError(std::string("invalid bind address '") + bind_address +
                      "'");
  }
  if (bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      listen(listener, 1) < 0) {
    ::close(listener);
    throw_errno("socket bind/listen failed");
  }
  socklen_t len = sizeof addr;
  if (getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
    ::close(listener);
    throw_errno("getsockname failed");
  }

  int client = ::socket(AF_INET, SOCK_STREAM, 0);
  if (client < 0) {
    ::close(listener);
    throw_errno("socket creation failed");
  }
  if (connect(client, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(listener);
    ::close(client);
    throw_errno("loopback connect failed");
  }
  int server = accept(listener, nullptr, nullptr);
  ::close(listener);
  if (server < 0) {
    ::close(client);
    throw_errno("loopback accept failed");
  }
  return {client, server};
}

class TcpMesh : public ChannelMesh {
 public:
  explicit TcpMesh(int num_agents) : inboxes_(num_agents) {
    const char* bind_address = std::getenv("ASCII_BIND_ADDRESS");
    if (!bind_address || !*bind_address) bind_address = "127.0.0.1";
    for (int a = 1; a <= num_agents; ++a)
      for (int b = a + 1; b <= num_agents; ++b) {
        // Each endpoint sends on its own fd; its pump thread reads what the
        // peer sent, which lands in the fd owner's inbox.
        auto [fd_a, fd_b] = connected_pair(bind_address);
        links_[{a, b}] = std::make_unique<TcpEndpoint>(fd_a, &inboxes_[a - 1]);
        links_[{b, a}] = std::make_unique<TcpEndpoint>(fd_b, &inboxes_[b - 1]);
      }
  }

  ~TcpMesh() override { drop_all(); }

  Mailbox& inbox(int agent) override { return inboxes_.at(agent - 1); }

  Link& link(int from, int to) override {
    auto it = links_.find({from, to});
    if (it == links_.end())
      throw std::invalid_argument("no channel between the requested agents");
    return *it->second;
  }

  void drop_all() override {
    for (auto& [key, endpoint] : links_) endpoint->shutdown();
    for (Mailbox& inbox : inboxes_) inbox.close();
  }

  size_t total_bytes_sent() const override {
    size_t total = 0;
    for (const auto& [key, endpoint] : links_) total += endpoint->bytes_sent();
    return total;
  }

 private:
  std::vector<Mailbox> inboxes_;
  std::map<std::pair<int, int>, std::unique_ptr<TcpEndpoint>> links_;
};

}  // namespace

std::unique_ptr<ChannelMesh> make_inproc_mesh(int num_agents) {
  return std::make_unique<InprocMesh>(num_agents);
}

std::unique_ptr<ChannelMesh> make_tcp_mesh(int num_agents) {
  return std::make_unique<TcpMesh>(num_agents);
}

std::unique_ptr<ChannelMesh> make_mesh(TransportKind kind, int num_agents) {
  return kind == TransportKind::inproc ? make_inproc_mesh(num_agents)
                                       : make_tcp_mesh(num_agents);
}

void CostLedger::record(int round, int sender, MessageKind kind,
                        size_t bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  records_.push_back(
      CostRecord{round, sender, kind, bytes, records_.size()});
}

std::vector<CostRecord> CostLedger::records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

size_t CostLedger::total() const {
  std::lock_guard<std::mutex> lock(mu_);
  size_t total = 0;
  for (const CostRecord& r : records_) total += r.bytes;
  return total;
}

size_t CostLedger::total(MessageKind kind) const {
  std::lock_guard<std::mutex> lock(mu_);
  size_t total = 0;
  for (const CostRecord& r : records_)
    if (r.kind == kind) total += r.bytes;
  return total;
}

size_t CostLedger::total_for_agent(int sender) const {
  std::lock_guard<std::mutex> lock(mu_);
  size_t total = 0;
  for (const CostRecord& r : records_)
    if (r.sender == sender) total += r.bytes;
  return total;
}

std::vector<std::pair<int, size_t>> CostLedger::cumulative_round_bytes()
    const {
  std::map<int, size_t> per_round;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const CostRecord& r : records_)
      if (r.kind == MessageKind::round) per_round[r.round] += r.bytes;
  }
  std::vector<std::pair<int, size_t>> out;
  size_t running = 0;
  for (const auto& [round, bytes] : per_round) {
    running += bytes;
    out.emplace_back(round, running);
  }
  return out;
}

CostReport measure_cost(const CostLedger& ledger, size_t n_train,
                        const std::vector<size_t>& assist_cols) {
  CostReport report;
  report.protocol_bytes = ledger.total();
  report.interchange_bytes = ledger.total(MessageKind::round);
  for (size_t cols : assist_cols)
    report.baseline_bytes += n_train * cols * sizeof(double);
  report.per_round_cumulative = ledger.cumulative_round_bytes();
  if (report.interchange_bytes > 0)
    report.ratio = static_cast<double>(report.baseline_bytes) /
                   static_cast<double>(report.interchange_bytes);
  return report;
}

}  // namespace ascii
