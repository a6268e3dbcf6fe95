#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dircs/core_model.hpp"

namespace dircs {

enum class MessageKind : std::uint8_t { Broadcast = 0, Report = 1 };

struct Message {
  MessageKind kind = MessageKind::Broadcast;
  std::uint64_t round = 0;
  std::uint32_t node_id = 0;
  std::vector<double> payload;

  bool operator==(const Message&) const = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 21;
inline constexpr std::uint32_t kMaxPayload = 1u << 24;

// Little-endian: "DIR1", kind, u64 round, u32 node_id, u32 L, L x f64.
std::vector<std::uint8_t> encode(const Message& msg);
Message decode(const std::uint8_t* data, std::size_t size);
inline Message decode(const std::vector<std::uint8_t>& bytes) { return decode(bytes.data(), bytes.size()); }

/// Payload length declared by a complete 21-byte header; validates magic and kind.
std::uint32_t frame_payload_length(const std::uint8_t* header);

struct TransportCounters {
  std::uint64_t scalars_sent = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;

  TransportCounters& operator+=(const TransportCounters& o);
};

TransportCounters operator-(const TransportCounters& a, const TransportCounters& b);

/// Node side of the protocol: answers each Broadcast with a Report.
class NodeEndpoint {
 public:
  virtual ~NodeEndpoint() = default;
  virtual std::uint32_t node_id() const = 0;
  /// Round-0 Report carrying the initial estimate.
  virtual Message registration() const = 0;
  virtual Message handle(const Message& broadcast) = 0;
};

/// Server side view of the m nodes.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::size_t num_nodes() const = 0;
  /// Collects the m registration Reports (counted in `registration_counters`).
  virtual std::vector<Message> collect_registration() = 0;
  /// Sends the Broadcast to every node and returns their m Reports in arrival order.
  virtual std::vector<Message> exchange(const Message& broadcast) = 0;
  virtual void close() {}

  const TransportCounters& counters() const { return counters_; }
  const TransportCounters& registration_counters() const { return registration_; }

 protected:
  TransportCounters counters_;
  TransportCounters registration_;
};

/// Deterministic in-process transport; frames still go through encode/decode.
class InMemoryTransport : public Transport {
 public:
  explicit InMemoryTransport(std::vector<std::unique_ptr<NodeEndpoint>> nodes, int threads = 1);

  std::size_t num_nodes() const override { return nodes_.size(); }
  std::vector<Message> collect_registration() override;
  std::vector<Message> exchange(const Message& broadcast) override;

  NodeEndpoint& node(std::size_t i) { return *nodes_.at(i); }

 private:
  std::vector<std::unique_ptr<NodeEndpoint>> nodes_;
  int threads_;
};

/// Loopback/TCP server transport: one connection per node, blocking frame reads.
class SocketServerTransport : public Transport {
 public:
  SocketServerTransport(std::size_t num_nodes, const std::string& host, std::uint16_t port,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~SocketServerTransport() override;
  SocketServerTransport(const SocketServerTransport&) = delete;
  SocketServerTransport& operator=(const SocketServerTransport&) = delete;

  /// Port actually bound (useful when 0 was requested).
  std::uint16_t port() const { return port_; }

  std::size_t num_nodes() const override { return num_nodes_; }
  std::vector<Message> collect_registration() override;
  std::vector<Message> exchange(const Message& broadcast) override;
  void close() override;

 private:
  std::size_t num_nodes_;
  std::chrono::milliseconds timeout_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::vector<int> conns_;  // indexed by node_id after registration
};

/// Connects to a server and serves one node until the server closes the connection.
/// Returns the number of Broadcasts handled.
std::uint64_t run_socket_node(NodeEndpoint& node, const std::string& host, std::uint16_t port,
                              std::chrono::milliseconds timeout = std::chrono::seconds(30));

struct RoundResult {
  std::vector<Message> reports;  // ascending node_id
  TransportCounters counters;    // this round only
};

/// One outer iteration: Broadcast(psi) to all nodes, barrier on m Reports.
RoundResult run_round(Transport& transport, std::uint64_t round, const Vector& psi);

/// Sorts registration/round reports by node_id and checks that each node answered once.
std::vector<Message> order_reports(std::vector<Message> reports, std::size_t num_nodes, std::uint64_t round);

}  // namespace dircs
