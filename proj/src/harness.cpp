#include "dircs/harness.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <thread>

namespace dircs {

namespace {

constexpr std::uint8_t kMagic[4] = {0x44, 0x49, 0x52, 0x31};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t x = 0;
  for (int i = 3; i >= 0; --i) x = (x << 8) | p[i];
  return x;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | p[i];
  return x;
}

}  // namespace

std::vector<std::uint8_t> encode(const Message& msg) {
  if (msg.payload.size() > kMaxPayload) fail(ErrorCode::PayloadTooLarge, "payload exceeds 2^24 scalars");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kFrameHeaderBytes + 8 * msg.payload.size());
  out.push_back(static_cast<std::uint8_t>(msg.kind));
  put_u64(out, msg.round);
  put_u32(out, msg.node_id);
  put_u32(out, static_cast<std::uint32_t>(msg.payload.size()));
  for (double x : msg.payload) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

std::uint32_t frame_payload_length(const std::uint8_t* header) {
  if (std::memcmp(header, kMagic, 4) != 0) fail(ErrorCode::BadMagic, "frame does not start with DIR1");
  if (header[4] > 1) fail(ErrorCode::BadKind, "unknown message kind " + std::to_string(header[4]));
  const std::uint32_t len = get_u32(header + 17);
  if (len > kMaxPayload) fail(ErrorCode::PayloadTooLarge, "declared payload exceeds 2^24 scalars");
  return len;
}

Message decode(const std::uint8_t* data, std::size_t size) {
  if (size < 4) fail(ErrorCode::FrameIncomplete, "frame shorter than the magic");
  if (std::memcmp(data, kMagic, 4) != 0) fail(ErrorCode::BadMagic, "frame does not start with DIR1");
  if (size < 5) fail(ErrorCode::FrameIncomplete, "frame ends before the kind byte");
  if (data[4] > 1) fail(ErrorCode::BadKind, "unknown message kind " + std::to_string(data[4]));
  if (size < kFrameHeaderBytes) fail(ErrorCode::FrameIncomplete, "frame shorter than its header");
  const std::uint32_t len = frame_payload_length(data);
  const std::size_t expected = kFrameHeaderBytes + 8 * static_cast<std::size_t>(len);
  if (size < expected) fail(ErrorCode::FrameIncomplete, "frame payload is truncated");
  if (size > expected) fail(ErrorCode::InvalidArgument, "trailing bytes after frame");

  Message msg;
  msg.kind = static_cast<MessageKind>(data[4]);
  msg.round = get_u64(data + 5);
  msg.node_id = get_u32(data + 13);
  msg.payload.resize(len);
  for (std::uint32_t i = 0; i < len; ++i) {
    msg.payload[i] = std::bit_cast<double>(get_u64(data + kFrameHeaderBytes + 8 * static_cast<std::size_t>(i)));
  }
  return msg;
}

TransportCounters& TransportCounters::operator+=(const TransportCounters& o) {
  scalars_sent += o.scalars_sent;
  messages_sent += o.messages_sent;
  bytes_sent += o.bytes_sent;
  return *this;
}

TransportCounters operator-(const TransportCounters& a, const TransportCounters& b) {
  return {a.scalars_sent - b.scalars_sent, a.messages_sent - b.messages_sent, a.bytes_sent - b.bytes_sent};
}

// ---------------------------------------------------------------------------
// In-memory transport

InMemoryTransport::InMemoryTransport(std::vector<std::unique_ptr<NodeEndpoint>> nodes, int threads)
    : nodes_(std::move(nodes)), threads_(std::max(1, threads)) {
  if (nodes_.empty()) fail(ErrorCode::InvalidArgument, "transport needs at least one node");
}

std::vector<Message> InMemoryTransport::collect_registration() {
  std::vector<Message> out;
  out.reserve(nodes_.size());
  for (auto& node : nodes_) {
    Message msg = decode(encode(node->registration()));
    registration_.scalars_sent += msg.payload.size();
    registration_.messages_sent += 1;
    registration_.bytes_sent += kFrameHeaderBytes + 8 * msg.payload.size();
    out.push_back(std::move(msg));
  }
  return out;
}

std::vector<Message> InMemoryTransport::exchange(const Message& broadcast) {
  const auto frame = encode(broadcast);
  const std::size_t m = nodes_.size();
  std::vector<Message> replies(m);
  std::vector<std::exception_ptr> errors(m);

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < m; i += stride) {
      try {
        replies[i] = decode(encode(nodes_[i]->handle(decode(frame))));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads_), m);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  counters_.scalars_sent += m * broadcast.payload.size();
  counters_.messages_sent += m;
  counters_.bytes_sent += m * frame.size();
  for (const auto& r : replies) {
    counters_.scalars_sent += r.payload.size();
    counters_.messages_sent += 1;
    counters_.bytes_sent += kFrameHeaderBytes + 8 * r.payload.size();
  }
  return replies;
}

// ---------------------------------------------------------------------------
// Sockets

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return static_cast<int>(std::max<long long>(0, left));
}

bool wait_readable(int fd, Clock::time_point deadline) {
  while (true) {
    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) fail(ErrorCode::TransportError, std::string("poll failed: ") + std::strerror(errno));
  }
}

// Returns false on a clean EOF before any byte when `eof_ok` is set.
bool read_exact(int fd, std::uint8_t* buf, std::size_t n, Clock::time_point deadline, bool eof_ok) {
  std::size_t got = 0;
  while (got < n) {
    if (!wait_readable(fd, deadline)) fail(ErrorCode::NodeTimeout, "timed out waiting for a frame");
    const ssize_t rc = ::recv(fd, buf + got, n - got, 0);
    if (rc == 0) {
      if (got == 0 && eof_ok) return false;
      fail(ErrorCode::FrameIncomplete, "connection closed mid-frame");
    }
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::TransportError, std::string("recv failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(rc);
  }
  return true;
}

std::optional<Message> read_frame(int fd, Clock::time_point deadline, bool eof_ok) {
  std::vector<std::uint8_t> buf(kFrameHeaderBytes);
  if (!read_exact(fd, buf.data(), kFrameHeaderBytes, deadline, eof_ok)) return std::nullopt;
  const std::uint32_t len = frame_payload_length(buf.data());
  buf.resize(kFrameHeaderBytes + 8 * static_cast<std::size_t>(len));
  read_exact(fd, buf.data() + kFrameHeaderBytes, 8 * static_cast<std::size_t>(len), deadline, false);
  return decode(buf);
}

std::size_t write_frame(int fd, const Message& msg) {
  const auto bytes = encode(msg);
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t rc = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::TransportError, std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(rc);
  }
  return bytes.size();
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    fail(ErrorCode::TransportError, "cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

SocketServerTransport::SocketServerTransport(std::size_t num_nodes, const std::string& host, std::uint16_t port,
                                             std::chrono::milliseconds timeout)
    : num_nodes_(num_nodes), timeout_(timeout) {
  if (num_nodes == 0) fail(ErrorCode::InvalidArgument, "server needs at least one node");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) fail(ErrorCode::TransportError, std::string("socket failed: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve(host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    fail(ErrorCode::TransportError, "bind to " + host + ":" + std::to_string(port) + " failed: " + why);
  }
  if (::listen(listen_fd_, static_cast<int>(std::min<std::size_t>(num_nodes, 1024))) != 0) {
    ::close(listen_fd_);
    fail(ErrorCode::TransportError, std::string("listen failed: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SocketServerTransport::~SocketServerTransport() { close(); }

void SocketServerTransport::close() {
  for (int& fd : conns_) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

std::vector<Message> SocketServerTransport::collect_registration() {
  const auto deadline = Clock::now() + timeout_;
  conns_.assign(num_nodes_, -1);
  std::vector<Message> out;
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    if (!wait_readable(listen_fd_, deadline)) fail(ErrorCode::NodeTimeout, "timed out waiting for nodes to connect");
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) fail(ErrorCode::TransportError, std::string("accept failed: ") + std::strerror(errno));
    set_nodelay(fd);
    auto msg = read_frame(fd, deadline, false);
    if (msg->kind != MessageKind::Report || msg->round != 0) {
      ::close(fd);
      fail(ErrorCode::RoundMismatch, "first frame from a node must be its round-0 report");
    }
    if (msg->node_id >= num_nodes_ || conns_[msg->node_id] >= 0) {
      ::close(fd);
      fail(ErrorCode::MismatchedNodes, "unexpected or duplicate node id " + std::to_string(msg->node_id));
    }
    conns_[msg->node_id] = fd;
    registration_.scalars_sent += msg->payload.size();
    registration_.messages_sent += 1;
    registration_.bytes_sent += kFrameHeaderBytes + 8 * msg->payload.size();
    out.push_back(std::move(*msg));
  }
  return out;
}

std::vector<Message> SocketServerTransport::exchange(const Message& broadcast) {
  for (int fd : conns_) {
    counters_.bytes_sent += write_frame(fd, broadcast);
    counters_.scalars_sent += broadcast.payload.size();
    counters_.messages_sent += 1;
  }
  std::vector<Message> replies;
  replies.reserve(conns_.size());
  for (int fd : conns_) {
    auto msg = read_frame(fd, Clock::now() + timeout_, false);
    counters_.bytes_sent += kFrameHeaderBytes + 8 * msg->payload.size();
    counters_.scalars_sent += msg->payload.size();
    counters_.messages_sent += 1;
    replies.push_back(std::move(*msg));
  }
  return replies;
}

std::uint64_t run_socket_node(NodeEndpoint& node, const std::string& host, std::uint16_t port,
                              std::chrono::milliseconds timeout) {
  const sockaddr_in addr = resolve(host, port);
  const auto connect_deadline = Clock::now() + timeout;
  int fd = -1;
  while (true) {
    fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail(ErrorCode::TransportError, std::string("socket failed: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) break;
    ::close(fd);
    if (Clock::now() >= connect_deadline) fail(ErrorCode::NodeTimeout, "could not reach server " + host);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  set_nodelay(fd);
  struct Closer {
    int fd;
    ~Closer() { ::close(fd); }
  } closer{fd};

  write_frame(fd, node.registration());
  std::uint64_t handled = 0;
  while (true) {
    auto msg = read_frame(fd, Clock::now() + timeout, true);
    if (!msg) return handled;
    write_frame(fd, node.handle(*msg));
    ++handled;
  }
}

// ---------------------------------------------------------------------------

std::vector<Message> order_reports(std::vector<Message> reports, std::size_t num_nodes, std::uint64_t round) {
  if (reports.size() != num_nodes) fail(ErrorCode::MismatchedNodes, "expected one report per node");
  for (const auto& r : reports) {
    if (r.kind != MessageKind::Report) fail(ErrorCode::BadKind, "expected a Report");
    if (r.round != round) {
      fail(ErrorCode::RoundMismatch, "node " + std::to_string(r.node_id) + " answered round " +
                                         std::to_string(r.round) + " during round " + std::to_string(round));
    }
  }
  std::sort(reports.begin(), reports.end(), [](const Message& a, const Message& b) { return a.node_id < b.node_id; });
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].node_id != i) fail(ErrorCode::MismatchedNodes, "missing or duplicate node id in reports");
  }
  return reports;
}

RoundResult run_round(Transport& transport, std::uint64_t round, const Vector& psi) {
  Message broadcast;
  broadcast.kind = MessageKind::Broadcast;
  broadcast.round = round;
  broadcast.node_id = 0;
  broadcast.payload.assign(psi.data(), psi.data() + psi.size());
  const TransportCounters before = transport.counters();
  auto reports = transport.exchange(broadcast);
  RoundResult result;
  result.reports = order_reports(std::move(reports), transport.num_nodes(), round);
  result.counters = transport.counters() - before;
  return result;
}

}  // namespace dircs
