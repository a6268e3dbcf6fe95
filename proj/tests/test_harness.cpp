#include <doctest.h>

#include <limits>
#include <random>
#include <thread>

#include "dircs/harness.hpp"
#include "dircs/solver.hpp"
#include "helpers.hpp"

using namespace dircs;
using namespace testing;

namespace {

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    FAIL("expected " << error_code_name(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

class EchoNode : public NodeEndpoint {
 public:
  EchoNode(std::uint32_t id, std::size_t p, std::int64_t round_offset = 0) : id_(id), p_(p), offset_(round_offset) {}
  std::uint32_t node_id() const override { return id_; }
  Message registration() const override { return {MessageKind::Report, 0, id_, std::vector<double>(p_, 1.0)}; }
  Message handle(const Message& b) override {
    return {MessageKind::Report, static_cast<std::uint64_t>(static_cast<std::int64_t>(b.round) + offset_), id_,
            b.payload};
  }

 private:
  std::uint32_t id_;
  std::size_t p_;
  std::int64_t offset_;
};

}  // namespace

TEST_CASE("frame layout") {
  const auto bytes = encode({MessageKind::Broadcast, 0, 0, {1.0}});
  REQUIRE(bytes.size() == 29);
  CHECK(bytes[0] == 0x44);
  CHECK(bytes[1] == 0x49);
  CHECK(bytes[2] == 0x52);
  CHECK(bytes[3] == 0x31);
  CHECK(bytes[4] == 0x00);
  // 1.0 little-endian: 00 .. 00 f0 3f
  CHECK(bytes[27] == 0xf0);
  CHECK(bytes[28] == 0x3f);

  const auto r = encode({MessageKind::Report, 0x0102030405060708ull, 0x0a0b0c0du, {}});
  REQUIRE(r.size() == kFrameHeaderBytes);
  CHECK(r[4] == 1);
  CHECK(r[5] == 0x08);
  CHECK(r[12] == 0x01);
  CHECK(r[13] == 0x0d);
  CHECK(r[16] == 0x0a);
  CHECK(r[17] == 0);
  CHECK(frame_payload_length(r.data()) == 0);
  CHECK(decode(r).payload.empty());
}

TEST_CASE("round trip of random messages") {
  Rng rng(1);
  std::uniform_int_distribution<int> len(0, 64);
  std::normal_distribution<double> z(0.0, 1e3);
  const double specials[] = {0.0, -0.0, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::denorm_min(),
                             std::numeric_limits<double>::max(), -std::numeric_limits<double>::lowest()};
  for (int i = 0; i < 1000; ++i) {
    Message m;
    m.kind = rng() % 2 ? MessageKind::Report : MessageKind::Broadcast;
    m.round = rng();
    m.node_id = static_cast<std::uint32_t>(rng());
    m.payload.resize(static_cast<std::size_t>(len(rng)));
    for (std::size_t k = 0; k < m.payload.size(); ++k) m.payload[k] = k % 11 == 5 ? specials[k % 6] : z(rng);
    const auto bytes = encode(m);
    CHECK(bytes.size() == kFrameHeaderBytes + 8 * m.payload.size());
    const Message back = decode(bytes);
    CHECK(back == m);
    for (std::size_t k = 0; k < m.payload.size(); ++k) CHECK(std::signbit(back.payload[k]) == std::signbit(m.payload[k]));
  }
}

TEST_CASE("malformed frames") {
  auto good = encode({MessageKind::Report, 3, 1, {1.0, 2.0}});
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, good.size() - 1}) {
    std::vector<std::uint8_t> shorter(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    expect_code(ErrorCode::FrameIncomplete, [&] { decode(shorter); });
  }
  auto bad_magic = good;
  bad_magic[0] = bad_magic[1] = bad_magic[2] = bad_magic[3] = 0;
  expect_code(ErrorCode::BadMagic, [&] { decode(bad_magic); });
  auto bad_kind = good;
  bad_kind[4] = 7;
  expect_code(ErrorCode::BadKind, [&] { decode(bad_kind); });
  expect_code(ErrorCode::BadKind, [&] { frame_payload_length(bad_kind.data()); });
  auto huge = good;
  huge[17] = 0x01;
  huge[18] = huge[19] = 0x00;
  huge[20] = 0x01;
  expect_code(ErrorCode::PayloadTooLarge, [&] { frame_payload_length(huge.data()); });
  auto trailing = good;
  trailing.push_back(0);
  expect_code(ErrorCode::InvalidArgument, [&] { decode(trailing); });
}

TEST_CASE("one in-memory round counts 2 m p scalars") {
  std::vector<std::unique_ptr<NodeEndpoint>> nodes;
  for (std::uint32_t j = 0; j < 3; ++j) nodes.push_back(std::make_unique<EchoNode>(j, 2));
  InMemoryTransport t(std::move(nodes));
  const auto reg = order_reports(t.collect_registration(), 3, 0);
  CHECK(reg.size() == 3);
  CHECK(t.registration_counters().scalars_sent == 6);
  const RoundResult rr = run_round(t, 1, Vector{{0.5, -0.5}});
  CHECK(rr.counters.scalars_sent == 12);
  CHECK(rr.counters.messages_sent == 6);
  CHECK(rr.counters.bytes_sent == 6u * (21 + 16));
  for (std::uint32_t j = 0; j < 3; ++j) CHECK(rr.reports[j].node_id == j);
  CHECK(t.counters().scalars_sent == 12);
}

TEST_CASE("wrong round and missing nodes are rejected") {
  std::vector<std::unique_ptr<NodeEndpoint>> nodes;
  nodes.push_back(std::make_unique<EchoNode>(0, 2));
  nodes.push_back(std::make_unique<EchoNode>(1, 2, 1));
  InMemoryTransport t(std::move(nodes));
  expect_code(ErrorCode::RoundMismatch, [&] { run_round(t, 1, Vector{{0.5, -0.5}}); });

  const Message a{MessageKind::Report, 2, 1, {}};
  const Message b{MessageKind::Report, 2, 0, {}};
  const auto ordered = order_reports({a, b}, 2, 2);
  CHECK(ordered[0].node_id == 0);
  expect_code(ErrorCode::MismatchedNodes, [&] { order_reports({a, a}, 2, 2); });
  expect_code(ErrorCode::MismatchedNodes, [&] { order_reports({a}, 2, 2); });
  expect_code(ErrorCode::BadKind, [&] { order_reports({{MessageKind::Broadcast, 2, 0, {}}}, 1, 2); });
}

TEST_CASE("socket and in-memory transports give bit-identical DIR runs") {
  ProblemConfig c = small_config(3, 4, 40);
  c.rounds = 15;
  const auto ds = generate_scenario(c, 0).nodes;
  const RunTrace mem = run_dir(c, ds);

  SocketServerTransport server(3, "127.0.0.1", 0, std::chrono::seconds(10));
  const auto port = server.port();
  CHECK(port != 0);
  auto workers = make_workers(c, ds, default_init(ds));
  std::vector<std::thread> threads;
  std::vector<std::uint64_t> handled(3, 0);
  for (std::size_t j = 0; j < 3; ++j) {
    threads.emplace_back([&, j] { handled[j] = run_socket_node(*workers[j], "127.0.0.1", port, std::chrono::seconds(10)); });
  }
  const RunTrace sock = run_dir_over(c, ds, server);
  for (auto& th : threads) th.join();

  CHECK(sock.rounds_executed == mem.rounds_executed);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(sock.estimates[j] == mem.estimates[j]);
    CHECK(handled[j] == static_cast<std::uint64_t>(sock.rounds_executed));
  }
  for (std::size_t r = 1; r < sock.records.size(); ++r) CHECK(sock.records[r].comm_scalars == 24);
  CHECK(server.counters().bytes_sent > 0);
}

TEST_CASE("socket server times out on missing nodes") {
  SocketServerTransport server(2, "127.0.0.1", 0, std::chrono::milliseconds(300));
  const auto port = server.port();
  EchoNode node(0, 2);
  std::thread th([&] {
    try {
      run_socket_node(node, "127.0.0.1", port, std::chrono::seconds(2));
    } catch (const Error&) {
    }
  });
  expect_code(ErrorCode::NodeTimeout, [&] { server.collect_registration(); });
  server.close();
  th.join();
}
