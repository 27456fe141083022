#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "dpca/error.hpp"
#include "dpca/grassmann.hpp"
#include "dpca/transport.hpp"
#include "oracles.hpp"

namespace dpca {
namespace {

OrthonormalBasis random_basis(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return OrthonormalBasis(test::random_orthonormal(6, 2, rng));
}

// Raw loopback client, bypassing the library's framing.
void send_raw(std::uint16_t port, const std::vector<unsigned char>& bytes) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  ASSERT_EQ(::send(fd, bytes.data(), bytes.size(), 0), static_cast<ssize_t>(bytes.size()));
  ::close(fd);
}

void exchange_round(Transport& t) {
  t.open(2);
  const OrthonormalBasis b1 = random_basis(70), b2 = random_basis(71);
  std::jthread w2([&] { t.worker(2).send_uplink({2, b2}); });
  std::jthread w1([&] { t.worker(1).send_uplink({1, b1}); });
  EigenspaceMessage x = t.receive_uplink(), y = t.receive_uplink();
  w1.join();
  w2.join();
  if (x.machine_id > y.machine_id) std::swap(x, y);
  EXPECT_EQ(x.machine_id, 1u);
  EXPECT_EQ(y.machine_id, 2u);
  EXPECT_EQ(x.basis.columns(), b1.columns());
  EXPECT_EQ(y.basis.columns(), b2.columns());

  const OrthonormalBasis down = random_basis(72);
  t.send_downlink(1, down);
  t.send_downlink(2, down);
  EXPECT_EQ(t.worker(1).receive_downlink().columns(), down.columns());
  EXPECT_EQ(t.worker(2).receive_downlink().columns(), down.columns());
}

TEST(Endpoint, Parse) {
  const Endpoint e = Endpoint::parse("10.0.0.2:5050");
  EXPECT_EQ(e.host, "10.0.0.2");
  EXPECT_EQ(e.port, 5050);
  EXPECT_EQ(e.str(), "10.0.0.2:5050");
  EXPECT_THROW(Endpoint::parse("nohost"), ProtocolError);
  EXPECT_THROW(Endpoint::parse("h:99999"), ProtocolError);
  EXPECT_THROW(Endpoint::parse("h:x1"), ProtocolError);
}

TEST(InprocTransport, RoundTripIsExact) {
  InprocTransport t;
  exchange_round(t);
  exchange_round(t);  // reopening starts a fresh round
}

TEST(TcpTransport, RoundTripIsExact) {
  TcpTransport t;
  EXPECT_NE(t.local_endpoint().port, 0);
  exchange_round(t);
  exchange_round(t);
}

TEST(TcpTransport, SeparateWorkerLink) {
  TcpTransport t;
  t.open(1);
  const OrthonormalBasis b = random_basis(73);
  auto link = connect_worker(t.local_endpoint(), 1);
  EXPECT_EQ(link->machine_id(), 1u);
  EXPECT_THROW(link->receive_downlink(), ProtocolError);
  std::jthread w([&] { link->send_uplink({1, b}); });
  const EigenspaceMessage got = t.receive_uplink();
  w.join();
  EXPECT_EQ(got.basis.columns(), b.columns());
  t.send_downlink(1, got.basis);
  EXPECT_EQ(link->receive_downlink().columns(), b.columns());
}

TEST(InprocTransport, AbortNamesTheMachine) {
  InprocTransport t;
  t.open(3);
  t.worker(3).abort();
  try {
    (void)t.receive_uplink();
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.machine_id().value_or(0), 3u);
  }
}

TEST(TcpTransport, AbortFailsTheReceive) {
  TcpTransport t;
  t.open(1);
  t.worker(1).abort();
  EXPECT_THROW(t.receive_uplink(), ProtocolError);
}

TEST(TcpTransport, GarbageFrameIsRejected) {
  TcpTransport t;
  t.open(1);
  std::vector<unsigned char> junk(40, 0x5a);
  std::jthread w([&] { send_raw(t.local_endpoint().port, junk); });
  EXPECT_THROW(t.receive_uplink(), ProtocolError);
}

TEST(TcpTransport, DuplicateMachineIdIsRejected) {
  TcpTransport t;
  t.open(2);
  const OrthonormalBasis b = random_basis(74);
  auto a = connect_worker(t.local_endpoint(), 1);
  auto c = connect_worker(t.local_endpoint(), 1);
  a->send_uplink({1, b});
  (void)t.receive_uplink();
  c->send_uplink({1, b});
  try {
    (void)t.receive_uplink();
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.machine_id().value_or(0), 1u);
  }
}

TEST(Transport, DownlinkWithoutUplinkFails) {
  TcpTransport t;
  t.open(1);
  EXPECT_THROW(t.send_downlink(1, random_basis(75)), ProtocolError);
}

TEST(Transport, ShutdownUnblocksCoordinator) {
  InprocTransport a;
  TcpTransport b;
  for (Transport* t : {static_cast<Transport*>(&a), static_cast<Transport*>(&b)}) {
    t->open(1);
    std::jthread stopper([t] {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      t->shutdown();
    });
    EXPECT_THROW(t->receive_uplink(), ProtocolError) << t->name();
  }
}

TEST(Transport, AggregatesAgreeAcrossTransports) {
  std::vector<OrthonormalBasis> bases;
  for (int i = 0; i < 4; ++i) bases.push_back(random_basis(80 + i));
  auto collect = [&](Transport& t) {
    t.open(bases.size());
    std::vector<std::jthread> ws;
    for (std::uint32_t id = 1; id <= bases.size(); ++id) {
      ws.emplace_back([&, id] { t.worker(id).send_uplink({id, bases[id - 1]}); });
    }
    std::vector<SubspacePoint> pts(bases.size(), SubspacePoint(bases[0]));
    for (std::size_t i = 0; i < bases.size(); ++i) {
      EigenspaceMessage m = t.receive_uplink();
      pts[m.machine_id - 1] = SubspacePoint(std::move(m.basis));
    }
    return barycenter(pts, 2).point;
  };
  InprocTransport in;
  TcpTransport tcp;
  EXPECT_LE(rho(collect(in), collect(tcp)), 1e-10);
}

}  // namespace
}  // namespace dpca
