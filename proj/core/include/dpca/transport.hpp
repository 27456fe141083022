#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "dpca/matrix.hpp"

namespace dpca {

/// A worker's local top-K eigenbasis on its way to the coordinator.
struct EigenspaceMessage {
  std::uint32_t machine_id = 0;
  OrthonormalBasis basis;

  std::size_t payload_scalars() const noexcept {
    return static_cast<std::size_t>(basis.ambient_dim() * basis.rank());
  }
};

/// The worker end of a transport. One link per machine; used by one thread.
class WorkerLink {
 public:
  virtual ~WorkerLink() = default;

  virtual std::uint32_t machine_id() const noexcept = 0;
  virtual void send_uplink(const EigenspaceMessage& msg) = 0;
  /// Blocks until the coordinator's basis arrives.
  virtual OrthonormalBasis receive_downlink() = 0;
  /// Signals that this worker will not deliver; unblocks the coordinator.
  virtual void abort() noexcept = 0;
};

/// Message passing between m workers and one coordinator.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual std::string_view name() const noexcept = 0;

  /// Starts a round for `machines` workers, dropping state of earlier rounds.
  virtual void open(std::size_t machines) = 0;

  /// Worker end for `machine_id` (1-based). Thread-safe; repeated calls return
  /// the same link for the rest of the round.
  virtual WorkerLink& worker(std::uint32_t machine_id) = 0;

  /// Coordinator side: blocks for the next uplink message in arrival order.
  virtual EigenspaceMessage receive_uplink() = 0;

  virtual void send_downlink(std::uint32_t machine_id,
                             const OrthonormalBasis& basis) = 0;

  /// Aborts the round; blocked calls on either side fail with ProtocolError.
  virtual void shutdown() noexcept = 0;
};

/// Queues inside one process; messages move by value.
class InprocTransport final : public Transport {
 public:
  InprocTransport();
  ~InprocTransport() override;

  std::string_view name() const noexcept override { return "inproc"; }
  void open(std::size_t machines) override;
  WorkerLink& worker(std::uint32_t machine_id) override;
  EigenspaceMessage receive_uplink() override;
  void send_downlink(std::uint32_t machine_id,
                     const OrthonormalBasis& basis) override;
  void shutdown() noexcept override;

 private:
  struct State;
  class Link;
  std::shared_ptr<State> state_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port".
  static Endpoint parse(std::string_view text);
  std::string str() const;
};

/// Coordinator listening on a TCP endpoint, speaking the dpca::wire frame
/// format. worker() hands out loopback links that connect to this listener,
/// so one process can run a full round over real sockets; separate worker
/// processes use connect_worker().
class TcpTransport final : public Transport {
 public:
  /// Binds and listens immediately; port 0 picks an ephemeral port.
  explicit TcpTransport(Endpoint listen = {});
  ~TcpTransport() override;

  /// The bound address (with the actual port).
  Endpoint local_endpoint() const;

  std::string_view name() const noexcept override { return "tcp"; }
  void open(std::size_t machines) override;
  WorkerLink& worker(std::uint32_t machine_id) override;
  EigenspaceMessage receive_uplink() override;
  void send_downlink(std::uint32_t machine_id,
                     const OrthonormalBasis& basis) override;
  void shutdown() noexcept override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// A worker link to a coordinator in another process.
std::unique_ptr<WorkerLink> connect_worker(const Endpoint& coordinator,
                                           std::uint32_t machine_id);

}  // namespace dpca
