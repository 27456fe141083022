#include "dpca/transport.hpp"

#include <sys/socket.h>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <variant>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>

#include "dpca/error.hpp"
#include "dpca/wire.hpp"

namespace dpca {

// ---------------------------------------------------------------------------
// In-process transport

struct InprocTransport::State {
  struct Aborted {
    std::uint32_t machine_id;
  };

  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::variant<EigenspaceMessage, Aborted>> uplinks;
  std::map<std::uint32_t, std::unique_ptr<Link>> links;
  bool stopped = false;
};

class InprocTransport::Link final : public WorkerLink {
 public:
  Link(State& state, std::uint32_t id) : state_(state), id_(id) {}

  std::uint32_t machine_id() const noexcept override { return id_; }

  void send_uplink(const EigenspaceMessage& msg) override {
    {
      std::lock_guard lock(state_.mu);
      if (state_.stopped) throw ProtocolError("transport shut down", id_);
      state_.uplinks.emplace_back(msg);
    }
    state_.cv.notify_all();
  }

  OrthonormalBasis receive_downlink() override {
    std::unique_lock lock(state_.mu);
    state_.cv.wait(lock, [&] { return state_.stopped || !downlinks_.empty(); });
    if (downlinks_.empty()) throw ProtocolError("transport shut down", id_);
    OrthonormalBasis basis = std::move(downlinks_.front());
    downlinks_.pop_front();
    return basis;
  }

  void abort() noexcept override {
    {
      std::lock_guard lock(state_.mu);
      state_.uplinks.emplace_back(State::Aborted{id_});
    }
    state_.cv.notify_all();
  }

  void push_downlink(OrthonormalBasis basis) { downlinks_.push_back(std::move(basis)); }

 private:
  State& state_;
  std::uint32_t id_;
  std::deque<OrthonormalBasis> downlinks_;  // guarded by state_.mu
};

InprocTransport::InprocTransport() : state_(std::make_shared<State>()) {}
InprocTransport::~InprocTransport() = default;

void InprocTransport::open(std::size_t /*machines*/) {
  std::lock_guard lock(state_->mu);
  state_->uplinks.clear();
  state_->links.clear();
  state_->stopped = false;
}

WorkerLink& InprocTransport::worker(std::uint32_t machine_id) {
  std::lock_guard lock(state_->mu);
  auto& slot = state_->links[machine_id];
  if (!slot) slot = std::make_unique<Link>(*state_, machine_id);
  return *slot;
}

EigenspaceMessage InprocTransport::receive_uplink() {
  std::unique_lock lock(state_->mu);
  state_->cv.wait(lock, [&] { return state_->stopped || !state_->uplinks.empty(); });
  if (state_->uplinks.empty()) throw ProtocolError("transport shut down");
  auto item = std::move(state_->uplinks.front());
  state_->uplinks.pop_front();
  if (auto* aborted = std::get_if<State::Aborted>(&item)) {
    throw ProtocolError("worker aborted before sending its eigenspace",
                        aborted->machine_id);
  }
  return std::get<EigenspaceMessage>(std::move(item));
}

void InprocTransport::send_downlink(std::uint32_t machine_id,
                                    const OrthonormalBasis& basis) {
  {
    std::lock_guard lock(state_->mu);
    if (state_->stopped) throw ProtocolError("transport shut down", machine_id);
    auto& slot = state_->links[machine_id];
    if (!slot) slot = std::make_unique<Link>(*state_, machine_id);
    slot->push_downlink(basis);
  }
  state_->cv.notify_all();
}

void InprocTransport::shutdown() noexcept {
  {
    std::lock_guard lock(state_->mu);
    state_->stopped = true;
  }
  state_->cv.notify_all();
}

// ---------------------------------------------------------------------------
// TCP transport

namespace asio = boost::asio;
using asio::ip::tcp;

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ProtocolError("endpoint must look like host:port, got '" +
                        std::string(text) + "'");
  }
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] =
      std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() ||
      port > 65535) {
    throw ProtocolError("invalid port in endpoint '" + std::string(text) + "'");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

std::string Endpoint::str() const { return host + ":" + std::to_string(port); }

namespace {

tcp::endpoint resolve(asio::io_context& io, const Endpoint& ep) {
  tcp::resolver resolver(io);
  boost::system::error_code ec;
  auto results = resolver.resolve(ep.host, std::to_string(ep.port), ec);
  if (ec || results.empty()) {
    throw ProtocolError("cannot resolve " + ep.str() + ": " + ec.message());
  }
  return results.begin()->endpoint();
}

void write_frame(tcp::socket& socket, const wire::Frame& frame) {
  const auto bytes = wire::encode(frame);
  boost::system::error_code ec;
  asio::write(socket, asio::buffer(bytes.data(), bytes.size()), ec);
  if (ec) throw ProtocolError("send failed: " + ec.message(), frame.machine_id);
}

wire::Frame read_frame(tcp::socket& socket) {
  std::array<std::byte, wire::kHeaderSize> head{};
  boost::system::error_code ec;
  asio::read(socket, asio::buffer(head.data(), head.size()), ec);
  if (ec) {
    throw ProtocolError(ec == asio::error::eof
                            ? "peer closed the connection before sending a frame"
                            : "receive failed: " + ec.message());
  }
  const wire::Header header = wire::parse_header(head);
  std::vector<std::byte> body(header.body_size());
  asio::read(socket, asio::buffer(body.data(), body.size()), ec);
  if (ec) throw ProtocolError("truncated frame: " + ec.message(), header.machine_id);
  return wire::decode_body(header, body);
}

class TcpWorkerLink final : public WorkerLink {
 public:
  TcpWorkerLink(Endpoint coordinator, std::uint32_t id)
      : coordinator_(std::move(coordinator)), id_(id), socket_(io_) {}

  std::uint32_t machine_id() const noexcept override { return id_; }

  void send_uplink(const EigenspaceMessage& msg) override {
    connect();
    write_frame(socket_, wire::Frame{wire::MessageType::eigenspace_uplink,
                                     msg.machine_id, msg.basis});
  }

  OrthonormalBasis receive_downlink() override {
    if (!connected_) throw ProtocolError("downlink requested before uplink", id_);
    wire::Frame f = read_frame(socket_);
    if (f.type != wire::MessageType::basis_downlink) {
      throw ProtocolError("expected a downlink frame", id_);
    }
    if (f.machine_id != id_) {
      throw ProtocolError("downlink addressed to machine " +
                              std::to_string(f.machine_id),
                          id_);
    }
    return std::move(f.basis);
  }

  void abort() noexcept override {
    try {
      if (!connected_) connect();
    } catch (...) {
      // coordinator unreachable; nothing left to unblock
    }
    boost::system::error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
  }

 private:
  void connect() {
    if (connected_) return;
    boost::system::error_code ec;
    socket_.connect(resolve(io_, coordinator_), ec);
    if (ec) {
      throw ProtocolError("cannot connect to " + coordinator_.str() + ": " +
                              ec.message(),
                          id_);
    }
    socket_.set_option(tcp::no_delay(true), ec);
    connected_ = true;
  }

  Endpoint coordinator_;
  std::uint32_t id_;
  asio::io_context io_;
  tcp::socket socket_;
  bool connected_ = false;
};

}  // namespace

struct TcpTransport::Impl {
  explicit Impl(Endpoint requested) : listen(std::move(requested)), acceptor(io) {
    bind();
  }

  void bind() {
    const tcp::endpoint ep = resolve(io, listen);
    boost::system::error_code ec;
    acceptor.open(ep.protocol(), ec);
    if (!ec) acceptor.set_option(tcp::acceptor::reuse_address(true), ec);
    if (!ec) acceptor.bind(ep, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw ProtocolError("cannot listen on " + listen.str() + ": " + ec.message());
    listen.port = acceptor.local_endpoint().port();
  }

  void close_peers() {
    boost::system::error_code ignored;
    for (auto& [id, s] : peers) s.close(ignored);
    peers.clear();
  }

  Endpoint listen;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::atomic<bool> stopped{false};
  std::mutex mu;
  tcp::socket* reading = nullptr;  ///< connection whose first frame is being read
  std::map<std::uint32_t, tcp::socket> peers;
  std::map<std::uint32_t, std::unique_ptr<TcpWorkerLink>> links;
};

TcpTransport::TcpTransport(Endpoint listen)
    : impl_(std::make_unique<Impl>(std::move(listen))) {}

TcpTransport::~TcpTransport() {
  std::lock_guard lock(impl_->mu);
  impl_->close_peers();
  impl_->links.clear();
}

Endpoint TcpTransport::local_endpoint() const { return impl_->listen; }

void TcpTransport::open(std::size_t /*machines*/) {
  std::lock_guard lock(impl_->mu);
  impl_->close_peers();
  impl_->links.clear();
  if (impl_->stopped) {
    boost::system::error_code ignored;
    impl_->acceptor.close(ignored);
  }
  if (!impl_->acceptor.is_open()) impl_->bind();
  impl_->stopped = false;
}

WorkerLink& TcpTransport::worker(std::uint32_t machine_id) {
  std::lock_guard lock(impl_->mu);
  auto& slot = impl_->links[machine_id];
  if (!slot) slot = std::make_unique<TcpWorkerLink>(impl_->listen, machine_id);
  return *slot;
}

EigenspaceMessage TcpTransport::receive_uplink() {
  if (impl_->stopped) throw ProtocolError("transport shut down");
  tcp::socket socket(impl_->io);
  boost::system::error_code ec;
  impl_->acceptor.accept(socket, ec);
  if (ec || impl_->stopped) {
    throw ProtocolError(impl_->stopped ? "transport shut down" : "accept failed: " + ec.message());
  }
  {
    std::lock_guard lock(impl_->mu);
    impl_->reading = &socket;
  }
  wire::Frame f = [&] {
    try {
      wire::Frame frame = read_frame(socket);
      std::lock_guard lock(impl_->mu);
      impl_->reading = nullptr;
      return frame;
    } catch (...) {
      std::lock_guard lock(impl_->mu);
      impl_->reading = nullptr;
      throw;
    }
  }();
  if (f.type != wire::MessageType::eigenspace_uplink) {
    throw ProtocolError("expected an uplink frame", f.machine_id);
  }
  std::lock_guard lock(impl_->mu);
  if (impl_->peers.count(f.machine_id) != 0) {
    throw ProtocolError("duplicate machine_id", f.machine_id);
  }
  impl_->peers.emplace(f.machine_id, std::move(socket));
  return EigenspaceMessage{f.machine_id, std::move(f.basis)};
}

void TcpTransport::send_downlink(std::uint32_t machine_id,
                                 const OrthonormalBasis& basis) {
  std::lock_guard lock(impl_->mu);
  auto it = impl_->peers.find(machine_id);
  if (it == impl_->peers.end()) {
    throw ProtocolError("no open connection for downlink", machine_id);
  }
  write_frame(it->second,
              wire::Frame{wire::MessageType::basis_downlink, machine_id, basis});
}

void TcpTransport::shutdown() noexcept {
  std::lock_guard lock(impl_->mu);
  impl_->stopped = true;
  boost::system::error_code ignored;
  // close() alone does not wake a thread blocked in accept() or recv().
  if (impl_->acceptor.is_open()) ::shutdown(impl_->acceptor.native_handle(), SHUT_RDWR);
  if (impl_->reading != nullptr) impl_->reading->shutdown(tcp::socket::shutdown_both, ignored);
  impl_->close_peers();
}

std::unique_ptr<WorkerLink> connect_worker(const Endpoint& coordinator,
                                           std::uint32_t machine_id) {
  return std::make_unique<TcpWorkerLink>(coordinator, machine_id);
}

}  // namespace dpca
