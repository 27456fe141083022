#include "dpca/distributed.hpp"

#include <algorithm>
#include <exception>
#include <optional>
#include <thread>

#include "dpca/grassmann.hpp"
#include "dpca/kendall.hpp"

namespace dpca {

std::string_view to_string(EstimatorKind kind) noexcept {
  return kind == EstimatorKind::eca ? "eca" : "pca";
}

EstimatorKind parse_estimator_kind(std::string_view text) {
  if (text == "eca") return EstimatorKind::eca;
  if (text == "pca") return EstimatorKind::pca;
  throw DimensionError("unknown estimator '" + std::string(text) +
                       "' (expected eca or pca)");
}

Partition::Partition(std::uint32_t machine_id, DenseMatrix data)
    : machine_id_(machine_id), data_(std::move(data)) {
  if (machine_id_ == 0) throw PartitionError("machine ids are 1-based");
  if (data_.rows() < 2) {
    throw PartitionError("machine " + std::to_string(machine_id_) +
                         " holds fewer than 2 rows");
  }
}

std::vector<Partition> partition_rows(const DenseMatrix& data, std::size_t m) {
  if (m < 1) throw PartitionError("need at least one machine");
  const auto total = static_cast<std::size_t>(data.rows());
  if (total % m != 0) {
    throw PartitionError(std::to_string(m) + " machines do not divide " +
                         std::to_string(total) + " rows");
  }
  const auto n = static_cast<Index>(total / m);
  std::vector<Partition> parts;
  parts.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    parts.emplace_back(static_cast<std::uint32_t>(l + 1),
                       DenseMatrix(data.values().middleRows(
                           static_cast<Index>(l) * n, n)));
  }
  return parts;
}

SymMatrix local_scatter(const DenseMatrix& data, EstimatorKind kind) {
  return kind == EstimatorKind::eca ? sample_kendall_tau(data)
                                    : sample_covariance(data);
}

EigenspaceMessage worker_step(const Partition& part, Index k, EstimatorKind kind) {
  try {
    if (k < 1 || k > part.data().cols()) {
      throw DimensionError("k=" + std::to_string(k) + " outside [1, p]");
    }
    EigenResult eig = sym_eig_topk(local_scatter(part.data(), kind), k);
    return EigenspaceMessage{part.machine_id(), std::move(eig.basis)};
  } catch (const std::exception& e) {
    std::throw_with_nested(WorkerError(part.machine_id(), e.what()));
  }
}

Aggregate coordinator_step(std::vector<EigenspaceMessage> msgs, Index k) {
  if (msgs.empty()) throw ProtocolError("no eigenspace messages received");
  const std::size_t m = msgs.size();
  std::sort(msgs.begin(), msgs.end(),
            [](const auto& a, const auto& b) { return a.machine_id < b.machine_id; });
  const Index p = msgs.front().basis.ambient_dim();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& msg = msgs[i];
    if (msg.machine_id != i + 1) {
      if (i > 0 && msgs[i - 1].machine_id == msg.machine_id) {
        throw ProtocolError("duplicate machine_id", msg.machine_id);
      }
      throw ProtocolError("missing machine_id " + std::to_string(i + 1));
    }
    if (msg.basis.ambient_dim() != p || msg.basis.rank() != k) {
      throw ProtocolError("basis shape " + std::to_string(msg.basis.ambient_dim()) +
                              "x" + std::to_string(msg.basis.rank()) +
                              " does not match " + std::to_string(p) + "x" +
                              std::to_string(k),
                          msg.machine_id);
    }
  }

  CostLedger cost;
  std::vector<SubspacePoint> points;
  points.reserve(m);
  for (auto& msg : msgs) {
    cost.scalars_uplinked += msg.payload_scalars();
    cost.messages += 1;
    points.emplace_back(std::move(msg.basis));
  }
  Barycenter center = barycenter(points, k);
  return Aggregate{center.point.basis(), std::move(center.average_projection), cost};
}

DistributedResult run_distributed(std::span<const Partition> parts, Index k,
                                  EstimatorKind kind, Transport& transport) {
  const std::size_t m = parts.size();
  if (m == 0) throw PartitionError("need at least one machine");
  transport.open(m);

  std::vector<std::exception_ptr> worker_errors(m);
  std::vector<std::jthread> workers;
  workers.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    workers.emplace_back([&, l] {
      const Partition& part = parts[l];
      WorkerLink& link = transport.worker(part.machine_id());
      try {
        link.send_uplink(worker_step(part, k, kind));
      } catch (...) {
        worker_errors[l] = std::current_exception();
        link.abort();
      }
    });
  }

  std::vector<EigenspaceMessage> received;
  received.reserve(m);
  std::exception_ptr coordinator_error;
  try {
    while (received.size() < m) received.push_back(transport.receive_uplink());
  } catch (...) {
    coordinator_error = std::current_exception();
    transport.shutdown();
  }
  for (auto& w : workers) w.join();

  // A worker's own failure explains the round better than the socket resets
  // it caused on other links.
  std::exception_ptr first_error;
  for (const auto& e : worker_errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const WorkerError&) {
      throw;
    } catch (...) {
      if (!first_error) first_error = e;
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  if (coordinator_error) std::rethrow_exception(coordinator_error);

  Aggregate agg = coordinator_step(std::move(received), k);
  return DistributedResult{std::move(agg.basis), agg.cost};
}

DistributedResult run_distributed(const DenseMatrix& data, std::size_t m,
                                  Index k, EstimatorKind kind,
                                  Transport& transport) {
  const auto parts = partition_rows(data, m);
  return run_distributed(parts, k, kind, transport);
}

CostLedger broadcast_back(const OrthonormalBasis& basis, std::size_t m,
                          Transport& transport) {
  CostLedger delta;
  const auto scalars = static_cast<std::uint64_t>(basis.ambient_dim() * basis.rank());
  for (std::size_t l = 1; l <= m; ++l) {
    transport.send_downlink(static_cast<std::uint32_t>(l), basis);
    delta.scalars_downlinked += scalars;
    delta.messages += 1;
  }
  return delta;
}

}  // namespace dpca
