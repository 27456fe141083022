#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dpca/error.hpp"
#include "dpca/matrix.hpp"
#include "dpca/transport.hpp"

namespace dpca {

/// Local scatter estimator used on each machine.
enum class EstimatorKind {
  eca,  ///< spatial Kendall's tau
  pca,  ///< sample covariance
};

std::string_view to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator_kind(std::string_view text);

/// One machine's block of rows. Machine ids are 1-based.
class Partition {
 public:
  Partition(std::uint32_t machine_id, DenseMatrix data);

  std::uint32_t machine_id() const noexcept { return machine_id_; }
  const DenseMatrix& data() const noexcept { return data_; }

 private:
  std::uint32_t machine_id_;
  DenseMatrix data_;
};

/// Scalars and messages moved between workers and the coordinator.
struct CostLedger {
  std::uint64_t scalars_uplinked = 0;
  std::uint64_t scalars_downlinked = 0;
  std::uint64_t messages = 0;

  CostLedger& operator+=(const CostLedger& other) noexcept {
    scalars_uplinked += other.scalars_uplinked;
    scalars_downlinked += other.scalars_downlinked;
    messages += other.messages;
    return *this;
  }
  friend bool operator==(const CostLedger&, const CostLedger&) = default;
};

/// A worker failed; the original exception is nested.
class WorkerError : public Error {
 public:
  WorkerError(std::uint32_t machine_id, const std::string& what)
      : Error("machine " + std::to_string(machine_id) + ": " + what),
        machine_id_(machine_id) {}
  std::uint32_t machine_id() const noexcept { return machine_id_; }

 private:
  std::uint32_t machine_id_;
};

/// Splits N rows into m consecutive blocks of N/m rows; m must divide N.
std::vector<Partition> partition_rows(const DenseMatrix& data, std::size_t m);

/// Kendall's tau (eca) or sample covariance (pca) of `data`.
SymMatrix local_scatter(const DenseMatrix& data, EstimatorKind kind);

/// Top-k eigenbasis of the local scatter estimate. Failures are rethrown as
/// WorkerError with the cause nested.
EigenspaceMessage worker_step(const Partition& part, Index k, EstimatorKind kind);

struct Aggregate {
  OrthonormalBasis basis;
  SymMatrix average_projection;
  CostLedger cost;  ///< uplink traffic of the received messages
};

/// Barycenter of the received bases. Expects exactly one message for each
/// machine id in 1..msgs.size() with a common p and rank k; aggregation runs in
/// machine-id order, so arrival order does not affect the result.
Aggregate coordinator_step(std::vector<EigenspaceMessage> msgs, Index k);

struct DistributedResult {
  OrthonormalBasis basis;
  CostLedger ledger;
};

/// One full round: workers run concurrently, send their bases through
/// `transport`, the coordinator aggregates.
DistributedResult run_distributed(std::span<const Partition> parts, Index k,
                                  EstimatorKind kind, Transport& transport);

DistributedResult run_distributed(const DenseMatrix& data, std::size_t m,
                                  Index k, EstimatorKind kind,
                                  Transport& transport);

/// Sends `basis` to machines 1..m; returns the downlink cost.
CostLedger broadcast_back(const OrthonormalBasis& basis, std::size_t m,
                          Transport& transport);

}  // namespace dpca
