#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "dpca/matrix.hpp"

namespace dpca {

/// What to do with observation pairs whose squared distance is at or below a
/// threshold (ties, duplicated rows).
struct PairPolicy {
  enum class Action { skip, error };

  /// Absolute threshold on ||X_i - X_j||^2. When unset the threshold is
  /// 1e-24 * max_i ||X_i||^2.
  std::optional<double> min_sq_norm;
  Action action = Action::skip;
};

/// Rows of `data` per work chunk of the pair loop. Fixed, so the reduction
/// order (and every bit of the result) does not depend on the thread count.
inline constexpr Index kKendallChunkRows = 32;

struct KendallTau {
  SymMatrix matrix;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
};

/// Sample spatial Kendall's tau: the average of (X_i - X_j)(X_i - X_j)^T /
/// ||X_i - X_j||^2 over the retained pairs i < j. Trace is 1.
KendallTau sample_kendall_tau_detailed(const DenseMatrix& data,
                                       const PairPolicy& policy = {});

SymMatrix sample_kendall_tau(const DenseMatrix& data,
                             const PairPolicy& policy = {});

/// Unbiased sample covariance (divisor n - 1).
SymMatrix sample_covariance(const DenseMatrix& data);

/// Monte-Carlo eigenvalues of the population Kendall's tau matrix for a
/// scatter matrix with eigenvalues `sigma_eigs`: E[lambda_j g_j^2 /
/// sum_i lambda_i g_i^2] with g ~ N(0, I). Output order follows the input;
/// the eigenvectors are those of the scatter matrix.
Eigen::VectorXd population_kendall_mc(std::span<const double> sigma_eigs,
                                      std::size_t draws, std::uint64_t seed);

}  // namespace dpca
