#pragma once

#include <span>

#include "dpca/matrix.hpp"

namespace dpca {

/// A K-dimensional subspace of R^p, represented by any orthonormal basis of
/// it. Everything below depends only on the span.
class SubspacePoint {
 public:
  SubspacePoint() = default;
  explicit SubspacePoint(OrthonormalBasis basis) : basis_(std::move(basis)) {}

  const OrthonormalBasis& basis() const noexcept { return basis_; }
  Index ambient_dim() const noexcept { return basis_.ambient_dim(); }
  Index rank() const noexcept { return basis_.rank(); }

 private:
  OrthonormalBasis basis_;
};

/// V V^T.
SymMatrix projection(const SubspacePoint& v);

/// ||A A^T - B B^T||_F.
double rho(const SubspacePoint& a, const SubspacePoint& b);

/// sqrt(1 - tr(A A^T B B^T) / K), in [0, 1]; rho = sqrt(2K) * rho1.
double rho1(const SubspacePoint& a, const SubspacePoint& b);

struct Barycenter {
  SubspacePoint point;
  /// (1/m) sum_i V_i V_i^T.
  SymMatrix average_projection;
};

/// Minimizer of sum_i rho(V, V_i)^2 over orthonormal p x k V: the top-k
/// eigenspace of the average projection matrix. Points are summed in the
/// given order.
Barycenter barycenter(std::span<const SubspacePoint> points, Index k);

}  // namespace dpca
