#include "dpca/grassmann.hpp"

#include <algorithm>

#include <cmath>

#include "dpca/error.hpp"

namespace dpca {

namespace {

void require_compatible(const SubspacePoint& a, const SubspacePoint& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.rank() != b.rank()) {
    throw DimensionError("subspace metric: dimension or rank mismatch");
  }
}

Eigen::MatrixXd projection_dense(const SubspacePoint& v) {
  const auto& c = v.basis().columns();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(c.rows(), c.rows());
  p.selfadjointView<Eigen::Lower>().rankUpdate(c);
  return p;
}

}  // namespace

SymMatrix projection(const SubspacePoint& v) {
  return SymMatrix::from_lower(projection_dense(v));
}

double rho(const SubspacePoint& a, const SubspacePoint& b) {
  require_compatible(a, b);
  const auto& va = a.basis().columns();
  const auto& vb = b.basis().columns();
  return (va * va.transpose() - vb * vb.transpose()).norm();
}

double rho1(const SubspacePoint& a, const SubspacePoint& b) {
  require_compatible(a, b);
  const double k = static_cast<double>(a.rank());
  // 1 - ||A^T B||_F^2 / K equals ||B - A A^T B||_F^2 / K for orthonormal A, B;
  // the residual form keeps full relative accuracy for nearby subspaces.
  const auto& va = a.basis().columns();
  const auto& vb = b.basis().columns();
  const Eigen::MatrixXd residual = vb - va * (va.transpose() * vb);
  return std::min(1.0, residual.norm() / std::sqrt(k));
}

Barycenter barycenter(std::span<const SubspacePoint> points, Index k) {
  if (points.empty()) throw DimensionError("barycenter: no subspaces given");
  const Index p = points.front().ambient_dim();
  const Index rank = points.front().rank();
  for (const auto& pt : points) {
    if (pt.ambient_dim() != p || pt.rank() != rank) {
      throw DimensionError("barycenter: subspaces of mixed dimension");
    }
  }
  if (k != rank) throw DimensionError("barycenter: k differs from the common rank");

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  for (const auto& pt : points) {
    sum.selfadjointView<Eigen::Lower>().rankUpdate(pt.basis().columns());
  }
  sum /= static_cast<double>(points.size());
  SymMatrix average = SymMatrix::from_lower(sum);
  EigenResult eig = sym_eig_topk(average, k);
  return Barycenter{SubspacePoint(std::move(eig.basis)), std::move(average)};
}

}  // namespace dpca
