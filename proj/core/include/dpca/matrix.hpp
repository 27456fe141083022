#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dpca {

using Index = Eigen::Index;

/// Residual scale used by the eigensolver and basis checks unless overridden.
inline constexpr double kDefaultTolerance = 1e-10;

/// Immutable column-major real matrix whose entries are all finite.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  /// Zero matrix of the given shape.
  DenseMatrix(Index rows, Index cols);

  /// Takes ownership of `values`; throws NonFiniteError on NaN/Inf.
  explicit DenseMatrix(Eigen::MatrixXd values);

  /// Row-wise literal, e.g. {{1, 2}, {3, 4}}; throws DimensionError if ragged.
  static DenseMatrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  double operator()(Index r, Index c) const { return values_(r, c); }

  const Eigen::MatrixXd& values() const noexcept { return values_; }

  /// Column-major storage, length rows() * cols().
  std::span<const double> data() const noexcept {
    return {values_.data(), static_cast<std::size_t>(values_.size())};
  }

 private:
  Eigen::MatrixXd values_;
};

/// Symmetric matrix stored as its packed upper triangle (column by column).
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Zero matrix of dimension `dim`.
  explicit SymMatrix(Index dim);

  /// Builds from a full square matrix. Rejects asymmetry larger than
  /// `tol * ||full||_F` and non-finite entries.
  static SymMatrix from_full(const Eigen::MatrixXd& full,
                             double tol = kDefaultTolerance);

  /// Builds from the lower triangle of `m`; the strict upper part is ignored.
  static SymMatrix from_lower(const Eigen::MatrixXd& m);

  static SymMatrix identity(Index dim);
  static SymMatrix diagonal(std::span<const double> diag);

  Index dim() const noexcept { return dim_; }
  double operator()(Index i, Index j) const;

  /// Packed upper triangle: entry (i, j) with i <= j lives at j(j+1)/2 + i.
  std::span<const double> packed() const noexcept { return packed_; }

  Eigen::MatrixXd to_dense() const;
  double trace() const;

  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator*(double s, const SymMatrix& a);

 private:
  static std::size_t packed_size(Index dim) {
    return static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim + 1) / 2;
  }
  static std::size_t packed_index(Index i, Index j) {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(j + 1) / 2 +
           static_cast<std::size_t>(i);
  }

  Index dim_ = 0;
  std::vector<double> packed_;
};

/// p x K matrix with orthonormal columns: a representative of a point of the
/// Grassmann manifold Gr(K, p).
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;

  /// Validates ||V^T V - I||_F <= tol, finiteness and K <= p.
  explicit OrthonormalBasis(Eigen::MatrixXd columns,
                            double tol = kDefaultTolerance);

  /// Orthonormal basis of span(m) via thin Householder QR; `m` must have
  /// full column rank.
  static OrthonormalBasis orthonormalize(const Eigen::MatrixXd& m);

  /// First `k` canonical unit vectors of R^p.
  static OrthonormalBasis canonical(Index p, Index k);

  Index ambient_dim() const noexcept { return columns_.rows(); }
  Index rank() const noexcept { return columns_.cols(); }
  const Eigen::MatrixXd& columns() const noexcept { return columns_; }

  /// ||V^T V - I||_F.
  double orthonormality_defect() const;

 private:
  Eigen::MatrixXd columns_;
};

struct EigenResult {
  /// Non-increasing.
  Eigen::VectorXd values;
  OrthonormalBasis basis;
};

/// The k algebraically largest eigenpairs of a symmetric matrix. Each pair is
/// checked against ||M v - lambda v|| <= tol * ||M||_F.
EigenResult sym_eig_topk(const SymMatrix& m, Index k,
                         double tol = kDefaultTolerance);

/// All eigenvalues, non-increasing.
Eigen::VectorXd sym_eigenvalues(const SymMatrix& m);

double frob_dist(const DenseMatrix& a, const DenseMatrix& b);
double frob_dist(const SymMatrix& a, const SymMatrix& b);

/// max |lambda_i|.
double spectral_norm(const SymMatrix& m);

}  // namespace dpca
