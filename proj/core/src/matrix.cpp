#include "dpca/matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dpca/error.hpp"

namespace dpca {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw NonFiniteError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

DenseMatrix::DenseMatrix(Index rows, Index cols)
    : values_(Eigen::MatrixXd::Zero(rows, cols)) {}

DenseMatrix::DenseMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  require_finite(values_, "DenseMatrix");
}

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Index>(rows.size());
  const auto p = n == 0 ? Index{0} : static_cast<Index>(rows.begin()->size());
  Eigen::MatrixXd m(n, p);
  Index r = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != p) {
      throw DimensionError("DenseMatrix::from_rows: ragged rows");
    }
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return DenseMatrix(std::move(m));
}

SymMatrix::SymMatrix(Index dim) : dim_(dim), packed_(packed_size(dim), 0.0) {}

SymMatrix SymMatrix::from_full(const Eigen::MatrixXd& full, double tol) {
  if (full.rows() != full.cols()) {
    throw DimensionError("SymMatrix::from_full: matrix is not square");
  }
  require_finite(full, "SymMatrix");
  const double scale = full.norm();
  const double asym = (full - full.transpose()).norm();
  if (asym > tol * scale) {
    throw DimensionError("SymMatrix::from_full: asymmetry " +
                         std::to_string(asym) + " exceeds tolerance");
  }
  // Average the two triangles so the stored value is the symmetric part.
  SymMatrix s(full.rows());
  for (Index j = 0; j < s.dim_; ++j) {
    for (Index i = 0; i <= j; ++i) {
      s.packed_[packed_index(i, j)] = 0.5 * (full(i, j) + full(j, i));
    }
  }
  return s;
}

SymMatrix SymMatrix::from_lower(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("SymMatrix::from_lower: matrix is not square");
  }
  SymMatrix s(m.rows());
  for (Index j = 0; j < s.dim_; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = m(j, i);
      if (!std::isfinite(v)) throw NonFiniteError("SymMatrix: non-finite entry");
      s.packed_[packed_index(i, j)] = v;
    }
  }
  return s;
}

SymMatrix SymMatrix::identity(Index dim) {
  SymMatrix s(dim);
  for (Index i = 0; i < dim; ++i) s.packed_[packed_index(i, i)] = 1.0;
  return s;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix s(static_cast<Index>(diag.size()));
  for (Index i = 0; i < s.dim_; ++i) {
    const double v = diag[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) throw NonFiniteError("SymMatrix: non-finite entry");
    s.packed_[packed_index(i, i)] = v;
  }
  return s;
}

double SymMatrix::operator()(Index i, Index j) const {
  return packed_[packed_index(i, j)];
}

Eigen::MatrixXd SymMatrix::to_dense() const {
  Eigen::MatrixXd m(dim_, dim_);
  for (Index j = 0; j < dim_; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = packed_[packed_index(i, j)];
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (Index i = 0; i < dim_; ++i) t += packed_[packed_index(i, i)];
  return t;
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim_ != b.dim_) throw DimensionError("SymMatrix: dimension mismatch");
  SymMatrix out(a.dim_);
  for (std::size_t i = 0; i < a.packed_.size(); ++i) {
    out.packed_[i] = a.packed_[i] - b.packed_[i];
  }
  return out;
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim_ != b.dim_) throw DimensionError("SymMatrix: dimension mismatch");
  SymMatrix out(a.dim_);
  for (std::size_t i = 0; i < a.packed_.size(); ++i) {
    out.packed_[i] = a.packed_[i] + b.packed_[i];
  }
  return out;
}

SymMatrix operator*(double s, const SymMatrix& a) {
  SymMatrix out(a.dim_);
  for (std::size_t i = 0; i < a.packed_.size(); ++i) {
    out.packed_[i] = s * a.packed_[i];
  }
  return out;
}

OrthonormalBasis::OrthonormalBasis(Eigen::MatrixXd columns, double tol)
    : columns_(std::move(columns)) {
  require_finite(columns_, "OrthonormalBasis");
  if (columns_.cols() > columns_.rows()) {
    throw DimensionError("OrthonormalBasis: rank exceeds ambient dimension");
  }
  const double defect = orthonormality_defect();
  if (!(defect <= tol)) {
    throw DimensionError("OrthonormalBasis: columns are not orthonormal (defect " +
                         std::to_string(defect) + ")");
  }
}

OrthonormalBasis OrthonormalBasis::orthonormalize(const Eigen::MatrixXd& m) {
  require_finite(m, "OrthonormalBasis::orthonormalize");
  if (m.cols() > m.rows()) {
    throw DimensionError("orthonormalize: more columns than rows");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  if (qr.rank() < m.cols()) {
    throw DimensionError("orthonormalize: matrix is column-rank deficient");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> hqr(m);
  Eigen::MatrixXd q =
      hqr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  return OrthonormalBasis(std::move(q));
}

OrthonormalBasis OrthonormalBasis::canonical(Index p, Index k) {
  return OrthonormalBasis(Eigen::MatrixXd::Identity(p, k));
}

double OrthonormalBasis::orthonormality_defect() const {
  const Index k = columns_.cols();
  return (columns_.transpose() * columns_ - Eigen::MatrixXd::Identity(k, k))
      .norm();
}

EigenResult sym_eig_topk(const SymMatrix& m, Index k, double tol) {
  const Index p = m.dim();
  if (k < 1 || k > p) {
    throw DimensionError("sym_eig_topk: k=" + std::to_string(k) +
                         " outside [1, " + std::to_string(p) + "]");
  }
  const Eigen::MatrixXd dense = m.to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sym_eig_topk: eigensolver did not converge",
                           std::numeric_limits<double>::infinity());
  }
  // Eigen orders eigenvalues ascending; take the trailing k in reverse.
  Eigen::VectorXd values(k);
  Eigen::MatrixXd vectors(p, k);
  for (Index i = 0; i < k; ++i) {
    values(i) = solver.eigenvalues()(p - 1 - i);
    vectors.col(i) = solver.eigenvectors().col(p - 1 - i);
  }

  const double bound = tol * dense.norm();
  double worst = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double r = (dense * vectors.col(i) - values(i) * vectors.col(i)).norm();
    worst = std::max(worst, r);
  }
  if (worst > bound) {
    throw ConvergenceError("sym_eig_topk: residual above tolerance", worst);
  }
  return EigenResult{std::move(values), OrthonormalBasis(std::move(vectors))};
}

Eigen::VectorXd sym_eigenvalues(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.to_dense(),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sym_eigenvalues: eigensolver did not converge",
                           std::numeric_limits<double>::infinity());
  }
  return solver.eigenvalues().reverse();
}

double frob_dist(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("frob_dist: shape mismatch");
  }
  return (a.values() - b.values()).norm();
}

double frob_dist(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("frob_dist: shape mismatch");
  return (a.to_dense() - b.to_dense()).norm();
}

double spectral_norm(const SymMatrix& m) {
  if (m.dim() == 0) return 0.0;
  const Eigen::VectorXd ev = sym_eigenvalues(m);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace dpca
