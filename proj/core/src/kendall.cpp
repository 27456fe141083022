#include "dpca/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "dpca/error.hpp"
#include "dpca/rng.hpp"

namespace dpca {

namespace {

/// Columns of normalized differences gathered before one rank-k update.
constexpr Index kUpdateWidth = 256;

struct ChunkSum {
  Eigen::MatrixXd lower;  // only the lower triangle is meaningful
  std::size_t used = 0;
  std::size_t skipped = 0;
};

void accumulate_chunk(const Eigen::MatrixXd& xt, Index first, Index last,
                      double threshold, PairPolicy::Action action,
                      ChunkSum& out) {
  const Index p = xt.rows();
  const Index n = xt.cols();
  out.lower = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd buffer(p, kUpdateWidth);
  Index filled = 0;
  auto flush = [&] {
    if (filled == 0) return;
    out.lower.selfadjointView<Eigen::Lower>().rankUpdate(buffer.leftCols(filled));
    filled = 0;
  };

  for (Index i = first; i < last; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      auto col = buffer.col(filled);
      col = xt.col(i) - xt.col(j);
      const double sq = col.squaredNorm();
      if (sq <= threshold) {
        if (action == PairPolicy::Action::error) {
          throw DegeneratePairError(static_cast<std::size_t>(i),
                                    static_cast<std::size_t>(j));
        }
        ++out.skipped;
        continue;
      }
      col /= std::sqrt(sq);
      ++out.used;
      if (++filled == kUpdateWidth) flush();
    }
  }
  flush();
}

}  // namespace

KendallTau sample_kendall_tau_detailed(const DenseMatrix& data,
                                       const PairPolicy& policy) {
  const Index n = data.rows();
  const Index p = data.cols();
  if (n < 2) throw DataError("sample_kendall_tau: need at least 2 observations");
  if (p < 1) throw DimensionError("sample_kendall_tau: data has no columns");

  double threshold = 0.0;
  if (policy.min_sq_norm) {
    if (*policy.min_sq_norm < 0.0) {
      throw DataError("sample_kendall_tau: min_sq_norm must be >= 0");
    }
    threshold = *policy.min_sq_norm;
  } else {
    threshold = 1e-24 * data.values().rowwise().squaredNorm().maxCoeff();
  }

  const Eigen::MatrixXd xt = data.values().transpose();
  const Index anchors = n - 1;
  const Index chunks = (anchors + kKendallChunkRows - 1) / kKendallChunkRows;
  std::vector<ChunkSum> sums(static_cast<std::size_t>(chunks));

  tbb::parallel_for(tbb::blocked_range<Index>(0, chunks, 1),
                    [&](const tbb::blocked_range<Index>& r) {
                      for (Index c = r.begin(); c != r.end(); ++c) {
                        const Index first = c * kKendallChunkRows;
                        const Index last =
                            std::min(anchors, first + kKendallChunkRows);
                        accumulate_chunk(xt, first, last, threshold,
                                         policy.action,
                                         sums[static_cast<std::size_t>(c)]);
                      }
                    });

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(p, p);
  std::size_t used = 0;
  std::size_t skipped = 0;
  for (const auto& s : sums) {
    total += s.lower;
    used += s.used;
    skipped += s.skipped;
  }
  if (used == 0) {
    throw DataError("sample_kendall_tau: every observation pair is degenerate");
  }
  total /= static_cast<double>(used);
  return KendallTau{SymMatrix::from_lower(total), used, skipped};
}

SymMatrix sample_kendall_tau(const DenseMatrix& data, const PairPolicy& policy) {
  return sample_kendall_tau_detailed(data, policy).matrix;
}

SymMatrix sample_covariance(const DenseMatrix& data) {
  const Index n = data.rows();
  if (n < 2) throw DataError("sample_covariance: need at least 2 observations");
  const Eigen::MatrixXd centered =
      data.values().rowwise() - data.values().colwise().mean();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(data.cols(), data.cols());
  s.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  s /= static_cast<double>(n - 1);
  return SymMatrix::from_lower(s);
}

Eigen::VectorXd population_kendall_mc(std::span<const double> sigma_eigs,
                                      std::size_t draws, std::uint64_t seed) {
  if (sigma_eigs.empty()) throw DimensionError("population_kendall_mc: no eigenvalues");
  for (double v : sigma_eigs) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DataError("population_kendall_mc: eigenvalues must be positive");
    }
  }
  if (draws < 1) throw DataError("population_kendall_mc: draws must be >= 1");

  const auto q = static_cast<Index>(sigma_eigs.size());
  const Eigen::Map<const Eigen::VectorXd> lambda(sigma_eigs.data(), q);
  Xoshiro256pp rng(seed);
  boost::random::normal_distribution<double> normal;

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd terms(q);
  for (std::size_t d = 0; d < draws; ++d) {
    for (Index j = 0; j < q; ++j) {
      const double g = normal(rng);
      terms(j) = lambda(j) * g * g;
    }
    sum += terms / terms.sum();
  }
  return sum / static_cast<double>(draws);
}

}  // namespace dpca
