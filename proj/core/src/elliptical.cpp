#include "dpca/elliptical.hpp"

#include <charconv>
#include <cmath>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "dpca/error.hpp"
#include "dpca/rng.hpp"

namespace dpca {

namespace {

/// Draws the radial multiplier 1 / sqrt(W / nu); 1 for the Gaussian law.
class RadialDraw {
 public:
  explicit RadialDraw(const RadialLaw& law)
      : law_(law), chi2_(law.kind() == RadialLaw::Kind::student_t ? law.nu() : 1.0) {}

  double operator()(Xoshiro256pp& rng) {
    if (law_.kind() == RadialLaw::Kind::gaussian) return 1.0;
    double w = 0.0;
    // chi2 with tiny nu can underflow to exactly zero; redraw.
    while (w <= 0.0) w = chi2_(rng);
    return 1.0 / std::sqrt(w / law_.nu());
  }

 private:
  RadialLaw law_;
  boost::random::chi_squared_distribution<double> chi2_;
};

}  // namespace

RadialLaw RadialLaw::student_t(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw DimensionError("RadialLaw: degrees of freedom must be positive");
  }
  return RadialLaw(Kind::student_t, nu);
}

RadialLaw RadialLaw::parse(std::string_view tag) {
  if (tag == "gaussian" || tag == "normal") return gaussian();
  if (tag.size() > 1 && (tag[0] == 't' || tag[0] == 'T')) {
    double nu = 0.0;
    const char* first = tag.data() + 1;
    const char* last = tag.data() + tag.size();
    auto [ptr, ec] = std::from_chars(first, last, nu);
    if (ec == std::errc() && ptr == last) return student_t(nu);
  }
  throw DimensionError("RadialLaw: unknown tag '" + std::string(tag) + "'");
}

std::string RadialLaw::tag() const {
  if (kind_ == Kind::gaussian) return "gaussian";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), nu_);
  return "t" + std::string(buf, ptr);
}

ScatterSpec::ScatterSpec(Eigen::VectorXd location, Eigen::MatrixXd factor,
                         RadialLaw radial)
    : location_(std::move(location)), factor_(std::move(factor)), radial_(radial) {
  if (location_.size() != factor_.rows()) {
    throw DimensionError("ScatterSpec: location and factor disagree on p");
  }
  if (!location_.allFinite() || !factor_.allFinite()) {
    throw NonFiniteError("ScatterSpec: non-finite parameter");
  }
  if (factor_.cols() > factor_.rows() || factor_.cols() == 0) {
    throw DimensionError("ScatterSpec: factor must be p x q with 1 <= q <= p");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(factor_);
  if (qr.rank() < factor_.cols()) {
    throw DimensionError("ScatterSpec: factor is not of full column rank");
  }
}

SymMatrix ScatterSpec::scatter() const {
  return SymMatrix::from_full(factor_ * factor_.transpose());
}

FactorModelSpec::FactorModelSpec(Eigen::MatrixXd loading, RadialLaw radial,
                                 double alpha)
    : loading_(std::move(loading)), radial_(radial), alpha_(alpha) {
  if (!loading_.allFinite()) {
    throw NonFiniteError("FactorModelSpec: non-finite loading");
  }
  if (loading_.cols() < 1 || loading_.cols() > loading_.rows()) {
    throw DimensionError("FactorModelSpec: need 1 <= K <= p");
  }
  if (!(alpha_ > 0.0 && alpha_ <= 1.0)) {
    throw DimensionError("FactorModelSpec: alpha must lie in (0, 1]");
  }
}

DenseMatrix sample_elliptical(const ScatterSpec& spec, Index n,
                              std::uint64_t seed) {
  if (n < 1) throw DataError("sample_elliptical: n must be >= 1");
  Xoshiro256pp rng(seed);
  boost::random::normal_distribution<double> normal;
  RadialDraw radial(spec.radial());

  const Index q = spec.latent_dim();
  Eigen::MatrixXd z(q, n);
  Eigen::RowVectorXd scale(n);
  for (Index t = 0; t < n; ++t) {
    for (Index j = 0; j < q; ++j) z(j, t) = normal(rng);
    scale(t) = radial(rng);
  }
  Eigen::MatrixXd x = (spec.factor() * (z * scale.asDiagonal())).transpose();
  x.rowwise() += spec.location().transpose();
  return DenseMatrix(std::move(x));
}

FactorSample sample_factor_model(const FactorModelSpec& spec, Index n,
                                 std::uint64_t seed) {
  if (n < 1) throw DataError("sample_factor_model: n must be >= 1");
  Xoshiro256pp rng(seed);
  boost::random::normal_distribution<double> normal;
  RadialDraw radial(spec.radial());

  const Index p = spec.dim();
  const Index k = spec.factors();
  Eigen::MatrixXd f(n, k);
  Eigen::MatrixXd u(n, p);
  for (Index t = 0; t < n; ++t) {
    // One (K + p)-dimensional draw: factors first, then noise, shared radius.
    for (Index j = 0; j < k; ++j) f(t, j) = normal(rng);
    for (Index j = 0; j < p; ++j) u(t, j) = normal(rng);
    const double s = radial(rng);
    f.row(t) *= s;
    u.row(t) *= s;
  }
  Eigen::MatrixXd x = f * spec.loading().transpose() + u;
  return FactorSample{DenseMatrix(std::move(x)), DenseMatrix(std::move(f)),
                      DenseMatrix(std::move(u))};
}

Eigen::MatrixXd standard_gaussian_loading(Index p, Index k, std::uint64_t seed) {
  if (p < 1 || k < 1) throw DimensionError("standard_gaussian_loading: empty shape");
  Xoshiro256pp rng(seed);
  boost::random::normal_distribution<double> normal;
  Eigen::MatrixXd l(p, k);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < k; ++j) l(i, j) = normal(rng);
  }
  return l;
}

}  // namespace dpca
