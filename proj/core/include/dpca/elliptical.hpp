#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dpca/matrix.hpp"

namespace dpca {

/// Radial part of an elliptical law X = mu + xi * A * U.
class RadialLaw {
 public:
  enum class Kind { gaussian, student_t };

  static RadialLaw gaussian() noexcept { return RadialLaw(Kind::gaussian, 0.0); }
  /// Multivariate t with `nu` degrees of freedom; nu = 1 is Cauchy.
  static RadialLaw student_t(double nu);

  /// Parses "gaussian" / "normal" / "t<nu>" (e.g. "t1", "t2.5").
  static RadialLaw parse(std::string_view tag);

  Kind kind() const noexcept { return kind_; }
  double nu() const noexcept { return nu_; }

  /// Canonical text form, round-trips through parse().
  std::string tag() const;

  friend bool operator==(const RadialLaw&, const RadialLaw&) = default;

 private:
  RadialLaw(Kind kind, double nu) noexcept : kind_(kind), nu_(nu) {}
  Kind kind_;
  double nu_;
};

/// Location, factor A (with A A^T = Sigma) and radial law of an elliptical
/// distribution.
class ScatterSpec {
 public:
  ScatterSpec(Eigen::VectorXd location, Eigen::MatrixXd factor,
              RadialLaw radial);

  Index dim() const noexcept { return factor_.rows(); }
  Index latent_dim() const noexcept { return factor_.cols(); }
  const Eigen::VectorXd& location() const noexcept { return location_; }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  const RadialLaw& radial() const noexcept { return radial_; }

  /// A A^T.
  SymMatrix scatter() const;

 private:
  Eigen::VectorXd location_;
  Eigen::MatrixXd factor_;
  RadialLaw radial_;
};

/// X_t = L f_t + u_t with (f_t, u_t) jointly elliptical, scatter I_{K+p}.
class FactorModelSpec {
 public:
  FactorModelSpec(Eigen::MatrixXd loading, RadialLaw radial, double alpha = 1.0);

  Index dim() const noexcept { return loading_.rows(); }
  Index factors() const noexcept { return loading_.cols(); }
  const Eigen::MatrixXd& loading() const noexcept { return loading_; }
  const RadialLaw& radial() const noexcept { return radial_; }
  double alpha() const noexcept { return alpha_; }

 private:
  Eigen::MatrixXd loading_;
  RadialLaw radial_;
  double alpha_;
};

/// n i.i.d. rows of mu + A Z / sqrt(W / nu) (W ~ chi2_nu; W / nu == 1 for
/// the Gaussian law). Deterministic in `seed`.
DenseMatrix sample_elliptical(const ScatterSpec& spec, Index n,
                              std::uint64_t seed);

struct FactorSample {
  DenseMatrix x;         ///< n x p observations
  DenseMatrix factors;   ///< n x K latent f_t
  DenseMatrix noise;     ///< n x p idiosyncratic u_t
};

FactorSample sample_factor_model(const FactorModelSpec& spec, Index n,
                                 std::uint64_t seed);

/// p x K matrix of i.i.d. N(0, 1) entries.
Eigen::MatrixXd standard_gaussian_loading(Index p, Index k, std::uint64_t seed);

}  // namespace dpca
