#ifndef LGFUSION_DISTRIBUTIONS_HPP
#define LGFUSION_DISTRIBUTIONS_HPP

// Concentrated Gaussians g = x exp(eps), eps ~ N(0, Sigma), and the extended
// form eps ~ N(mu, Sigma) whose reference point x need not coincide with the
// mode x exp(mu).

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "lgfusion/errors.hpp"
#include "lgfusion/lie_core.hpp"

namespace lgf {

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kSpdFloor = 1e-12;

namespace detail {

// Closed-form solver for 2x2 and 3x3, iterative otherwise.
template <class Mat>
double min_eigenvalue(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> eig;
  if constexpr (Mat::RowsAtCompileTime == 2 || Mat::RowsAtCompileTime == 3) {
    eig.computeDirect(s, Eigen::EigenvaluesOnly);
  } else {
    eig.compute(s, Eigen::EigenvaluesOnly);
  }
  return eig.eigenvalues().minCoeff();
}

}  // namespace detail

/// (M + M^T) / 2, shifted so the smallest eigenvalue is at least kSpdFloor.
template <class Mat>
Mat spd_guard(const Mat& m) {
  Mat s = 0.5 * (m + m.transpose());
  const double min_eig = detail::min_eigenvalue(s);
  if (!(min_eig >= kSpdFloor)) {
    s.diagonal().array() += kSpdFloor - std::min(min_eig, 0.0);
  }
  return s;
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky
/// factor; a failed factorisation retries on the guarded matrix.
template <class Mat>
Mat spd_inverse(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) llt.compute(spd_guard(m));
  Mat inv = llt.solve(Mat::Identity());
  return 0.5 * (inv + inv.transpose());
}

namespace detail {

template <class Mat>
void validate_covariance(const Mat& cov, const char* who) {
  if (!cov.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite covariance");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >
      kSymmetryTolerance * scale) {
    throw std::invalid_argument(std::string(who) +
                                ": covariance is not symmetric");
  }
  if (!(min_eigenvalue(cov) > 0.0)) {
    throw std::invalid_argument(std::string(who) +
                                ": covariance is not positive definite");
  }
}

template <class G>
double injectivity_radius() {
  if constexpr (requires { G::kInjectivityRadius; }) {
    return G::kInjectivityRadius;
  } else {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/// Zero-mean concentrated Gaussian N_x(0, Sigma).
template <MatrixLieGroup G>
class ConcentratedGaussian {
 public:
  using Element = typename G::Element;
  using Covariance = typename G::TangentMap;

  ConcentratedGaussian(Element reference, Covariance covariance)
      : reference_(std::move(reference)), covariance_(std::move(covariance)) {
    detail::validate_covariance(covariance_, "ConcentratedGaussian");
  }

  const Element& reference() const { return reference_; }
  const Covariance& covariance() const { return covariance_; }

 private:
  Element reference_;
  Covariance covariance_;
};

/// N_x(mu, Sigma): exponential coordinates centred at `reference`, Gaussian
/// with mean `mean` in those coordinates.
template <MatrixLieGroup G>
class ExtendedConcentratedGaussian {
 public:
  using Element = typename G::Element;
  using Tangent = typename G::Tangent;
  using Covariance = typename G::TangentMap;

  ExtendedConcentratedGaussian(Element reference, Tangent mean,
                               Covariance covariance)
      : reference_(std::move(reference)),
        mean_(std::move(mean)),
        covariance_(std::move(covariance)) {
    detail::validate_covariance(covariance_, "ExtendedConcentratedGaussian");
    if (!mean_.allFinite() ||
        !(mean_.norm() < detail::injectivity_radius<G>())) {
      throw std::invalid_argument(
          "ExtendedConcentratedGaussian: mean outside the injectivity radius");
    }
  }

  explicit ExtendedConcentratedGaussian(const ConcentratedGaussian<G>& d)
      : ExtendedConcentratedGaussian(d.reference(), Tangent::Zero(),
                                     d.covariance()) {}

  const Element& reference() const { return reference_; }
  const Tangent& mean() const { return mean_; }
  const Covariance& covariance() const { return covariance_; }

  /// Group element at the mode, x exp(mu).
  Element mode() const { return reference_ * G::exp(mean_); }

 private:
  Element reference_;
  Tangent mean_;
  Covariance covariance_;
};

/// -1/2 (log(x^-1 g) - mu)^T Sigma^-1 (log(x^-1 g) - mu). Propagates
/// DomainError from G::log.
template <MatrixLieGroup G>
double log_density_unnormalised(const ExtendedConcentratedGaussian<G>& d,
                                const typename G::Element& g) {
  const typename G::Tangent r =
      G::log(G::inverse(d.reference()) * g) - d.mean();
  return -0.5 * r.dot(d.covariance().llt().solve(r));
}

template <MatrixLieGroup G>
double density_unnormalised(const ExtendedConcentratedGaussian<G>& d,
                            const typename G::Element& g) {
  return std::exp(log_density_unnormalised(d, g));
}

/// Draws x exp(eps), eps ~ N(mu, Sigma), from the caller's generator.
template <MatrixLieGroup G, class Rng>
typename G::Element sample(const ExtendedConcentratedGaussian<G>& d,
                           Rng& rng) {
  using Tangent = typename G::Tangent;
  std::normal_distribution<double> normal(0.0, 1.0);
  Tangent z;
  for (int i = 0; i < G::kDim; ++i) z[i] = normal(rng);
  const typename G::TangentMap l = d.covariance().llt().matrixL();
  return d.reference() * G::exp(Tangent(d.mean() + l * z));
}

/// Re-expresses `d` in exponential coordinates centred at `new_reference`:
///   mu2 = log(x2^-1 x1 exp(mu1))
///   Sigma2 = J_mu2^-1 J_mu1 Sigma1 J_mu1^T J_mu2^-T
/// with both Jacobians taken under `scheme`.
template <MatrixLieGroup G>
ExtendedConcentratedGaussian<G> change_reference(
    const ExtendedConcentratedGaussian<G>& d,
    const typename G::Element& new_reference, const JacobianScheme& scheme) {
  using Map = typename G::TangentMap;
  const typename G::Tangent mean =
      G::log(G::inverse(new_reference) * d.mode());
  const Map t = inverse_jacobian<G>(mean, scheme) *
                jacobian<G>(d.mean(), scheme);
  const Map cov = spd_guard(Map(t * d.covariance() * t.transpose()));
  return {new_reference, mean, cov};
}

}  // namespace lgf

#endif  // LGFUSION_DISTRIBUTIONS_HPP
