#ifndef LGFUSION_SO3_HPP
#define LGFUSION_SO3_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lgfusion/errors.hpp"
#include "lgfusion/lie_core.hpp"

namespace lgf {

namespace so3_detail {

// Below this angle the trigonometric coefficient functions switch to their
// 4-term Taylor expansions.
inline constexpr double kSmallAngle = 1e-4;

// sin(t) / t
inline double sinc(double t) {
  if (std::abs(t) < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0;
  }
  return std::sin(t) / t;
}

// (1 - cos t) / t^2, written as sinc(t/2)^2 / 2 to avoid the cancellation
// in 1 - cos t.
inline double one_minus_cos_over_sq(double t) {
  if (std::abs(t) < kSmallAngle) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0;
  }
  const double s = sinc(0.5 * t);
  return 0.5 * s * s;
}

// (t - sin t) / t^3
inline double t_minus_sin_over_cube(double t) {
  if (std::abs(t) < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 -
           t2 * t2 * t2 / 362880.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

}  // namespace so3_detail

/// The rotation group with the hat map
///   [x, y, z]^ = [[0, -z, y], [z, 0, -x], [-y, x, 0]].
/// Elements are plain 3x3 matrices; Ad_R = R and ad_u = u^.
struct SO3 {
  static constexpr int kDim = 3;
  static constexpr double kSeriesRadius = 2.0 * std::numbers::pi;
  static constexpr double kInjectivityRadius = std::numbers::pi;
  /// log() rejects rotation angles >= pi - kLogAngleMargin.
  static constexpr double kLogAngleMargin = 1e-6;
  static constexpr double kOrthogonalityTolerance = 1e-9;

  using Tangent = Eigen::Vector3d;
  using TangentMap = Eigen::Matrix3d;
  using Element = Eigen::Matrix3d;
  using Algebra = Eigen::Matrix3d;

  static Element identity() { return Element::Identity(); }

  static Algebra wedge(const Tangent& u) {
    Algebra m;
    // clang-format off
    m <<  0.0,  -u.z(),  u.y(),
          u.z(),  0.0,  -u.x(),
         -u.y(),  u.x(),  0.0;
    // clang-format on
    return m;
  }

  static Tangent vee(const Algebra& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

  static Element inverse(const Element& r) { return r.transpose(); }

  static bool is_valid(const Element& r,
                       double tol = kOrthogonalityTolerance) {
    if (!r.allFinite()) return false;
    return (r.transpose() * r - Element::Identity()).norm() <= tol &&
           r.determinant() > 0.0;
  }

  /// Rodrigues' formula.
  static Element exp(const Tangent& u) {
    const double theta = u.norm();
    const Algebra w = wedge(u);
    return Element::Identity() + so3_detail::sinc(theta) * w +
           so3_detail::one_minus_cos_over_sq(theta) * w * w;
  }

  /// Principal logarithm. Throws DomainError near the cut locus.
  static Tangent log(const Element& r) {
    const Tangent skew = vee(r - r.transpose());  // 2 sin(t) a
    const double theta = angle(r, skew);
    if (!(theta < std::numbers::pi - kLogAngleMargin)) {
      throw DomainError("SO3::log: rotation angle too close to pi");
    }
    return skew / (2.0 * so3_detail::sinc(theta));
  }

  /// Logarithm defined on all of SO(3). At the cut locus either branch is
  /// returned; the result is only meaningful where the caller's use is
  /// insensitive to the sign of the axis (e.g. zero-mean quadratic forms).
  static Tangent log_total(const Element& r) {
    const Tangent skew = vee(r - r.transpose());
    const double theta = angle(r, skew);
    // Away from pi the skew part is well conditioned.
    if (theta < 3.0) return skew / (2.0 * so3_detail::sinc(theta));
    const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
    // R + R^T = 2 I + 2 (1 - cos t) (a a^T - I)
    const Element aat = Element::Identity() +
                        (r + r.transpose() - 2.0 * Element::Identity()) /
                            (2.0 * (1.0 - c));
    Eigen::Index i = 0;
    aat.diagonal().maxCoeff(&i);
    Tangent axis = aat.col(i) / std::sqrt(std::max(aat(i, i), 1e-300));
    axis.normalize();
    if (axis.dot(skew) < 0.0) axis = -axis;
    return theta * axis;
  }

  static TangentMap Ad(const Element& r) { return r; }

  static TangentMap ad(const Tangent& u) { return wedge(u); }

  /// ad-matrices of so(3) are themselves hat matrices, so Rodrigues applies.
  static TangentMap algebra_exp(const TangentMap& m) { return exp(vee(m)); }

  /// J_u = I - (1 - cos t)/t^2 u^ + (t - sin t)/t^3 (u^)^2
  static TangentMap jacobian_full(const Tangent& u) {
    const double theta = u.norm();
    const Algebra w = wedge(u);
    return TangentMap::Identity() -
           so3_detail::one_minus_cos_over_sq(theta) * w +
           so3_detail::t_minus_sin_over_cube(theta) * w * w;
  }

  /// J_u^{-1} = I + u^/2 + (1 - (t/2) cot(t/2))/t^2 (u^)^2
  static TangentMap inverse_jacobian_full(const Tangent& u) {
    const double theta = u.norm();
    const Algebra w = wedge(u);
    double coeff;
    if (theta < so3_detail::kSmallAngle) {
      const double t2 = theta * theta;
      coeff = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 +
              t2 * t2 * t2 / 1209600.0;
    } else {
      const double half = 0.5 * theta;
      const double denom = std::sin(half);
      if (std::abs(denom) < 1e-12) {
        throw SingularityError(
            "SO3::inverse_jacobian_full: sin(|u|/2) vanishes");
      }
      if (!(theta < kSeriesRadius)) {
        throw DomainError("SO3::inverse_jacobian_full: |u| >= 2 pi");
      }
      coeff = (1.0 - half * std::cos(half) / denom) / (theta * theta);
    }
    return TangentMap::Identity() + 0.5 * w + coeff * w * w;
  }

  /// Density of the Haar measure in exponential coordinates, |det J_u|.
  static double haar_density(const Tangent& u) {
    return 2.0 * so3_detail::one_minus_cos_over_sq(u.norm());
  }

 private:
  static double angle(const Element& r, const Tangent& skew) {
    const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
    return std::atan2(0.5 * skew.norm(), c);
  }
};

static_assert(MatrixLieGroup<SO3>);

}  // namespace lgf

#endif  // LGFUSION_SO3_HPP
