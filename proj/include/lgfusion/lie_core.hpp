#ifndef LGFUSION_LIE_CORE_HPP
#define LGFUSION_LIE_CORE_HPP

// Group-generic machinery: Jacobian of the exponential map in several
// approximation schemes, parallel transport of the (0)-connection and its
// curvature tensor.
//
// A group type G plugs in by providing
//   kDim, kSeriesRadius,
//   Tangent, TangentMap, Element, Algebra,
//   wedge, vee, exp, log, inverse, Ad, ad.
// Optional hooks:
//   G::algebra_exp(TangentMap)        exponential of an ad-matrix
//   G::jacobian_full(Tangent)         closed-form left-trivialised Jacobian
//   G::inverse_jacobian_full(Tangent) closed-form inverse
// Missing hooks fall back to scaling-and-squaring and the power series.

#include <Eigen/Core>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <concepts>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lgfusion/errors.hpp"

namespace lgf {

template <class G>
concept MatrixLieGroup = requires(const typename G::Tangent& u,
                                  const typename G::Element& x,
                                  const typename G::Algebra& a) {
  { G::kDim } -> std::convertible_to<int>;
  { G::kSeriesRadius } -> std::convertible_to<double>;
  { G::wedge(u) } -> std::convertible_to<typename G::Algebra>;
  { G::vee(a) } -> std::convertible_to<typename G::Tangent>;
  { G::exp(u) } -> std::convertible_to<typename G::Element>;
  { G::log(x) } -> std::convertible_to<typename G::Tangent>;
  { G::inverse(x) } -> std::convertible_to<typename G::Element>;
  { G::Ad(x) } -> std::convertible_to<typename G::TangentMap>;
  { G::ad(u) } -> std::convertible_to<typename G::TangentMap>;
};

/// Which approximation of J_u (and J_u^{-1}) to use when moving covariances
/// between exponential coordinates.
class JacobianScheme {
 public:
  enum class Kind {
    Full,
    Series,
    Taylor1,
    Taylor2,
    ParallelTransport,
    ParallelTransportCurvature,
  };

  static constexpr int kDefaultSeriesOrder = 10;

  constexpr JacobianScheme(Kind kind) : kind_(kind) {}  // NOLINT

  static JacobianScheme series(int k_max = kDefaultSeriesOrder) {
    if (k_max < 1) {
      throw std::invalid_argument("JacobianScheme::series: k_max must be >= 1");
    }
    JacobianScheme s(Kind::Series);
    s.k_max_ = k_max;
    return s;
  }

  constexpr Kind kind() const { return kind_; }
  constexpr int series_order() const { return k_max_; }

  friend constexpr bool operator==(const JacobianScheme&,
                                   const JacobianScheme&) = default;

 private:
  Kind kind_;
  int k_max_ = kDefaultSeriesOrder;
};

inline std::string to_string(const JacobianScheme& s) {
  switch (s.kind()) {
    case JacobianScheme::Kind::Full:
      return "full";
    case JacobianScheme::Kind::Series:
      return "series(" + std::to_string(s.series_order()) + ")";
    case JacobianScheme::Kind::Taylor1:
      return "taylor1";
    case JacobianScheme::Kind::Taylor2:
      return "taylor2";
    case JacobianScheme::Kind::ParallelTransport:
      return "pt";
    case JacobianScheme::Kind::ParallelTransportCurvature:
      return "ptc";
  }
  return "?";
}

namespace detail {

inline constexpr int kMaxSeriesOrder = 64;

// c_k = B_k / k! with the B_1 = +1/2 convention, i.e. the Taylor
// coefficients of x / (1 - e^{-x}). Computed from
//   sum_{j=0}^{m} c_j / (m - j + 1)! = 0   (m >= 1, B_1 = -1/2 convention)
// which is stable because c_k decays like (2 pi)^{-k}.
inline const std::array<double, kMaxSeriesOrder + 1>& bernoulli_over_factorial() {
  static const auto table = [] {
    std::array<double, kMaxSeriesOrder + 2> inv_fact{};
    inv_fact[0] = 1.0;
    for (int i = 1; i < kMaxSeriesOrder + 2; ++i) {
      inv_fact[i] = inv_fact[i - 1] / i;
    }
    std::array<double, kMaxSeriesOrder + 1> c{};
    c[0] = 1.0;
    for (int m = 1; m <= kMaxSeriesOrder; ++m) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j) acc += c[j] * inv_fact[m - j + 1];
      c[m] = -acc;
    }
    c[1] = -c[1];
    return c;
  }();
  return table;
}

template <class G>
void require_series_domain(const typename G::Tangent& u, const char* who) {
  if (!(u.norm() < G::kSeriesRadius)) {
    throw DomainError(std::string(who) +
                      ": |u| outside the series convergence radius");
  }
}

inline void require_order(int k_max) {
  if (k_max < 1 || k_max > kMaxSeriesOrder) {
    throw std::invalid_argument("series order must be in [1, " +
                                std::to_string(kMaxSeriesOrder) + "]");
  }
}

}  // namespace detail

/// exp of an n x n matrix in the image of ad. Uses G::algebra_exp when the
/// group provides one, scaling-and-squaring otherwise.
template <MatrixLieGroup G>
typename G::TangentMap algebra_exp(const typename G::TangentMap& m) {
  if constexpr (requires { G::algebra_exp(m); }) {
    return G::algebra_exp(m);
  } else {
    return m.exp();
  }
}

/// vee([u^, v^])
template <MatrixLieGroup G>
typename G::Tangent bracket(const typename G::Tangent& u,
                            const typename G::Tangent& v) {
  return G::ad(u) * v;
}

/// Left-trivialised parallel transport along exp(tu), t in [0, 1]:
/// pt_u = exp(-ad_u / 2) = Ad_{exp(-u/2)}.
template <MatrixLieGroup G>
typename G::TangentMap parallel_transport(const typename G::Tangent& u) {
  return algebra_exp<G>(-0.5 * G::ad(u));
}

/// Curvature of the (0)-connection on left-invariant fields:
/// R(x, y) z = -1/4 [[x, y], z].
template <MatrixLieGroup G>
typename G::Tangent curvature(const typename G::Tangent& x,
                              const typename G::Tangent& y,
                              const typename G::Tangent& z) {
  return -0.25 * bracket<G>(bracket<G>(x, y), z);
}

/// sum_{j=0}^{k_max} (-ad_u)^j / (j + 1)!
template <MatrixLieGroup G>
typename G::TangentMap jacobian_series(const typename G::Tangent& u,
                                       int k_max) {
  using Map = typename G::TangentMap;
  detail::require_order(k_max);
  detail::require_series_domain<G>(u, "jacobian_series");
  const Map neg_ad = -G::ad(u);
  Map term = Map::Identity();
  Map sum = Map::Identity();
  for (int j = 1; j <= k_max; ++j) {
    term = term * neg_ad / static_cast<double>(j + 1);
    sum += term;
  }
  return sum;
}

/// sum_{k=0}^{k_max} B_k / k! ad_u^k  (Bernoulli numbers, B_1 = +1/2)
template <MatrixLieGroup G>
typename G::TangentMap inverse_jacobian_series(const typename G::Tangent& u,
                                               int k_max) {
  using Map = typename G::TangentMap;
  detail::require_order(k_max);
  detail::require_series_domain<G>(u, "inverse_jacobian_series");
  const auto& c = detail::bernoulli_over_factorial();
  const Map ad = G::ad(u);
  Map power = Map::Identity();
  Map sum = Map::Identity();
  for (int k = 1; k <= k_max; ++k) {
    power = power * ad;
    if (c[k] != 0.0) sum += c[k] * power;
  }
  return sum;
}

/// Left-trivialised Jacobian J_u = (I - exp(-ad_u)) / ad_u under `scheme`.
template <MatrixLieGroup G>
typename G::TangentMap jacobian(const typename G::Tangent& u,
                                const JacobianScheme& scheme) {
  using Map = typename G::TangentMap;
  using Kind = JacobianScheme::Kind;
  switch (scheme.kind()) {
    case Kind::Full:
      if constexpr (requires { G::jacobian_full(u); }) {
        return G::jacobian_full(u);
      } else {
        return jacobian_series<G>(u, 30);
      }
    case Kind::Series:
      return jacobian_series<G>(u, scheme.series_order());
    case Kind::Taylor1:
      return Map::Identity() - 0.5 * G::ad(u);
    case Kind::Taylor2: {
      const Map ad = G::ad(u);
      return Map::Identity() - 0.5 * ad + (ad * ad) / 6.0;
    }
    case Kind::ParallelTransport:
      return parallel_transport<G>(u);
    case Kind::ParallelTransportCurvature: {
      const Map ad = G::ad(u);
      return parallel_transport<G>(u) * (Map::Identity() + (ad * ad) / 24.0);
    }
  }
  throw std::logic_error("jacobian: unknown scheme");
}

/// Scheme-consistent inverse of J_u. Each approximate scheme uses its own
/// closed-form inverse rather than a numerical inversion of jacobian().
template <MatrixLieGroup G>
typename G::TangentMap inverse_jacobian(const typename G::Tangent& u,
                                        const JacobianScheme& scheme) {
  using Map = typename G::TangentMap;
  using Kind = JacobianScheme::Kind;
  switch (scheme.kind()) {
    case Kind::Full:
      if constexpr (requires { G::inverse_jacobian_full(u); }) {
        return G::inverse_jacobian_full(u);
      } else {
        return inverse_jacobian_series<G>(u, 30);
      }
    case Kind::Series:
      return inverse_jacobian_series<G>(u, scheme.series_order());
    case Kind::Taylor1:
      return Map::Identity() + 0.5 * G::ad(u);
    case Kind::Taylor2: {
      const Map ad = G::ad(u);
      return Map::Identity() + 0.5 * ad + (ad * ad) / 12.0;
    }
    case Kind::ParallelTransport:
      return algebra_exp<G>(0.5 * G::ad(u));
    case Kind::ParallelTransportCurvature: {
      const Map ad = G::ad(u);
      return (Map::Identity() - (ad * ad) / 24.0) *
             algebra_exp<G>(0.5 * G::ad(u));
    }
  }
  throw std::logic_error("inverse_jacobian: unknown scheme");
}

}  // namespace lgf

#endif  // LGFUSION_LIE_CORE_HPP
