#ifndef LGFUSION_FUSION_HPP
#define LGFUSION_FUSION_HPP

// Fusion of independent concentrated Gaussians in three steps:
//   1. pick a reference point x_hat,
//   2. express every input as N_{x_hat}(mu_i, Sigma_hat_i) and fuse them as
//      ordinary Gaussians in those coordinates,
//   3. optionally reset the fused N_{x_hat}(mu+, Sigma) to a zero-mean
//      concentrated Gaussian at x_hat exp(mu+).

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lgfusion/distributions.hpp"
#include "lgfusion/lie_core.hpp"

namespace lgf {

class ReferenceStrategy {
 public:
  enum class Kind { Identity, FirstInput, NaiveFusion, IteratedNaive };

  static constexpr ReferenceStrategy identity() { return {Kind::Identity, 1}; }
  static constexpr ReferenceStrategy first_input() {
    return {Kind::FirstInput, 1};
  }
  static constexpr ReferenceStrategy naive_fusion() {
    return {Kind::NaiveFusion, 1};
  }
  static ReferenceStrategy iterated_naive(int iterations) {
    if (iterations < 1) {
      throw std::invalid_argument("IteratedNaive needs iterations >= 1");
    }
    return {Kind::IteratedNaive, iterations};
  }

  constexpr Kind kind() const { return kind_; }
  constexpr int iterations() const { return iterations_; }

  friend constexpr bool operator==(const ReferenceStrategy&,
                                   const ReferenceStrategy&) = default;

 private:
  constexpr ReferenceStrategy(Kind kind, int iterations)
      : kind_(kind), iterations_(iterations) {}

  Kind kind_;
  int iterations_;
};

struct FusionConfig {
  ReferenceStrategy reference_strategy = ReferenceStrategy::naive_fusion();
  JacobianScheme scheme = JacobianScheme::Kind::Full;
  bool reset_enabled = true;
  /// Scheme for the reset step; unset means "same as `scheme`".
  std::optional<JacobianScheme> reset_scheme;

  JacobianScheme effective_reset_scheme() const {
    return reset_scheme.value_or(scheme);
  }
};

template <MatrixLieGroup G>
struct FusionResult {
  /// Reference point used for the final Step 2.
  typename G::Element reference;
  /// Output of Step 2: N_{reference}(mu+, Sigma_diamond).
  ExtendedConcentratedGaussian<G> fused;
  /// Concentrated Gaussian returned to the caller (reset or not).
  ConcentratedGaussian<G> posterior;
};

namespace detail {

template <class T>
void require_two_inputs(std::span<const T> inputs, const char* who) {
  if (inputs.size() < 2) {
    throw std::invalid_argument(std::string(who) + ": need at least 2 inputs");
  }
}

}  // namespace detail

/// Information-form fusion of the inputs treated as Gaussians in
/// identity-centred exponential coordinates, with no Jacobian correction.
template <MatrixLieGroup G>
ConcentratedGaussian<G> naive_fuse(
    std::span<const ConcentratedGaussian<G>> inputs) {
  using Map = typename G::TangentMap;
  using Tangent = typename G::Tangent;
  detail::require_two_inputs(inputs, "naive_fuse");
  Map info = Map::Zero();
  Tangent info_mean = Tangent::Zero();
  for (const auto& in : inputs) {
    const Map w = spd_inverse(in.covariance());
    info += w;
    info_mean += w * G::log(in.reference());
  }
  const Map cov = spd_inverse(info);
  return {G::exp(Tangent(cov * info_mean)), cov};
}

/// Steps 2 and 3 at a fixed reference point.
template <MatrixLieGroup G>
FusionResult<G> fuse_at_reference(
    std::span<const ConcentratedGaussian<G>> inputs,
    const typename G::Element& reference, const FusionConfig& config) {
  using Map = typename G::TangentMap;
  using Tangent = typename G::Tangent;
  detail::require_two_inputs(inputs, "fuse");
  const typename G::Element ref_inv = G::inverse(reference);
  Map info = Map::Zero();
  Tangent info_mean = Tangent::Zero();
  for (const auto& in : inputs) {
    const Tangent mu = G::log(ref_inv * in.reference());
    const Map jinv = inverse_jacobian<G>(mu, config.scheme);
    const Map cov = spd_guard(Map(jinv * in.covariance() * jinv.transpose()));
    const Map w = spd_inverse(cov);
    info += w;
    info_mean += w * mu;
  }
  const Map fused_cov = spd_inverse(info);
  const Tangent fused_mean = fused_cov * info_mean;
  if (!(fused_mean.norm() < detail::injectivity_radius<G>())) {
    throw DomainError("fuse: fused mean outside the injectivity radius");
  }
  ExtendedConcentratedGaussian<G> fused(reference, fused_mean, fused_cov);
  const typename G::Element mode = fused.mode();
  if (!config.reset_enabled) {
    return {reference, fused, ConcentratedGaussian<G>(mode, fused_cov)};
  }
  const Map j = jacobian<G>(fused_mean, config.effective_reset_scheme());
  ConcentratedGaussian<G> posterior(
      mode, spd_guard(Map(j * fused_cov * j.transpose())));
  return {reference, fused, posterior};
}

template <MatrixLieGroup G>
FusionResult<G> fuse_detailed(std::span<const ConcentratedGaussian<G>> inputs,
                              const FusionConfig& config) {
  detail::require_two_inputs(inputs, "fuse");
  using Kind = ReferenceStrategy::Kind;
  const ReferenceStrategy& strategy = config.reference_strategy;
  switch (strategy.kind()) {
    case Kind::Identity:
      return fuse_at_reference<G>(inputs, G::Element::Identity(), config);
    case Kind::FirstInput:
      return fuse_at_reference<G>(inputs, inputs.front().reference(), config);
    case Kind::NaiveFusion:
      return fuse_at_reference<G>(inputs, naive_fuse<G>(inputs).reference(),
                                  config);
    case Kind::IteratedNaive: {
      FusionResult<G> result = fuse_at_reference<G>(
          inputs, naive_fuse<G>(inputs).reference(), config);
      for (int i = 1; i < strategy.iterations(); ++i) {
        result = fuse_at_reference<G>(inputs, result.posterior.reference(),
                                      config);
      }
      return result;
    }
  }
  throw std::logic_error("fuse: unknown reference strategy");
}

template <MatrixLieGroup G>
ConcentratedGaussian<G> fuse(std::span<const ConcentratedGaussian<G>> inputs,
                             const FusionConfig& config) {
  return fuse_detailed<G>(inputs, config).posterior;
}

}  // namespace lgf

#endif  // LGFUSION_FUSION_HPP
