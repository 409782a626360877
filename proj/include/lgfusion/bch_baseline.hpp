#ifndef LGFUSION_BCH_BASELINE_HPP
#define LGFUSION_BCH_BASELINE_HPP

// Optimisation-based fusion with Baker-Campbell-Hausdorff truncated
// residuals. Used as the accuracy/cost reference for the coordinate-change
// schemes in fusion.hpp.
//
// Posterior is x0 exp(delta*) where delta* minimises
//   f(delta) = 1/2 sum_i r_i(delta)^T Sigma_i^-1 r_i(delta),
//   r_i(delta) = bch(log(x_i^-1 x0), delta)  ~  log(x_i^-1 x0 exp(delta)),
// found with BFGS. Covariance is the Gauss-Newton information sum at delta*.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgfusion/distributions.hpp"
#include "lgfusion/errors.hpp"
#include "lgfusion/lie_core.hpp"

namespace lgf {

enum class BchOrder { First, Second };

struct OptimizerSettings {
  int max_iterations = 100;
  double gradient_tolerance = 1e-9;
  double step_tolerance = 1e-12;

  void validate() const {
    if (max_iterations <= 0 || !(gradient_tolerance > 0.0) ||
        !(step_tolerance > 0.0)) {
      throw std::invalid_argument("OptimizerSettings: values must be positive");
    }
  }
};

/// Truncation of log(exp(a) exp(b)): a + b, plus 1/2 [a, b] for Second.
template <MatrixLieGroup G>
typename G::Tangent bch_compose(const typename G::Tangent& a,
                                const typename G::Tangent& b, BchOrder order) {
  typename G::Tangent out = a + b;
  if (order == BchOrder::Second) out += 0.5 * bracket<G>(a, b);
  return out;
}

/// d bch_compose(a, delta) / d delta. Constant in delta for both orders.
template <MatrixLieGroup G>
typename G::TangentMap bch_residual_jacobian(const typename G::Tangent& a,
                                             BchOrder order) {
  using Map = typename G::TangentMap;
  if (order == BchOrder::First) return Map::Identity();
  return Map::Identity() + 0.5 * G::ad(a);
}

template <MatrixLieGroup G>
class BchObjective {
 public:
  using Tangent = typename G::Tangent;
  using Map = typename G::TangentMap;

  BchObjective(std::span<const ConcentratedGaussian<G>> inputs,
               const typename G::Element& x0, BchOrder order)
      : order_(order) {
    terms_.reserve(inputs.size());
    for (const auto& in : inputs) {
      const Tangent a = G::log(G::inverse(in.reference()) * x0);
      terms_.push_back(
          {a, spd_inverse(in.covariance()), bch_residual_jacobian<G>(a, order)});
    }
  }

  Tangent residual(std::size_t i, const Tangent& delta) const {
    return bch_compose<G>(terms_[i].offset, delta, order_);
  }

  double value(const Tangent& delta) const {
    double f = 0.0;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const Tangent r = residual(i, delta);
      f += r.dot(terms_[i].information * r);
    }
    return 0.5 * f;
  }

  Tangent gradient(const Tangent& delta) const {
    Tangent g = Tangent::Zero();
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const Tangent r = residual(i, delta);
      g += terms_[i].jacobian.transpose() * (terms_[i].information * r);
    }
    return g;
  }

  /// sum_i G_i^T Sigma_i^-1 G_i
  Map information() const {
    Map h = Map::Zero();
    for (const auto& t : terms_) {
      h += t.jacobian.transpose() * t.information * t.jacobian;
    }
    return h;
  }

 private:
  struct Term {
    Tangent offset;  // log(x_i^-1 x0)
    Map information;
    Map jacobian;
  };
  BchOrder order_;
  std::vector<Term> terms_;
};

template <MatrixLieGroup G>
struct BchResult {
  ConcentratedGaussian<G> posterior;
  typename G::Tangent delta;
  double initial_cost;
  double final_cost;
  int iterations;
};

/// BFGS with Armijo backtracking from delta = 0. The gradient tolerance is
/// relative to max(1, |grad f(0)|), since the scale of f follows 1/Sigma.
/// Throws ConvergenceError if it is not met when iterations or step length
/// run out.
template <MatrixLieGroup G>
typename G::Tangent minimise_bfgs(const BchObjective<G>& objective,
                                  const OptimizerSettings& settings,
                                  int* iterations_out = nullptr) {
  using Tangent = typename G::Tangent;
  using Map = typename G::TangentMap;
  settings.validate();

  Tangent x = Tangent::Zero();
  double f = objective.value(x);
  Tangent g = objective.gradient(x);
  const double tol = settings.gradient_tolerance * std::max(1.0, g.norm());
  Map h = Map::Identity();
  int it = 0;
  for (; it < settings.max_iterations; ++it) {
    if (g.norm() <= tol) break;
    Tangent p = -h * g;
    double slope = p.dot(g);
    if (!(slope < 0.0)) {
      h.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }
    double alpha = 1.0;
    Tangent x_next = x + p;
    double f_next = objective.value(x_next);
    // Slack of a few ulps of f so that steps near the minimum are not
    // rejected on rounding noise alone.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::abs(f);
    while (f_next > f + 1e-4 * alpha * slope + slack && alpha > 1e-20) {
      alpha *= 0.5;
      x_next = x + alpha * p;
      f_next = objective.value(x_next);
    }
    const Tangent s = x_next - x;
    const Tangent g_next = objective.gradient(x_next);
    const Tangent y = g_next - g;
    const double ys = y.dot(s);
    if (ys > 1e-300) {
      if (it == 0) h *= ys / y.squaredNorm();
      const double rho = 1.0 / ys;
      const Map left = Map::Identity() - rho * s * y.transpose();
      h = left * h * left.transpose() + rho * s * s.transpose();
    }
    x = x_next;
    f = f_next;
    g = g_next;
    if (s.norm() <= settings.step_tolerance) {
      ++it;
      break;
    }
  }
  if (iterations_out) *iterations_out = it;
  if (!(g.norm() <= tol)) {
    throw ConvergenceError("bch_fuse: gradient norm " +
                           std::to_string(g.norm()) + " after " +
                           std::to_string(it) + " iterations");
  }
  return x;
}

template <MatrixLieGroup G>
BchResult<G> bch_fuse_detailed(std::span<const ConcentratedGaussian<G>> inputs,
                               BchOrder order, const typename G::Element& x0,
                               const OptimizerSettings& settings = {}) {
  using Tangent = typename G::Tangent;
  if (inputs.size() < 2) {
    throw std::invalid_argument("bch_fuse: need at least 2 inputs");
  }
  const BchObjective<G> objective(inputs, x0, order);
  int iterations = 0;
  const Tangent delta = minimise_bfgs<G>(objective, settings, &iterations);
  // Both truncations are affine in delta, so G_i does not depend on delta*.
  return {ConcentratedGaussian<G>(x0 * G::exp(delta),
                                  spd_inverse(objective.information())),
          delta, objective.value(Tangent::Zero()), objective.value(delta),
          iterations};
}

template <MatrixLieGroup G>
ConcentratedGaussian<G> bch_fuse(std::span<const ConcentratedGaussian<G>> inputs,
                                 BchOrder order, const typename G::Element& x0,
                                 const OptimizerSettings& settings = {}) {
  return bch_fuse_detailed<G>(inputs, order, x0, settings).posterior;
}

}  // namespace lgf

#endif  // LGFUSION_BCH_BASELINE_HPP
