#ifndef LGFUSION_METRICS_HPP
#define LGFUSION_METRICS_HPP

// Fusion error
//   E = int_G | p+(g) - p1(g) p2(g) / int_G p1 p2 | dg
// estimated on sample points u_k of a ball in exponential coordinates,
// g_k = centre exp(u_k), with Haar weight |det J_u| (optional). Both
// densities are normalised on the same points, so E lies in [0, 2].

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "lgfusion/distributions.hpp"
#include "lgfusion/errors.hpp"
#include "lgfusion/so3.hpp"

namespace lgf {

struct UniformRandomSampling {
  std::uint64_t seed = 0;
};

struct LatticeSampling {
  int points_per_axis = 60;
};

/// Integration domain: the ball of radius `bound` in exponential
/// coordinates, covered by `samples` points of the enclosing cube
/// [-bound, bound]^n (points outside the ball are discarded).
struct IntegrationGrid {
  static constexpr double kDefaultBound = std::numbers::pi - 0.01;
  static constexpr std::size_t kDefaultSamples = 200000;
  static constexpr std::size_t kMinSamples = 1000;

  double bound = kDefaultBound;
  std::size_t samples = kDefaultSamples;
  std::variant<UniformRandomSampling, LatticeSampling> mode =
      UniformRandomSampling{};
  bool haar_correction = true;

  static IntegrationGrid lattice(int points_per_axis,
                                 double bound = kDefaultBound) {
    IntegrationGrid g;
    g.bound = bound;
    g.mode = LatticeSampling{points_per_axis};
    const auto n = static_cast<std::size_t>(points_per_axis);
    g.samples = n * n * n;
    return g;
  }

  static IntegrationGrid uniform(std::size_t samples, std::uint64_t seed,
                                 double bound = kDefaultBound) {
    IntegrationGrid g;
    g.bound = bound;
    g.samples = samples;
    g.mode = UniformRandomSampling{seed};
    return g;
  }

  void validate() const {
    if (!(bound > 0.0)) {
      throw std::invalid_argument("IntegrationGrid: bound must be positive");
    }
    if (samples < kMinSamples) {
      throw std::invalid_argument("IntegrationGrid: need at least 1000 samples");
    }
    if (const auto* l = std::get_if<LatticeSampling>(&mode)) {
      const auto n = static_cast<std::size_t>(std::max(l->points_per_axis, 0));
      if (n * n * n != samples) {
        throw std::invalid_argument(
            "IntegrationGrid: lattice samples must be points_per_axis^3");
      }
    }
  }
};

struct ErrorReport {
  double error = 0.0;
  /// Estimated integrals of the unnormalised densities over the domain.
  double normaliser_product = 0.0;
  double normaliser_posterior = 0.0;
  std::size_t samples_used = 0;
};

/// Ratio of a method's run time to the naive fusion run time.
/// Every method runs the naive fusion first, so the method's extra time is
/// clipped at zero and the ratio is at least one.
inline double timing_ratio(double method_time_ns, double naive_time_ns) {
  if (!(naive_time_ns > 0.0)) {
    throw std::invalid_argument("timing_ratio: naive time must be positive");
  }
  const double extra = std::max(0.0, method_time_ns - naive_time_ns);
  return (naive_time_ns + extra) / naive_time_ns;
}

inline double timing_ratio(std::chrono::nanoseconds method_time,
                           std::chrono::nanoseconds naive_time) {
  return timing_ratio(static_cast<double>(method_time.count()),
                      static_cast<double>(naive_time.count()));
}

/// Precomputes the sample points and the normalised product density of two
/// inputs, then scores any number of candidate posteriors against it.
class FusionErrorEvaluator {
 public:
  using G = SO3;

  FusionErrorEvaluator(const ConcentratedGaussian<G>& p1,
                       const ConcentratedGaussian<G>& p2,
                       const IntegrationGrid& grid,
                       const G::Element& centre = G::Element::Identity()) {
    grid.validate();
    if (!(grid.bound <= std::numbers::pi - 1e-3)) {
      throw DomainError("FusionErrorEvaluator: bound exceeds the log domain");
    }
    build_points(grid, centre);

    const Quadratic q1(p1);
    const Quadratic q2(p2);
    std::vector<double> log_q(points_.size());
    for (std::size_t k = 0; k < points_.size(); ++k) {
      log_q[k] = q1(points_[k]) + q2(points_[k]);
    }
    product_.resize(points_.size());
    normaliser_product_ = normalise(log_q, product_);
  }

  std::size_t samples_used() const { return points_.size(); }

  ErrorReport evaluate(const ConcentratedGaussian<G>& posterior) const {
    const Quadratic qp(posterior);
    std::vector<double> log_p(points_.size());
    for (std::size_t k = 0; k < points_.size(); ++k) {
      log_p[k] = qp(points_[k]);
    }
    std::vector<double> p(points_.size());
    ErrorReport report;
    report.normaliser_posterior = normalise(log_p, p);
    report.normaliser_product = normaliser_product_;
    report.samples_used = points_.size();
    double e = 0.0;
    for (std::size_t k = 0; k < points_.size(); ++k) {
      e += std::abs(p[k] - product_[k]);
    }
    report.error = e;
    return report;
  }

 private:
  // -1/2 log(x^-1 g)^T Sigma^-1 log(x^-1 g), total on SO(3) so that points
  // at the cut locus of x do not throw (the form is even in its argument).
  struct Quadratic {
    explicit Quadratic(const ConcentratedGaussian<G>& d)
        : inv_reference(G::inverse(d.reference())),
          information(spd_inverse(d.covariance())) {}
    double operator()(const G::Element& g) const {
      const G::Tangent r = G::log_total(inv_reference * g);
      return -0.5 * r.dot(information * r);
    }
    G::Element inv_reference;
    G::TangentMap information;
  };

  void build_points(const IntegrationGrid& grid, const G::Element& centre) {
    const double b = grid.bound;
    auto keep = [&](const G::Tangent& u) {
      if (!(u.norm() <= b)) return;
      points_.push_back(centre * G::exp(u));
      weights_.push_back(grid.haar_correction ? G::haar_density(u) : 1.0);
    };
    if (const auto* lat = std::get_if<LatticeSampling>(&grid.mode)) {
      const int n = lat->points_per_axis;
      const double h = 2.0 * b / n;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          for (int l = 0; l < n; ++l) {
            keep(G::Tangent(-b + (i + 0.5) * h, -b + (j + 0.5) * h,
                            -b + (l + 0.5) * h));
          }
        }
      }
    } else {
      const auto& uni = std::get<UniformRandomSampling>(grid.mode);
      std::mt19937_64 rng(uni.seed);
      std::uniform_real_distribution<double> coord(-b, b);
      for (std::size_t k = 0; k < grid.samples; ++k) {
        const double x = coord(rng);
        const double y = coord(rng);
        const double z = coord(rng);
        keep(G::Tangent(x, y, z));
      }
    }
    if (points_.empty()) {
      throw std::invalid_argument("FusionErrorEvaluator: no points in domain");
    }
    cell_volume_ = std::pow(2.0 * b, 3) / static_cast<double>(grid.samples);
  }

  // Writes w_k exp(l_k - max) / sum into `out`; returns the estimated
  // integral of exp(l) over the domain.
  double normalise(const std::vector<double>& log_density,
                   std::vector<double>& out) const {
    const double peak =
        *std::max_element(log_density.begin(), log_density.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < log_density.size(); ++k) {
      out[k] = weights_[k] * std::exp(log_density[k] - peak);
      sum += out[k];
    }
    for (double& v : out) v /= sum;
    return std::exp(peak) * sum * cell_volume_;
  }

  std::vector<G::Element> points_;
  std::vector<double> weights_;
  std::vector<double> product_;
  double normaliser_product_ = 0.0;
  double cell_volume_ = 0.0;
};

/// One-shot form of FusionErrorEvaluator.
inline ErrorReport fusion_error(
    const ConcentratedGaussian<SO3>& p1, const ConcentratedGaussian<SO3>& p2,
    const ConcentratedGaussian<SO3>& posterior, const IntegrationGrid& grid,
    const SO3::Element& centre = SO3::Element::Identity()) {
  return FusionErrorEvaluator(p1, p2, grid, centre).evaluate(posterior);
}

}  // namespace lgf

#endif  // LGFUSION_METRICS_HPP
