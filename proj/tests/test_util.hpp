#ifndef LGFUSION_TEST_UTIL_HPP
#define LGFUSION_TEST_UTIL_HPP

#include <Eigen/Core>

#include <random>

#include "lgfusion/lgfusion.hpp"

namespace lgf::test {

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// Uniform in the ball of radius r.
inline Eigen::Vector3d random_in_ball(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Eigen::Vector3d v(u(rng), u(rng), u(rng));
    if (v.squaredNorm() <= 1.0) return r * v;
  }
}

/// Random direction scaled to norm r.
inline Eigen::Vector3d random_with_norm(std::mt19937_64& rng, double r) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return r * v.normalized();
}

inline Eigen::Matrix3d random_spd(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n;
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = n(rng);
  Eigen::Matrix3d s = scale * (a * a.transpose() / 3.0 + 0.2 * Eigen::Matrix3d::Identity());
  return 0.5 * (s + s.transpose());
}

}  // namespace lgf::test

#endif
