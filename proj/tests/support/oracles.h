#pragma once

#include <random>

#include <Eigen/Core>

#include "jsr/image/luma_image.h"
#include "jsr/image/patch_grid.h"

namespace jsr::testing {

// Random image with intensities uniform in [lo, hi].
inline image::LumaImage RandomImage(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  image::LumaImage img(h, w);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

inline image::Patch RandomPatch(int size, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  const image::LumaImage img = RandomImage(size, size, seed, lo, hi);
  return Eigen::Map<const Eigen::VectorXd>(img.pixels().data(), static_cast<Eigen::Index>(img.size()));
}

inline Eigen::MatrixXd RandomMatrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Eigen::VectorXd RandomVector(int n, std::mt19937_64& rng) {
  return RandomMatrix(n, 1, rng).col(0);
}

inline image::LumaImage Checkerboard(int h, int w, int cell = 1) {
  image::LumaImage img(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img.at(r, c) = ((r / cell + c / cell) % 2 == 0) ? 1.0 : 0.0;
  return img;
}

}  // namespace jsr::testing

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

namespace jsr::testing {

struct BruteForceL1Result {
  Eigen::VectorXd a;
  double objective = std::numeric_limits<double>::infinity();
};

// Minimises a'Ga - 2c'a + lambda|a|_1 over supports of size <= max_support
// by enumerating every (support, sign) pair and solving the stationarity
// system G_SS a_S = c_S - lambda s / 2, keeping sign-consistent solutions.
inline BruteForceL1Result BruteForceL1(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double lambda,
                                       int max_support) {
  const int k = static_cast<int>(c.size());
  BruteForceL1Result best;
  best.a = Eigen::VectorXd::Zero(k);
  best.objective = 0.0;
  auto value = [&](const Eigen::VectorXd& a) { return a.dot(G * a) - 2.0 * c.dot(a) + lambda * a.lpNorm<1>(); };
  std::vector<int> support;
  auto visit = [&](auto&& self, int next) -> void {
    if (!support.empty()) {
      const int s = static_cast<int>(support.size());
      Eigen::MatrixXd gss(s, s);
      Eigen::VectorXd cs(s);
      for (int i = 0; i < s; ++i) {
        cs(i) = c(support[i]);
        for (int j = 0; j < s; ++j) gss(i, j) = G(support[i], support[j]);
      }
      const auto lu = gss.fullPivLu();
      if (lu.isInvertible()) {
        for (int mask = 0; mask < (1 << s); ++mask) {
          Eigen::VectorXd sign(s);
          for (int i = 0; i < s; ++i) sign(i) = (mask >> i & 1) ? -1.0 : 1.0;
          const Eigen::VectorXd as = lu.solve(cs - 0.5 * lambda * sign);
          bool consistent = true;
          for (int i = 0; i < s; ++i) consistent = consistent && as(i) * sign(i) > 0.0;
          if (!consistent) continue;
          Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
          for (int i = 0; i < s; ++i) a(support[i]) = as(i);
          const double v = value(a);
          if (v < best.objective) {
            best.objective = v;
            best.a = a;
          }
        }
      }
    }
    if (static_cast<int>(support.size()) == max_support) return;
    for (int i = next; i < k; ++i) {
      support.push_back(i);
      self(self, i + 1);
      support.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

// Subgradient optimality residual, computed independently of the solver.
inline double KktViolation(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double lambda,
                           const Eigen::VectorXd& a) {
  const Eigen::VectorXd g = 2.0 * (G * a - c);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double v = a(i) != 0.0 ? std::abs(g(i) + lambda * (a(i) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(g(i)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace jsr::testing

namespace jsr::testing {

// Minimiser of q(x) = (x - e)^2 + omega (x - i)^2 per pixel, found by
// sampling q at three points and taking the vertex of the interpolating
// parabola; never uses the closed form.
inline Eigen::VectorXd PixelwiseQuadraticMinimiser(const Eigen::VectorXd& external, const Eigen::VectorXd& internal,
                                                   double omega) {
  Eigen::VectorXd out(external.size());
  for (Eigen::Index k = 0; k < external.size(); ++k) {
    auto q = [&](double x) { return (x - external[k]) * (x - external[k]) + omega * (x - internal[k]) * (x - internal[k]); };
    const double centre = 0.5 * (external[k] + internal[k]);
    const double q0 = q(centre - 1.0), q1 = q(centre), q2 = q(centre + 1.0);
    const double curvature = q0 - 2.0 * q1 + q2;  // 2a
    const double slope = 0.5 * (q2 - q0);         // derivative at centre
    out[k] = centre - slope / curvature;
  }
  return out;
}

}  // namespace jsr::testing
