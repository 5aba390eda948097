#include "jsr/sparse/l1_solver.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace jsr::sparse {
namespace {

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool AllFinite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// 2 (G a - c), using only the nonzero entries of a.
Eigen::VectorXd SmoothGradient(const GramProblem& p, const Eigen::VectorXd& a) {
  Eigen::VectorXd g = -p.correlation;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a[j] != 0.0) g.noalias() += p.G().col(j) * a[j];
  }
  return 2.0 * g;
}

Eigen::MatrixXd SubMatrix(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = m(idx[r], idx[c]);
  }
  return out;
}

Eigen::VectorXd SolveSymmetric(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs) {
  // Relative pivot size below which m is treated as singular.
  constexpr double kRankTolerance = 1e-11;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (pivots.minCoeff() > kRankTolerance * pivots.maxCoeff()) {
      Eigen::VectorXd x = ldlt.solve(rhs);
      if (x.allFinite()) return x;
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(kRankTolerance);
  cod.compute(m);
  return cod.solve(rhs);
}

// Objective restricted to an index set, all other coefficients being zero.
double RestrictedValue(const Eigen::MatrixXd& g_aa, const Eigen::VectorXd& c_a, double lambda,
                       const Eigen::VectorXd& x) {
  return x.dot(g_aa * x) - 2.0 * c_a.dot(x) + lambda * x.lpNorm<1>();
}

// Exact minimisation of the (convex, piecewise quadratic) objective on the
// segment x + t d, t in [0, 1]. Returns the chosen t; coordinates that cross
// zero exactly at t are reported through `zeroed`.
double LineSearch(const Eigen::MatrixXd& g_aa, const Eigen::VectorXd& c_a, double lambda,
                  const Eigen::VectorXd& x, const Eigen::VectorXd& d, std::vector<int>& zeroed) {
  std::vector<double> breaks{0.0, 1.0};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (d[i] == 0.0) continue;
    const double t = -x[i] / d[i];
    if (t > 0.0 && t < 1.0) breaks.push_back(t);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const Eigen::VectorXd gd = g_aa * d;
  const double q2 = d.dot(gd);
  const double q1 = 2.0 * x.dot(gd) - 2.0 * c_a.dot(d);

  auto value_at = [&](double t) { return RestrictedValue(g_aa, c_a, lambda, x + t * d); };

  std::vector<double> candidates = breaks;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    const double mid = 0.5 * (lo + hi);
    double slope = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) slope += Sign(x[i] + mid * d[i]) * d[i];
    slope *= lambda;
    if (q2 > 0.0) {
      const double t = std::clamp(-(q1 + slope) / (2.0 * q2), lo, hi);
      candidates.push_back(t);
    }
  }

  double best_t = 0.0;
  double best_value = value_at(0.0);
  for (double t : candidates) {
    const double v = value_at(t);
    if (v < best_value || (v == best_value && t > best_t)) {
      best_value = v;
      best_t = t;
    }
  }
  zeroed.clear();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (d[i] != 0.0 && -x[i] / d[i] == best_t) zeroed.push_back(static_cast<int>(i));
  }
  return best_t;
}

// Cyclic coordinate descent on the Gram problem, starting from a.
void CoordinateDescent(const GramProblem& p, Eigen::VectorXd& a, const SparseConfig& config) {
  const Eigen::Index k = a.size();
  Eigen::VectorXd ga = p.G() * a;
  const int max_sweeps = std::max(100, config.max_iterations * 20);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const double gii = p.G()(i, i);
      double next = 0.0;
      if (gii > 0.0) {
        const double rho = p.correlation[i] - (ga[i] - gii * a[i]);
        const double shrunk = std::max(std::abs(rho) - 0.5 * p.lambda, 0.0);
        next = Sign(rho) * shrunk / gii;
      }
      const double delta = next - a[i];
      if (delta != 0.0) {
        ga.noalias() += p.G().col(i) * delta;
        a[i] = next;
      }
    }
    if (sweep % 10 == 9 && KktResidual(p, a) <= 0.5 * config.tolerance) return;
  }
}

// Re-solves the sign-restricted system on the current support; keeps the
// result only if it is sign-consistent and reduces the optimality residual.
void PolishSupport(const GramProblem& p, Eigen::VectorXd& a) {
  std::vector<int> support;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != 0.0) support.push_back(static_cast<int>(i));
  }
  if (support.empty()) return;
  const auto n = static_cast<Eigen::Index>(support.size());
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs[i] = p.correlation[support[i]] - 0.5 * p.lambda * Sign(a[support[i]]);
  }
  const Eigen::VectorXd xs = SolveSymmetric(SubMatrix(p.G(), support), rhs);
  Eigen::VectorXd candidate = Eigen::VectorXd::Zero(a.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (Sign(xs[i]) != Sign(a[support[i]])) return;
    candidate[support[i]] = xs[i];
  }
  if (KktResidual(p, candidate) < KktResidual(p, a)) a = candidate;
}

}  // namespace

SparseCode SparseCode::FromCoefficients(Eigen::VectorXd coefficients) {
  SparseCode code;
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    if (coefficients[i] != 0.0) code.support.push_back(static_cast<int>(i));
  }
  code.coefficients = std::move(coefficients);
  return code;
}

SparseCode SparseCode::Zero(int atoms) {
  return FromCoefficients(Eigen::VectorXd::Zero(atoms));
}

GramProblem GramProblem::FromTerms(std::span<const QuadraticTerm> terms, double lambda) {
  if (terms.empty()) throw std::invalid_argument("L1 problem needs at least one quadratic term");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and non-negative");
  }
  const Eigen::Index k = terms.front().matrix.get().cols();
  GramProblem p;
  p.lambda = lambda;
  p.gram = Eigen::MatrixXd::Zero(k, k);
  p.correlation = Eigen::VectorXd::Zero(k);
  for (const QuadraticTerm& t : terms) {
    const Eigen::MatrixXd& b = t.matrix.get();
    const Eigen::VectorXd& z = t.target.get();
    if (b.cols() != k) throw std::invalid_argument("quadratic terms disagree on code length");
    if (b.rows() != z.size()) throw std::invalid_argument("matrix rows do not match target length");
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) {
      throw std::invalid_argument("quadratic weights must be finite and non-negative");
    }
    if (!AllFinite(b) || !z.allFinite()) throw std::invalid_argument("non-finite L1 problem data");
    if (t.weight == 0.0) continue;
    p.gram.noalias() += t.weight * (b.transpose() * b);
    p.correlation.noalias() += t.weight * (b.transpose() * z);
  }
  return p;
}

double GramProblem::Value(const Eigen::VectorXd& a) const {
  return a.dot(G() * a) - 2.0 * correlation.dot(a) + lambda * a.lpNorm<1>();
}

double KktResidual(const GramProblem& p, const Eigen::VectorXd& a) {
  const Eigen::VectorXd g = SmoothGradient(p, a);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double r = a[i] != 0.0 ? std::abs(g[i] + p.lambda * Sign(a[i]))
                                 : std::max(0.0, std::abs(g[i]) - p.lambda);
    worst = std::max(worst, r);
  }
  return worst;
}

SparseCode SolveGram(const GramProblem& p, const SparseConfig& config,
                     const Eigen::VectorXd* warm_start) {
  const Eigen::Index k = p.correlation.size();
  if (p.G().rows() != k || p.G().cols() != k) {
    throw std::invalid_argument("Gram matrix does not match correlation length");
  }
  if (!p.G().allFinite() || !p.correlation.allFinite() || !std::isfinite(p.lambda) ||
      p.lambda < 0.0) {
    throw std::invalid_argument("non-finite or negative L1 problem data");
  }

  Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
  if (warm_start != nullptr) {
    if (warm_start->size() != k || !warm_start->allFinite()) {
      throw std::invalid_argument("warm start has wrong length or non-finite entries");
    }
    a = *warm_start;
    // A warm start is only a hint; never start worse than zero.
    if (p.Value(a) > 0.0) a.setZero();
  }

  const double half_tol = 0.5 * config.tolerance;
  std::vector<int> active;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (a[i] != 0.0) active.push_back(static_cast<int>(i));
  }
  std::vector<double> theta;
  for (int i : active) theta.push_back(Sign(a[i]));

  bool converged = false;
  int stalls = 0;
  std::vector<int> zeroed;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const Eigen::VectorXd g = SmoothGradient(p, a);

    bool active_optimal = true;
    for (int i : active) {
      if (std::abs(g[i] + p.lambda * Sign(a[i])) > half_tol) {
        active_optimal = false;
        break;
      }
    }
    if (active_optimal) {
      int pick = -1;
      double best = p.lambda + half_tol;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (a[i] == 0.0 && std::abs(g[i]) > best) {
          best = std::abs(g[i]);
          pick = static_cast<int>(i);
        }
      }
      if (pick < 0) {
        converged = true;
        break;
      }
      active.push_back(pick);
      theta.push_back(-Sign(g[pick]));
    }

    // Feature-sign step on the active set.
    const auto n = static_cast<Eigen::Index>(active.size());
    const Eigen::MatrixXd g_aa = SubMatrix(p.G(), active);
    Eigen::VectorXd c_a(n), x_a(n), rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      c_a[i] = p.correlation[active[i]];
      x_a[i] = a[active[i]];
      rhs[i] = c_a[i] - 0.5 * p.lambda * theta[i];
    }
    const Eigen::VectorXd target = SolveSymmetric(g_aa, rhs);
    Eigen::VectorXd dir = target - x_a;
    {
      // Singular G_aa with rhs outside its range: the sign-restricted
      // quadratic is unbounded along the null-space component of rhs, so
      // walk that way far enough to pass every zero crossing and let the
      // exact line search pick the breakpoint.
      const Eigen::VectorXd null_part = rhs - g_aa * target;
      if (null_part.norm() > 1e-9 * (rhs.norm() + 1e-300)) {
        double reach = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (null_part[i] != 0.0) reach = std::max(reach, -x_a[i] / null_part[i]);
        }
        if (reach > 0.0) dir = reach * null_part;
      }
    }
    const double before = RestrictedValue(g_aa, c_a, p.lambda, x_a);
    const double t = LineSearch(g_aa, c_a, p.lambda, x_a, dir, zeroed);
    Eigen::VectorXd next = x_a + t * dir;
    for (int z : zeroed) next[z] = 0.0;
    const double after = RestrictedValue(g_aa, c_a, p.lambda, next);

    if (!(after < before - 1e-15 * (1.0 + std::abs(before)))) {
      if (++stalls > 3) break;
    } else {
      stalls = 0;
    }

    std::vector<int> kept;
    std::vector<double> kept_theta;
    for (Eigen::Index i = 0; i < n; ++i) {
      a[active[i]] = next[i];
      if (next[i] != 0.0) {
        kept.push_back(active[i]);
        kept_theta.push_back(Sign(next[i]));
      }
    }
    active.swap(kept);
    theta.swap(kept_theta);
  }

  double residual = KktResidual(p, a);
  if (!converged || residual > config.tolerance) {
    PolishSupport(p, a);
    residual = KktResidual(p, a);
  }
  if (residual > config.tolerance) {
    CoordinateDescent(p, a, config);
    PolishSupport(p, a);
    residual = KktResidual(p, a);
  }
  if (residual > config.tolerance) {
    throw L1ConvergenceError("L1 solver did not reach optimality residual " +
                                 std::to_string(config.tolerance) + " (got " +
                                 std::to_string(residual) + ")",
                             SparseCode::FromCoefficients(a), residual);
  }
  return SparseCode::FromCoefficients(std::move(a));
}

SparseCode L1Solve(const Eigen::MatrixXd& dictionary, const Eigen::VectorXd& target, double lambda,
                   std::span<const QuadraticTerm> extras, const SparseConfig& config) {
  std::vector<QuadraticTerm> terms;
  terms.reserve(extras.size() + 1);
  terms.push_back({dictionary, target, 1.0});
  terms.insert(terms.end(), extras.begin(), extras.end());
  return SolveGram(GramProblem::FromTerms(terms, lambda), config);
}

double L1Objective(const Eigen::MatrixXd& dictionary, const Eigen::VectorXd& target, double lambda,
                   std::span<const QuadraticTerm> extras, const Eigen::VectorXd& a) {
  double value = lambda * a.lpNorm<1>() + (dictionary * a - target).squaredNorm();
  for (const QuadraticTerm& t : extras) {
    value += t.weight * (t.matrix.get() * a - t.target.get()).squaredNorm();
  }
  return value;
}

}  // namespace jsr::sparse
