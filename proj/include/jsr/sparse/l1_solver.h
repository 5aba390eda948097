#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "jsr/common/errors.h"

namespace jsr::sparse {

struct SparseConfig {
  double lambda = 1.0;
  int max_iterations = 2000;
  // Bound on the subgradient optimality residual at return.
  double tolerance = 1e-8;
};

struct SparseCode {
  Eigen::VectorXd coefficients;
  std::vector<int> support;  // indices with nonzero coefficients, ascending

  static SparseCode FromCoefficients(Eigen::VectorXd coefficients);
  static SparseCode Zero(int atoms);
};

// weight * ||matrix * a - target||^2
struct QuadraticTerm {
  std::reference_wrapper<const Eigen::MatrixXd> matrix;
  std::reference_wrapper<const Eigen::VectorXd> target;
  double weight = 1.0;
};

class L1ConvergenceError : public ConvergenceError {
 public:
  L1ConvergenceError(const std::string& what, SparseCode best, double residual)
      : ConvergenceError(what), best_(std::move(best)), residual_(residual) {}
  const SparseCode& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  SparseCode best_;
  double residual_;
};

// An L1-regularised least-squares problem in Gram form:
//   minimise a' G a - 2 c' a + lambda |a|_1   (+ constant)
struct GramProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd correlation;
  double lambda = 0.0;
  // When set, used instead of `gram` (lets many problems share one matrix).
  const Eigen::MatrixXd* shared_gram = nullptr;

  const Eigen::MatrixXd& G() const { return shared_gram != nullptr ? *shared_gram : gram; }

  static GramProblem FromTerms(std::span<const QuadraticTerm> terms, double lambda);
  double Value(const Eigen::VectorXd& a) const;
};

// Largest violation of the subgradient optimality conditions at a:
// |g_i + lambda sign(a_i)| on the support, max(0, |g_i| - lambda) off it,
// with g the gradient of the smooth part.
double KktResidual(const GramProblem& problem, const Eigen::VectorXd& a);

// Feature-sign search on a Gram-form problem. Falls back to cyclic coordinate
// descent when the active-set iteration stalls. Throws L1ConvergenceError if
// the optimality residual is still above config.tolerance at the cap.
SparseCode SolveGram(const GramProblem& problem, const SparseConfig& config,
                     const Eigen::VectorXd* warm_start = nullptr);

// minimise lambda |a|_1 + ||D a - y||^2 + sum_i w_i ||B_i a - z_i||^2
SparseCode L1Solve(const Eigen::MatrixXd& dictionary, const Eigen::VectorXd& target,
                   double lambda, std::span<const QuadraticTerm> extras = {},
                   const SparseConfig& config = {});

// The objective above, evaluated directly from the matrices.
double L1Objective(const Eigen::MatrixXd& dictionary, const Eigen::VectorXd& target,
                   double lambda, std::span<const QuadraticTerm> extras,
                   const Eigen::VectorXd& a);

}  // namespace jsr::sparse
