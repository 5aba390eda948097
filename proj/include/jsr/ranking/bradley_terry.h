#pragma once

#include <string>
#include <vector>

#include "jsr/common/errors.h"

namespace jsr::ranking {

// counts[i][j]: how often method i was preferred over method j.
struct WinningMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<long long>> counts;

  int size() const { return static_cast<int>(labels.size()); }
  // Throws std::invalid_argument on a non-square matrix, negative counts or
  // a nonzero diagonal.
  void Validate() const;
};

struct ScoreVector {
  std::vector<double> scores;
  int anchor = 0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct FitOptions {
  double anchor_score = 1.0;
  double tolerance = 1e-9;
  int max_iterations = 200;
};

// p(i preferred over j) = 1 / (1 + exp(s_j - s_i)).
double PredictPreference(const ScoreVector& scores, int i, int j);

// Sum_ij w_ij log p(i over j).
double LogLikelihood(const WinningMatrix& w, const std::vector<double>& scores);

// Damped Newton-Raphson maximum likelihood with s_anchor fixed. Throws
// UnderdeterminedError when some method is not linked to the anchor through
// nonzero comparisons, ConvergenceError when the maximum is not attained
// (e.g. a method that never loses).
ScoreVector FitBradleyTerry(const WinningMatrix& w, int anchor, const FitOptions& options = {});

// CSV: header row of labels, then one row of counts per label. An optional
// leading label column in count rows is accepted.
WinningMatrix ParseWinningMatrixCsv(const std::string& text);
WinningMatrix ReadWinningMatrixCsv(const std::string& path);

}  // namespace jsr::ranking
