#include "jsr/ranking/bradley_terry.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace jsr::ranking {
namespace {

double Logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 / (1 + exp(-x))) without overflow.
double LogLogistic(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(Trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void WinningMatrix::Validate() const {
  const std::size_t m = labels.size();
  if (m < 2) throw std::invalid_argument("need at least two methods");
  if (counts.size() != m) throw std::invalid_argument("winning matrix must be square");
  for (std::size_t i = 0; i < m; ++i) {
    if (counts[i].size() != m) throw std::invalid_argument("winning matrix must be square");
    for (std::size_t j = 0; j < m; ++j) {
      if (counts[i][j] < 0) throw std::invalid_argument("counts must be non-negative");
    }
    if (counts[i][i] != 0) throw std::invalid_argument("diagonal counts must be zero");
  }
}

double PredictPreference(const ScoreVector& s, int i, int j) {
  const double d = s.scores.at(static_cast<std::size_t>(i)) - s.scores.at(static_cast<std::size_t>(j));
  // 1 - p is exact for p >= 0.5, so the two directions sum to exactly 1.
  return d >= 0.0 ? Logistic(d) : 1.0 - Logistic(-d);
}

double LogLikelihood(const WinningMatrix& w, const std::vector<double>& scores) {
  double ll = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    for (int j = 0; j < w.size(); ++j) {
      if (w.counts[i][j] > 0) ll += static_cast<double>(w.counts[i][j]) * LogLogistic(scores[i] - scores[j]);
    }
  }
  return ll;
}

ScoreVector FitBradleyTerry(const WinningMatrix& w, int anchor, const FitOptions& options) {
  w.Validate();
  const int m = w.size();
  if (anchor < 0 || anchor >= m) throw std::invalid_argument("anchor index out of range");

  // Every method must be linked to the anchor through observed comparisons.
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  std::queue<int> frontier;
  seen[anchor] = true;
  frontier.push(anchor);
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j = 0; j < m; ++j) {
      if (!seen[j] && w.counts[i][j] + w.counts[j][i] > 0) {
        seen[j] = true;
        frontier.push(j);
      }
    }
  }
  std::string unreachable;
  for (int i = 0; i < m; ++i) {
    if (!seen[i]) unreachable += (unreachable.empty() ? "" : ", ") + w.labels[i];
  }
  if (!unreachable.empty()) {
    throw UnderdeterminedError("no comparisons link these methods to '" + w.labels[anchor] +
                               "': " + unreachable);
  }

  std::vector<int> free;
  for (int i = 0; i < m; ++i) {
    if (i != anchor) free.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(free.size());

  ScoreVector out;
  out.anchor = anchor;
  out.scores.assign(static_cast<std::size_t>(m), options.anchor_score);

  auto gradient = [&](const std::vector<double>& s) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const int i = free[a];
      for (int j = 0; j < m; ++j) {
        const double total = static_cast<double>(w.counts[i][j] + w.counts[j][i]);
        if (total == 0.0) continue;
        g[a] += static_cast<double>(w.counts[i][j]) - total * Logistic(s[i] - s[j]);
      }
    }
    return g;
  };

  double ll = LogLikelihood(w, out.scores);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd g = gradient(out.scores);
    out.gradient_norm = g.norm();
    out.iterations = iter;
    if (out.gradient_norm <= options.tolerance) return out;

    // Negative Hessian of the log-likelihood over the free scores.
    Eigen::MatrixXd neg_h = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(m), -1);
    for (Eigen::Index a = 0; a < n; ++a) slot[free[a]] = a;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double total = static_cast<double>(w.counts[i][j] + w.counts[j][i]);
        if (total == 0.0) continue;
        const double p = Logistic(out.scores[i] - out.scores[j]);
        const double c = total * p * (1.0 - p);
        if (slot[i] >= 0) neg_h(slot[i], slot[i]) += c;
        if (slot[j] >= 0) neg_h(slot[j], slot[j]) += c;
        if (slot[i] >= 0 && slot[j] >= 0) {
          neg_h(slot[i], slot[j]) -= c;
          neg_h(slot[j], slot[i]) -= c;
        }
      }
    }
    Eigen::VectorXd step = neg_h.ldlt().solve(g);
    if (!step.allFinite()) step = g;

    bool improved = false;
    for (double scale = 1.0; scale > 1e-12; scale *= 0.5) {
      std::vector<double> trial = out.scores;
      for (Eigen::Index a = 0; a < n; ++a) trial[free[a]] += scale * step[a];
      const double trial_ll = LogLikelihood(w, trial);
      if (trial_ll >= ll) {
        improved = trial_ll > ll || scale == 1.0;
        out.scores = std::move(trial);
        ll = trial_ll;
        break;
      }
    }
    if (!improved) {
      // Near the optimum the likelihood stops resolving Newton steps; the
      // gradient still does, so take the full step while it shrinks.
      std::vector<double> trial = out.scores;
      for (Eigen::Index a = 0; a < n; ++a) trial[free[a]] += step[a];
      const double trial_norm = gradient(trial).norm();
      if (trial_norm < out.gradient_norm) {
        out.scores = std::move(trial);
        ll = LogLikelihood(w, out.scores);
        continue;
      }
      break;
    }
  }
  const Eigen::VectorXd g = gradient(out.scores);
  out.gradient_norm = g.norm();
  if (out.gradient_norm <= options.tolerance) return out;
  throw ConvergenceError(
      "Bradley-Terry fit did not converge (gradient norm " + std::to_string(out.gradient_norm) +
      "); some method may never win or never lose, so its score is unbounded");
}

WinningMatrix ParseWinningMatrixCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    rows.push_back(SplitCsvLine(line));
  }
  if (rows.empty()) throw FormatError("winning matrix CSV is empty");

  WinningMatrix w;
  std::vector<std::string> header = rows.front();
  if (!header.empty() && header.front().empty()) {
    header.erase(header.begin());
  }
  w.labels = header;
  const std::size_t m = w.labels.size();
  if (rows.size() != m + 1) {
    throw FormatError("expected " + std::to_string(m) + " count rows after the header, got " +
                      std::to_string(rows.size() - 1));
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<std::string> fields = rows[r];
    if (fields.size() == m + 1) {
      if (fields.front() != w.labels[r - 1]) {
        throw FormatError("row " + std::to_string(r) + " is labelled '" + fields.front() +
                          "' but the header expects '" + w.labels[r - 1] + "'");
      }
      fields.erase(fields.begin());
    }
    if (fields.size() != m) {
      throw FormatError("row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                        " counts, expected " + std::to_string(m));
    }
    std::vector<long long> counts;
    for (const std::string& f : fields) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != f.size() || f.empty()) throw FormatError("not an integer count: '" + f + "'");
      counts.push_back(v);
    }
    w.counts.push_back(std::move(counts));
  }
  try {
    w.Validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return w;
}

WinningMatrix ReadWinningMatrixCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseWinningMatrixCsv(buf.str());
}

}  // namespace jsr::ranking
