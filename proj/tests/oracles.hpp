#pragma once

// Independent reference implementations used to pin expected values in the
// test suites.  Everything here is deliberately naive: exhaustive search,
// derivative-free minimization, finite differences.  Nothing in this header
// calls back into the library's own closed-form update rules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <vector>

#include "ascii/types.hpp"

namespace oracle {

// Derivative-free golden-section minimizer for a unimodal function on
// [lo, hi].  300 shrink steps give far more precision than any tolerance
// the tests assert against.
inline double golden_min(const std::function<double(double)>& f, double lo,
                         double hi, int steps = 300) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < steps; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Inner product of the coded label vector for `truth` with the coded vote
// vector for `predicted`, written out from the definition of the coding
// (+1 on the own class, -1/(K-1) elsewhere).
inline double coded_vote(int truth, int predicted, int num_classes) {
  const double k = num_classes;
  double total = 0.0;
  for (int j = 1; j <= num_classes; ++j) {
    const double y = (j == truth) ? 1.0 : -1.0 / (k - 1.0);
    const double g = (j == predicted) ? 1.0 : -1.0 / (k - 1.0);
    total += y * g;
  }
  return total;
}

// Stagewise exponential loss of adding a classifier with votes `pred` at
// weight `alpha` to an ensemble whose current sample weights are `w`.
inline double stage_loss(std::span<const double> w, std::span<const int> truth,
                         std::span<const int> pred, int num_classes,
                         double alpha) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w[i] * std::exp(-(alpha / num_classes) *
                             coded_vote(truth[i], pred[i], num_classes));
  }
  return total;
}

// One axis-aligned threshold rule: rows with feature <= threshold get
// `left`, the rest get `right`.
struct StumpChoice {
  int feature = 0;
  double threshold = 0.0;
  int left = 1;
  int right = 1;
  std::vector<int> pred;
  double error_mass = 0.0;  // weighted 0/1 error, unnormalized
};

// Every prediction vector any single-split stump can realize on X, paired
// with its weighted 0/1 error.  Thresholds are midpoints between distinct
// sorted feature values plus one above the maximum (making the rule
// constant), so constant classifiers are included.
inline std::vector<StumpChoice> all_stumps(const ascii::FeatureMatrix& X,
                                           std::span<const int> labels,
                                           std::span<const double> w,
                                           int num_classes) {
  std::vector<StumpChoice> out;
  for (int j = 0; j < static_cast<int>(X.cols); ++j) {
    std::vector<double> values;
    for (std::size_t i = 0; i < X.rows; ++i) values.push_back(X.at(i, j));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> thresholds;
    for (std::size_t v = 0; v + 1 < values.size(); ++v)
      thresholds.push_back(0.5 * (values[v] + values[v + 1]));
    thresholds.push_back(values.back() + 1.0);
    for (double thr : thresholds) {
      for (int left = 1; left <= num_classes; ++left) {
        for (int right = 1; right <= num_classes; ++right) {
          StumpChoice s;
          s.feature = j;
          s.threshold = thr;
          s.left = left;
          s.right = right;
          s.pred.resize(X.rows);
          for (std::size_t i = 0; i < X.rows; ++i)
            s.pred[i] = X.at(i, j) <= thr ? left : right;
          for (std::size_t i = 0; i < X.rows; ++i)
            if (s.pred[i] != labels[i]) s.error_mass += w[i];
          out.push_back(std::move(s));
        }
      }
    }
  }
  return out;
}

// The set of distinct prediction vectors attaining the minimum of `score`
// over the candidates, compared with an absolute tolerance.
inline std::set<std::vector<int>> argmin_predictions(
    const std::vector<StumpChoice>& candidates,
    const std::function<double(const StumpChoice&)>& score, double tol) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::min(best, score(c));
  std::set<std::vector<int>> out;
  for (const auto& c : candidates)
    if (score(c) <= best + tol) out.insert(c.pred);
  return out;
}

// Central finite-difference gradient of f at x.
inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double hi = f(x);
    x[i] = keep - h;
    const double lo = f(x);
    x[i] = keep;
    g[i] = (hi - lo) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
