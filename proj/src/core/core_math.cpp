#include "ascii/core_math.hpp"

#include <algorithm>
#include <cmath>

namespace ascii {

double exp_loss(std::span<const double> y, std::span<const double> f, int K) {
  if (K < 2) throw std::invalid_argument("exp_loss: K must be at least 2");
  if (y.size() != f.size() || y.size() != static_cast<size_t>(K))
    throw std::invalid_argument("exp_loss: y and f must both have length K");
  double dot = 0.0;
  for (size_t k = 0; k < y.size(); ++k) dot += y[k] * f[k];
  return safe_exp(-dot / K);
}

double weighted_accuracy(const IgnoranceVector& w, const RewardVector& r) {
  w.validate();
  r.validate();
  if (w.size() != r.size())
    throw std::invalid_argument("weighted_accuracy: size mismatch");
  double total = 0.0, hit = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    total += w.weights[i];
    if (r.values[i]) hit += w.weights[i];
  }
  if (!(total > 0.0))
    throw std::invalid_argument("weighted_accuracy: total weight must be positive");
  return hit / total;
}

double compute_alpha_lead(double r_bar, int K) {
  if (K < 2) throw std::invalid_argument("compute_alpha_lead: K must be at least 2");
  double r = clamp_rate(r_bar);
  return std::log(r / (1.0 - r)) + std::log(static_cast<double>(K - 1));
}

namespace {

// Shared tail of the follow/chain formulas: a log-odds of two non-negative
// masses plus log(K-1), with the same clamping as compute_alpha_lead.
double alpha_from_masses(double hit_mass, double miss_mass, int K) {
  double total = hit_mass + miss_mass;
  if (!(total > 0.0))
    throw std::invalid_argument("alpha: total mass must be positive");
  return compute_alpha_lead(hit_mass / total, K);
}

}  // namespace

double compute_alpha_follow(const IgnoranceVector& w, const RewardVector& r_prev,
                            const RewardVector& r_own, double alpha_prev, int K) {
  if (K < 2) throw std::invalid_argument("compute_alpha_follow: K must be at least 2");
  w.validate();
  r_prev.validate();
  r_own.validate();
  const size_t n = w.size();
  if (r_prev.size() != n || r_own.size() != n)
    throw std::invalid_argument("compute_alpha_follow: size mismatch");
  const double km1 = static_cast<double>(K - 1);
  const double c_right = safe_exp(-alpha_prev / km1);        // prev was right
  const double c_wrong = safe_exp(alpha_prev / (km1 * km1)); // prev was wrong
  double hit = 0.0, miss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double v = w.weights[i] * (r_prev.values[i] ? c_right : c_wrong);
    if (r_own.values[i])
      hit += v;
    else
      miss += v;
  }
  return alpha_from_masses(hit, miss, K);
}

double compute_alpha_chain(const IgnoranceVector& w, const ScoreAccumulator& acc,
                           const RewardVector& r_own, int K) {
  if (K < 2) throw std::invalid_argument("compute_alpha_chain: K must be at least 2");
  w.validate();
  r_own.validate();
  const size_t n = w.size();
  if (acc.scores.size() != n || r_own.size() != n)
    throw std::invalid_argument("compute_alpha_chain: size mismatch");
  double hit = 0.0, miss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double v = w.weights[i] * safe_exp(-acc.scores[i] / K);
    if (r_own.values[i])
      hit += v;
    else
      miss += v;
  }
  return alpha_from_masses(hit, miss, K);
}

IgnoranceVector update_ignorance(const IgnoranceVector& w, const RewardVector& r,
                                 double alpha) {
  w.validate();
  r.validate();
  if (w.size() != r.size())
    throw std::invalid_argument("update_ignorance: size mismatch");
  IgnoranceVector out;
  out.weights.resize(w.size());
  const double bump = safe_exp(alpha);
  double total = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    double v = w.weights[i] * (r.values[i] ? 1.0 : bump);
    out.weights[i] = v;
    total += v;
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::invalid_argument("update_ignorance: updated mass must be positive and finite");
  for (double& v : out.weights) v /= total;
  return out;
}

StopDecision should_stop(double r_bar, double alpha, int K,
                         const std::vector<double>* holdout_errors, int patience) {
  if (K < 2) throw std::invalid_argument("should_stop: K must be at least 2");
  if (r_bar <= 1.0 / K)
    return {true, "weighted accuracy at or below chance"};
  if (alpha <= 0.0) return {true, "non-positive vote weight"};
  if (holdout_errors != nullptr) {
    if (patience < 1)
      throw std::invalid_argument("should_stop: patience must be >= 1 with a holdout history");
    const auto& h = *holdout_errors;
    // Trailing window of `patience` entries with no strict decrease inside
    // it. A window of one entry has nothing to compare, so patience 1 is
    // widened to a two-entry window (stop as soon as a round fails to
    // improve on the previous one).
    const size_t window = std::max<size_t>(static_cast<size_t>(patience), 2);
    if (h.size() >= window) {
      bool plateau = true;
      for (size_t i = h.size() - window + 1; i < h.size(); ++i) {
        if (h[i] < h[i - 1]) {
          plateau = false;
          break;
        }
      }
      if (plateau) return {true, "holdout error plateau"};
    }
  }
  return {false, ""};
}

}  // namespace ascii
