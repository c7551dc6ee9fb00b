#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ascii/types.hpp"

namespace ascii {

// Multiclass exponential loss exp(-(1/K) * y . f) for one coded label row y
// and additive score row f. Overflow saturates instead of producing inf.
double exp_loss(std::span<const double> y, std::span<const double> f, int K);

// Weighted fraction of reward-1 samples. Rejects zero total weight.
double weighted_accuracy(const IgnoranceVector& w, const RewardVector& r);

// Vote weight for an agent judged on its own weighted accuracy:
//   alpha = log(r_bar / (1 - r_bar)) + log(K - 1).
// r_bar is clamped into [kRateEps, 1 - kRateEps] first, so the result is
// always finite. Positive exactly when r_bar exceeds the 1/K chance rate.
double compute_alpha_lead(double r_bar, int K);

// Vote weight for the second agent of a two-agent round, given the first
// agent's alpha and both reward vectors. Closed form of the stagewise
// one-dimensional minimization:
//   alpha = log(K-1) + log(e^{a/(K-1)^2} n_nb + e^{-a/(K-1)} n_ab)
//                    - log(e^{a/(K-1)^2} n_nw + e^{-a/(K-1)} n_aw)
// where a is alpha_prev and n_ab, n_nb, n_aw, n_nw split the weight mass by
// (prev right/wrong) x (own right/wrong). A zero denominator mass is
// clamped the same way compute_alpha_lead clamps r_bar.
double compute_alpha_follow(const IgnoranceVector& w, const RewardVector& r_prev,
                            const RewardVector& r_own, double alpha_prev, int K);

// Vote weight for position m of a chain round, given the accumulated
// alpha-weighted vote products of the agents that already acted:
//   alpha = log( sum_{r=1} w_i e^{-acc_i/K} / sum_{r=0} w_i e^{-acc_i/K} )
//         + log(K - 1).
// The positive scale factor relating this to the literal stagewise argmin
// is dropped; predictions and the stop rule are invariant to it. With an
// all-zero accumulator this reduces to compute_alpha_lead.
double compute_alpha_chain(const IgnoranceVector& w, const ScoreAccumulator& acc,
                           const RewardVector& r_own, int K);

// Multiplicative reweighting toward the samples the model got wrong:
//   w_i' = w_i * exp(alpha * (1 - r_i)), renormalized to sum one.
// After normalization this equals the exact stagewise weight update.
IgnoranceVector update_ignorance(const IgnoranceVector& w, const RewardVector& r,
                                 double alpha);

struct StopDecision {
  bool stop = false;
  std::string reason;
};

// Stop when the weighted accuracy is no better than chance (r_bar <= 1/K,
// equivalently alpha <= 0), or, when a holdout error history is supplied,
// when the trailing `patience` holdout errors contain no strict decrease.
// patience must be >= 1 when a history is given; a plateau needs at least
// `patience` entries before it can trigger.
StopDecision should_stop(double r_bar, double alpha, int K,
                         const std::vector<double>* holdout_errors = nullptr,
                         int patience = 0);

}  // namespace ascii
