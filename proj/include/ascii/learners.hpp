#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ascii/types.hpp"

namespace ascii {

enum class WeakKind : uint8_t { stump = 1, tree = 2, forest = 3, logistic = 4 };

const char* weak_kind_name(WeakKind k);

// Hyperparameters for one weak fit. Only the fields relevant to `kind` are
// read. All randomness (bootstraps, per-split feature subsampling) comes
// from `seed`.
struct WeakModelSpec {
  WeakKind kind = WeakKind::stump;
  int depth = 1;               // tree, forest
  int num_trees = 10;          // forest
  double learning_rate = 0.1;  // logistic
  int iterations = 100;        // logistic
  double l2 = 0.0;             // logistic
  uint64_t seed = 0;
  bool bootstrap = true;          // forest: weighted bootstrap per tree
  bool feature_subsample = true;  // forest: sqrt(p) features per split

  void validate() const;
};

// A trained weak classifier. Models are local state: they are serialized
// only for on-disk checkpoints, never sent to another agent.
class WeakModel {
 public:
  virtual ~WeakModel() = default;
  virtual WeakKind kind() const = 0;
  virtual int num_classes() const = 0;
  // Predicted class in [1, K] for one feature row.
  virtual int predict(std::span<const double> row) const = 0;
  // Versioned binary blob (little-endian payload).
  virtual std::vector<uint8_t> save() const = 0;

  std::vector<int> predict_all(const FeatureMatrix& X) const;
};

std::shared_ptr<const WeakModel> load_weak_model(std::span<const uint8_t> blob);

// Exact minimizer of the weighted 0/1 error over single axis-aligned
// splits (feature, threshold at a midpoint of consecutive distinct values,
// class on each side). Ties break toward the lowest feature index, then the
// lowest threshold, then the lowest class indices. Rows go left when
// x <= threshold. Degenerate inputs (no splittable feature) yield the
// constant majority-weight predictor.
std::shared_ptr<const WeakModel> fit_stump(const ClassVector& y,
                                           const FeatureMatrix& X,
                                           const IgnoranceVector& w);

// Greedy recursive splitter. Interior levels maximize the weighted Gini
// decrease; the last level before the leaves minimizes weighted 0/1 error
// directly (so a depth-1 tree is exactly fit_stump). Leaves predict the
// class with the largest weighted mass. Recursion stops at `depth`, on pure
// nodes, and on nodes with weighted mass below 1e-9. Zero-gain splits are
// still taken on impure nodes so patterns like XOR resolve at depth 2.
std::shared_ptr<const WeakModel> fit_tree(const ClassVector& y,
                                          const FeatureMatrix& X,
                                          const IgnoranceVector& w, int depth);

// Bagged trees: each tree fits a size-n resample drawn with replacement
// with probability proportional to w (so the ignorance weights shape the
// bootstrap, not the node splits) and subsamples round(sqrt(p)) candidate
// features per split. Prediction is a plurality vote, ties toward the
// lowest class. With num_trees=1, bootstrap=false, feature_subsample=false
// this reduces to fit_tree.
std::shared_ptr<const WeakModel> fit_forest(const ClassVector& y,
                                            const FeatureMatrix& X,
                                            const IgnoranceVector& w,
                                            const WeakModelSpec& spec);

// Weighted multinomial logistic regression trained by full-batch gradient
// descent from a zero initialization, with an unpenalized intercept and L2
// penalty (l2/2)*||W||^2 on the slopes. Sample weights are normalized to
// sum one, so fits are invariant to positive rescaling of w. Prediction is
// the argmax logit, ties toward the lowest class (so the untrained model
// predicts class 1 everywhere).
std::shared_ptr<const WeakModel> fit_logistic(const ClassVector& y,
                                              const FeatureMatrix& X,
                                              const IgnoranceVector& w,
                                              const WeakModelSpec& spec);

// Analytic gradient of the fit_logistic objective at parameters W (layout
// num_classes blocks of p slopes followed by one intercept). Exposed for
// finite-difference verification.
std::vector<double> logistic_gradient(const ClassVector& y, const FeatureMatrix& X,
                                      const IgnoranceVector& w, double l2,
                                      const std::vector<double>& params);
double logistic_objective(const ClassVector& y, const FeatureMatrix& X,
                          const IgnoranceVector& w, double l2,
                          const std::vector<double>& params);

struct WstResult {
  std::shared_ptr<const WeakModel> model;
  RewardVector reward;  // reward[i] = 1 iff model predicts row i's class
};

// Weighted supervised training oracle: fits the weak model named by `spec`
// against the ignorance weights and reports the per-sample reward bits.
// Requires w normalized to sum one.
WstResult wst(const LabelMatrix& Y, const FeatureMatrix& X,
              const IgnoranceVector& w, const WeakModelSpec& spec);

}  // namespace ascii
