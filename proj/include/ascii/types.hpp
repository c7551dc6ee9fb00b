#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ascii/common.hpp"

namespace ascii {

class WeakModel;

// Dense row-major feature matrix. Column names are optional; when present
// there is exactly one per column.
struct FeatureMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> values;              // rows * cols, row-major
  std::vector<std::string> column_names;   // empty or size cols

  double at(size_t r, size_t c) const { return values[r * cols + c]; }
  double& at(size_t r, size_t c) { return values[r * cols + c]; }
  std::span<const double> row(size_t r) const {
    return std::span<const double>(values.data() + r * cols, cols);
  }
  void validate() const;
};

// Class labels in [1, K]. num_classes is the declared K, which may exceed
// the number of classes actually present.
struct ClassVector {
  std::vector<int> labels;
  int num_classes = 0;

  size_t size() const { return labels.size(); }
  void validate() const;
};

// Signed simplex coding of labels: row i has +1 in the column of the true
// class and -1/(K-1) elsewhere. Rows sum to zero and have squared norm
// K/(K-1). Stored compactly as the class indices; entries are synthesized
// on access.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::vector<int> classes, int num_classes);

  size_t rows() const { return classes_.size(); }
  int num_classes() const { return num_classes_; }
  int class_of(size_t i) const { return classes_[i]; }

  // Entry (i, k) for zero-based column k (class k+1).
  double at(size_t i, int k) const {
    return (k + 1 == classes_[i]) ? 1.0 : -1.0 / (num_classes_ - 1);
  }
  std::vector<double> row(size_t i) const;

  // Inner product of row i with the coded vote for class `predicted`:
  // K/(K-1) when predicted matches the true class, -K/(K-1)^2 otherwise.
  double vote_product(size_t i, int predicted) const;

 private:
  std::vector<int> classes_;
  int num_classes_ = 0;
};

// Builds the coded label matrix. Rejects K < 2 and labels outside [1, K].
LabelMatrix encode_labels(const ClassVector& labels);

// Inner products between coded rows and coded votes, as functions of K.
inline double code_agree(int K) { return static_cast<double>(K) / (K - 1); }
inline double code_disagree(int K) {
  double km1 = static_cast<double>(K - 1);
  return -static_cast<double>(K) / (km1 * km1);
}

// Per-sample ignorance scores: non-negative, and normalized to sum one at
// every protocol hand-off.
struct IgnoranceVector {
  std::vector<double> weights;

  size_t size() const { return weights.size(); }
  double sum() const;
  bool is_normalized(double tol = kNormTol) const;
  void normalize();  // rejects zero or negative total mass
  static IgnoranceVector uniform(size_t n);
  void validate() const;  // non-negative entries
};

// One reward bit per sample: 1 when the weak model got the sample right.
struct RewardVector {
  std::vector<uint8_t> values;

  size_t size() const { return values.size(); }
  void validate() const;  // entries in {0, 1}
};

// Running per-sample sum of alpha-weighted vote products for the agents
// that have acted so far in the current round. Reset to zero at every
// round boundary.
struct ScoreAccumulator {
  std::vector<double> scores;
  int round = 0;

  static ScoreAccumulator zeros(size_t n, int round);
};

// One trained weak model with its vote weight. The model object stays on
// the owning agent; only alpha and derived statistics ever cross the wire.
struct EnsembleComponent {
  int round = 0;
  int agent = 0;
  double alpha = 0.0;
  std::shared_ptr<const WeakModel> model;
};

// An agent's additive vote matrix on a block of rows: entry (i, k) is the
// sum over that agent's components of alpha times the coded vote for class
// k+1 at row i.
struct PartialScoreMatrix {
  int agent = 0;
  size_t rows = 0;
  int num_classes = 0;
  std::vector<double> scores;  // rows * num_classes, row-major

  double at(size_t r, int k) const { return scores[r * num_classes + k]; }
  double& at(size_t r, int k) { return scores[r * num_classes + k]; }
  static PartialScoreMatrix zeros(int agent, size_t rows, int num_classes);
  void validate() const;
};

// Adds alpha-weighted coded votes for `predicted` (one class index per row)
// into `scores`.
void add_votes(PartialScoreMatrix& scores, const std::vector<int>& predicted,
               double alpha);

// Argmax-by-class of a summed score matrix; ties resolve to the lowest
// class index. Returns labels in [1, K].
std::vector<int> argmax_classes(const PartialScoreMatrix& scores);

}  // namespace ascii
