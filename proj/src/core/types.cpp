#include "ascii/types.hpp"

#include <algorithm>
#include <numeric>

namespace ascii {

void FeatureMatrix::validate() const {
  if (values.size() != rows * cols)
    throw std::invalid_argument("FeatureMatrix: value count does not match shape");
  if (!column_names.empty() && column_names.size() != cols)
    throw std::invalid_argument("FeatureMatrix: column name count does not match cols");
}

void ClassVector::validate() const {
  if (num_classes < 2)
    throw std::invalid_argument("ClassVector: num_classes must be at least 2");
  for (int c : labels) {
    if (c < 1 || c > num_classes)
      throw std::invalid_argument("ClassVector: label outside [1, K]");
  }
}

LabelMatrix::LabelMatrix(std::vector<int> classes, int num_classes)
    : classes_(std::move(classes)), num_classes_(num_classes) {}

std::vector<double> LabelMatrix::row(size_t i) const {
  std::vector<double> r(num_classes_, -1.0 / (num_classes_ - 1));
  r[classes_[i] - 1] = 1.0;
  return r;
}

double LabelMatrix::vote_product(size_t i, int predicted) const {
  return predicted == classes_[i] ? code_agree(num_classes_)
                                  : code_disagree(num_classes_);
}

LabelMatrix encode_labels(const ClassVector& labels) {
  labels.validate();
  return LabelMatrix(labels.labels, labels.num_classes);
}

double IgnoranceVector::sum() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

bool IgnoranceVector::is_normalized(double tol) const {
  return std::abs(sum() - 1.0) <= tol;
}

void IgnoranceVector::normalize() {
  validate();
  double s = sum();
  if (!(s > 0.0))
    throw std::invalid_argument("IgnoranceVector: total mass must be positive");
  for (double& w : weights) w /= s;
}

IgnoranceVector IgnoranceVector::uniform(size_t n) {
  if (n == 0)
    throw std::invalid_argument("IgnoranceVector: need at least one sample");
  IgnoranceVector v;
  v.weights.assign(n, 1.0 / static_cast<double>(n));
  return v;
}

void IgnoranceVector::validate() const {
  for (double w : weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument("IgnoranceVector: weights must be non-negative");
  }
}

void RewardVector::validate() const {
  for (uint8_t v : values) {
    if (v > 1) throw std::invalid_argument("RewardVector: entries must be 0 or 1");
  }
}

ScoreAccumulator ScoreAccumulator::zeros(size_t n, int round) {
  ScoreAccumulator acc;
  acc.scores.assign(n, 0.0);
  acc.round = round;
  return acc;
}

PartialScoreMatrix PartialScoreMatrix::zeros(int agent, size_t rows,
                                             int num_classes) {
  PartialScoreMatrix m;
  m.agent = agent;
  m.rows = rows;
  m.num_classes = num_classes;
  m.scores.assign(rows * static_cast<size_t>(num_classes), 0.0);
  return m;
}

void PartialScoreMatrix::validate() const {
  if (num_classes < 2)
    throw std::invalid_argument("PartialScoreMatrix: num_classes must be at least 2");
  if (scores.size() != rows * static_cast<size_t>(num_classes))
    throw std::invalid_argument("PartialScoreMatrix: score count does not match shape");
}

void add_votes(PartialScoreMatrix& scores, const std::vector<int>& predicted,
               double alpha) {
  scores.validate();
  if (predicted.size() != scores.rows)
    throw std::invalid_argument("add_votes: one predicted class per row required");
  const int K = scores.num_classes;
  const double off = -alpha / (K - 1);
  for (size_t i = 0; i < scores.rows; ++i) {
    int p = predicted[i];
    if (p < 1 || p > K)
      throw std::invalid_argument("add_votes: predicted class outside [1, K]");
    for (int k = 0; k < K; ++k) scores.at(i, k) += off;
    scores.at(i, p - 1) += alpha - off;
  }
}

std::vector<int> argmax_classes(const PartialScoreMatrix& scores) {
  scores.validate();
  std::vector<int> out(scores.rows, 1);
  for (size_t i = 0; i < scores.rows; ++i) {
    int best = 0;
    double best_v = scores.at(i, 0);
    for (int k = 1; k < scores.num_classes; ++k) {
      double v = scores.at(i, k);
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    out[i] = best + 1;
  }
  return out;
}

}  // namespace ascii
