#pragma once

#include "ascii/learners.hpp"

namespace ascii {

// Concrete model classes, exposed so tests and tools can inspect fitted
// structure. Construction normally goes through the fit_* functions.

class StumpModel final : public WeakModel {
 public:
  StumpModel(int num_classes, int feature, double threshold, int left_class,
             int right_class);
  // Constant predictor (no usable split existed).
  StumpModel(int num_classes, int constant_class);

  WeakKind kind() const override { return WeakKind::stump; }
  int num_classes() const override { return num_classes_; }
  int predict(std::span<const double> row) const override;
  std::vector<uint8_t> save() const override;

  bool is_constant() const { return feature_ < 0; }
  int feature() const { return feature_; }
  double threshold() const { return threshold_; }
  int left_class() const { return left_class_; }
  int right_class() const { return right_class_; }

 private:
  int num_classes_;
  int feature_;  // -1 for a constant predictor
  double threshold_;
  int left_class_;
  int right_class_;
};

class TreeModel final : public WeakModel {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int cls = 1;    // leaf prediction
    int left = -1;  // child indices
    int right = -1;
  };

  TreeModel(int num_classes, std::vector<Node> nodes);

  WeakKind kind() const override { return WeakKind::tree; }
  int num_classes() const override { return num_classes_; }
  int predict(std::span<const double> row) const override;
  std::vector<uint8_t> save() const override;

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  int num_classes_;
  std::vector<Node> nodes_;  // node 0 is the root
};

class ForestModel final : public WeakModel {
 public:
  ForestModel(int num_classes, std::vector<TreeModel> trees);

  WeakKind kind() const override { return WeakKind::forest; }
  int num_classes() const override { return num_classes_; }
  int predict(std::span<const double> row) const override;
  std::vector<uint8_t> save() const override;

  const std::vector<TreeModel>& trees() const { return trees_; }

 private:
  int num_classes_;
  std::vector<TreeModel> trees_;
};

class LogisticModel final : public WeakModel {
 public:
  // params layout: num_classes blocks of (p slopes, 1 intercept).
  LogisticModel(int num_classes, size_t num_features, std::vector<double> params);

  WeakKind kind() const override { return WeakKind::logistic; }
  int num_classes() const override { return num_classes_; }
  int predict(std::span<const double> row) const override;
  std::vector<uint8_t> save() const override;

  const std::vector<double>& params() const { return params_; }
  size_t num_features() const { return num_features_; }

 private:
  int num_classes_;
  size_t num_features_;
  std::vector<double> params_;
};

}  // namespace ascii
