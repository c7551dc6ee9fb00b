#include "ascii/models.hpp"

#include <algorithm>

#include "ascii/wire.hpp"

namespace ascii {

namespace {
constexpr uint16_t kModelVersion = 1;
}

const char* weak_kind_name(WeakKind k) {
  switch (k) {
    case WeakKind::stump: return "stump";
    case WeakKind::tree: return "tree";
    case WeakKind::forest: return "forest";
    case WeakKind::logistic: return "logistic";
  }
  return "unknown";
}

std::vector<int> WeakModel::predict_all(const FeatureMatrix& X) const {
  std::vector<int> out(X.rows);
  for (size_t i = 0; i < X.rows; ++i) out[i] = predict(X.row(i));
  return out;
}

StumpModel::StumpModel(int num_classes, int feature, double threshold,
                       int left_class, int right_class)
    : num_classes_(num_classes), feature_(feature), threshold_(threshold),
      left_class_(left_class), right_class_(right_class) {}

StumpModel::StumpModel(int num_classes, int constant_class)
    : num_classes_(num_classes), feature_(-1), threshold_(0.0),
      left_class_(constant_class), right_class_(constant_class) {}

int StumpModel::predict(std::span<const double> row) const {
  if (feature_ < 0) return left_class_;
  return row[static_cast<size_t>(feature_)] <= threshold_ ? left_class_ : right_class_;
}

std::vector<uint8_t> StumpModel::save() const {
  std::vector<uint8_t> out;
  wire::put_u8(out, static_cast<uint8_t>(WeakKind::stump));
  wire::put_u16(out, kModelVersion);
  wire::put_i32(out, num_classes_);
  wire::put_i32(out, feature_);
  wire::put_f64(out, threshold_);
  wire::put_i32(out, left_class_);
  wire::put_i32(out, right_class_);
  return out;
}

TreeModel::TreeModel(int num_classes, std::vector<Node> nodes)
    : num_classes_(num_classes), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("TreeModel: needs at least one node");
}

int TreeModel::predict(std::span<const double> row) const {
  int idx = 0;
  for (;;) {
    const Node& n = nodes_[static_cast<size_t>(idx)];
    if (n.feature < 0) return n.cls;
    idx = row[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
}

namespace {

void put_tree_nodes(std::vector<uint8_t>& out, const std::vector<TreeModel::Node>& nodes) {
  wire::put_u32(out, static_cast<uint32_t>(nodes.size()));
  for (const auto& n : nodes) {
    wire::put_i32(out, n.feature);
    wire::put_f64(out, n.threshold);
    wire::put_i32(out, n.cls);
    wire::put_i32(out, n.left);
    wire::put_i32(out, n.right);
  }
}

std::vector<TreeModel::Node> read_tree_nodes(wire::Reader& r) {
  uint32_t count = r.u32();
  if (count == 0) throw ParseError("tree blob: empty node list");
  std::vector<TreeModel::Node> nodes(count);
  for (auto& n : nodes) {
    n.feature = r.i32();
    n.threshold = r.f64();
    n.cls = r.i32();
    n.left = r.i32();
    n.right = r.i32();
  }
  return nodes;
}

}  // namespace

std::vector<uint8_t> TreeModel::save() const {
  std::vector<uint8_t> out;
  wire::put_u8(out, static_cast<uint8_t>(WeakKind::tree));
  wire::put_u16(out, kModelVersion);
  wire::put_i32(out, num_classes_);
  put_tree_nodes(out, nodes_);
  return out;
}

ForestModel::ForestModel(int num_classes, std::vector<TreeModel> trees)
    : num_classes_(num_classes), trees_(std::move(trees)) {
  if (trees_.empty()) throw std::invalid_argument("ForestModel: needs at least one tree");
}

int ForestModel::predict(std::span<const double> row) const {
  // Plurality vote; ties go to the lowest class index.
  std::vector<int> votes(static_cast<size_t>(num_classes_), 0);
  for (const auto& t : trees_) votes[static_cast<size_t>(t.predict(row)) - 1]++;
  int best = 0;
  for (int k = 1; k < num_classes_; ++k)
    if (votes[static_cast<size_t>(k)] > votes[static_cast<size_t>(best)]) best = k;
  return best + 1;
}

std::vector<uint8_t> ForestModel::save() const {
  std::vector<uint8_t> out;
  wire::put_u8(out, static_cast<uint8_t>(WeakKind::forest));
  wire::put_u16(out, kModelVersion);
  wire::put_i32(out, num_classes_);
  wire::put_u32(out, static_cast<uint32_t>(trees_.size()));
  for (const auto& t : trees_) put_tree_nodes(out, t.nodes());
  return out;
}

LogisticModel::LogisticModel(int num_classes, size_t num_features,
                             std::vector<double> params)
    : num_classes_(num_classes), num_features_(num_features),
      params_(std::move(params)) {
  if (params_.size() != static_cast<size_t>(num_classes_) * (num_features_ + 1))
    throw std::invalid_argument("LogisticModel: parameter count does not match shape");
}

int LogisticModel::predict(std::span<const double> row) const {
  int best = 0;
  double best_z = 0.0;
  for (int k = 0; k < num_classes_; ++k) {
    const double* wk = params_.data() + static_cast<size_t>(k) * (num_features_ + 1);
    double z = wk[num_features_];
    for (size_t j = 0; j < num_features_; ++j) z += wk[j] * row[j];
    if (k == 0 || z > best_z) {
      best_z = z;
      best = k;
    }
  }
  return best + 1;
}

std::vector<uint8_t> LogisticModel::save() const {
  std::vector<uint8_t> out;
  wire::put_u8(out, static_cast<uint8_t>(WeakKind::logistic));
  wire::put_u16(out, kModelVersion);
  wire::put_i32(out, num_classes_);
  wire::put_u32(out, static_cast<uint32_t>(num_features_));
  for (double v : params_) wire::put_f64(out, v);
  return out;
}

std::shared_ptr<const WeakModel> load_weak_model(std::span<const uint8_t> blob) {
  wire::Reader r(blob);
  uint8_t kind = r.u8();
  uint16_t version = r.u16();
  if (version != kModelVersion)
    throw ParseError("model blob: unsupported version " + std::to_string(version));
  int K = r.i32();
  if (K < 2) throw ParseError("model blob: num_classes must be at least 2");
  switch (static_cast<WeakKind>(kind)) {
    case WeakKind::stump: {
      int feature = r.i32();
      double threshold = r.f64();
      int left = r.i32();
      int right = r.i32();
      r.expect_end("stump blob");
      if (feature < 0) return std::make_shared<StumpModel>(K, left);
      return std::make_shared<StumpModel>(K, feature, threshold, left, right);
    }
    case WeakKind::tree: {
      auto nodes = read_tree_nodes(r);
      r.expect_end("tree blob");
      return std::make_shared<TreeModel>(K, std::move(nodes));
    }
    case WeakKind::forest: {
      uint32_t count = r.u32();
      std::vector<TreeModel> trees;
      trees.reserve(count);
      for (uint32_t i = 0; i < count; ++i) trees.emplace_back(K, read_tree_nodes(r));
      r.expect_end("forest blob");
      return std::make_shared<ForestModel>(K, std::move(trees));
    }
    case WeakKind::logistic: {
      uint32_t p = r.u32();
      std::vector<double> params(static_cast<size_t>(K) * (p + 1));
      for (double& v : params) v = r.f64();
      r.expect_end("logistic blob");
      return std::make_shared<LogisticModel>(K, p, std::move(params));
    }
  }
  throw ParseError("model blob: unknown kind tag " + std::to_string(kind));
}

}  // namespace ascii
