#include <algorithm>
#include <cmath>
#include <numeric>

#include "ascii/models.hpp"

namespace ascii {
namespace {

constexpr double kMinLeafMass = 1e-9;

// Midpoint of two consecutive distinct values, nudged down if rounding
// collapses it onto the upper value, so the predicate x <= threshold always
// reproduces the sweep's left/right assignment.
double split_threshold(double lo, double hi) {
  double t = lo + (hi - lo) / 2.0;
  if (!(t < hi)) t = lo;
  return t;
}

struct NodeRows {
  std::vector<size_t> idx;  // row indices into X (duplicates allowed)
  std::vector<double> wt;   // weight per entry
};

struct Split {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  int left_class = 1;
  int right_class = 1;
};

int majority_class(const std::vector<double>& mass) {
  int best = 0;
  for (size_t k = 1; k < mass.size(); ++k)
    if (mass[k] > mass[static_cast<size_t>(best)]) best = static_cast<int>(k);
  return best + 1;
}

// Exact weighted 0/1 error minimizer over (feature, midpoint threshold,
// class per side). Enumeration runs in ascending feature then threshold
// order with strictly-better updates, so ties keep the lowest candidate.
Split best_zero_one_split(const FeatureMatrix& X, const std::vector<int>& y, int K,
                          const NodeRows& rows, const std::vector<int>& features) {
  Split best;
  double best_correct = -1.0;
  const size_t m = rows.idx.size();
  std::vector<size_t> order(m);
  std::vector<double> mass_l(static_cast<size_t>(K)), mass_r(static_cast<size_t>(K));
  for (int j : features) {
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return X.at(rows.idx[a], static_cast<size_t>(j)) <
             X.at(rows.idx[b], static_cast<size_t>(j));
    });
    std::fill(mass_l.begin(), mass_l.end(), 0.0);
    std::fill(mass_r.begin(), mass_r.end(), 0.0);
    for (size_t e = 0; e < m; ++e)
      mass_r[static_cast<size_t>(y[rows.idx[e]]) - 1] += rows.wt[e];
    size_t e = 0;
    while (e < m) {
      double v = X.at(rows.idx[order[e]], static_cast<size_t>(j));
      // Move the whole group of equal values to the left side.
      while (e < m && X.at(rows.idx[order[e]], static_cast<size_t>(j)) == v) {
        size_t ent = order[e];
        double wv = rows.wt[ent];
        size_t c = static_cast<size_t>(y[rows.idx[ent]]) - 1;
        mass_l[c] += wv;
        mass_r[c] -= wv;
        ++e;
      }
      if (e == m) break;  // nothing left on the right: no boundary here
      double next = X.at(rows.idx[order[e]], static_cast<size_t>(j));
      int cl = majority_class(mass_l);
      int cr = majority_class(mass_r);
      double correct = mass_l[static_cast<size_t>(cl) - 1] +
                       mass_r[static_cast<size_t>(cr) - 1];
      if (correct > best_correct) {
        best_correct = correct;
        best.found = true;
        best.feature = j;
        best.threshold = split_threshold(v, next);
        best.left_class = cl;
        best.right_class = cr;
      }
    }
  }
  return best;
}

// Split maximizing the weighted Gini decrease, with both children required
// to carry at least kMinLeafMass. Leaf classes are not chosen here.
Split best_gini_split(const FeatureMatrix& X, const std::vector<int>& y, int K,
                      const NodeRows& rows, const std::vector<int>& features) {
  Split best;
  double best_gain = -1.0;  // any valid split (gain >= 0) beats this
  const size_t m = rows.idx.size();
  std::vector<size_t> order(m);
  std::vector<double> mass_l(static_cast<size_t>(K)), mass_r(static_cast<size_t>(K));
  for (int j : features) {
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return X.at(rows.idx[a], static_cast<size_t>(j)) <
             X.at(rows.idx[b], static_cast<size_t>(j));
    });
    std::fill(mass_l.begin(), mass_l.end(), 0.0);
    std::fill(mass_r.begin(), mass_r.end(), 0.0);
    double total_l = 0.0, total_r = 0.0, sumsq_l = 0.0, sumsq_r = 0.0;
    for (size_t e = 0; e < m; ++e) {
      size_t c = static_cast<size_t>(y[rows.idx[e]]) - 1;
      double wv = rows.wt[e];
      sumsq_r += wv * (wv + 2.0 * mass_r[c]);
      mass_r[c] += wv;
      total_r += wv;
    }
    const double total = total_r;
    const double parent_gini = total > 0.0 ? total - sumsq_r / total : 0.0;
    size_t e = 0;
    while (e < m) {
      double v = X.at(rows.idx[order[e]], static_cast<size_t>(j));
      while (e < m && X.at(rows.idx[order[e]], static_cast<size_t>(j)) == v) {
        size_t ent = order[e];
        double wv = rows.wt[ent];
        size_t c = static_cast<size_t>(y[rows.idx[ent]]) - 1;
        sumsq_l += wv * (wv + 2.0 * mass_l[c]);
        mass_l[c] += wv;
        total_l += wv;
        sumsq_r -= wv * (2.0 * mass_r[c] - wv);
        mass_r[c] -= wv;
        total_r -= wv;
        ++e;
      }
      if (e == m) break;
      if (total_l < kMinLeafMass || total_r < kMinLeafMass) continue;
      double next = X.at(rows.idx[order[e]], static_cast<size_t>(j));
      double child_gini = (total_l - sumsq_l / total_l) + (total_r - sumsq_r / total_r);
      double gain = parent_gini - child_gini;
      if (gain > best_gain) {
        best_gain = gain;
        best.found = true;
        best.feature = j;
        best.threshold = split_threshold(v, next);
      }
    }
  }
  return best;
}

struct TreeBuilder {
  const FeatureMatrix& X;
  const std::vector<int>& y;
  int K;
  Rng* rng;  // null when feature subsampling is off
  int mtry;  // 0 means all features
  std::vector<TreeModel::Node> nodes;

  std::vector<int> candidate_features() {
    const int p = static_cast<int>(X.cols);
    std::vector<int> feats(static_cast<size_t>(p));
    std::iota(feats.begin(), feats.end(), 0);
    if (mtry > 0 && mtry < p && rng != nullptr) {
      for (int i = 0; i < mtry; ++i) {
        size_t j = static_cast<size_t>(i) + rng->index(static_cast<size_t>(p - i));
        std::swap(feats[static_cast<size_t>(i)], feats[j]);
      }
      feats.resize(static_cast<size_t>(mtry));
      std::sort(feats.begin(), feats.end());
    }
    return feats;
  }

  int build(const NodeRows& rows, int depth_remaining) {
    std::vector<double> mass(static_cast<size_t>(K), 0.0);
    double total = 0.0;
    for (size_t e = 0; e < rows.idx.size(); ++e) {
      mass[static_cast<size_t>(y[rows.idx[e]]) - 1] += rows.wt[e];
      total += rows.wt[e];
    }
    int leaf_cls = majority_class(mass);
    int impure_classes = 0;
    for (double mv : mass)
      if (mv > 0.0) ++impure_classes;

    int self = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[static_cast<size_t>(self)].cls = leaf_cls;
    if (depth_remaining <= 0 || total < kMinLeafMass || impure_classes <= 1)
      return self;

    auto feats = candidate_features();
    Split s = depth_remaining == 1 ? best_zero_one_split(X, y, K, rows, feats)
                                   : best_gini_split(X, y, K, rows, feats);
    if (!s.found) return self;

    NodeRows left, right;
    for (size_t e = 0; e < rows.idx.size(); ++e) {
      bool go_left = X.at(rows.idx[e], static_cast<size_t>(s.feature)) <= s.threshold;
      NodeRows& side = go_left ? left : right;
      side.idx.push_back(rows.idx[e]);
      side.wt.push_back(rows.wt[e]);
    }
    nodes[static_cast<size_t>(self)].feature = s.feature;
    nodes[static_cast<size_t>(self)].threshold = s.threshold;
    int l = build(left, depth_remaining - 1);
    int r = build(right, depth_remaining - 1);
    nodes[static_cast<size_t>(self)].left = l;
    nodes[static_cast<size_t>(self)].right = r;
    return self;
  }
};

void check_fit_inputs(const ClassVector& y, const FeatureMatrix& X,
                      const IgnoranceVector& w) {
  y.validate();
  X.validate();
  w.validate();
  if (y.size() != X.rows || w.size() != X.rows)
    throw std::invalid_argument("fit: labels, features and weights must align");
  if (X.rows == 0) throw std::invalid_argument("fit: need at least one sample");
}

NodeRows all_rows(const FeatureMatrix& X, const IgnoranceVector& w) {
  NodeRows rows;
  rows.idx.resize(X.rows);
  std::iota(rows.idx.begin(), rows.idx.end(), size_t{0});
  rows.wt = w.weights;
  double s = w.sum();
  if (!(s > 0.0))
    throw std::invalid_argument("fit: total sample weight must be positive");
  for (double& v : rows.wt) v /= s;
  return rows;
}

std::vector<size_t> weighted_resample(const std::vector<double>& w, size_t draws,
                                      Rng& rng) {
  std::vector<double> cdf(w.size());
  double total = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    total += w[i];
    cdf[i] = total;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("fit_forest: total sample weight must be positive");
  std::vector<size_t> out(draws);
  for (size_t d = 0; d < draws; ++d) {
    double u = rng.uniform() * total;
    out[d] = static_cast<size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (out[d] >= w.size()) out[d] = w.size() - 1;
  }
  return out;
}

constexpr uint64_t kForestStream = 0x666f7265u;  // per-tree seed tag

}  // namespace

std::shared_ptr<const WeakModel> fit_stump(const ClassVector& y,
                                           const FeatureMatrix& X,
                                           const IgnoranceVector& w) {
  check_fit_inputs(y, X, w);
  NodeRows rows = all_rows(X, w);
  std::vector<int> feats(X.cols);
  std::iota(feats.begin(), feats.end(), 0);
  Split s = best_zero_one_split(X, y.labels, y.num_classes, rows, feats);
  if (!s.found) {
    std::vector<double> mass(static_cast<size_t>(y.num_classes), 0.0);
    for (size_t e = 0; e < rows.idx.size(); ++e)
      mass[static_cast<size_t>(y.labels[rows.idx[e]]) - 1] += rows.wt[e];
    return std::make_shared<StumpModel>(y.num_classes, majority_class(mass));
  }
  return std::make_shared<StumpModel>(y.num_classes, s.feature, s.threshold,
                                      s.left_class, s.right_class);
}

std::shared_ptr<const WeakModel> fit_tree(const ClassVector& y,
                                          const FeatureMatrix& X,
                                          const IgnoranceVector& w, int depth) {
  check_fit_inputs(y, X, w);
  if (depth < 1) throw std::invalid_argument("fit_tree: depth must be at least 1");
  TreeBuilder b{X, y.labels, y.num_classes, nullptr, 0, {}};
  b.build(all_rows(X, w), depth);
  return std::make_shared<TreeModel>(y.num_classes, std::move(b.nodes));
}

std::shared_ptr<const WeakModel> fit_forest(const ClassVector& y,
                                            const FeatureMatrix& X,
                                            const IgnoranceVector& w,
                                            const WeakModelSpec& spec) {
  check_fit_inputs(y, X, w);
  if (spec.num_trees < 1)
    throw std::invalid_argument("fit_forest: num_trees must be at least 1");
  if (spec.depth < 1)
    throw std::invalid_argument("fit_forest: depth must be at least 1");
  const size_t n = X.rows;
  std::vector<double> probs = w.weights;
  double total = w.sum();
  if (!(total > 0.0))
    throw std::invalid_argument("fit_forest: total sample weight must be positive");
  for (double& v : probs) v /= total;

  int mtry = 0;
  if (spec.feature_subsample && X.cols > 0) {
    mtry = static_cast<int>(std::llround(std::sqrt(static_cast<double>(X.cols))));
    if (mtry < 1) mtry = 1;
    if (static_cast<size_t>(mtry) >= X.cols) mtry = 0;
  }

  std::vector<TreeModel> trees;
  trees.reserve(static_cast<size_t>(spec.num_trees));
  for (int t = 0; t < spec.num_trees; ++t) {
    Rng rng(mix_seed(spec.seed, {kForestStream, static_cast<uint64_t>(t)}));
    NodeRows rows;
    if (spec.bootstrap) {
      rows.idx = weighted_resample(probs, n, rng);
      rows.wt.assign(n, 1.0 / static_cast<double>(n));
    } else {
      rows.idx.resize(n);
      std::iota(rows.idx.begin(), rows.idx.end(), size_t{0});
      rows.wt = probs;
    }
    TreeBuilder b{X, y.labels, y.num_classes, mtry > 0 ? &rng : nullptr, mtry, {}};
    b.build(rows, spec.depth);
    trees.emplace_back(y.num_classes, std::move(b.nodes));
  }
  return std::make_shared<ForestModel>(y.num_classes, std::move(trees));
}

}  // namespace ascii
