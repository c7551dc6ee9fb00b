#include "ascii/learners.hpp"

namespace ascii {

void WeakModelSpec::validate() const {
  switch (kind) {
    case WeakKind::stump:
      break;
    case WeakKind::tree:
      if (depth < 1) throw std::invalid_argument("WeakModelSpec: tree depth must be >= 1");
      break;
    case WeakKind::forest:
      if (depth < 1) throw std::invalid_argument("WeakModelSpec: tree depth must be >= 1");
      if (num_trees < 1)
        throw std::invalid_argument("WeakModelSpec: num_trees must be >= 1");
      break;
    case WeakKind::logistic:
      if (!(learning_rate > 0.0))
        throw std::invalid_argument("WeakModelSpec: learning_rate must be positive");
      if (iterations < 0)
        throw std::invalid_argument("WeakModelSpec: iterations must be >= 0");
      if (l2 < 0.0) throw std::invalid_argument("WeakModelSpec: l2 must be >= 0");
      break;
    default:
      throw std::invalid_argument("WeakModelSpec: unknown learner kind");
  }
}

WstResult wst(const LabelMatrix& Y, const FeatureMatrix& X,
              const IgnoranceVector& w, const WeakModelSpec& spec) {
  spec.validate();
  X.validate();
  w.validate();
  if (Y.rows() != X.rows || w.size() != X.rows)
    throw std::invalid_argument("wst: labels, features and weights must align");
  if (!w.is_normalized())
    throw std::invalid_argument("wst: ignorance weights must sum to one");

  ClassVector y;
  y.num_classes = Y.num_classes();
  y.labels.resize(Y.rows());
  for (size_t i = 0; i < Y.rows(); ++i) y.labels[i] = Y.class_of(i);

  WstResult out;
  switch (spec.kind) {
    case WeakKind::stump:
      out.model = fit_stump(y, X, w);
      break;
    case WeakKind::tree:
      out.model = fit_tree(y, X, w, spec.depth);
      break;
    case WeakKind::forest:
      out.model = fit_forest(y, X, w, spec);
      break;
    case WeakKind::logistic:
      out.model = fit_logistic(y, X, w, spec);
      break;
  }
  out.reward.values.resize(X.rows);
  for (size_t i = 0; i < X.rows; ++i)
    out.reward.values[i] =
        out.model->predict(X.row(i)) == y.labels[i] ? 1 : 0;
  return out;
}

}  // namespace ascii
