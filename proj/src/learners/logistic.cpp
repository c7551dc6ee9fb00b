#include <algorithm>
#include <cmath>

#include "ascii/models.hpp"

namespace ascii {

namespace {

void check_inputs(const ClassVector& y, const FeatureMatrix& X,
                  const IgnoranceVector& w) {
  y.validate();
  X.validate();
  w.validate();
  if (y.size() != X.rows || w.size() != X.rows)
    throw std::invalid_argument("fit_logistic: labels, features and weights must align");
  if (X.rows == 0) throw std::invalid_argument("fit_logistic: need at least one sample");
}

// Stable per-sample softmax and log-partition.
void softmax_row(const double* z, int K, std::vector<double>& p) {
  double zmax = z[0];
  for (int k = 1; k < K; ++k) zmax = std::max(zmax, z[k]);
  double denom = 0.0;
  for (int k = 0; k < K; ++k) {
    p[static_cast<size_t>(k)] = safe_exp(z[k] - zmax);
    denom += p[static_cast<size_t>(k)];
  }
  for (int k = 0; k < K; ++k) p[static_cast<size_t>(k)] /= denom;
}

void logits_for_row(const std::vector<double>& params, std::span<const double> row,
                    size_t p, int K, std::vector<double>& z) {
  for (int k = 0; k < K; ++k) {
    const double* wk = params.data() + static_cast<size_t>(k) * (p + 1);
    double zk = wk[p];
    for (size_t j = 0; j < p; ++j) zk += wk[j] * row[j];
    z[static_cast<size_t>(k)] = zk;
  }
}

}  // namespace

double logistic_objective(const ClassVector& y, const FeatureMatrix& X,
                          const IgnoranceVector& w, double l2,
                          const std::vector<double>& params) {
  check_inputs(y, X, w);
  const size_t p = X.cols;
  const int K = y.num_classes;
  if (params.size() != static_cast<size_t>(K) * (p + 1))
    throw std::invalid_argument("logistic_objective: bad parameter count");
  double wsum = w.sum();
  if (!(wsum > 0.0))
    throw std::invalid_argument("logistic_objective: total weight must be positive");
  std::vector<double> z(static_cast<size_t>(K));
  double obj = 0.0;
  for (size_t i = 0; i < X.rows; ++i) {
    logits_for_row(params, X.row(i), p, K, z);
    double zmax = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (int k = 0; k < K; ++k) lse += safe_exp(z[static_cast<size_t>(k)] - zmax);
    lse = zmax + std::log(lse);
    obj += (w.weights[i] / wsum) * (lse - z[static_cast<size_t>(y.labels[i]) - 1]);
  }
  for (int k = 0; k < K; ++k) {
    const double* wk = params.data() + static_cast<size_t>(k) * (p + 1);
    for (size_t j = 0; j < p; ++j) obj += 0.5 * l2 * wk[j] * wk[j];
  }
  return obj;
}

std::vector<double> logistic_gradient(const ClassVector& y, const FeatureMatrix& X,
                                      const IgnoranceVector& w, double l2,
                                      const std::vector<double>& params) {
  check_inputs(y, X, w);
  const size_t p = X.cols;
  const int K = y.num_classes;
  if (params.size() != static_cast<size_t>(K) * (p + 1))
    throw std::invalid_argument("logistic_gradient: bad parameter count");
  double wsum = w.sum();
  if (!(wsum > 0.0))
    throw std::invalid_argument("logistic_gradient: total weight must be positive");
  std::vector<double> grad(params.size(), 0.0);
  for (int k = 0; k < K; ++k) {
    const double* wk = params.data() + static_cast<size_t>(k) * (p + 1);
    double* gk = grad.data() + static_cast<size_t>(k) * (p + 1);
    for (size_t j = 0; j < p; ++j) gk[j] = l2 * wk[j];  // intercept unpenalized
  }
  std::vector<double> z(static_cast<size_t>(K)), prob(static_cast<size_t>(K));
  for (size_t i = 0; i < X.rows; ++i) {
    auto row = X.row(i);
    logits_for_row(params, row, p, K, z);
    softmax_row(z.data(), K, prob);
    double wi = w.weights[i] / wsum;
    for (int k = 0; k < K; ++k) {
      double coef = wi * (prob[static_cast<size_t>(k)] -
                          (y.labels[i] == k + 1 ? 1.0 : 0.0));
      double* gk = grad.data() + static_cast<size_t>(k) * (p + 1);
      for (size_t j = 0; j < p; ++j) gk[j] += coef * row[j];
      gk[p] += coef;
    }
  }
  return grad;
}

std::shared_ptr<const WeakModel> fit_logistic(const ClassVector& y,
                                              const FeatureMatrix& X,
                                              const IgnoranceVector& w,
                                              const WeakModelSpec& spec) {
  check_inputs(y, X, w);
  if (!(spec.learning_rate > 0.0))
    throw std::invalid_argument("fit_logistic: learning_rate must be positive");
  if (spec.iterations < 0)
    throw std::invalid_argument("fit_logistic: iterations must be non-negative");
  if (spec.l2 < 0.0)
    throw std::invalid_argument("fit_logistic: l2 must be non-negative");
  const size_t p = X.cols;
  const int K = y.num_classes;
  std::vector<double> params(static_cast<size_t>(K) * (p + 1), 0.0);
  for (int it = 0; it < spec.iterations; ++it) {
    auto grad = logistic_gradient(y, X, w, spec.l2, params);
    for (double g : grad) {
      if (!std::isfinite(g))
        throw std::runtime_error(
            "fit_logistic: non-finite gradient at iteration " + std::to_string(it) +
            "; lower the learning rate or scale the features");
    }
    for (size_t j = 0; j < params.size(); ++j)
      params[j] -= spec.learning_rate * grad[j];
  }
  return std::make_shared<LogisticModel>(K, p, std::move(params));
}

}  // namespace ascii
