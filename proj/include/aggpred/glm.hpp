#pragma once

// Ridge-regularized binary logistic regression.
//
// Columns are standardized with training statistics, then
//
//   f(b, w) = sum_i [ softplus(z_i) - y_i z_i ] + (lambda / 2) |w|^2,
//   z_i     = b + w . x_i + offset_i
//
// is minimized by damped Newton iterations until the gradient inf-norm is at
// most the tolerance. The intercept b is never penalized and never masked.
// Features outside the free mask keep weight 0; their effect, if any, enters
// through the per-sample offset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aggpred/dataset.hpp"
#include "aggpred/error.hpp"

namespace aggpred::glm {

// Log-odds bound for single-class fits: p clipped to [1e-6, 1 - 1e-6].
inline constexpr double kProbabilityClip = 1e-6;

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double clipped_log_odds(double p) noexcept {
  p = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
  return std::log(p / (1.0 - p));
}

// Per-column training mean and divisor. Constant columns keep divisor 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const RowMatrix& X) {
    const Eigen::Index n = X.rows(), d = X.cols();
    Standardizer s;
    s.mean = Eigen::VectorXd::Zero(d);
    s.scale = Eigen::VectorXd::Ones(d);
    if (n == 0) return s;
    for (Eigen::Index j = 0; j < d; ++j) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) sum += X(i, j);
      const double m = sum / static_cast<double>(n);
      double ss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) ss += (X(i, j) - m) * (X(i, j) - m);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      s.mean[j] = m;
      // Rounding leaves ~1e-17 spread on constant columns; treat those as constant.
      s.scale[j] = sd > 1e-12 * (1.0 + std::abs(m)) ? sd : 1.0;
    }
    return s;
  }

  double apply(Eigen::Index j, double x) const noexcept { return (x - mean[j]) / scale[j]; }

  friend bool operator==(const Standardizer& a, const Standardizer& b) {
    return a.mean.size() == b.mean.size() && a.mean == b.mean && a.scale == b.scale;
  }
};

struct FitOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
  std::optional<Eigen::VectorXd> offset;       // one per sample
  std::optional<std::vector<bool>> free_mask;  // one per feature; false = frozen at 0
  std::string layout_fingerprint;
};

// Where a model came from; carried through serialization.
struct ModelMetadata {
  std::string scheme;
  std::string scope;  // "global" or a participant id
  std::string fold;
  std::uint64_t seed = 0;
  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct FitDiagnostics {
  int iterations = 0;
  double gradient_norm = 0.0;  // inf-norm at the returned solution
  double objective = 0.0;
  double initial_objective = 0.0;  // at b = 0, w = 0
  bool single_class = false;
  friend bool operator==(const FitDiagnostics&, const FitDiagnostics&) = default;
};

class RidgeLogisticModel {
 public:
  RidgeLogisticModel() = default;
  RidgeLogisticModel(Eigen::VectorXd weights, double intercept, double lambda, Standardizer standardizer,
                     std::string fingerprint, ModelMetadata metadata = {}, FitDiagnostics diagnostics = {})
      : weights_(std::move(weights)),
        intercept_(intercept),
        lambda_(lambda),
        standardizer_(std::move(standardizer)),
        fingerprint_(std::move(fingerprint)),
        metadata_(std::move(metadata)),
        diagnostics_(diagnostics) {
    if (standardizer_.mean.size() != weights_.size() || standardizer_.scale.size() != weights_.size())
      throw LayoutError("standardizer does not match weight count");
  }

  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double intercept() const noexcept { return intercept_; }
  double lambda() const noexcept { return lambda_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  const std::string& layout_fingerprint() const noexcept { return fingerprint_; }
  const ModelMetadata& metadata() const noexcept { return metadata_; }
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.size()); }

  RidgeLogisticModel with_metadata(ModelMetadata m) const {
    RidgeLogisticModel copy = *this;
    copy.metadata_ = std::move(m);
    return copy;
  }

  // intercept + w . standardize(x)
  template <class Row>
  double logit_row(const Row& x) const {
    double z = intercept_;
    for (Eigen::Index j = 0; j < weights_.size(); ++j)
      if (weights_[j] != 0.0) z += weights_[j] * standardizer_.apply(j, x[j]);
    return z;
  }

  double logit(std::span<const double> x) const {
    if (x.size() != dim()) throw LayoutError("sample has " + std::to_string(x.size()) + " features, model expects " +
                                             std::to_string(dim()));
    return logit_row(x);
  }

  Eigen::VectorXd logits(const RowMatrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != dim()) throw LayoutError("design width does not match model");
    Eigen::VectorXd z(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) z[i] = logit_row(X.row(i));
    return z;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["type"] = "ridge_logistic";
    j["layout_fingerprint"] = fingerprint_;
    j["lambda"] = lambda_;
    j["intercept"] = intercept_;
    j["weights"] = std::vector<double>(weights_.data(), weights_.data() + weights_.size());
    j["standardizer"]["mean"] = std::vector<double>(standardizer_.mean.data(), standardizer_.mean.data() + standardizer_.mean.size());
    j["standardizer"]["scale"] = std::vector<double>(standardizer_.scale.data(), standardizer_.scale.data() + standardizer_.scale.size());
    j["metadata"] = {{"scheme", metadata_.scheme}, {"scope", metadata_.scope}, {"fold", metadata_.fold}, {"seed", metadata_.seed}};
    j["diagnostics"] = {{"iterations", diagnostics_.iterations},
                        {"gradient_norm", diagnostics_.gradient_norm},
                        {"objective", diagnostics_.objective},
                        {"initial_objective", diagnostics_.initial_objective},
                        {"single_class", diagnostics_.single_class}};
    return j;
  }

  static RidgeLogisticModel from_json(const nlohmann::json& j) {
    auto vec = [](const nlohmann::json& a) {
      const auto v = a.get<std::vector<double>>();
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    if (j.value("type", "") != "ridge_logistic") throw DataError("not a ridge_logistic model document");
    Standardizer s{vec(j.at("standardizer").at("mean")), vec(j.at("standardizer").at("scale"))};
    ModelMetadata m;
    if (j.contains("metadata")) {
      const auto& md = j.at("metadata");
      m = {md.value("scheme", ""), md.value("scope", ""), md.value("fold", ""), md.value("seed", std::uint64_t{0})};
    }
    FitDiagnostics dg;
    if (j.contains("diagnostics")) {
      const auto& g = j.at("diagnostics");
      dg = {g.value("iterations", 0), g.value("gradient_norm", 0.0), g.value("objective", 0.0),
            g.value("initial_objective", 0.0), g.value("single_class", false)};
    }
    return RidgeLogisticModel(vec(j.at("weights")), j.at("intercept").get<double>(), j.at("lambda").get<double>(),
                              std::move(s), j.at("layout_fingerprint").get<std::string>(), std::move(m), dg);
  }

  friend bool operator==(const RidgeLogisticModel& a, const RidgeLogisticModel& b) {
    return a.weights_.size() == b.weights_.size() && a.weights_ == b.weights_ && a.intercept_ == b.intercept_ &&
           a.lambda_ == b.lambda_ && a.standardizer_ == b.standardizer_ && a.fingerprint_ == b.fingerprint_ &&
           a.metadata_ == b.metadata_ && a.diagnostics_ == b.diagnostics_;
  }

 private:
  Eigen::VectorXd weights_;
  double intercept_ = 0.0;
  double lambda_ = 0.0;
  Standardizer standardizer_;
  std::string fingerprint_;
  ModelMetadata metadata_;
  FitDiagnostics diagnostics_;
};

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // [d/db, d/dw_0, ..., d/dw_{d-1}]
};

// Exact objective and analytic gradient at theta = [b, w] for design Z (used
// as given; no standardization). Masked-out weights are not variables: their
// gradient entries are 0 and their theta entries must be 0.
inline ObjectiveValue objective_and_gradient(const RowMatrix& Z, std::span<const std::uint8_t> y, double lambda,
                                             const Eigen::VectorXd& theta,
                                             const Eigen::VectorXd* offset = nullptr,
                                             const std::vector<bool>* mask = nullptr) {
  const Eigen::Index n = Z.rows(), d = Z.cols();
  if (static_cast<Eigen::Index>(y.size()) != n || theta.size() != d + 1)
    throw DataError("objective_and_gradient: shape mismatch");
  if (offset && offset->size() != n) throw DataError("offset length must match sample count");
  if (mask && static_cast<Eigen::Index>(mask->size()) != d) throw DataError("mask length must match feature count");
  const Eigen::VectorXd w = theta.tail(d);
  Eigen::VectorXd z = (Z * w).array() + theta[0];
  if (offset) z += *offset;
  ObjectiveValue out;
  out.gradient = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd r(n);
  double f = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double yi = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    f += softplus(z[i]) - yi * z[i];
    r[i] = sigmoid(z[i]) - yi;
  }
  f += 0.5 * lambda * w.squaredNorm();
  out.value = f;
  out.gradient[0] = r.sum();
  out.gradient.tail(d) = Z.transpose() * r + lambda * w;
  if (mask)
    for (Eigen::Index j = 0; j < d; ++j)
      if (!(*mask)[static_cast<std::size_t>(j)]) out.gradient[j + 1] = 0.0;
  return out;
}

namespace detail {

inline double loss_at(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                      double lambda, const Eigen::VectorXd& theta, Eigen::VectorXd& z) {
  z.noalias() = A * theta;
  z += offset;
  double f = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) f += softplus(z[i]) - y[i] * z[i];
  return f + 0.5 * lambda * theta.tail(theta.size() - 1).squaredNorm();
}

}  // namespace detail

// Fits the ridge logistic model. Single-class labels give an intercept-only
// model at the clipped log-odds of the class prevalence.
inline RidgeLogisticModel fit(const RowMatrix& X, std::span<const std::uint8_t> y, double lambda,
                              const FitOptions& options = {}) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n < 1) throw DataError("fit requires at least one sample");
  if (static_cast<Eigen::Index>(y.size()) != n) throw DataError("label count does not match sample count");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("lambda must be finite and non-negative");
  if (!X.allFinite()) throw DataError("non-finite value in design matrix");
  if (options.offset && (options.offset->size() != n || !options.offset->allFinite()))
    throw DataError("offset must be finite with one entry per sample");
  if (options.free_mask && static_cast<Eigen::Index>(options.free_mask->size()) != d)
    throw DataError("free mask must have one entry per feature");

  Standardizer standardizer = Standardizer::fit(X);
  const auto positives = static_cast<Eigen::Index>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  if (positives == 0 || positives == n) {
    FitDiagnostics dg;
    dg.single_class = true;
    return RidgeLogisticModel(Eigen::VectorXd::Zero(d), clipped_log_odds(static_cast<double>(positives) / n), lambda,
                              std::move(standardizer), options.layout_fingerprint, {}, dg);
  }

  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < d; ++j)
    if (!options.free_mask || (*options.free_mask)[static_cast<std::size_t>(j)]) free.push_back(j);
  const auto m = static_cast<Eigen::Index>(free.size());

  // Column-major augmented design [1 | standardized free columns].
  Eigen::MatrixXd A(n, m + 1);
  A.col(0).setOnes();
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index j = free[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) A(i, k + 1) = standardizer.apply(j, X(i, j));
  }
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  const Eigen::VectorXd offset = options.offset ? *options.offset : Eigen::VectorXd::Zero(n);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd z(n), z_trial(n), p(n), grad(m + 1), s(n);
  double f = detail::loss_at(A, yv, offset, lambda, theta, z);
  FitDiagnostics dg;
  dg.initial_objective = f;

  Eigen::MatrixXd H(m + 1, m + 1);
  Eigen::MatrixXd B(n, m + 1);
  int iter = 0;
  double gnorm = std::numeric_limits<double>::infinity();
  for (;; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(z[i]);
      s[i] = p[i] * (1.0 - p[i]);
    }
    grad.noalias() = A.transpose() * (p - yv);
    grad.tail(m) += lambda * theta.tail(m);
    gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= options.tolerance) break;
    if (iter >= options.max_iterations)
      throw ConvergenceError("ridge logistic fit did not converge", gnorm, iter);

    B = A.array().colwise() * s.array().sqrt();
    H.setZero();
    H.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose());
    for (Eigen::Index k = 1; k <= m; ++k) H(k, k) += lambda;
    // Saturated probabilities can leave the intercept row singular.
    H(0, 0) += 1e-12;
    const Eigen::LDLT<Eigen::MatrixXd, Eigen::Lower> ldlt(H);
    Eigen::VectorXd step = ldlt.solve(-grad);
    double slope = grad.dot(step);
    if (!step.allFinite() || !(slope < 0.0)) {
      step = -grad;  // fall back to steepest descent
      slope = grad.dot(step);
    }

    double alpha = 1.0;
    double f_trial = 0.0;
    bool accepted = false;
    const double slack = 1e-13 * std::max(1.0, std::abs(f));
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      f_trial = detail::loss_at(A, yv, offset, lambda, theta + alpha * step, z_trial);
      if (f_trial <= f + 1e-4 * alpha * slope + slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) throw ConvergenceError("ridge logistic line search stalled", gnorm, iter);
    theta += alpha * step;
    z.swap(z_trial);
    f = f_trial;
  }

  dg.iterations = iter;
  dg.gradient_norm = gnorm;
  dg.objective = f;
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(d);
  for (Eigen::Index k = 0; k < m; ++k) weights[free[static_cast<std::size_t>(k)]] = theta[k + 1];
  return RidgeLogisticModel(std::move(weights), theta[0], lambda, std::move(standardizer), options.layout_fingerprint,
                            {}, dg);
}

inline RidgeLogisticModel fit(const Dataset& ds, double lambda, FitOptions options = {}) {
  if (options.layout_fingerprint.empty()) options.layout_fingerprint = ds.layout.fingerprint();
  return fit(ds.X, ds.y, lambda, options);
}

inline double predict_proba(const RidgeLogisticModel& model, std::span<const double> x, double offset = 0.0) {
  return sigmoid(model.logit(x) + offset);
}

inline double predict_proba(const RidgeLogisticModel& model, const FeatureVector& v) {
  if (!model.layout_fingerprint().empty() && v.layout_fingerprint != model.layout_fingerprint())
    throw LayoutError("feature vector layout " + v.layout_fingerprint + " does not match model layout " +
                      model.layout_fingerprint());
  return predict_proba(model, std::span<const double>(v.values));
}

}  // namespace aggpred::glm
