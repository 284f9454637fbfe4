#pragma once

// Linear soft-margin SVM:
//   min 1/2 |w|^2 + c * sum(eps_i)   s.t.  y_i (w . a_i + b) >= 1 - eps_i, eps_i >= 0
// solved through its dual with SMO-style pair updates.

#include "mibci/csp.hpp"
#include "mibci/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace mibci {

// Per-feature affine map z = (x - mean) / scale. Empty vectors mean identity.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  bool identity() const noexcept { return mean.size() == 0; }
  static Standardization fit(const Eigen::MatrixXd& rows);  // sample sd; zero sd maps to scale 1
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
};

struct SvmOptions {
  double c = 1.0;
  // Stop once the maximal KKT violation (m - M in the usual SMO notation)
  // drops below tol.
  double tol = 1e-10;
  std::size_t max_updates = 1'000'000;
  bool standardize = false;
  bool record_objective = false;
};

struct SvmModel {
  // Decision rule in raw feature space: d = w . a + b.
  Eigen::VectorXd w;
  double b = 0.0;
  double c = 1.0;
  Standardization standardization;
  // Solution of the optimization actually solved (standardized space when
  // standardization is active).
  Eigen::VectorXd solved_w;
  double solved_b = 0.0;
  Eigen::VectorXd alphas;
  Eigen::VectorXd slacks;
  double objective = 0.0;       // primal value
  double dual_objective = 0.0;  // sum(alpha) - 1/2 |w|^2
  double duality_gap = 0.0;
  std::size_t updates = 0;
  std::vector<double> objective_trace;  // dual objective (minimization form) per pair update

  std::size_t dim() const noexcept { return static_cast<std::size_t>(w.size()); }
};

SvmModel train_svm(const FeatureMatrix& features, const SvmOptions& opts);
inline SvmModel train_svm(const FeatureMatrix& features, double c, double tol = 1e-10) {
  SvmOptions opts;
  opts.c = c;
  opts.tol = tol;
  return train_svm(features, opts);
}

struct Prediction {
  std::vector<ClassLabel> labels;
  Eigen::VectorXd decisions;
};

// A decision value of exactly zero maps to RightHand.
Prediction predict(const SvmModel& model, const Eigen::MatrixXd& features);
inline Prediction predict(const SvmModel& model, const FeatureMatrix& features) {
  return predict(model, features.values);
}

inline ClassLabel label_from_decision(double d) noexcept {
  return d >= 0.0 ? ClassLabel::RightHand : ClassLabel::LeftHand;
}

// Largest violation of the KKT conditions over all training samples, measured
// on y_i d_i in the solved space.
double kkt_residual(const SvmModel& model, const FeatureMatrix& features);

}  // namespace mibci
