#pragma once

// Common spatial patterns: simultaneous diagonalization of the two class
// covariance matrices, and normalized log-variance features.

#include "mibci/types.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mibci {

struct CspOptions {
  int pairs = 3;
  // Added to the composite covariance as ridge * trace(C) / channels * I.
  double ridge = 1e-8;
  // Divide every trial's scatter matrix by its trace before averaging.
  bool normalize_trials = true;
};

struct CspModel {
  Eigen::MatrixXd filters;   // selected rows of full_w, (2 * pairs) x channels
  Eigen::MatrixXd full_w;    // channels x channels, rows sorted by eigval
  Eigen::MatrixXd patterns;  // full_w^-1; column i is the pattern of row i
  Eigen::VectorXd eigvals;   // descending, RightHand share of variance per component
  std::vector<int> selected_indices;
  std::vector<std::string> channel_names;
  double ridge = 0.0;

  std::size_t channels() const noexcept { return static_cast<std::size_t>(full_w.cols()); }
};

struct FeatureMatrix {
  Eigen::MatrixXd values;  // trials x features
  std::vector<ClassLabel> labels;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

// X X^T / trace(X X^T) for one channels x samples trial.
Eigen::MatrixXd normalized_covariance(const Eigen::MatrixXd& trial);

// Mean normalized covariance over the trials carrying `label`. Requires at
// least `min_trials` such trials.
Eigen::MatrixXd class_covariance(const EpochSet& epochs, ClassLabel label, std::size_t min_trials = 2);

// Core solver on precomputed class covariances. RightHand is the class whose
// variance the first component maximizes.
CspModel fit_csp(const Eigen::MatrixXd& cov_right, const Eigen::MatrixXd& cov_left, const CspOptions& opts);

CspModel fit_csp(const EpochSet& epochs, const CspOptions& opts = {});
inline CspModel fit_csp(const EpochSet& epochs, int pairs, double ridge) {
  return fit_csp(epochs, CspOptions{pairs, ridge, true});
}

// feature j = log(var(z_j) / sum_k var(z_k)), z = filters * X.
FeatureMatrix csp_features(const CspModel& model, const EpochSet& epochs);

// Same features from a trial's centered scatter matrix X_c X_c^T.
Eigen::VectorXd features_from_scatter(const Eigen::MatrixXd& filters, const Eigen::MatrixXd& scatter);

}  // namespace mibci
