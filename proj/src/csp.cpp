#include "mibci/csp.hpp"

#include "mibci/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mibci {
namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd trial_scatter(const Eigen::MatrixXd& x, bool normalize) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(x);
  s = s.selfadjointView<Eigen::Lower>();
  if (normalize) {
    const double tr = s.trace();
    if (!(tr > 0.0)) throw DataError("trial has zero total power; cannot normalize its covariance");
    s /= tr;
  }
  return s;
}

Eigen::MatrixXd mean_class_scatter(const EpochSet& epochs, ClassLabel label, std::size_t min_trials,
                                   bool normalize) {
  epochs.validate();
  const std::size_t n = epochs.count(label);
  if (n < min_trials) {
    std::ostringstream msg;
    msg << "class covariance for " << label_name(label) << " needs at least " << min_trials << " trials, got " << n;
    throw DataError(msg.str());
  }
  const auto ch = static_cast<Eigen::Index>(epochs.channels());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(ch, ch);
  for (std::size_t t = 0; t < epochs.trials(); ++t) {
    if (epochs.labels[t] == label) sum += trial_scatter(epochs.epochs[t], normalize);
  }
  return symmetrize(sum / static_cast<double>(n));
}

}  // namespace

Eigen::MatrixXd normalized_covariance(const Eigen::MatrixXd& trial) { return trial_scatter(trial, true); }

Eigen::MatrixXd class_covariance(const EpochSet& epochs, ClassLabel label, std::size_t min_trials) {
  return mean_class_scatter(epochs, label, min_trials, true);
}

CspModel fit_csp(const Eigen::MatrixXd& cov_right, const Eigen::MatrixXd& cov_left, const CspOptions& opts) {
  const Eigen::Index n = cov_right.rows();
  if (n < 2 || cov_right.cols() != n || cov_left.rows() != n || cov_left.cols() != n) {
    throw DataError("CSP needs two square class covariances of equal size (at least 2 channels)");
  }
  if (opts.pairs < 1 || 2 * static_cast<Eigen::Index>(opts.pairs) > n) {
    throw ConfigError("CSP pairs must lie within 1..channels/2");
  }
  if (!(opts.ridge >= 0.0)) throw ConfigError("CSP ridge must be non-negative");

  const Eigen::MatrixXd cr = symmetrize(cov_right);
  const Eigen::MatrixXd cl = symmetrize(cov_left);
  const Eigen::MatrixXd sum = cr + cl;
  const Eigen::MatrixXd composite =
      sum + opts.ridge * sum.trace() / static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> outer(composite);
  if (outer.info() != Eigen::Success) throw NumericalError("CSP: eigendecomposition of the composite covariance failed");
  const Eigen::VectorXd lambda = outer.eigenvalues();
  const double smallest = lambda.minCoeff();
  const double largest = lambda.maxCoeff();
  if (!(smallest > static_cast<double>(n) * std::numeric_limits<double>::epsilon() * largest)) {
    std::ostringstream msg;
    msg << "CSP: composite covariance is numerically singular (smallest eigenvalue " << smallest << ")";
    throw ConditioningError(msg.str(), smallest);
  }
  // Whitening: P C P^T = I.
  const Eigen::MatrixXd whitening = lambda.cwiseInverse().cwiseSqrt().asDiagonal() * outer.eigenvectors().transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> inner(symmetrize(whitening * cr * whitening.transpose()));
  if (inner.info() != Eigen::Success) throw NumericalError("CSP: eigendecomposition of the whitened covariance failed");
  const Eigen::MatrixXd rotated = inner.eigenvectors().transpose() * whitening;

  // RightHand share of variance along each component.
  Eigen::VectorXd share(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto w = rotated.row(i);
    const double vr = w * cr * w.transpose();
    const double vl = w * cl * w.transpose();
    share[i] = vr / (vr + vl);
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return share[a] > share[b]; });

  CspModel model;
  model.ridge = opts.ridge;
  model.full_w.resize(n, n);
  model.eigvals.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd row = rotated.row(order[static_cast<std::size_t>(i)]);
    Eigen::Index peak = 0;
    row.cwiseAbs().maxCoeff(&peak);
    if (row[peak] < 0.0) row = -row;
    model.full_w.row(i) = row;
    model.eigvals[i] = share[order[static_cast<std::size_t>(i)]];
  }
  model.patterns = model.full_w.partialPivLu().inverse();
  for (int k = 0; k < opts.pairs; ++k) model.selected_indices.push_back(k);
  for (int k = opts.pairs; k > 0; --k) model.selected_indices.push_back(static_cast<int>(n) - k);
  model.filters.resize(static_cast<Eigen::Index>(model.selected_indices.size()), n);
  for (std::size_t k = 0; k < model.selected_indices.size(); ++k) {
    model.filters.row(static_cast<Eigen::Index>(k)) = model.full_w.row(model.selected_indices[k]);
  }
  return model;
}

CspModel fit_csp(const EpochSet& epochs, const CspOptions& opts) {
  const Eigen::MatrixXd cr = mean_class_scatter(epochs, ClassLabel::RightHand, 2, opts.normalize_trials);
  const Eigen::MatrixXd cl = mean_class_scatter(epochs, ClassLabel::LeftHand, 2, opts.normalize_trials);
  CspModel model = fit_csp(cr, cl, opts);
  model.channel_names = epochs.channel_names;
  return model;
}

Eigen::VectorXd features_from_scatter(const Eigen::MatrixXd& filters, const Eigen::MatrixXd& scatter) {
  const Eigen::VectorXd var = (filters * scatter * filters.transpose()).diagonal();
  const double total = var.sum();
  if (!(var.minCoeff() > 0.0) || !(total > 0.0)) throw DataError("projected signal has zero variance");
  return (var / total).array().log().matrix();
}

FeatureMatrix csp_features(const CspModel& model, const EpochSet& epochs) {
  epochs.validate();
  if (epochs.channels() != model.channels()) throw DataError("epoch channel count differs from the CSP model");
  FeatureMatrix fm;
  fm.values.resize(static_cast<Eigen::Index>(epochs.trials()), model.filters.rows());
  fm.labels = epochs.labels;
  for (std::size_t t = 0; t < epochs.trials(); ++t) {
    Eigen::MatrixXd z = model.filters * epochs.epochs[t];
    z.colwise() -= z.rowwise().mean();
    const Eigen::VectorXd var = z.rowwise().squaredNorm();
    const double total = var.sum();
    if (!(var.minCoeff() > 0.0) || !(total > 0.0)) {
      throw DataError("trial " + std::to_string(t) + ": projected signal has zero variance");
    }
    fm.values.row(static_cast<Eigen::Index>(t)) = (var / total).array().log().matrix().transpose();
  }
  return fm;
}

}  // namespace mibci
