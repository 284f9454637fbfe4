#include "mibci/svm.hpp"

#include "mibci/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mibci {
namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
  Eigen::MatrixXd x;  // n x d, solved space
  Eigen::VectorXd y;  // +-1
};

Problem make_problem(const FeatureMatrix& f, const Standardization& std_map) {
  Problem p;
  p.x = std_map.apply(f.values);
  p.y.resize(static_cast<Eigen::Index>(f.labels.size()));
  for (std::size_t i = 0; i < f.labels.size(); ++i) p.y[static_cast<Eigen::Index>(i)] = encode(f.labels[i]);
  return p;
}

// Exact solve on the current face: alphas at a bound stay there, the free
// ones (and the bias) satisfy y_i d_i = 1 and sum(alpha y) = 0. SMO converges
// only linearly when the kernel is low rank, so this finishes the job once
// the active set has settled. Returns false when the face solution leaves the
// box or does not lower the dual objective.
bool polish(const Eigen::MatrixXd& q, const Eigen::VectorXd& y, double c, Eigen::VectorXd& alpha,
            Eigen::VectorXd& grad) {
  const Eigen::Index n = alpha.size();
  std::vector<Eigen::Index> free_set, bound_set;
  for (Eigen::Index t = 0; t < n; ++t) (alpha[t] > 0.0 && alpha[t] < c ? free_set : bound_set).push_back(t);
  if (free_set.empty()) return false;
  const auto m = static_cast<Eigen::Index>(free_set.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs(m + 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = free_set[static_cast<std::size_t>(r)];
    for (Eigen::Index k = 0; k < m; ++k) a(r, k) = q(i, free_set[static_cast<std::size_t>(k)]);
    a(r, m) = y[i];
    a(m, r) = y[i];
    double fixed = 0.0;
    for (auto j : bound_set) fixed += q(i, j) * alpha[j];
    rhs[r] = 1.0 - fixed;
  }
  double fixed_y = 0.0;
  for (auto j : bound_set) fixed_y += y[j] * alpha[j];
  rhs[m] = -fixed_y;
  const Eigen::VectorXd sol = a.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite() || (a * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
    return false;
  }
  Eigen::VectorXd cand = alpha;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double v = sol[r];
    if (v < 0.0 || v > c) return false;
    cand[free_set[static_cast<std::size_t>(r)]] = v;
  }
  const Eigen::VectorXd cand_grad = q * cand - Eigen::VectorXd::Ones(n);
  const double before = 0.5 * alpha.dot(grad - Eigen::VectorXd::Ones(n));
  const double after = 0.5 * cand.dot(cand_grad - Eigen::VectorXd::Ones(n));
  if (after > before) return false;
  alpha = cand;
  grad = cand_grad;
  return true;
}

}  // namespace

Standardization Standardization::fit(const Eigen::MatrixXd& rows) {
  Standardization s;
  const auto n = static_cast<double>(rows.rows());
  s.mean = rows.colwise().mean().transpose();
  s.scale.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double ss = (rows.col(j).array() - s.mean[j]).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& rows) const {
  if (identity()) return rows;
  if (rows.cols() != mean.size()) throw DataError("standardization dimension mismatch");
  return (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

SvmModel train_svm(const FeatureMatrix& features, const SvmOptions& opts) {
  const auto n = static_cast<Eigen::Index>(features.rows());
  if (features.labels.size() != features.rows()) throw DataError("feature matrix: label count differs from rows");
  if (!(opts.c > 0.0) || !std::isfinite(opts.c)) throw ConfigError("SVM c must be positive");
  if (!(opts.tol > 0.0)) throw ConfigError("SVM tolerance must be positive");
  if (!features.values.allFinite()) throw DataError("feature matrix contains non-finite values");
  std::size_t pos = 0;
  for (auto l : features.labels) pos += l == ClassLabel::RightHand;
  if (pos == 0 || pos == features.rows()) throw DataError("SVM training needs both classes");

  SvmModel model;
  model.c = opts.c;
  if (opts.standardize) model.standardization = Standardization::fit(features.values);
  const Problem p = make_problem(features, model.standardization);
  const double c = opts.c;
  const Eigen::MatrixXd gram = p.x * p.x.transpose();
  const Eigen::VectorXd& y = p.y;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q alpha - 1
  auto in_up = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };
  auto dual_min = [&]() { return 0.5 * alpha.dot(grad - Eigen::VectorXd::Ones(n)); };

  const Eigen::MatrixXd q = (y * y.transpose()).cwiseProduct(gram);
  // Polishing starts once the violation is below this and repeats every
  // polish_every updates while SMO keeps running.
  constexpr double kPolishBelow = 1e-3;
  const std::size_t polish_every = std::max<std::size_t>(1000, 10 * static_cast<std::size_t>(n));
  std::size_t next_polish = 0;

  bool converged = false;
  std::size_t updates = 0;
  while (updates < opts.max_updates) {
    // Maximal violating pair, second-order choice of j.
    Eigen::Index i = -1;
    double gmax = -kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    double gmin = kInf;
    Eigen::Index j = -1;
    double best = kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      if (i >= 0 && v < gmax) {
        const double b_it = gmax - v;
        double a_it = gram(i, i) + gram(t, t) - 2.0 * gram(i, t);
        if (a_it <= 0.0) a_it = kTau;
        const double score = -(b_it * b_it) / a_it;
        if (score <= best) {
          best = score;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < opts.tol) {
      converged = true;
      break;
    }
    if (gmax - gmin < kPolishBelow && updates >= next_polish) {
      next_polish = updates + polish_every;
      if (polish(q, y, c, alpha, grad)) {
        if (opts.record_objective) model.objective_trace.push_back(dual_min());
        continue;
      }
    }

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    const double qij = y[i] * y[j] * gram(i, j);
    if (y[i] != y[j]) {
      double quad = gram(i, i) + gram(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (Eigen::Index t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * gram(t, i) * dai + y[j] * gram(t, j) * daj);
    }
    ++updates;
    if (opts.record_objective) model.objective_trace.push_back(dual_min());
  }

  // Bias from the free support vectors; otherwise the midpoint of the
  // feasible interval.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double ub = kInf, lb = -kInf;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  double rho = 0.0;
  if (free_count) {
    rho = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else {
    rho = std::isfinite(ub) ? ub : lb;
  }

  model.alphas = alpha;
  model.solved_w = p.x.transpose() * alpha.cwiseProduct(y);
  model.solved_b = -rho;
  model.updates = updates;
  const Eigen::VectorXd margins = (y.array() * ((p.x * model.solved_w).array() + model.solved_b)).matrix();
  model.slacks = (1.0 - margins.array()).max(0.0).matrix();
  const double half_w2 = 0.5 * model.solved_w.squaredNorm();
  model.objective = half_w2 + c * model.slacks.sum();
  model.dual_objective = alpha.sum() - half_w2;
  model.duality_gap = model.objective - model.dual_objective;

  if (model.standardization.identity()) {
    model.w = model.solved_w;
    model.b = model.solved_b;
  } else {
    const auto& s = model.standardization;
    model.w = model.solved_w.cwiseQuotient(s.scale);
    model.b = model.solved_b - model.w.dot(s.mean);
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "SVM solver did not converge within " << opts.max_updates << " pair updates (duality gap "
        << model.duality_gap << ")";
    throw ConvergenceError(msg.str(), model.duality_gap);
  }
  return model;
}

Prediction predict(const SvmModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.w.size()) throw DataError("feature dimension differs from the SVM model");
  Prediction out;
  out.decisions = (features * model.w).array() + model.b;
  out.labels.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < out.decisions.size(); ++i) out.labels.push_back(label_from_decision(out.decisions[i]));
  return out;
}

double kkt_residual(const SvmModel& model, const FeatureMatrix& features) {
  const Problem p = make_problem(features, model.standardization);
  const Eigen::VectorXd d = (p.x * model.solved_w).array() + model.solved_b;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double yd = p.y[i] * d[i];
    const double a = model.alphas[i];
    double r = 0.0;
    if (a <= 0.0) {
      r = std::max(0.0, 1.0 - yd);
    } else if (a >= model.c) {
      r = std::max(0.0, yd - 1.0);
    } else {
      r = std::abs(yd - 1.0);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace mibci
