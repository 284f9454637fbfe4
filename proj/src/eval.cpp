#include "mibci/eval.hpp"

#include "mibci/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mibci {
namespace {

std::mt19937_64 seeded(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

Eigen::MatrixXd scatter(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(x);
  return s.selfadjointView<Eigen::Lower>();
}

FeatureMatrix cached_features(const TrialCache& cache, const Eigen::MatrixXd& filters,
                              const std::vector<std::size_t>& idx, const std::vector<ClassLabel>& labels) {
  FeatureMatrix fm;
  fm.values.resize(static_cast<Eigen::Index>(idx.size()), filters.rows());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    fm.values.row(static_cast<Eigen::Index>(k)) = features_from_scatter(filters, cache.feature_scatter[idx[k]]).transpose();
    fm.labels.push_back(labels[idx[k]]);
  }
  return fm;
}

double accuracy_of(const Prediction& pred, const std::vector<ClassLabel>& truth) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += pred.labels[i] == truth[i];
  return truth.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(truth.size());
}

double tune_c(const FeatureMatrix& train, const PipelineConfig& cfg, std::uint64_t seed) {
  const int k = cfg.inner_folds;
  const auto fold_of = stratified_folds(train.labels, k, seed);
  double best_c = cfg.c_grid.front();
  double best_acc = -1.0;
  for (double c : cfg.c_grid) {
    double acc = 0.0;
    for (int f = 0; f < k; ++f) {
      FeatureMatrix tr, te;
      std::vector<Eigen::Index> tri, tei;
      for (std::size_t i = 0; i < train.rows(); ++i) (fold_of[i] == f ? tei : tri).push_back(static_cast<Eigen::Index>(i));
      tr.values = train.values(tri, Eigen::all);
      te.values = train.values(tei, Eigen::all);
      for (auto i : tri) tr.labels.push_back(train.labels[static_cast<std::size_t>(i)]);
      for (auto i : tei) te.labels.push_back(train.labels[static_cast<std::size_t>(i)]);
      SvmOptions o;
      o.c = c;
      o.standardize = cfg.standardize;
      acc += accuracy_of(predict(train_svm(tr, o), te), te.labels);
    }
    acc /= k;
    if (acc > best_acc) {
      best_acc = acc;
      best_c = c;
    }
  }
  return best_c;
}

}  // namespace

TrialCache TrialCache::build(const EpochSet& epochs, const CspOptions& csp) {
  epochs.validate();
  TrialCache cache;
  cache.labels = epochs.labels;
  cache.csp_scatter.reserve(epochs.trials());
  cache.feature_scatter.reserve(epochs.trials());
  for (const auto& x : epochs.epochs) {
    Eigen::MatrixXd s = scatter(x);
    if (csp.normalize_trials) {
      const double tr = s.trace();
      if (!(tr > 0.0)) throw DataError("trial has zero total power");
      s /= tr;
    }
    cache.csp_scatter.push_back(std::move(s));
    const Eigen::MatrixXd centered = x.colwise() - x.rowwise().mean();
    cache.feature_scatter.push_back(scatter(centered));
  }
  return cache;
}

Prediction evaluate_fold(const TrialCache& cache, const std::vector<ClassLabel>& fit_labels,
                         const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                         const PipelineConfig& cfg, std::uint64_t tuning_seed) {
  if (fit_labels.size() != cache.trials()) throw DataError("fold labels differ in length from the trial cache");
  const auto ch = cache.csp_scatter.front().rows();
  Eigen::MatrixXd cr = Eigen::MatrixXd::Zero(ch, ch), cl = Eigen::MatrixXd::Zero(ch, ch);
  std::size_t nr = 0, nl = 0;
  for (auto t : train) {
    if (fit_labels[t] == ClassLabel::RightHand) {
      cr += cache.csp_scatter[t];
      ++nr;
    } else {
      cl += cache.csp_scatter[t];
      ++nl;
    }
  }
  if (nr < 2 || nl < 2) throw DataError("training fold needs at least two trials of each class");
  const CspModel csp = fit_csp(cr / static_cast<double>(nr), cl / static_cast<double>(nl), cfg.csp);

  const FeatureMatrix train_features = cached_features(cache, csp.filters, train, fit_labels);
  SvmOptions opts;
  opts.c = cfg.tune_c ? tune_c(train_features, cfg, tuning_seed) : cfg.c;
  opts.standardize = cfg.standardize;
  const SvmModel svm = train_svm(train_features, opts);

  Eigen::MatrixXd test_values(static_cast<Eigen::Index>(test.size()), csp.filters.rows());
  for (std::size_t k = 0; k < test.size(); ++k) {
    test_values.row(static_cast<Eigen::Index>(k)) = features_from_scatter(csp.filters, cache.feature_scatter[test[k]]).transpose();
  }
  return predict(svm, test_values);
}

std::vector<int> stratified_folds(const std::vector<ClassLabel>& labels, int folds, std::uint64_t rng_seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  std::vector<int> assignment(labels.size(), -1);
  auto rng = seeded({rng_seed});
  std::size_t dealt = 0;
  for (ClassLabel cls : {ClassLabel::LeftHand, ClassLabel::RightHand}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(folds)) {
      std::ostringstream msg;
      msg << label_name(cls) << " has " << members.size() << " trials, fewer than the " << folds << " folds requested";
      throw ConfigError(msg.str());
    }
    for (std::size_t i = members.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(members[i - 1], members[pick(rng)]);
    }
    for (auto m : members) assignment[m] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
  }
  return assignment;
}

CvReport cross_validate(const EpochSet& epochs, const PipelineConfig& cfg, int repeats, int folds,
                        std::uint64_t seed, const CvOptions& opts) {
  if (repeats < 1) throw ConfigError("cross-validation needs at least one repeat");
  if (!(cfg.c > 0.0)) throw ConfigError("SVM c must be positive");
  if (cfg.tune_c) {
    if (cfg.c_grid.empty()) throw ConfigError("c tuning needs a non-empty c_grid");
    for (double c : cfg.c_grid) {
      if (!(c > 0.0)) throw ConfigError("every c_grid value must be positive");
    }
  }
  epochs.validate();
  const EpochSet* source = &epochs;
  EpochSet filtered;
  if (cfg.filter) {
    filtered = filter_epochs(cfg.filter->design(epochs.sample_rate), epochs, cfg.filter->mode);
    source = &filtered;
  }
  // Validates class counts before any fitting.
  (void)stratified_folds(epochs.labels, folds, seed);
  const TrialCache cache = TrialCache::build(*source, cfg.csp);

  CvReport report;
  report.repeats = repeats;
  report.folds = folds;
  report.seed = seed;
  report.accuracy.resize(repeats, folds);
  for (int r = 0; r < repeats; ++r) {
    const auto fold_of = stratified_folds(epochs.labels, folds, seed * 1000003ULL + static_cast<std::uint64_t>(r));
    for (int f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, test;
      std::vector<ClassLabel> truth;
      for (std::size_t t = 0; t < fold_of.size(); ++t) {
        if (fold_of[t] == f) {
          test.push_back(t);
          truth.push_back(epochs.labels[t]);
        }
        if (fold_of[t] != f || opts.fit_on_all_trials) train.push_back(t);
      }
      const auto pred = evaluate_fold(cache, epochs.labels, train, test, cfg,
                                      seed ^ (static_cast<std::uint64_t>(r) << 32) ^ static_cast<std::uint64_t>(f));
      report.accuracy(r, f) = accuracy_of(pred, truth);
    }
  }
  const double n = static_cast<double>(report.accuracy.size());
  report.mean_accuracy = report.accuracy.mean();
  report.std_accuracy =
      n > 1 ? std::sqrt((report.accuracy.array() - report.mean_accuracy).square().sum() / (n - 1.0)) : 0.0;
  return report;
}

ScreeningResult screen_subjects(const std::vector<SubjectAccuracy>& subjects, double threshold) {
  ScreeningResult out;
  for (const auto& s : subjects) {
    const bool excluded = s.paradigm_a < threshold && s.paradigm_b < threshold;
    (excluded ? out.excluded : out.included).push_back(s.subject);
  }
  return out;
}

}  // namespace mibci
