#pragma once

// Repeated stratified k-fold evaluation of the band-pass -> CSP -> SVM chain,
// and subject screening.

#include "mibci/csp.hpp"
#include "mibci/dsp.hpp"
#include "mibci/svm.hpp"
#include "mibci/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mibci {

struct FilterSpec {
  int order = 5;
  double low_hz = 8.0;
  double high_hz = 30.0;
  FilterMode mode = FilterMode::ZeroPhase;

  IirFilter design(double sample_rate) const { return design_butterworth_bandpass(order, low_hz, high_hz, sample_rate); }
};

struct PipelineConfig {
  // Applied to every epoch before cross-validation. Leave empty when the
  // epochs were cut from an already filtered recording.
  std::optional<FilterSpec> filter;
  CspOptions csp;
  double c = 1.0;
  bool standardize = true;
  // Choose c per outer training fold by inner stratified CV over c_grid.
  bool tune_c = false;
  std::vector<double> c_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  int inner_folds = 5;
};

struct CvReport {
  int repeats = 0;
  int folds = 0;
  Eigen::MatrixXd accuracy;  // repeats x folds, fractions
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample sd over all repeat/fold cells
  std::uint64_t seed = 0;
};

// Per-trial quantities that do not depend on the fold split.
struct TrialCache {
  std::vector<Eigen::MatrixXd> csp_scatter;      // what CSP averages (trace-normalized by default)
  std::vector<Eigen::MatrixXd> feature_scatter;  // centered X X^T for variance features
  std::vector<ClassLabel> labels;

  static TrialCache build(const EpochSet& epochs, const CspOptions& csp);
  std::size_t trials() const noexcept { return labels.size(); }
};

// Fits CSP, standardization and SVM using only `train` trials and the
// labels in `fit_labels` at those positions, then predicts the `test` trials.
Prediction evaluate_fold(const TrialCache& cache, const std::vector<ClassLabel>& fit_labels,
                         const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                         const PipelineConfig& cfg, std::uint64_t tuning_seed = 0);

// Fold index per trial: shuffle each class with `rng_seed`, then deal the
// trials round-robin into `folds` folds.
std::vector<int> stratified_folds(const std::vector<ClassLabel>& labels, int folds, std::uint64_t rng_seed);

struct CvOptions {
  // Diagnostic only: fit every fold on all trials, test fold included. Used
  // to show that the leakage canary detects leaks.
  bool fit_on_all_trials = false;
};

CvReport cross_validate(const EpochSet& epochs, const PipelineConfig& cfg, int repeats, int folds,
                        std::uint64_t seed, const CvOptions& opts = {});

struct SubjectAccuracy {
  std::string subject;
  double paradigm_a = 0.0;
  double paradigm_b = 0.0;
};

struct ScreeningResult {
  std::vector<std::string> included;
  std::vector<std::string> excluded;
};

inline constexpr double kScreeningThreshold = 0.6;

// A subject is excluded only when both paradigm accuracies are below the
// threshold.
ScreeningResult screen_subjects(const std::vector<SubjectAccuracy>& subjects,
                                double threshold = kScreeningThreshold);

}  // namespace mibci
