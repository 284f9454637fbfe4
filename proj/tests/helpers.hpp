#pragma once

#include "mibci/dsp.hpp"
#include "mibci/epoching.hpp"
#include "mibci/eval.hpp"
#include "mibci/paradigm.hpp"
#include "mibci/synth.hpp"
#include "mibci/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

namespace testing {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

inline Eigen::VectorXd sine(Eigen::Index n, double freq, double rate, double amp = 1.0, double phase = 0.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate + phase);
  return v;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mibci_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// One synthetic session cut to the feature window; band-passed on the
// continuous recording first when `band` is set.
inline mibci::EpochSet session(const mibci::SynthConfig& cfg, std::uint64_t plan_seed,
                               std::optional<mibci::FilterMode> band = mibci::FilterMode::ZeroPhase,
                               const mibci::ParadigmSpec& spec = {}) {
  const auto plans = mibci::generate_sequence(spec, mibci::CharacterCatalog::default_catalog(), plan_seed);
  auto rec = mibci::synthesize(spec, plans, cfg, mibci::Montage::standard30());
  if (band) rec = mibci::filter_recording(mibci::design_butterworth_bandpass(5, 8.0, 30.0, rec.sample_rate), rec, *band);
  return mibci::extract_epochs(rec, mibci::plans_to_markers(plans, rec.sample_rate), spec.feature_window);
}

struct CanaryResult {
  double honest = 0.0;      // shuffled labels, folds fitted on training trials
  double leaky = 0.0;       // shuffled labels, folds fitted on every trial
  bool held_out_blind = true;  // permuting held-out labels never changed a prediction
};

// Leakage canary on a no-ERD session whose labels are shuffled.
inline CanaryResult leakage_canary(std::uint64_t seed) {
  mibci::SynthConfig cfg;
  cfg.seed = seed;
  cfg.erd_depth = 0.0;
  auto epochs = session(cfg, seed);
  std::mt19937_64 rng(seed);
  std::shuffle(epochs.labels.begin(), epochs.labels.end(), rng);

  const mibci::PipelineConfig pipe;
  CanaryResult out;
  out.honest = mibci::cross_validate(epochs, pipe, 3, 10, seed).mean_accuracy;
  out.leaky = mibci::cross_validate(epochs, pipe, 3, 10, seed, mibci::CvOptions{true}).mean_accuracy;

  const auto cache = mibci::TrialCache::build(epochs, pipe.csp);
  const auto fold_of = mibci::stratified_folds(epochs.labels, 10, seed);
  for (int f = 0; f < 10; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t t = 0; t < fold_of.size(); ++t) (fold_of[t] == f ? test : train).push_back(t);
    auto scrambled = epochs.labels;
    for (auto t : test) scrambled[t] = rng() % 2 ? mibci::ClassLabel::RightHand : mibci::ClassLabel::LeftHand;
    const auto a = mibci::evaluate_fold(cache, epochs.labels, train, test, pipe);
    const auto b = mibci::evaluate_fold(cache, scrambled, train, test, pipe);
    out.held_out_blind = out.held_out_blind && a.decisions == b.decisions && a.labels == b.labels;
  }
  return out;
}

}  // namespace testing
