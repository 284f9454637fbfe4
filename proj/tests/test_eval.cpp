#include "helpers.hpp"

#include "mibci/error.hpp"
#include "mibci/eval.hpp"

#include <doctest.h>

#include <map>

using namespace mibci;

namespace {

std::vector<ClassLabel> labels(int right, int left) {
  std::vector<ClassLabel> out;
  const int n = right + left;
  for (int i = 0; i < n; ++i) out.push_back(i % 2 == 0 && right-- > 0 ? ClassLabel::RightHand : ClassLabel::LeftHand);
  return out;
}

EpochSet small_session(double erd, double noise, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.erd_depth = erd;
  cfg.noise_scale = noise;
  ParadigmSpec spec;
  spec.runs = 1;
  spec.trials_per_run = 60;
  return testing::session(cfg, seed, FilterMode::ZeroPhase, spec);
}

}  // namespace

TEST_CASE("stratified folds keep class counts within one") {
  for (auto [r, l, k] : {std::tuple{50, 50, 10}, std::tuple{23, 31, 10}, std::tuple{7, 12, 5}, std::tuple{10, 10, 10}}) {
    const auto lab = labels(r, l);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto fold_of = stratified_folds(lab, k, seed);
      std::map<int, std::pair<int, int>> counts;
      for (std::size_t t = 0; t < lab.size(); ++t) {
        REQUIRE(fold_of[t] >= 0);
        REQUIRE(fold_of[t] < k);
        (lab[t] == ClassLabel::RightHand ? counts[fold_of[t]].first : counts[fold_of[t]].second)++;
      }
      REQUIRE(counts.size() == static_cast<std::size_t>(k));
      int rmin = 1 << 30, rmax = 0, lmin = 1 << 30, lmax = 0, tmin = 1 << 30, tmax = 0;
      for (const auto& [f, c] : counts) {
        rmin = std::min(rmin, c.first);
        rmax = std::max(rmax, c.first);
        lmin = std::min(lmin, c.second);
        lmax = std::max(lmax, c.second);
        tmin = std::min(tmin, c.first + c.second);
        tmax = std::max(tmax, c.first + c.second);
      }
      CHECK(rmax - rmin <= 1);
      CHECK(lmax - lmin <= 1);
      CHECK(tmax - tmin <= 1);
    }
  }
  CHECK(stratified_folds(labels(50, 50), 10, 3) == stratified_folds(labels(50, 50), 10, 3));
  CHECK(stratified_folds(labels(50, 50), 10, 3) != stratified_folds(labels(50, 50), 10, 4));
}

TEST_CASE("too few trials for the fold count") {
  CHECK_THROWS_AS(stratified_folds(labels(9, 20), 10, 1), ConfigError);
  CHECK_THROWS_AS(stratified_folds(labels(20, 20), 1, 1), ConfigError);
  const auto epochs = small_session(0.8, 10.0, 4).subset({0, 1, 2, 3, 4, 5, 6, 7});
  CHECK_THROWS_AS(cross_validate(epochs, PipelineConfig{}, 1, 10, 1), ConfigError);
  CHECK_THROWS_AS(cross_validate(small_session(0.8, 10.0, 4), PipelineConfig{}, 0, 10, 1), ConfigError);
}

TEST_CASE("cross-validation is deterministic and its report consistent") {
  const auto epochs = small_session(0.8, 10.0, 5);
  const auto a = cross_validate(epochs, PipelineConfig{}, 3, 10, 42);
  const auto b = cross_validate(epochs, PipelineConfig{}, 3, 10, 42);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.accuracy.rows() == 3);
  CHECK(a.accuracy.cols() == 10);
  CHECK(a.seed == 42);
  CHECK((a.accuracy.array() >= 0.0).all());
  CHECK((a.accuracy.array() <= 1.0).all());
  CHECK(std::abs(a.mean_accuracy - a.accuracy.mean()) <= 1e-12);
  CHECK(a.std_accuracy >= 0.0);
}

TEST_CASE("filtering inside the pipeline matches pre-filtered epochs' shape of result") {
  SynthConfig cfg;
  cfg.seed = 8;
  ParadigmSpec spec;
  spec.runs = 1;
  spec.trials_per_run = 40;
  const auto raw = testing::session(cfg, 8, std::nullopt, spec);
  PipelineConfig pipe;
  pipe.filter = FilterSpec{};
  const auto r = cross_validate(raw, pipe, 1, 5, 3);
  CHECK(r.mean_accuracy > 0.7);
}

TEST_CASE("separable session classifies almost perfectly") {
  const auto r = cross_validate(small_session(0.9, 2.0, 6), PipelineConfig{}, 2, 10, 6);
  CHECK(r.mean_accuracy >= 0.95);
}

TEST_CASE("c tuning path runs and stays accurate") {
  PipelineConfig pipe;
  pipe.tune_c = true;
  const auto r = cross_validate(small_session(0.8, 10.0, 7), pipe, 1, 5, 7);
  CHECK(r.mean_accuracy > 0.8);
  PipelineConfig bad = pipe;
  bad.c_grid.clear();
  CHECK_THROWS_AS(cross_validate(small_session(0.8, 10.0, 7), bad, 1, 5, 7), ConfigError);
}

TEST_CASE("leakage canary") {
  int inflated = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = testing::leakage_canary(seed);
    CAPTURE(seed);
    CHECK(c.held_out_blind);
    CHECK(std::abs(c.honest - 0.5) <= 0.1);
    inflated += c.leaky > 0.55;
  }
  CHECK(inflated >= 8);
}

TEST_CASE("screening excludes only subjects below threshold in both paradigms") {
  const auto s = screen_subjects({{"both-below", 0.55, 0.58}, {"one-below", 0.55, 0.72}, {"boundary", 0.60, 0.59}});
  CHECK(s.excluded == std::vector<std::string>{"both-below"});
  CHECK(s.included == std::vector<std::string>{"one-below", "boundary"});
  CHECK(screen_subjects({{"x", 0.3, 0.3}}, 0.25).included.size() == 1);
}
