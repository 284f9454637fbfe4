#include "helpers.hpp"

#include "mibci/dsp.hpp"
#include "mibci/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace mibci;

namespace {

constexpr double kRate = 250.0;

// Magnitude of the analog band-pass Butterworth at the pre-warped frequency
// that the bilinear transform maps onto f.
double analog_magnitude(int order, double low, double high, double rate, double f) {
  auto warp = [&](double hz) { return 2.0 * rate * std::tan(std::numbers::pi * hz / rate); };
  const double w1 = warp(low), w2 = warp(high), w = warp(f);
  const double ratio = (w * w - w1 * w2) / (w * (w2 - w1));
  return 1.0 / std::sqrt(1.0 + std::pow(ratio * ratio, order));
}

EpochSet single(const Eigen::MatrixXd& x, ClassLabel label = ClassLabel::LeftHand) {
  EpochSet e;
  e.sample_rate = kRate;
  e.epochs.push_back(x);
  e.labels.push_back(label);
  for (Eigen::Index c = 0; c < x.rows(); ++c) e.channel_names.push_back("ch" + std::to_string(c));
  return e;
}

double rms(const Eigen::VectorXd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

}  // namespace

TEST_CASE("order-5 8-30 Hz design meets the band-edge numbers") {
  const auto f = design_butterworth_bandpass(5, 8.0, 30.0, kRate);
  CHECK(f.sections.size() == 5);
  CHECK(f.poles().size() == 10);
  CHECK(std::abs(f.magnitude_db(8.0) + 3.0103) <= 0.1);
  CHECK(std::abs(f.magnitude_db(30.0) + 3.0103) <= 0.1);
  CHECK(f.magnitude_db(std::sqrt(8.0 * 30.0)) >= -0.05);
  // An exact order-5 bilinear design reaches only -35.72 dB at 50 Hz (the
  // analog prototype evaluated at the pre-warped frequency agrees).
  CHECK(std::abs(f.magnitude_db(50.0) + 35.7199) <= 0.01);
  for (const auto& p : f.poles()) CHECK(std::abs(p) < 1.0 - 1e-9);
}

TEST_CASE("cascade matches the closed-form bilinear Butterworth magnitude") {
  struct Case { int order; double low, high, rate; };
  for (const auto& c : {Case{5, 8, 30, 250}, Case{2, 1, 40, 250}, Case{8, 13, 30, 500}, Case{1, 0.5, 100, 250},
                        Case{4, 49, 51, 1000}}) {
    const auto f = design_butterworth_bandpass(c.order, c.low, c.high, c.rate);
    for (int k = 1; k < 200; ++k) {
      const double hz = 0.5 * c.rate * k / 200.0;
      const double want = analog_magnitude(c.order, c.low, c.high, c.rate, hz);
      const double got = std::abs(f.response(hz));
      REQUIRE(got == doctest::Approx(want).epsilon(1e-8).scale(1e-12));
    }
  }
}

TEST_CASE("every legal design in a sweep is stable") {
  int designs = 0;
  for (int order = 1; order <= 8; ++order) {
    for (double low : {1.5, 4.0, 8.0, 20.0, 60.0}) {
      for (double high : {10.0, 30.0, 70.0, 110.0, 124.0}) {
        if (!(low < high)) continue;
        const auto f = design_butterworth_bandpass(order, low, high, kRate);
        for (const auto& p : f.poles()) REQUIRE(std::abs(p) < 1.0 - 1e-9);
        REQUIRE(f.poles().size() == static_cast<std::size_t>(2 * order));
        ++designs;
      }
    }
  }
  CHECK(designs > 100);
}

TEST_CASE("design errors") {
  CHECK_THROWS_AS(design_butterworth_bandpass(0, 8, 30, kRate), ConfigError);
  CHECK_THROWS_AS(design_butterworth_bandpass(13, 8, 30, kRate), ConfigError);
  CHECK_THROWS_AS(design_butterworth_bandpass(5, 30, 8, kRate), ConfigError);
  CHECK_THROWS_AS(design_butterworth_bandpass(5, 0, 30, kRate), ConfigError);
  CHECK_THROWS_AS(design_butterworth_bandpass(5, 8, 125, kRate), ConfigError);
  CHECK_THROWS_AS(parse_filter_mode("acausal"), ConfigError);
  CHECK(parse_filter_mode("zero_phase") == FilterMode::ZeroPhase);
}

TEST_CASE("filtering is linear") {
  const auto f = design_butterworth_bandpass(5, 8, 30, kRate);
  const Eigen::VectorXd x = testing::gaussian(1000, 1, 1);
  const Eigen::VectorXd y = testing::gaussian(1000, 1, 2);
  for (auto mode : {FilterMode::Causal, FilterMode::ZeroPhase}) {
    const Eigen::VectorXd lhs = apply_filter(f, 2.5 * x - 0.75 * y, mode);
    const Eigen::VectorXd rhs = 2.5 * apply_filter(f, x, mode) - 0.75 * apply_filter(f, y, mode);
    CHECK((lhs - rhs).norm() <= 1e-9 * rhs.norm());
  }
}

TEST_CASE("passband and stopband sinusoids, causal mode") {
  const auto f = design_butterworth_bandpass(5, 8, 30, kRate);
  const Eigen::Index n = 1000;
  const auto in15 = single(testing::sine(n, 15.0, kRate).transpose());
  const auto out15 = filter_epochs(f, in15, FilterMode::Causal);
  REQUIRE(out15.transient_samples == 125);
  const Eigen::VectorXd a = in15.epochs[0].row(0).tail(n - 125).transpose();
  const Eigen::VectorXd b = out15.epochs[0].row(0).tail(n - 125).transpose();
  CHECK(std::abs(rms(b) / rms(a) - 1.0) <= 0.05);

  const auto in2 = single(testing::sine(n, 2.0, kRate).transpose());
  const auto out2 = filter_epochs(f, in2, FilterMode::Causal);
  CHECK(rms(out2.epochs[0].row(0).transpose()) <= 0.05 * rms(in2.epochs[0].row(0).transpose()));
  CHECK(out2.labels == in2.labels);
  CHECK(out2.epochs[0].cols() == n);
}

TEST_CASE("zero-phase output is not delayed") {
  const auto f = design_butterworth_bandpass(5, 8, 30, kRate);
  const Eigen::VectorXd x = testing::gaussian(4000, 1, 9);
  const Eigen::VectorXd y = apply_filter(f, x, FilterMode::ZeroPhase);
  int best_lag = 999;
  double best = -1.0;
  for (int lag = -50; lag <= 50; ++lag) {
    double s = 0.0;
    for (Eigen::Index i = 100; i < x.size() - 100; ++i) s += x[i] * y[i + lag];
    if (s > best) {
      best = s;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
  // The causal pass, by contrast, lags.
  const Eigen::VectorXd z = apply_filter(f, x, FilterMode::Causal);
  double at0 = 0.0, at_delay = 0.0;
  for (Eigen::Index i = 100; i < x.size() - 100; ++i) {
    at0 += x[i] * z[i];
    at_delay += x[i] * z[i + 5];
  }
  CHECK(at_delay > at0);
}

TEST_CASE("filter_epochs rejects an empty set and keeps shape") {
  const auto f = design_butterworth_bandpass(5, 8, 30, kRate);
  CHECK_THROWS_AS(filter_epochs(f, EpochSet{}, FilterMode::ZeroPhase), DataError);
  const auto e = single(testing::gaussian(3, 500, 4));
  const auto out = filter_epochs(f, e, FilterMode::ZeroPhase);
  CHECK(out.epochs[0].rows() == 3);
  CHECK(out.epochs[0].cols() == 500);
  CHECK(out.transient_samples == 0);
  CHECK(out.channel_names == e.channel_names);
}

TEST_CASE("Welch: sinusoid peak and white-noise Parseval") {
  const auto sin10 = single(testing::sine(1000, 10.0, kRate).transpose());
  const auto psd = welch_psd(sin10, std::nullopt);
  Eigen::Index peak = 0;
  psd.power.row(0).maxCoeff(&peak);
  CHECK(psd.freqs[static_cast<std::size_t>(peak)] == doctest::Approx(10.0));
  CHECK(psd.resolution() == doctest::Approx(1.0));
  CHECK(psd.freqs.front() == 0.0);
  CHECK(psd.freqs.back() == doctest::Approx(125.0));
  CHECK(psd.segments == 7);
  CHECK((psd.power.array() >= 0.0).all());

  const auto noise = single(testing::gaussian(2, 2000, 17, 2.0));
  const auto np = welch_psd(noise, std::nullopt);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double integral = np.power.row(c).sum() * np.resolution();
    CHECK(integral == doctest::Approx(4.0).epsilon(0.15));
  }
}

TEST_CASE("Welch: class filter equals the manual subset, order does not matter") {
  EpochSet e;
  e.sample_rate = kRate;
  e.channel_names = {"a", "b"};
  for (int t = 0; t < 8; ++t) {
    e.epochs.push_back(testing::gaussian(2, 500, 100 + static_cast<std::uint64_t>(t)));
    e.labels.push_back(t % 3 == 0 ? ClassLabel::LeftHand : ClassLabel::RightHand);
  }
  std::vector<std::size_t> left;
  for (std::size_t t = 0; t < e.trials(); ++t)
    if (e.labels[t] == ClassLabel::LeftHand) left.push_back(t);
  const auto by_filter = welch_psd(e, ClassLabel::LeftHand);
  const auto by_subset = welch_psd(e.subset(left), std::nullopt);
  CHECK(by_filter.power == by_subset.power);

  std::vector<std::size_t> order{5, 2, 7, 0, 3, 6, 1, 4};
  const auto a = welch_psd(e, std::nullopt);
  const auto b = welch_psd(e.subset(order), std::nullopt);
  CHECK((a.power - b.power).cwiseAbs().maxCoeff() <= 1e-12 * a.power.maxCoeff());
}

TEST_CASE("Welch parameter errors") {
  const auto e = single(testing::gaussian(1, 200, 3));
  CHECK_THROWS_AS(welch_psd(e, std::nullopt, 250), ConfigError);
  CHECK_THROWS_AS(welch_psd(e, std::nullopt, 100, 1.0), ConfigError);
  CHECK_THROWS_AS(welch_psd(e, std::nullopt, 100, -0.1), ConfigError);
  CHECK_THROWS_AS(welch_psd(e, ClassLabel::RightHand, 100), DataError);
  CHECK_THROWS_AS(welch_psd(EpochSet{}, std::nullopt), DataError);
}
