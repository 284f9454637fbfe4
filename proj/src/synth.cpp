#include "mibci/synth.hpp"

#include "mibci/error.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace mibci {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kWobbleHz = 0.5;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Unit-variance 1/f noise of length n.
Eigen::VectorXd pink_noise(std::size_t n, double rate, double floor_hz, std::mt19937_64& rng, Eigen::FFT<double>& fft) {
  if (n < 2) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const std::size_t len = next_pow2(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(len);
  for (auto& v : white) v = normal(rng);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, white);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < len; ++k) {
    const std::size_t kk = k <= len / 2 ? k : len - k;
    const double f = std::max(static_cast<double>(kk) * rate / static_cast<double>(len), floor_hz);
    spec[k] /= std::sqrt(f);
  }
  std::vector<double> shaped;
  fft.inv(shaped, spec);
  Eigen::VectorXd out = Eigen::Map<const Eigen::VectorXd>(shaped.data(), static_cast<Eigen::Index>(n));
  out.array() -= out.mean();
  const double sd = std::sqrt(out.squaredNorm() / static_cast<double>(n - 1));
  if (sd > 0.0) out /= sd;
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (!(sample_rate > 0.0)) throw ConfigError("synth: sample rate must be positive");
  if (!(erd_depth >= 0.0 && erd_depth <= 1.0)) throw ConfigError("synth: erd_depth must lie in [0, 1]");
  if (!(mu_freq >= 8.0 && mu_freq <= 12.0)) throw ConfigError("synth: mu_freq must lie in 8..12 Hz");
  if (!(beta_freq >= 13.0 && beta_freq <= 30.0)) throw ConfigError("synth: beta_freq must lie in 13..30 Hz");
  if (noise_scale < 0.0 || mu_amp < 0.0 || beta_amp < 0.0) throw ConfigError("synth: amplitudes must be non-negative");
  if (!(spread > 0.0)) throw ConfigError("synth: spread must be positive");
  if (!(jitter_depth >= 0.0 && jitter_depth <= 1.0)) throw ConfigError("synth: jitter_depth must lie in [0, 1]");
  if (trial_amp_sd < 0.0) throw ConfigError("synth: trial_amp_sd must be non-negative");
  if (!(erd_window.start_s < erd_window.end_s)) throw ConfigError("synth: erd window start must precede its end");
  if (!(pink_floor_hz > 0.0)) throw ConfigError("synth: pink_floor_hz must be positive");
}

double spatial_weight(Point2 source, Point2 channel, double spread) noexcept {
  const double d = distance(source, channel);
  return std::exp(-d * d / (2.0 * spread * spread));
}

ContinuousRecording synthesize(const ParadigmSpec& spec, const std::vector<TrialPlan>& plans,
                               const SynthConfig& cfg, const Montage& montage) {
  cfg.validate();
  const double rate = cfg.sample_rate;
  const std::size_t left = montage.require_index(cfg.left_motor);
  const std::size_t right = montage.require_index(cfg.right_motor);
  const auto nch = static_cast<Eigen::Index>(montage.size());

  double session_s = 0.0;
  for (const auto& p : plans) session_s = std::max(session_s, p.onset_s + spec.trial_duration_s());
  const auto total = static_cast<std::size_t>(std::max<std::int64_t>(0, seconds_to_samples(session_s, rate)));

  ContinuousRecording rec;
  rec.sample_rate = rate;
  rec.montage = montage;
  rec.data = Eigen::MatrixXd::Zero(nch, static_cast<Eigen::Index>(total));

  // Source mixing vectors: index 0 = left motor, 1 = right motor.
  const std::size_t sources[2] = {left, right};
  Eigen::MatrixXd mixing(nch, 2);
  for (int s = 0; s < 2; ++s) {
    for (Eigen::Index c = 0; c < nch; ++c) {
      mixing(c, s) = spatial_weight(montage.coordinates()[sources[s]],
                                    montage.coordinates()[static_cast<std::size_t>(c)], cfg.spread);
    }
  }

  std::seed_seq rhythm_seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 1u};
  std::mt19937_64 rhythm_rng(rhythm_seq);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::int64_t trial_len = seconds_to_samples(spec.trial_duration_s(), rate);
  const std::int64_t erd_begin = seconds_to_samples(cfg.erd_window.start_s, rate);
  const std::int64_t erd_end = seconds_to_samples(cfg.erd_window.end_s, rate);
  const double amps[2] = {cfg.mu_amp, cfg.beta_amp};
  const double freqs[2] = {cfg.mu_freq, cfg.beta_freq};

  Eigen::MatrixXd src(2, trial_len);
  for (const auto& plan : plans) {
    // RightHand imagery desynchronizes the left-hemisphere source and vice versa.
    const int attenuated = plan.label == ClassLabel::RightHand ? 0 : 1;
    src.setZero();
    for (int s = 0; s < 2; ++s) {
      for (int r = 0; r < 2; ++r) {
        const double phi = phase(rhythm_rng);
        const double psi = phase(rhythm_rng);
        const double gain = std::exp(cfg.trial_amp_sd * normal(rhythm_rng));
        for (std::int64_t i = 0; i < trial_len; ++i) {
          const double tau = static_cast<double>(i) / rate;
          double a = amps[r] * gain * (1.0 + cfg.jitter_depth * std::sin(kTwoPi * kWobbleHz * tau + psi));
          if (s == attenuated && i >= erd_begin && i < erd_end) a *= 1.0 - cfg.erd_depth;
          src(s, i) += a * std::sin(kTwoPi * freqs[r] * tau + phi);
        }
      }
    }
    const std::int64_t start = seconds_to_samples(plan.onset_s, rate);
    const std::int64_t len = std::min<std::int64_t>(trial_len, static_cast<std::int64_t>(total) - start);
    if (len <= 0) continue;
    rec.data.middleCols(start, len).noalias() += mixing * src.leftCols(len);
  }

  if (cfg.noise_scale > 0.0) {
    Eigen::FFT<double> fft;  // keeps its plan across channels
    for (Eigen::Index c = 0; c < nch; ++c) {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 2u,
                        static_cast<std::uint32_t>(c)};
      std::mt19937_64 noise_rng(seq);
      rec.data.row(c) += cfg.noise_scale * pink_noise(total, rate, cfg.pink_floor_hz, noise_rng, fft).transpose();
    }
  }

  // Samples carry float precision, like the files they end up in.
  round_to_f32(rec.data);
  return rec;
}

}  // namespace mibci
