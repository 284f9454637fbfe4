#pragma once

// Butterworth band-pass design (bilinear transform, pre-warped band edges),
// cascade filtering and Welch spectral density estimation.

#include "mibci/types.hpp"

#include <Eigen/Core>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace mibci {

// One second-order section, a0 normalized to 1:
//   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct IirFilter {
  std::vector<Biquad> sections;
  int order = 0;  // prototype order; the band-pass cascade has 2*order poles
  double low_hz = 0.0;
  double high_hz = 0.0;
  double sample_rate = 0.0;

  std::complex<double> response(double freq_hz) const;
  double magnitude_db(double freq_hz) const;
  std::vector<std::complex<double>> poles() const;
};

IirFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate);

enum class FilterMode { Causal, ZeroPhase };

std::string_view filter_mode_name(FilterMode mode) noexcept;  // "causal" / "zero_phase"
FilterMode parse_filter_mode(std::string_view name);

// Samples at the start of causally filtered output treated as transient.
inline constexpr double kCausalTransientSeconds = 0.5;

// Single-channel filtering with zero initial conditions. Zero-phase runs the
// cascade forward then backward over an odd-reflected padding of
// 3 * (2 * sections + 1) samples, trimmed afterwards.
Eigen::VectorXd apply_filter(const IirFilter& filter, const Eigen::Ref<const Eigen::VectorXd>& x,
                             FilterMode mode);

// Every row filtered independently.
Eigen::MatrixXd filter_rows(const IirFilter& filter, const Eigen::MatrixXd& data, FilterMode mode);

EpochSet filter_epochs(const IirFilter& filter, const EpochSet& epochs, FilterMode mode);
ContinuousRecording filter_recording(const IirFilter& filter, const ContinuousRecording& rec,
                                     FilterMode mode);

struct PsdEstimate {
  std::vector<double> freqs;  // Hz, ascending, 0 .. rate/2
  Eigen::MatrixXd power;      // channels x freqs, uV^2/Hz
  std::size_t seg_len = 0;
  double overlap = 0.0;
  std::string window = "hann";
  std::size_t segments = 0;  // segments averaged per channel

  double resolution() const noexcept { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
  std::size_t bin_of(double freq_hz) const;  // nearest bin
  // Sum of density x bin width over bins whose centre lies in [low, high].
  double band_power(std::size_t channel, double low_hz, double high_hz) const;
};

inline constexpr std::size_t kDefaultWelchSegment = 250;
inline constexpr double kDefaultWelchOverlap = 0.5;

// One-sided density of one or more signals (rows), averaging periodograms of
// Hann-windowed, mean-removed segments.
PsdEstimate welch_psd(const Eigen::MatrixXd& signals, double sample_rate,
                      std::size_t seg_len = kDefaultWelchSegment, double overlap = kDefaultWelchOverlap);

// Average over all selected trials (all trials when class_filter is empty).
PsdEstimate welch_psd(const EpochSet& epochs, std::optional<ClassLabel> class_filter,
                      std::size_t seg_len = kDefaultWelchSegment, double overlap = kDefaultWelchOverlap);

}  // namespace mibci
