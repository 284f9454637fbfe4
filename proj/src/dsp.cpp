#include "mibci/dsp.hpp"

#include "mibci/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mibci {
namespace {

using cd = std::complex<double>;

void run_cascade(const std::vector<Biquad>& sections, double* x, std::size_t n) {
  // Transposed direct form II, zero initial state.
  for (const auto& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double in = x[i];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      x[i] = out;
    }
  }
}

cd section_response(const Biquad& s, cd zinv) {
  return (s.b0 + zinv * (s.b1 + zinv * s.b2)) / (1.0 + zinv * (s.a1 + zinv * s.a2));
}

}  // namespace

std::complex<double> IirFilter::response(double freq_hz) const {
  const cd zinv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
  cd h = 1.0;
  for (const auto& s : sections) h *= section_response(s, zinv);
  return h;
}

double IirFilter::magnitude_db(double freq_hz) const { return 20.0 * std::log10(std::abs(response(freq_hz))); }

std::vector<std::complex<double>> IirFilter::poles() const {
  std::vector<cd> out;
  for (const auto& s : sections) {
    // z^2 + a1 z + a2 = 0
    const cd disc = std::sqrt(cd(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    out.push_back((-s.a1 + disc) / 2.0);
    out.push_back((-s.a1 - disc) / 2.0);
  }
  return out;
}

IirFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate) {
  if (order < 1 || order > 12) throw ConfigError("Butterworth order must be within 1..12");
  if (!(sample_rate > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < sample_rate / 2.0)) {
    throw ConfigError("band edges must satisfy 0 < low < high < rate/2");
  }
  const double pi = std::numbers::pi;
  const double k = 2.0 * sample_rate;
  // Pre-warped analog band edges.
  const double w1 = k * std::tan(pi * low_hz / sample_rate);
  const double w2 = k * std::tan(pi * high_hz / sample_rate);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<cd> zpoles;
  for (int i = 1; i <= order; ++i) {
    const cd p = std::polar(1.0, pi * (2.0 * i + order - 1.0) / (2.0 * order));
    const cd half = p * bw / 2.0;
    const cd root = std::sqrt(half * half - w0 * w0);
    for (const cd s : {half + root, half - root}) zpoles.push_back((k + s) / (k - s));
  }

  // Pair each upper-half-plane pole with its conjugate; pair real poles with
  // each other.
  constexpr double kImagTol = 1e-12;
  std::vector<cd> upper;
  std::vector<double> reals;
  for (const cd z : zpoles) {
    if (z.imag() > kImagTol) {
      upper.push_back(z);
    } else if (std::abs(z.imag()) <= kImagTol) {
      reals.push_back(z.real());
    }
  }
  std::sort(reals.begin(), reals.end());
  std::sort(upper.begin(), upper.end(), [](cd a, cd b) { return std::abs(a) < std::abs(b); });

  IirFilter f;
  f.order = order;
  f.low_hz = low_hz;
  f.high_hz = high_hz;
  f.sample_rate = sample_rate;
  for (const cd z : upper) f.sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    f.sections.push_back({1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  }
  if (f.sections.size() != static_cast<std::size_t>(order)) {
    throw NumericalError("Butterworth design produced an unpaired pole");
  }

  // Unit gain of every section at the digital centre frequency, where the
  // band-pass magnitude peaks.
  const double center_hz = sample_rate / pi * std::atan(w0 / k);
  const cd zinv = std::polar(1.0, -2.0 * pi * center_hz / sample_rate);
  for (auto& s : f.sections) {
    const double g = 1.0 / std::abs(section_response(s, zinv));
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return f;
}

std::string_view filter_mode_name(FilterMode mode) noexcept {
  return mode == FilterMode::Causal ? "causal" : "zero_phase";
}

FilterMode parse_filter_mode(std::string_view name) {
  if (name == "causal") return FilterMode::Causal;
  if (name == "zero_phase") return FilterMode::ZeroPhase;
  throw ConfigError("unknown filter mode '" + std::string(name) + "' (expected causal or zero_phase)");
}

Eigen::VectorXd apply_filter(const IirFilter& filter, const Eigen::Ref<const Eigen::VectorXd>& x,
                             FilterMode mode) {
  const auto n = static_cast<std::size_t>(x.size());
  if (mode == FilterMode::Causal || n == 0) {
    Eigen::VectorXd y = x;
    run_cascade(filter.sections, y.data(), n);
    return y;
  }
  const std::size_t pad = std::min<std::size_t>(3 * (2 * filter.sections.size() + 1), n > 0 ? n - 1 : 0);
  std::vector<double> buf(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    buf[i] = 2.0 * x[0] - x[static_cast<Eigen::Index>(pad - i)];
    buf[n + pad + i] = 2.0 * x[static_cast<Eigen::Index>(n - 1)] - x[static_cast<Eigen::Index>(n - 2 - i)];
  }
  for (std::size_t i = 0; i < n; ++i) buf[pad + i] = x[static_cast<Eigen::Index>(i)];
  run_cascade(filter.sections, buf.data(), buf.size());
  std::reverse(buf.begin(), buf.end());
  run_cascade(filter.sections, buf.data(), buf.size());
  std::reverse(buf.begin(), buf.end());
  return Eigen::Map<const Eigen::VectorXd>(buf.data() + pad, static_cast<Eigen::Index>(n));
}

Eigen::MatrixXd filter_rows(const IirFilter& filter, const Eigen::MatrixXd& data, FilterMode mode) {
  Eigen::MatrixXd out(data.rows(), data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const Eigen::VectorXd row = data.row(r).transpose();
    out.row(r) = apply_filter(filter, row, mode).transpose();
  }
  return out;
}

EpochSet filter_epochs(const IirFilter& filter, const EpochSet& epochs, FilterMode mode) {
  if (epochs.trials() == 0) throw DataError("filter_epochs: empty epoch set");
  EpochSet out = epochs;
  for (auto& e : out.epochs) e = filter_rows(filter, e, mode);
  if (mode == FilterMode::Causal) {
    out.transient_samples = std::max<std::size_t>(
        out.transient_samples,
        static_cast<std::size_t>(seconds_to_samples(kCausalTransientSeconds, epochs.sample_rate)));
  }
  return out;
}

ContinuousRecording filter_recording(const IirFilter& filter, const ContinuousRecording& rec,
                                     FilterMode mode) {
  ContinuousRecording out = rec;
  out.data = filter_rows(filter, rec.data, mode);
  return out;
}

std::size_t PsdEstimate::bin_of(double freq_hz) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < freqs.size(); ++i) {
    if (std::abs(freqs[i] - freq_hz) < std::abs(freqs[best] - freq_hz)) best = i;
  }
  return best;
}

double PsdEstimate::band_power(std::size_t channel, double low_hz, double high_hz) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (freqs[i] >= low_hz && freqs[i] <= high_hz) sum += power(static_cast<Eigen::Index>(channel), static_cast<Eigen::Index>(i));
  }
  return sum * resolution();
}

namespace {

class WelchAccumulator {
 public:
  WelchAccumulator(std::size_t channels, std::size_t seg_len, double overlap, double rate)
      : seg_len_(seg_len), rate_(rate), window_(seg_len), buf_(seg_len) {
    if (seg_len < 2) throw ConfigError("Welch segment length must be at least 2 samples");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("Welch overlap must lie in [0, 1)");
    const auto noverlap = static_cast<std::size_t>(std::floor(overlap * static_cast<double>(seg_len)));
    step_ = seg_len - noverlap;
    double wss = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) {
      // Periodic Hann.
      window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg_len));
      wss += window_[i] * window_[i];
    }
    scale_ = 1.0 / (rate * wss);
    nbins_ = seg_len / 2 + 1;
    sums_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(nbins_));
  }

  void add(const Eigen::MatrixXd& signals) {
    const auto n = static_cast<std::size_t>(signals.cols());
    if (seg_len_ > n) throw ConfigError("Welch segment length exceeds the signal length");
    std::size_t segs = 0;
    for (std::size_t start = 0; start + seg_len_ <= n; start += step_) {
      ++segs;
      for (Eigen::Index c = 0; c < signals.rows(); ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < seg_len_; ++i) mean += signals(c, static_cast<Eigen::Index>(start + i));
        mean /= static_cast<double>(seg_len_);
        for (std::size_t i = 0; i < seg_len_; ++i) {
          buf_[i] = (signals(c, static_cast<Eigen::Index>(start + i)) - mean) * window_[i];
        }
        fft_.fwd(spec_, buf_);
        for (std::size_t k = 0; k < nbins_; ++k) {
          double p = std::norm(spec_[k]) * scale_;
          const bool edge = k == 0 || (seg_len_ % 2 == 0 && k == seg_len_ / 2);
          if (!edge) p *= 2.0;
          sums_(c, static_cast<Eigen::Index>(k)) += p;
        }
      }
    }
    segments_ += segs;
  }

  PsdEstimate finish(double overlap) const {
    PsdEstimate psd;
    psd.seg_len = seg_len_;
    psd.overlap = overlap;
    psd.segments = segments_;
    psd.power = segments_ ? Eigen::MatrixXd(sums_ / static_cast<double>(segments_)) : sums_;
    psd.freqs.resize(nbins_);
    for (std::size_t k = 0; k < nbins_; ++k) {
      psd.freqs[k] = static_cast<double>(k) * rate_ / static_cast<double>(seg_len_);
    }
    return psd;
  }

 private:
  std::size_t seg_len_;
  double rate_;
  std::size_t step_ = 1;
  std::size_t nbins_ = 0;
  double scale_ = 1.0;
  std::size_t segments_ = 0;
  std::vector<double> window_;
  std::vector<double> buf_;
  std::vector<std::complex<double>> spec_;
  Eigen::MatrixXd sums_;
  Eigen::FFT<double> fft_;
};

}  // namespace

PsdEstimate welch_psd(const Eigen::MatrixXd& signals, double sample_rate, std::size_t seg_len, double overlap) {
  WelchAccumulator acc(static_cast<std::size_t>(signals.rows()), seg_len, overlap, sample_rate);
  acc.add(signals);
  return acc.finish(overlap);
}

PsdEstimate welch_psd(const EpochSet& epochs, std::optional<ClassLabel> class_filter, std::size_t seg_len,
                      double overlap) {
  epochs.validate();
  const std::size_t selected = class_filter ? epochs.count(*class_filter) : epochs.trials();
  if (selected == 0) throw DataError("Welch PSD: no trials selected");
  if (seg_len > epochs.samples()) throw ConfigError("Welch segment length exceeds the epoch length");
  WelchAccumulator acc(epochs.channels(), seg_len, overlap, epochs.sample_rate);
  for (std::size_t t = 0; t < epochs.trials(); ++t) {
    if (!class_filter || epochs.labels[t] == *class_filter) acc.add(epochs.epochs[t]);
  }
  return acc.finish(overlap);
}

}  // namespace mibci
