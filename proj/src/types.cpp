#include "mibci/types.hpp"

#include "mibci/error.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace mibci {

ClassLabel decode_label(int value) {
  if (value == -1) return ClassLabel::LeftHand;
  if (value == 1) return ClassLabel::RightHand;
  throw DataError("class label encoding must be -1 or +1, got " + std::to_string(value));
}

char label_code(ClassLabel label) noexcept { return label == ClassLabel::LeftHand ? 'L' : 'R'; }

ClassLabel parse_label_code(std::string_view code) {
  if (code == "L") return ClassLabel::LeftHand;
  if (code == "R") return ClassLabel::RightHand;
  throw DataError("unknown class label '" + std::string(code) + "' (expected L or R)");
}

std::string_view label_name(ClassLabel label) noexcept {
  return label == ClassLabel::LeftHand ? "LeftHand" : "RightHand";
}

void round_to_f32(Eigen::MatrixXd& m) {
  // Goes through float storage on purpose: GCC 11 at -O3 drops the narrowing
  // of the vectorized tail in both cast<float>().cast<double>() and an
  // equivalent unaryExpr, leaving the last few entries unrounded.
  const Eigen::MatrixXf narrow = m.cast<float>();
  m = narrow.cast<double>();
}

double distance(Point2 a, Point2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

Montage::Montage(std::vector<std::string> channels, std::vector<Point2> coordinates,
                 std::string reference)
    : channels_(std::move(channels)),
      coordinates_(std::move(coordinates)),
      reference_(std::move(reference)) {
  if (channels_.size() != coordinates_.size()) {
    throw ConfigError("montage: channel and coordinate counts differ");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].empty()) throw ConfigError("montage: empty channel name");
    if (!seen.insert(channels_[i]).second) {
      throw ConfigError("montage: duplicate channel name '" + channels_[i] + "'");
    }
    const Point2 p = coordinates_[i];
    if (!(p.x * p.x + p.y * p.y <= 1.0)) {
      throw ConfigError("montage: channel '" + channels_[i] + "' lies outside the unit disc");
    }
  }
}

const Montage& Montage::standard30() {
  // Azimuthal projection of the 10-20 positions; the ear ring (FP, T7, O, T8)
  // sits on the unit circle. Mirrors data/montage_30.csv.
  static const Montage montage = [] {
    struct Row {
      const char* name;
      double x, y;
    };
    static constexpr Row rows[] = {
        {"FP1", -0.3090, 0.9510}, {"FP2", 0.3090, 0.9510},   {"F7", -0.8090, 0.5877},
        {"F3", -0.4101, 0.5064},  {"FZ", 0.0000, 0.5009},    {"F4", 0.4101, 0.5064},
        {"F8", 0.8090, 0.5877},   {"FT7", -0.9510, 0.3090},  {"FC3", -0.4803, 0.2554},
        {"FCZ", 0.0000, 0.2504},  {"FC4", 0.4803, 0.2554},   {"FT8", 0.9510, 0.3090},
        {"T7", -1.0000, 0.0000},  {"C3", -0.5009, 0.0000},   {"CZ", 0.0000, 0.0000},
        {"C4", 0.5009, 0.0000},   {"T8", 1.0000, 0.0000},    {"TP7", -0.9510, -0.3090},
        {"CP3", -0.4803, -0.2554}, {"CPZ", 0.0000, -0.2504}, {"CP4", 0.4803, -0.2554},
        {"TP8", 0.9510, -0.3090}, {"P7", -0.8090, -0.5877},  {"P3", -0.4101, -0.5064},
        {"PZ", 0.0000, -0.5009},  {"P4", 0.4101, -0.5064},   {"P8", 0.8090, -0.5877},
        {"O1", -0.3090, -0.9510}, {"OZ", 0.0000, -1.0000},   {"O2", 0.3090, -0.9510},
    };
    std::vector<std::string> names;
    std::vector<Point2> coords;
    for (const auto& r : rows) {
      names.emplace_back(r.name);
      coords.push_back({r.x, r.y});
    }
    return Montage(std::move(names), std::move(coords), "A1");
  }();
  return montage;
}

std::optional<std::size_t> Montage::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Montage::require_index(std::string_view name) const {
  if (auto idx = index_of(name)) return *idx;
  throw ConfigError("montage has no channel '" + std::string(name) + "'");
}

std::vector<std::size_t> Montage::neighborhood(std::string_view name, double radius) const {
  const Point2 center = coordinates_[require_index(name)];
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < coordinates_.size(); ++i) {
    if (distance(coordinates_[i], center) <= radius) out.push_back(i);
  }
  return out;
}

Montage Montage::from_names(const std::vector<std::string>& names) {
  const Montage& std30 = standard30();
  std::vector<Point2> coords;
  coords.reserve(names.size());
  for (const auto& n : names) {
    auto idx = std30.index_of(n);
    coords.push_back(idx ? std30.coordinates()[*idx] : Point2{});
  }
  return Montage(names, std::move(coords), std30.reference());
}

void ContinuousRecording::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw DataError("recording sample rate must be positive");
  }
  if (channels() != montage.size()) {
    std::ostringstream msg;
    msg << "recording has " << channels() << " data rows but montage declares " << montage.size()
        << " channels";
    throw DataError(msg.str());
  }
  if (!data.allFinite()) throw DataError("recording contains non-finite samples");
}

void validate_markers(const std::vector<EventMarker>& markers) {
  std::set<std::int64_t> trials;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (markers[i].sample_index < 0) throw DataError("marker sample index is negative");
    if (i > 0 && markers[i].sample_index <= markers[i - 1].sample_index) {
      throw DataError("marker sample indices must be strictly increasing");
    }
    if (markers[i].trial_index < 0 || !trials.insert(markers[i].trial_index).second) {
      throw DataError("marker trial indices must be unique and non-negative");
    }
  }
}

std::int64_t seconds_to_samples(double seconds, double sample_rate) {
  return static_cast<std::int64_t>(std::llround(seconds * sample_rate));
}

std::size_t EpochSet::count(ClassLabel label) const noexcept {
  std::size_t n = 0;
  for (auto l : labels) n += (l == label);
  return n;
}

EpochSet EpochSet::subset(const std::vector<std::size_t>& trial_indices) const {
  EpochSet out;
  out.sample_rate = sample_rate;
  out.window = window;
  out.channel_names = channel_names;
  out.transient_samples = transient_samples;
  out.epochs.reserve(trial_indices.size());
  out.labels.reserve(trial_indices.size());
  for (auto t : trial_indices) {
    if (t >= epochs.size()) throw DataError("epoch subset index out of range");
    out.epochs.push_back(epochs[t]);
    out.labels.push_back(labels[t]);
  }
  return out;
}

void EpochSet::validate() const {
  if (labels.size() != epochs.size()) throw DataError("epoch set: label count differs from trial count");
  if (!(sample_rate > 0.0)) throw DataError("epoch set: sample rate must be positive");
  for (const auto& e : epochs) {
    if (e.rows() != epochs.front().rows() || e.cols() != epochs.front().cols()) {
      throw DataError("epoch set: trials differ in shape");
    }
  }
  if (!channel_names.empty() && !epochs.empty() &&
      channel_names.size() != static_cast<std::size_t>(epochs.front().rows())) {
    throw DataError("epoch set: channel name count differs from epoch rows");
  }
}

}  // namespace mibci
