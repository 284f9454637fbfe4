#pragma once

// Shared data model: class labels, montage, continuous recordings, event
// markers and epoch sets. All sample values are microvolts.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mibci {

inline constexpr double kDefaultSampleRate = 250.0;

enum class ClassLabel : std::int8_t { LeftHand = -1, RightHand = 1 };

constexpr int encode(ClassLabel label) noexcept { return static_cast<int>(label); }
ClassLabel decode_label(int value);  // throws DataError unless value is -1 or +1

char label_code(ClassLabel label) noexcept;  // 'L' or 'R'
ClassLabel parse_label_code(std::string_view code);
std::string_view label_name(ClassLabel label) noexcept;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point2 a, Point2 b) noexcept;

// Rounds every entry to the nearest float in place, as a 32-bit file would.
void round_to_f32(Eigen::MatrixXd& m);

// Ordered channel list with head-plane coordinates on the unit disc.
class Montage {
 public:
  Montage() = default;
  Montage(std::vector<std::string> channels, std::vector<Point2> coordinates,
          std::string reference = "A1");

  // The 30-channel 10-20 layout, referenced to A1.
  static const Montage& standard30();

  std::size_t size() const noexcept { return channels_.size(); }
  const std::vector<std::string>& channels() const noexcept { return channels_; }
  const std::vector<Point2>& coordinates() const noexcept { return coordinates_; }
  const std::string& reference() const noexcept { return reference_; }

  std::optional<std::size_t> index_of(std::string_view name) const noexcept;
  std::size_t require_index(std::string_view name) const;  // throws ConfigError

  // Channels whose head-plane distance to `name` is at most `radius`,
  // including the channel itself.
  std::vector<std::size_t> neighborhood(std::string_view name, double radius) const;

  // Same channel names; coordinates looked up from standard30() when known.
  static Montage from_names(const std::vector<std::string>& names);

 private:
  std::vector<std::string> channels_;
  std::vector<Point2> coordinates_;
  std::string reference_ = "A1";
};

// Radius within which two montage channels count as neighbors (one ring of
// the 10-20 grid: FC3/CP3 around C3).
inline constexpr double kNeighborRadius = 0.3;

struct ContinuousRecording {
  double sample_rate = kDefaultSampleRate;
  Eigen::MatrixXd data;  // channels x samples
  Montage montage;

  std::size_t channels() const noexcept { return static_cast<std::size_t>(data.rows()); }
  std::size_t samples() const noexcept { return static_cast<std::size_t>(data.cols()); }
  void validate() const;
};

struct EventMarker {
  std::int64_t sample_index = 0;
  ClassLabel label = ClassLabel::LeftHand;
  std::int64_t trial_index = 0;
};

void validate_markers(const std::vector<EventMarker>& markers);

struct TimeWindow {
  double start_s = 0.0;
  double end_s = 0.0;
};

// Seconds to samples, rounding half away from zero.
std::int64_t seconds_to_samples(double seconds, double sample_rate);

struct EpochSet {
  std::vector<Eigen::MatrixXd> epochs;  // per trial: channels x samples
  std::vector<ClassLabel> labels;
  double sample_rate = kDefaultSampleRate;
  TimeWindow window;
  std::vector<std::string> channel_names;
  // Leading samples affected by a causal filter's start-up transient. Kept
  // in memory only; the epk-v1 file format does not carry it.
  std::size_t transient_samples = 0;

  std::size_t trials() const noexcept { return epochs.size(); }
  std::size_t channels() const noexcept {
    return epochs.empty() ? channel_names.size() : static_cast<std::size_t>(epochs.front().rows());
  }
  std::size_t samples() const noexcept {
    return epochs.empty() ? 0 : static_cast<std::size_t>(epochs.front().cols());
  }
  std::size_t count(ClassLabel label) const noexcept;
  EpochSet subset(const std::vector<std::size_t>& trial_indices) const;
  void validate() const;
};

}  // namespace mibci
