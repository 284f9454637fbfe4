#include "mibci/epoching.hpp"

#include "mibci/error.hpp"

#include <sstream>

namespace mibci {

EpochSet extract_epochs(const ContinuousRecording& rec, const std::vector<EventMarker>& markers,
                        TimeWindow window) {
  if (!(window.start_s < window.end_s)) throw ConfigError("epoch window start must precede its end");
  rec.validate();
  const std::int64_t offset = seconds_to_samples(window.start_s, rec.sample_rate);
  const std::int64_t length = seconds_to_samples(window.end_s - window.start_s, rec.sample_rate);
  if (length < 1) throw ConfigError("epoch window is shorter than one sample");
  const auto total = static_cast<std::int64_t>(rec.samples());

  std::vector<std::int64_t> bad;
  for (const auto& m : markers) {
    const std::int64_t first = m.sample_index + offset;
    if (first < 0 || first + length > total) bad.push_back(m.trial_index);
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "epoch window overruns the recording for trial(s)";
    for (auto t : bad) msg << ' ' << t;
    throw DataError(msg.str());
  }

  EpochSet set;
  set.sample_rate = rec.sample_rate;
  set.window = window;
  set.channel_names = rec.montage.channels();
  set.epochs.reserve(markers.size());
  set.labels.reserve(markers.size());
  for (const auto& m : markers) {
    set.epochs.emplace_back(rec.data.middleCols(m.sample_index + offset, length));
    set.labels.push_back(m.label);
  }
  return set;
}

}  // namespace mibci
