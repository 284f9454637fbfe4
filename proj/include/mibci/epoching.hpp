#pragma once

#include "mibci/types.hpp"

#include <vector>

namespace mibci {

// Cuts one window per marker. The window is relative to trial onset; epoch t
// covers samples [m + round(start*rate), m + round(start*rate) + n) where
// n = round((end - start) * rate). Throws DataError listing every trial whose
// window falls outside the recording.
EpochSet extract_epochs(const ContinuousRecording& rec, const std::vector<EventMarker>& markers,
                        TimeWindow window);

}  // namespace mibci
