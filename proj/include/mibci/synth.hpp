#pragma once

// Synthetic EEG with lateralized mu/beta event-related desynchronization.
//
// Two rhythm sources sit under the configured left and right motor channels.
// Each source carries a mu and a beta sinusoid with a random phase per trial
// and a slow 0.5 Hz amplitude wobble. During the ERD window of a trial the
// source contralateral to the imagined hand is scaled by (1 - erd_depth).
// Sources reach the other channels with a Gaussian falloff over head-plane
// distance. Independent pink (1/f) noise is added to every channel.

#include "mibci/paradigm.hpp"
#include "mibci/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mibci {

struct SynthConfig {
  std::uint64_t seed = 1;
  double sample_rate = kDefaultSampleRate;
  double noise_scale = 10.0;  // uV, standard deviation of the pink background
  double mu_amp = 6.0;        // uV
  double mu_freq = 10.0;      // Hz, 8..12
  double beta_amp = 2.0;      // uV
  double beta_freq = 20.0;    // Hz, 13..30
  double erd_depth = 0.8;     // 0..1
  TimeWindow erd_window{2.5, 8.0};
  std::string left_motor = "C3";
  std::string right_motor = "C4";
  double spread = 0.25;         // Gaussian falloff width, head-plane units
  double jitter_depth = 0.3;    // depth of the 0.5 Hz amplitude wobble, 0..1
  double trial_amp_sd = 0.0;    // sd of the per-trial log amplitude of each rhythm
  double pink_floor_hz = 0.5;   // spectrum is flat below this frequency

  void validate() const;
};

ContinuousRecording synthesize(const ParadigmSpec& spec, const std::vector<TrialPlan>& plans,
                               const SynthConfig& cfg, const Montage& montage);

// Mixing weight of a source at `source` for a channel at `channel`.
double spatial_weight(Point2 source, Point2 channel, double spread) noexcept;

}  // namespace mibci
