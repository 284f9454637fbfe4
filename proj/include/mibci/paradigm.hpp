#pragma once

// Trial scheduling for the arrow-cue and character-writing paradigms.

#include "mibci/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mibci {

enum class ParadigmKind { Arrow, WritingTask };

std::string_view paradigm_name(ParadigmKind kind) noexcept;  // "arrow" / "writing"
ParadigmKind parse_paradigm(std::string_view name);

struct ParadigmSpec {
  ParadigmKind kind = ParadigmKind::Arrow;
  double fixation_s = 2.0;
  double imagery_s = 6.0;
  double break_s = 2.0;
  TimeWindow feature_window{3.0, 7.0};
  int runs = 2;
  int trials_per_run = 50;

  double trial_duration_s() const noexcept { return fixation_s + imagery_s + break_s; }
  void validate() const;
};

struct CueDescriptor {
  // Arrow: direction of the arrow. WritingTask: the character shown and the
  // forearm side; the side always matches the class label.
  ClassLabel side = ClassLabel::LeftHand;
  std::string character;  // empty for the arrow paradigm
};

struct TrialPlan {
  std::int64_t trial_index = 0;
  ClassLabel label = ClassLabel::LeftHand;
  CueDescriptor cue;
  double onset_s = 0.0;
};

struct CharacterEntry {
  std::string id;
  int stroke_count = 5;
};

class CharacterCatalog {
 public:
  CharacterCatalog() = default;
  explicit CharacterCatalog(std::vector<CharacterEntry> entries);  // every entry must have 5 strokes

  // A handful of common five-stroke characters.
  static CharacterCatalog default_catalog();

  const std::vector<CharacterEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<CharacterEntry> entries_;
};

// runs * trials_per_run plans, balanced per run, seeded Fisher-Yates order.
std::vector<TrialPlan> generate_sequence(const ParadigmSpec& spec, const CharacterCatalog& catalog,
                                         std::uint64_t seed);

std::vector<EventMarker> plans_to_markers(const std::vector<TrialPlan>& plans, double sample_rate);

}  // namespace mibci
