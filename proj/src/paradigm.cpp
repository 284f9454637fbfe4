#include "mibci/paradigm.hpp"

#include "mibci/error.hpp"

#include <random>

namespace mibci {

std::string_view paradigm_name(ParadigmKind kind) noexcept {
  return kind == ParadigmKind::Arrow ? "arrow" : "writing";
}

ParadigmKind parse_paradigm(std::string_view name) {
  if (name == "arrow") return ParadigmKind::Arrow;
  if (name == "writing") return ParadigmKind::WritingTask;
  throw ConfigError("unknown paradigm '" + std::string(name) + "' (expected arrow or writing)");
}

void ParadigmSpec::validate() const {
  if (fixation_s < 0 || imagery_s <= 0 || break_s < 0) throw ConfigError("paradigm durations must be non-negative");
  if (runs < 1 || trials_per_run < 2) throw ConfigError("paradigm needs at least one run of two trials");
  if (trials_per_run % 2 != 0) throw ConfigError("trials_per_run must be even for balanced classes");
  if (!(feature_window.start_s >= 0.0 && feature_window.start_s < feature_window.end_s &&
        feature_window.end_s <= fixation_s + imagery_s)) {
    throw ConfigError("feature window must lie within the fixation + imagery period");
  }
}

CharacterCatalog::CharacterCatalog(std::vector<CharacterEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.id.empty()) throw ConfigError("character catalog entry has an empty id");
    if (e.stroke_count != 5) {
      throw ConfigError("character '" + e.id + "' has " + std::to_string(e.stroke_count) +
                        " strokes; catalog entries must have 5");
    }
  }
}

CharacterCatalog CharacterCatalog::default_catalog() {
  return CharacterCatalog({{"田", 5}, {"本", 5}, {"正", 5}, {"目", 5}, {"白", 5}, {"生", 5}});
}

std::vector<TrialPlan> generate_sequence(const ParadigmSpec& spec, const CharacterCatalog& catalog,
                                         std::uint64_t seed) {
  spec.validate();
  if (spec.kind == ParadigmKind::WritingTask && catalog.empty()) {
    throw ConfigError("writing paradigm requires a non-empty character catalog");
  }
  std::mt19937_64 rng(seed);
  auto fisher_yates = [&rng](auto& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(items[i - 1], items[pick(rng)]);
    }
  };

  // Characters cycle through successive shuffles of the catalog; a shuffle
  // that would start with the previous character is rotated by one.
  std::vector<std::size_t> cycle;
  std::size_t cycle_pos = 0;
  std::size_t last_char = catalog.size();
  auto next_character = [&]() -> std::size_t {
    if (cycle_pos == cycle.size()) {
      cycle.resize(catalog.size());
      for (std::size_t i = 0; i < cycle.size(); ++i) cycle[i] = i;
      fisher_yates(cycle);
      if (cycle.size() >= 2 && cycle.front() == last_char) std::swap(cycle[0], cycle[1]);
      cycle_pos = 0;
    }
    last_char = cycle[cycle_pos++];
    return last_char;
  };

  std::vector<TrialPlan> plans;
  plans.reserve(static_cast<std::size_t>(spec.runs * spec.trials_per_run));
  const double spacing = spec.trial_duration_s();
  for (int run = 0; run < spec.runs; ++run) {
    std::vector<ClassLabel> labels(static_cast<std::size_t>(spec.trials_per_run), ClassLabel::LeftHand);
    for (std::size_t i = labels.size() / 2; i < labels.size(); ++i) labels[i] = ClassLabel::RightHand;
    fisher_yates(labels);
    for (auto label : labels) {
      TrialPlan p;
      p.trial_index = static_cast<std::int64_t>(plans.size());
      p.label = label;
      p.cue.side = label;
      if (spec.kind == ParadigmKind::WritingTask) p.cue.character = catalog.entries()[next_character()].id;
      p.onset_s = static_cast<double>(p.trial_index) * spacing;
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

std::vector<EventMarker> plans_to_markers(const std::vector<TrialPlan>& plans, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  std::vector<EventMarker> markers;
  markers.reserve(plans.size());
  for (const auto& p : plans) {
    markers.push_back({seconds_to_samples(p.onset_s, sample_rate), p.label, p.trial_index});
  }
  return markers;
}

}  // namespace mibci
