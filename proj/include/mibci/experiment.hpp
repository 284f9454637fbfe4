#pragma once

// End-to-end experiment: for every condition and simulated subject,
// plan -> simulate -> filter -> epoch -> cross-validate, then compare the
// conditions across subjects and write a run bundle.

#include "mibci/eval.hpp"
#include "mibci/paradigm.hpp"
#include "mibci/serialize.hpp"
#include "mibci/stats.hpp"
#include "mibci/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mibci {

struct ConditionSpec {
  std::string name;
  ParadigmKind paradigm = ParadigmKind::Arrow;
  double erd_depth = 0.8;
};

struct RunConfig {
  std::string name = "experiment";
  ParadigmSpec paradigm;  // timing shared by all conditions; kind comes from each condition
  SynthConfig synth;      // erd_depth and seed are overridden per condition/subject
  FilterSpec filter;      // applied to the continuous recording before epoching
  PipelineConfig pipeline;  // pipeline.filter is ignored
  int repeats = 10;
  int folds = 10;
  int subjects = 10;
  std::uint64_t seed = 1;
  std::vector<ConditionSpec> conditions;  // exactly two: A then B
  std::optional<double> control_erd_depth;  // extra chance-level condition
  std::filesystem::path output_dir = "out";
  bool export_recordings = false;
  int export_subject = 1;  // subject whose PSD and patterns are exported

  void validate() const;
};

RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& cfg);

// Hash of the canonical config echo; names every file of the bundle.
std::string config_hash(const RunConfig& cfg);

struct SubjectSeeds {
  std::uint64_t plan = 0;
  std::uint64_t synth = 0;
  std::uint64_t cv = 0;
};

// Seeds are a pure function of (run seed, condition index, subject index).
SubjectSeeds derive_seeds(std::uint64_t run_seed, std::size_t condition, int subject);

struct SubjectResult {
  int subject = 0;
  SubjectSeeds seeds;
  CvReport report;
};

struct ConditionResult {
  ConditionSpec spec;
  std::vector<SubjectResult> subjects;
  double mean_accuracy = 0.0;
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<ConditionResult> conditions;  // A, B, then the control when configured
  PairedTestResult comparison;              // A minus B over subjects
  ScreeningResult screening;
  Json report;         // the exact report.json content
  std::string summary;  // human-readable table
};

// One stage as shown by --dry-run.
std::vector<std::string> stage_plan(const RunConfig& cfg);

// Runs everything and, when `write_bundle` is set, writes the bundle into
// cfg.output_dir. Stage failures are rethrown with the stage name and the
// hashes of that stage's inputs prepended, keeping the error category.
ExperimentResult run_experiment(const RunConfig& cfg, bool write_bundle = true);

// The per-session part of the run, exposed for tests: plan, synthesize,
// filter and epoch one subject of one condition.
EpochSet simulate_session(const RunConfig& cfg, const ConditionSpec& cond, const SubjectSeeds& seeds);

}  // namespace mibci
