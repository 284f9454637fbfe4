#pragma once

// JSON forms of plans, configurations, fitted models and reports, plus the
// CSV exports (PSD tables, spatial patterns, feature tables).

#include "mibci/csp.hpp"
#include "mibci/dsp.hpp"
#include "mibci/eval.hpp"
#include "mibci/paradigm.hpp"
#include "mibci/svm.hpp"
#include "mibci/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mibci {

using Json = nlohmann::json;

Json to_json(const ParadigmSpec& spec);
ParadigmSpec paradigm_from_json(const Json& j);  // missing keys keep their defaults

// plan-v1 document.
Json plan_to_json(const ParadigmSpec& spec, std::uint64_t seed, const std::vector<TrialPlan>& plans);
struct PlanDocument {
  ParadigmSpec spec;
  std::uint64_t seed = 0;
  std::vector<TrialPlan> plans;
};
PlanDocument plan_from_json(const Json& j);

Json to_json(const SynthConfig& cfg);
SynthConfig synth_from_json(const Json& j, SynthConfig base = {});

Json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_from_json(const Json& j, PipelineConfig base = {});

Json to_json(const CspModel& model);
CspModel csp_from_json(const Json& j);

Json to_json(const SvmModel& model);
SvmModel svm_from_json(const Json& j);

Json to_json(const CvReport& report);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// 64-bit FNV-1a of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string content_hash(const Json& j);
std::string content_hash(const std::string& bytes);

// freq_hz,<channel>... one row per frequency bin.
void write_psd_csv(std::ostream& out, const PsdEstimate& psd, const std::vector<std::string>& channels,
                   const std::string& comment = {});

// channel,x,y,comp_<i>... one row per channel, one column per selected pattern.
void write_patterns_csv(std::ostream& out, const CspModel& model, const Montage& montage,
                        const std::string& comment = {});

// label,f1..fm with label L or R.
void write_features_csv(std::ostream& out, const FeatureMatrix& features, const std::string& tag = {});
FeatureMatrix read_features_csv(std::istream& in);

// One number per line; a non-numeric first line is treated as a header.
std::vector<double> read_number_column(std::istream& in);

struct LikertRow {
  std::string subject;
  std::string condition;
  int response = 0;
};
// subject,condition,response
std::vector<LikertRow> read_likert_csv(std::istream& in);

}  // namespace mibci
