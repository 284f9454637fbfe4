#include "mibci/experiment.hpp"

#include "mibci/csp.hpp"
#include "mibci/dsp.hpp"
#include "mibci/epoching.hpp"
#include "mibci/error.hpp"
#include "mibci/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace mibci {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t run_seed, std::uint64_t cond, std::uint64_t subject, std::uint64_t stream) {
  std::uint64_t h = splitmix(run_seed);
  h = splitmix(h ^ (cond + 1));
  h = splitmix(h ^ (static_cast<std::uint64_t>(subject) << 8));
  return splitmix(h ^ (stream << 40)) >> 1;  // keep it representable as a JSON integer either way
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string subject_tag(int s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", s);
  return buf;
}

std::string hash_matrix(const Eigen::MatrixXd& m) {
  return content_hash(std::string(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size())));
}

// Runs `f`, prefixing any library error with the stage name and the hashes
// of its inputs (computed only on failure).
template <typename F>
auto stage(const std::string& name, const std::function<std::string()>& inputs, F&& f) -> decltype(f()) {
  auto prefix = [&] { return "stage '" + name + "' [" + inputs() + "]: "; };
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(prefix() + e.what(), e.line(), e.offset());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix() + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix() + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(prefix() + e.what());
  } catch (const ConditioningError& e) {
    throw ConditioningError(prefix() + e.what(), e.smallest_eigenvalue());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(prefix() + e.what(), e.duality_gap());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix() + e.what());
  }
}

struct Session {
  std::vector<TrialPlan> plans;
  ContinuousRecording recording;
  EpochSet epochs;
};

Session run_session(const RunConfig& cfg, const ConditionSpec& cond, int subject, const SubjectSeeds& seeds) {
  const std::string where = cond.name + "/" + subject_tag(subject);
  ParadigmSpec spec = cfg.paradigm;
  spec.kind = cond.paradigm;
  SynthConfig synth = cfg.synth;
  synth.seed = seeds.synth;
  synth.erd_depth = cond.erd_depth;

  Session s;
  s.plans = stage(
      "plan " + where, [&] { return "paradigm=" + content_hash(to_json(spec)) + " seed=" + std::to_string(seeds.plan); },
      [&] { return generate_sequence(spec, CharacterCatalog::default_catalog(), seeds.plan); });
  const ContinuousRecording raw = stage(
      "simulate " + where,
      [&] { return "plan=" + content_hash(plan_to_json(spec, seeds.plan, s.plans)) + " synth=" + content_hash(to_json(synth)); },
      [&] { return synthesize(spec, s.plans, synth, Montage::standard30()); });
  s.recording = raw;
  const ContinuousRecording filtered = stage(
      "filter " + where,
      [&] {
        return "recording=" + hash_matrix(raw.data) + " filter=" +
               content_hash(Json{cfg.filter.order, cfg.filter.low_hz, cfg.filter.high_hz, filter_mode_name(cfg.filter.mode)});
      },
      [&] { return filter_recording(cfg.filter.design(raw.sample_rate), raw, cfg.filter.mode); });
  s.epochs = stage(
      "epoch " + where, [&] { return "recording=" + hash_matrix(filtered.data); },
      [&] {
        EpochSet e = extract_epochs(filtered, plans_to_markers(s.plans, filtered.sample_rate), spec.feature_window);
        if (cfg.filter.mode == FilterMode::Causal) {
          // Transient only matters if the window starts inside the first 0.5 s of the recording.
          const auto first = static_cast<std::int64_t>(std::llround(kCausalTransientSeconds * filtered.sample_rate));
          const auto start = seconds_to_samples(spec.feature_window.start_s, filtered.sample_rate);
          e.transient_samples = start < first ? static_cast<std::size_t>(first - start) : 0;
        }
        return e;
      });
  return s;
}

Json condition_json(const ConditionSpec& c) {
  return Json{{"name", c.name}, {"paradigm", paradigm_name(c.paradigm)}, {"erd_depth", c.erd_depth}};
}

Json filter_json(const FilterSpec& f) {
  return Json{{"order", f.order}, {"low_hz", f.low_hz}, {"high_hz", f.high_hz}, {"mode", filter_mode_name(f.mode)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
}

}  // namespace

void RunConfig::validate() const {
  paradigm.validate();
  synth.validate();
  (void)filter.design(synth.sample_rate);
  if (conditions.size() != 2) throw ConfigError("run config needs exactly two conditions (A and B)");
  std::set<std::string> names;
  for (const auto& c : conditions) {
    if (c.name.empty()) throw ConfigError("condition name must not be empty");
    if (c.name.find_first_of("/\\ ") != std::string::npos) throw ConfigError("condition name '" + c.name + "' must be a plain file-name token");
    if (!names.insert(c.name).second) throw ConfigError("duplicate condition name '" + c.name + "'");
    if (!(c.erd_depth >= 0.0 && c.erd_depth <= 1.0)) throw ConfigError("condition erd_depth must lie in [0, 1]");
  }
  if (names.count("control")) throw ConfigError("'control' is reserved for the chance-level condition");
  if (control_erd_depth && !(*control_erd_depth >= 0.0 && *control_erd_depth <= 1.0)) {
    throw ConfigError("control erd_depth must lie in [0, 1]");
  }
  if (subjects < 2) throw ConfigError("at least two subjects are needed for the paired comparison");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (paradigm.trials_per_run / 2 * paradigm.runs < folds) {
    throw ConfigError("each class has fewer trials than the number of folds");
  }
  if (pipeline.csp.pairs < 1 || 2 * pipeline.csp.pairs > static_cast<int>(Montage::standard30().size())) {
    throw ConfigError("pairs must lie in 1..channels/2");
  }
  if (!(pipeline.c > 0.0)) throw ConfigError("c must be positive");
  if (export_subject < 1 || export_subject > subjects) throw ConfigError("export_subject must name a simulated subject");
}

RunConfig run_config_from_json(const Json& j) {
  try {
    RunConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.subjects = j.value("subjects", cfg.subjects);
    if (j.contains("paradigm")) cfg.paradigm = paradigm_from_json(j["paradigm"]);
    if (j.contains("synth")) cfg.synth = synth_from_json(j["synth"]);
    if (j.contains("filter")) {
      const auto& f = j["filter"];
      cfg.filter.order = f.value("order", cfg.filter.order);
      cfg.filter.low_hz = f.value("low_hz", cfg.filter.low_hz);
      cfg.filter.high_hz = f.value("high_hz", cfg.filter.high_hz);
      if (f.contains("mode")) cfg.filter.mode = parse_filter_mode(f["mode"].get<std::string>());
    }
    if (j.contains("pipeline")) {
      Json p = j["pipeline"];
      p.erase("filter");
      cfg.pipeline = pipeline_from_json(p);
    }
    cfg.pipeline.filter.reset();
    if (j.contains("evaluation")) {
      cfg.repeats = j["evaluation"].value("repeats", cfg.repeats);
      cfg.folds = j["evaluation"].value("folds", cfg.folds);
    }
    for (const auto& c : j.value("conditions", Json::array())) {
      ConditionSpec cs;
      cs.name = c.at("name").get<std::string>();
      cs.paradigm = parse_paradigm(c.value("paradigm", std::string("arrow")));
      cs.erd_depth = c.at("erd_depth").get<double>();
      cfg.conditions.push_back(cs);
    }
    if (j.contains("control") && !j["control"].is_null()) cfg.control_erd_depth = j["control"].at("erd_depth").get<double>();
    if (j.contains("output")) {
      const auto& o = j["output"];
      if (o.contains("dir")) cfg.output_dir = o["dir"].get<std::string>();
      cfg.export_recordings = o.value("recordings", cfg.export_recordings);
      cfg.export_subject = o.value("export_subject", cfg.export_subject);
    }
    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

// The echo leaves out the output directory so that relocating a bundle does
// not change its hash or its report bytes.
Json to_json(const RunConfig& cfg) {
  Json conds = Json::array();
  for (const auto& c : cfg.conditions) conds.push_back(condition_json(c));
  PipelineConfig p = cfg.pipeline;
  p.filter.reset();
  Json pj = to_json(p);
  pj.erase("filter");
  return Json{{"name", cfg.name},
              {"seed", cfg.seed},
              {"subjects", cfg.subjects},
              {"paradigm", to_json(cfg.paradigm)},
              {"synth", to_json(cfg.synth)},
              {"filter", filter_json(cfg.filter)},
              {"pipeline", pj},
              {"evaluation", {{"repeats", cfg.repeats}, {"folds", cfg.folds}}},
              {"conditions", conds},
              {"control", cfg.control_erd_depth ? Json{{"erd_depth", *cfg.control_erd_depth}} : Json(nullptr)},
              {"output", {{"recordings", cfg.export_recordings}, {"export_subject", cfg.export_subject}}}};
}

std::string config_hash(const RunConfig& cfg) { return content_hash(to_json(cfg)); }

SubjectSeeds derive_seeds(std::uint64_t run_seed, std::size_t condition, int subject) {
  return {mix(run_seed, condition, static_cast<std::uint64_t>(subject), 1),
          mix(run_seed, condition, static_cast<std::uint64_t>(subject), 2),
          mix(run_seed, condition, static_cast<std::uint64_t>(subject), 3)};
}

static std::vector<ConditionSpec> all_conditions(const RunConfig& cfg) {
  std::vector<ConditionSpec> out = cfg.conditions;
  if (cfg.control_erd_depth) out.push_back({"control", cfg.conditions.front().paradigm, *cfg.control_erd_depth});
  return out;
}

std::vector<std::string> stage_plan(const RunConfig& cfg) {
  const auto conds = all_conditions(cfg);
  const int trials = cfg.paradigm.runs * cfg.paradigm.trials_per_run;
  std::vector<std::string> out;
  std::string names;
  for (const auto& c : conds) {
    if (!names.empty()) names += ", ";
    names += c.name + " (" + std::string(paradigm_name(c.paradigm)) + ", erd_depth " + fmt("%g", c.erd_depth) + ")";
  }
  out.push_back("conditions: " + names);
  out.push_back("plan: " + std::to_string(cfg.subjects) + " subjects x " + std::to_string(conds.size()) +
                " conditions, " + std::to_string(trials) + " trials each");
  out.push_back("simulate: " + std::to_string(Montage::standard30().size()) + " channels at " +
                fmt("%g", cfg.synth.sample_rate) + " Hz, " + fmt("%g", cfg.paradigm.trial_duration_s() * trials) + " s per session");
  out.push_back("filter: order " + std::to_string(cfg.filter.order) + " band-pass " + fmt("%g", cfg.filter.low_hz) + "-" +
                fmt("%g", cfg.filter.high_hz) + " Hz, " + std::string(filter_mode_name(cfg.filter.mode)));
  out.push_back("epoch: window " + fmt("%g", cfg.paradigm.feature_window.start_s) + "-" +
                fmt("%g", cfg.paradigm.feature_window.end_s) + " s after trial onset");
  out.push_back("crossval: " + std::to_string(cfg.repeats) + "x" + std::to_string(cfg.folds) + "-fold, CSP pairs " +
                std::to_string(cfg.pipeline.csp.pairs) + ", SVM c " + fmt("%g", cfg.pipeline.c) +
                (cfg.pipeline.tune_c ? " (tuned per fold)" : ""));
  out.push_back("compare: paired t-test " + cfg.conditions[0].name + " vs " + cfg.conditions[1].name +
                " over subjects; screening at " + fmt("%g", kScreeningThreshold));
  out.push_back("export: PSD and CSP patterns of subject " + std::to_string(cfg.export_subject) +
                (cfg.export_recordings ? ", recordings and markers" : "") + ", plans");
  out.push_back("write: " + cfg.output_dir.string() + "/{report.json, summary.txt, plans/, psd/, patterns/}");
  return out;
}

EpochSet simulate_session(const RunConfig& cfg, const ConditionSpec& cond, const SubjectSeeds& seeds) {
  return run_session(cfg, cond, 0, seeds).epochs;
}

ExperimentResult run_experiment(const RunConfig& cfg, bool write_bundle) {
  cfg.validate();
  ExperimentResult result;
  result.config_hash = config_hash(cfg);
  const std::string tag = "config_hash=" + result.config_hash;
  const auto conds = all_conditions(cfg);
  const auto& dir = cfg.output_dir;
  ParadigmSpec spec = cfg.paradigm;

  for (std::size_t ci = 0; ci < conds.size(); ++ci) {
    ConditionResult cr;
    cr.spec = conds[ci];
    spec.kind = cr.spec.paradigm;
    double sum = 0.0;
    for (int s = 1; s <= cfg.subjects; ++s) {
      const SubjectSeeds seeds = derive_seeds(cfg.seed, ci, s);
      const Session session = run_session(cfg, cr.spec, s, seeds);
      const std::string where = cr.spec.name + "/" + subject_tag(s);

      SubjectResult sr;
      sr.subject = s;
      sr.seeds = seeds;
      sr.report = stage(
          "crossval " + where,
          [&] {
            return "pipeline=" + content_hash(to_json(cfg.pipeline)) + " cv_seed=" + std::to_string(seeds.cv);
          },
          [&] { return cross_validate(session.epochs, cfg.pipeline, cfg.repeats, cfg.folds, seeds.cv); });
      sum += sr.report.mean_accuracy;

      if (write_bundle) {
        Json plan = plan_to_json(spec, seeds.plan, session.plans);
        plan["config_hash"] = result.config_hash;
        write_json_file(dir / "plans" / (cr.spec.name + "_" + subject_tag(s) + ".json"), plan);
        if (cfg.export_recordings) {
          std::filesystem::create_directories(dir / "recordings");
          save_recording(dir / "recordings" / (cr.spec.name + "_" + subject_tag(s) + ".csv"), session.recording,
                         {{"config", result.config_hash}});
          save_markers(dir / "recordings" / (cr.spec.name + "_" + subject_tag(s) + ".tsv"),
                       plans_to_markers(session.plans, session.recording.sample_rate), tag);
        }
        if (s == cfg.export_subject) {
          stage("export " + where, [&] { return "epochs=" + hash_matrix(session.epochs.epochs.front()); }, [&] {
            const auto& names = session.epochs.channel_names;
            for (ClassLabel cls : {ClassLabel::LeftHand, ClassLabel::RightHand}) {
              std::ostringstream csv;
              write_psd_csv(csv, welch_psd(session.epochs, cls), names, tag + " class=" + std::string(1, label_code(cls)));
              write_text(dir / "psd" / (cr.spec.name + "_" + label_code(cls) + ".csv"), csv.str());
            }
            std::ostringstream csv;
            write_patterns_csv(csv, fit_csp(session.epochs, cfg.pipeline.csp), session.recording.montage, tag);
            write_text(dir / "patterns" / (cr.spec.name + ".csv"), csv.str());
            return 0;
          });
        }
      }
      cr.subjects.push_back(std::move(sr));
    }
    cr.mean_accuracy = sum / cfg.subjects;
    result.conditions.push_back(std::move(cr));
  }

  std::vector<double> acc_a, acc_b;
  std::vector<SubjectAccuracy> screening_input;
  for (int s = 0; s < cfg.subjects; ++s) {
    acc_a.push_back(result.conditions[0].subjects[static_cast<std::size_t>(s)].report.mean_accuracy);
    acc_b.push_back(result.conditions[1].subjects[static_cast<std::size_t>(s)].report.mean_accuracy);
    screening_input.push_back({subject_tag(s + 1), acc_a.back(), acc_b.back()});
  }
  result.comparison = stage("compare", [&] { return "subjects=" + std::to_string(cfg.subjects); },
                            [&] { return paired_t_test(acc_a, acc_b); });
  result.screening = screen_subjects(screening_input);

  Json conditions = Json::array();
  for (const auto& cr : result.conditions) {
    Json subjects = Json::array();
    for (const auto& sr : cr.subjects) {
      subjects.push_back({{"subject", subject_tag(sr.subject)},
                          {"seeds", {{"plan", sr.seeds.plan}, {"synth", sr.seeds.synth}, {"cv", sr.seeds.cv}}},
                          {"mean_accuracy", sr.report.mean_accuracy},
                          {"std_accuracy", sr.report.std_accuracy},
                          {"accuracy", matrix_to_json(sr.report.accuracy)}});
    }
    Json cj = condition_json(cr.spec);
    cj["mean_accuracy"] = cr.mean_accuracy;
    cj["subjects"] = subjects;
    conditions.push_back(cj);
  }
  const auto& t = result.comparison;
  result.report = Json{
      {"format", "report-v1"},
      {"config_hash", result.config_hash},
      {"config", to_json(cfg)},
      {"conditions", conditions},
      {"summary",
       {{"a", cfg.conditions[0].name},
        {"b", cfg.conditions[1].name},
        {"mean_accuracy_a", result.conditions[0].mean_accuracy},
        {"mean_accuracy_b", result.conditions[1].mean_accuracy},
        {"paired_t_test",
         {{"n", t.n}, {"mean_diff", t.mean_diff}, {"sd_diff", t.sd_diff}, {"t", t.t_statistic}, {"df", t.df}, {"p_two_tailed", t.p_two_tailed}}},
        {"control_mean_accuracy", cfg.control_erd_depth ? Json(result.conditions[2].mean_accuracy) : Json(nullptr)},
        {"screening", {{"threshold", kScreeningThreshold}, {"included", result.screening.included}, {"excluded", result.screening.excluded}}}}},
      {"provenance",
       {{"tool", "mibci " MIBCI_VERSION_STRING},
        {"seed", cfg.seed},
        {"seed_derivation", "splitmix64(seed, condition index, subject, stream)"},
        {"formats", {{"recording", kRecordingFormat}, {"markers", kMarkerFormat}, {"epochs", kEpochFormat}, {"plan", kPlanFormat}}}}}};

  std::ostringstream sum;
  const auto& a = cfg.conditions[0];
  const auto& b = cfg.conditions[1];
  sum << "experiment " << cfg.name << " (" << tag << ")\n";
  sum << cfg.repeats << "x" << cfg.folds << "-fold CV accuracy per simulated subject\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %14s %14s %8s\n", "subject", (a.name + "/" + std::string(paradigm_name(a.paradigm))).c_str(),
                (b.name + "/" + std::string(paradigm_name(b.paradigm))).c_str(), "diff");
  sum << line;
  for (int s = 0; s < cfg.subjects; ++s) {
    std::snprintf(line, sizeof line, "%-8s %13.1f%% %13.1f%% %+7.1f\n", subject_tag(s + 1).c_str(), 100 * acc_a[static_cast<std::size_t>(s)],
                  100 * acc_b[static_cast<std::size_t>(s)], 100 * (acc_a[static_cast<std::size_t>(s)] - acc_b[static_cast<std::size_t>(s)]));
    sum << line;
  }
  std::snprintf(line, sizeof line, "%-8s %13.1f%% %13.1f%% %+7.1f\n", "mean", 100 * result.conditions[0].mean_accuracy,
                100 * result.conditions[1].mean_accuracy, 100 * t.mean_diff);
  sum << line << '\n';
  sum << "erd_depth: " << a.name << " " << fmt("%g", a.erd_depth) << ", " << b.name << " " << fmt("%g", b.erd_depth) << '\n';
  std::snprintf(line, sizeof line, "paired t-test %s vs %s: t = %.3f, df = %g, p = %.3g\n", a.name.c_str(), b.name.c_str(),
                t.t_statistic, t.df, t.p_two_tailed);
  sum << line;
  if (cfg.control_erd_depth) {
    std::snprintf(line, sizeof line, "control (erd_depth %g): mean accuracy %.1f%%\n", *cfg.control_erd_depth,
                  100 * result.conditions[2].mean_accuracy);
    sum << line;
  }
  sum << "screening (< " << fmt("%g", 100 * kScreeningThreshold) << "% in both conditions): ";
  if (result.screening.excluded.empty()) {
    sum << "no subject excluded\n";
  } else {
    for (std::size_t i = 0; i < result.screening.excluded.size(); ++i) sum << (i ? ", " : "") << result.screening.excluded[i];
    sum << " excluded\n";
  }
  result.summary = sum.str();

  if (write_bundle) {
    write_text(dir / "report.json", result.report.dump(2) + "\n");
    write_text(dir / "summary.txt", result.summary);
  }
  return result;
}

}  // namespace mibci
