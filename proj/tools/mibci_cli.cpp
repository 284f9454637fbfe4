// mibci command-line tool. Exit codes: 0 success, 1 invalid input or
// configuration, 2 numerical failure.

#include "mibci/csp.hpp"
#include "mibci/dsp.hpp"
#include "mibci/epoching.hpp"
#include "mibci/error.hpp"
#include "mibci/eval.hpp"
#include "mibci/experiment.hpp"
#include "mibci/io.hpp"
#include "mibci/paradigm.hpp"
#include "mibci/serialize.hpp"
#include "mibci/stats.hpp"
#include "mibci/svm.hpp"
#include "mibci/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

using namespace mibci;

namespace {

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::string tag_of(const Json& params) { return "config_hash=" + content_hash(params); }

std::optional<ClassLabel> parse_class(const std::string& s) {
  if (s == "all") return std::nullopt;
  return parse_label_code(s);
}

// Groups Likert rows by condition, keeping first-appearance order.
std::vector<std::pair<std::string, std::vector<const LikertRow*>>> by_condition(const std::vector<LikertRow>& rows) {
  std::vector<std::pair<std::string, std::vector<const LikertRow*>>> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == r.condition; });
    if (it == out.end()) {
      out.push_back({r.condition, {}});
      it = std::prev(out.end());
    }
    it->second.push_back(&r);
  }
  return out;
}

void print_ttest(const PairedTestResult& t) {
  std::printf("n=%zu mean_diff=%.4f sd_diff=%.4f t=%.4f df=%g p=%.4f\n", t.n, t.mean_diff, t.sd_diff, t.t_statistic, t.df,
              t.p_two_tailed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline motor-imagery BCI toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       std::string("mibci " MIBCI_VERSION_STRING "\nformats: ") + kRecordingFormat + " " + kMarkerFormat + " " +
                           kEpochFormat + " " + kPlanFormat);

  // plan
  auto* plan = app.add_subcommand("plan", "Generate a seeded trial sequence (plan-v1 JSON)");
  std::string paradigm = "arrow", plan_out;
  std::uint64_t plan_seed = 1;
  int runs = 2, trials_per_run = 50;
  plan->add_option("--paradigm", paradigm, "arrow | writing")->check(CLI::IsMember({"arrow", "writing"}));
  plan->add_option("--seed", plan_seed);
  plan->add_option("--runs", runs);
  plan->add_option("--trials-per-run", trials_per_run);
  plan->add_option("--out", plan_out)->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Synthesize a recording for a plan");
  std::string sim_plan, sim_cfg, sim_out, sim_markers;
  sim->add_option("--plan", sim_plan)->required()->check(CLI::ExistingFile);
  sim->add_option("--cfg", sim_cfg, "synth config JSON")->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out)->required();
  sim->add_option("--markers", sim_markers)->required();

  // epoch
  auto* ep = app.add_subcommand("epoch", "Cut labeled epochs from a recording");
  std::string ep_in, ep_markers, ep_out;
  std::vector<double> ep_window{3.0, 7.0};
  ep->add_option("--in", ep_in)->required()->check(CLI::ExistingFile);
  ep->add_option("--markers", ep_markers)->required()->check(CLI::ExistingFile);
  ep->add_option("--window", ep_window, "start end, seconds after trial onset")->expected(2);
  ep->add_option("--out", ep_out)->required();

  // filter
  auto* flt = app.add_subcommand("filter", "Band-pass filter an epoch file");
  std::string flt_in, flt_out, flt_mode = "zero_phase";
  double flt_low = 8.0, flt_high = 30.0;
  int flt_order = 5;
  flt->add_option("--in", flt_in)->required()->check(CLI::ExistingFile);
  flt->add_option("--low", flt_low);
  flt->add_option("--high", flt_high);
  flt->add_option("--order", flt_order);
  flt->add_option("--mode", flt_mode)->check(CLI::IsMember({"causal", "zero_phase"}));
  flt->add_option("--out", flt_out)->required();

  // psd
  auto* psd = app.add_subcommand("psd", "Welch power spectral density of an epoch file");
  std::string psd_in, psd_out, psd_class = "all";
  std::size_t psd_seg = kDefaultWelchSegment;
  double psd_overlap = kDefaultWelchOverlap;
  psd->add_option("--in", psd_in)->required()->check(CLI::ExistingFile);
  psd->add_option("--class", psd_class, "L | R | all")->check(CLI::IsMember({"L", "R", "all"}));
  psd->add_option("--seg-len", psd_seg);
  psd->add_option("--overlap", psd_overlap);
  psd->add_option("--out", psd_out)->required();

  // csp-fit
  auto* cspf = app.add_subcommand("csp-fit", "Fit CSP filters on an epoch file");
  std::string csp_in, csp_out;
  CspOptions csp_opts;
  cspf->add_option("--in", csp_in)->required()->check(CLI::ExistingFile);
  cspf->add_option("--pairs", csp_opts.pairs);
  cspf->add_option("--ridge", csp_opts.ridge);
  cspf->add_option("--out", csp_out)->required();

  // patterns-export
  auto* pat = app.add_subcommand("patterns-export", "Write selected CSP patterns with channel coordinates");
  std::string pat_model, pat_out, pat_montage;
  pat->add_option("--model", pat_model)->required()->check(CLI::ExistingFile);
  pat->add_option("--montage", pat_montage, "channel,x,y table (default: built-in 30-channel layout)")
      ->check(CLI::ExistingFile);
  pat->add_option("--out", pat_out)->required();

  // features
  auto* feat = app.add_subcommand("features", "Log-variance CSP features of an epoch file");
  std::string feat_model, feat_in, feat_out;
  feat->add_option("--model", feat_model)->required()->check(CLI::ExistingFile);
  feat->add_option("--in", feat_in)->required()->check(CLI::ExistingFile);
  feat->add_option("--out", feat_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a linear soft-margin SVM on a feature table");
  std::string tr_in, tr_out;
  double tr_c = 1.0;
  bool tr_standardize = false;
  tr->add_option("--in", tr_in)->required()->check(CLI::ExistingFile);
  tr->add_option("--c", tr_c);
  tr->add_flag("--standardize", tr_standardize);
  tr->add_option("--out", tr_out)->required();

  // crossval
  auto* cv = app.add_subcommand("crossval", "Repeated stratified k-fold evaluation of filter -> CSP -> SVM");
  std::string cv_in, cv_markers, cv_out, cv_mode = "zero_phase";
  std::vector<double> cv_window{3.0, 7.0};
  FilterSpec cv_filter;
  PipelineConfig cv_cfg;
  int cv_repeats = 10, cv_folds = 10;
  std::uint64_t cv_seed = 42;
  cv->add_option("--in", cv_in)->required()->check(CLI::ExistingFile);
  cv->add_option("--markers", cv_markers)->required()->check(CLI::ExistingFile);
  cv->add_option("--window", cv_window)->expected(2);
  cv->add_option("--low", cv_filter.low_hz);
  cv->add_option("--high", cv_filter.high_hz);
  cv->add_option("--order", cv_filter.order);
  cv->add_option("--mode", cv_mode)->check(CLI::IsMember({"causal", "zero_phase"}));
  cv->add_option("--pairs", cv_cfg.csp.pairs);
  cv->add_option("--ridge", cv_cfg.csp.ridge);
  cv->add_option("--c", cv_cfg.c);
  cv->add_flag("--tune-c", cv_cfg.tune_c);
  cv->add_option("--repeats", cv_repeats);
  cv->add_option("--folds", cv_folds);
  cv->add_option("--seed", cv_seed);
  cv->add_option("--out", cv_out)->required();

  // ttest
  auto* tt = app.add_subcommand("ttest", "Paired-samples t-test");
  std::string tt_x, tt_y, tt_table, tt_a, tt_b;
  tt->add_option("--x", tt_x, "one number per line")->check(CLI::ExistingFile);
  tt->add_option("--y", tt_y)->check(CLI::ExistingFile);
  tt->add_option("--table", tt_table, "subject,condition,response table; pairs two conditions by subject")
      ->check(CLI::ExistingFile);
  tt->add_option("--a", tt_a, "first condition (default: first in the table)");
  tt->add_option("--b", tt_b, "second condition (default: second in the table)");

  // likert
  auto* lk = app.add_subcommand("likert", "Mean and sd of Likert responses per condition");
  std::string lk_in;
  lk->add_option("--in", lk_in)->required()->check(CLI::ExistingFile);

  // run
  auto* run = app.add_subcommand("run", "Run a full experiment from a JSON config");
  std::string run_cfg, run_out;
  bool dry_run = false;
  run->add_option("config", run_cfg)->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory (overrides config and MIBCI_OUT_DIR)");
  run->add_flag("--dry-run", dry_run, "validate the config and print the stage plan without writing files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*plan) {
      ParadigmSpec spec;
      spec.kind = parse_paradigm(paradigm);
      spec.runs = runs;
      spec.trials_per_run = trials_per_run;
      spec.validate();
      const auto plans = generate_sequence(spec, CharacterCatalog::default_catalog(), plan_seed);
      Json j = plan_to_json(spec, plan_seed, plans);
      j["config_hash"] = content_hash(Json{{"paradigm", paradigm}, {"runs", runs}, {"trials_per_run", trials_per_run}, {"seed", plan_seed}});
      write_json_file(plan_out, j);
    } else if (*sim) {
      const PlanDocument doc = plan_from_json(read_json_file(sim_plan));
      SynthConfig cfg;
      if (!sim_cfg.empty()) cfg = synth_from_json(read_json_file(sim_cfg));
      const auto rec = synthesize(doc.spec, doc.plans, cfg, Montage::standard30());
      const std::string hash = content_hash(Json{{"plan", plan_to_json(doc.spec, doc.seed, doc.plans)}, {"synth", to_json(cfg)}});
      save_recording(sim_out, rec, {{"config", hash}});
      save_markers(sim_markers, plans_to_markers(doc.plans, rec.sample_rate), "config_hash=" + hash);
    } else if (*ep) {
      const auto rec = load_recording(ep_in);
      const auto epochs = extract_epochs(rec, load_markers(ep_markers), {ep_window[0], ep_window[1]});
      save_epochs(ep_out, epochs);
    } else if (*flt) {
      const auto epochs = load_epochs(flt_in);
      const auto filter = design_butterworth_bandpass(flt_order, flt_low, flt_high, epochs.sample_rate);
      save_epochs(flt_out, filter_epochs(filter, epochs, parse_filter_mode(flt_mode)));
    } else if (*psd) {
      const auto epochs = load_epochs(psd_in);
      const auto est = welch_psd(epochs, parse_class(psd_class), psd_seg, psd_overlap);
      auto out = open_out(psd_out);
      write_psd_csv(out, est, epochs.channel_names,
                    tag_of({{"in", psd_in}, {"class", psd_class}, {"seg_len", psd_seg}, {"overlap", psd_overlap}}));
    } else if (*cspf) {
      const auto model = fit_csp(load_epochs(csp_in), csp_opts);
      Json j = to_json(model);
      j["config_hash"] = content_hash(Json{{"in", csp_in}, {"pairs", csp_opts.pairs}, {"ridge", csp_opts.ridge}});
      write_json_file(csp_out, j);
    } else if (*pat) {
      const Json j = read_json_file(pat_model);
      const auto model = csp_from_json(j);
      const Montage montage = !pat_montage.empty()          ? load_montage(pat_montage)
                              : model.channel_names.empty() ? Montage::standard30()
                                                            : Montage::from_names(model.channel_names);
      auto out = open_out(pat_out);
      write_patterns_csv(out, model, montage, "config_hash=" + j.value("config_hash", content_hash(j)));
    } else if (*feat) {
      const auto model = csp_from_json(read_json_file(feat_model));
      auto out = open_out(feat_out);
      write_features_csv(out, csp_features(model, load_epochs(feat_in)), tag_of({{"model", feat_model}, {"in", feat_in}}));
    } else if (*tr) {
      auto in = open_in(tr_in);
      SvmOptions opts;
      opts.c = tr_c;
      opts.standardize = tr_standardize;
      const auto model = train_svm(read_features_csv(in), opts);
      Json j = to_json(model);
      j["config_hash"] = content_hash(Json{{"in", tr_in}, {"c", tr_c}, {"standardize", tr_standardize}});
      write_json_file(tr_out, j);
    } else if (*cv) {
      cv_filter.mode = parse_filter_mode(cv_mode);
      const auto rec = load_recording(cv_in);
      const auto filtered = filter_recording(cv_filter.design(rec.sample_rate), rec, cv_filter.mode);
      const auto epochs = extract_epochs(filtered, load_markers(cv_markers), {cv_window[0], cv_window[1]});
      const auto report = cross_validate(epochs, cv_cfg, cv_repeats, cv_folds, cv_seed);
      Json config = to_json(cv_cfg);
      config["filter"] = {{"order", cv_filter.order}, {"low_hz", cv_filter.low_hz}, {"high_hz", cv_filter.high_hz}, {"mode", cv_mode}};
      config["window"] = cv_window;
      config["repeats"] = cv_repeats;
      config["folds"] = cv_folds;
      config["seed"] = cv_seed;
      config["in"] = cv_in;
      config["markers"] = cv_markers;
      const std::string hash = content_hash(config);
      Json j{{"format", "report-v1"},
             {"config_hash", hash},
             {"config", config},
             {"accuracy", matrix_to_json(report.accuracy)},
             {"summary", {{"mean_accuracy", report.mean_accuracy}, {"std_accuracy", report.std_accuracy}, {"trials", epochs.trials()}}},
             {"provenance",
              {{"tool", "mibci " MIBCI_VERSION_STRING},
               {"seed", cv_seed},
               {"formats", {{"recording", kRecordingFormat}, {"markers", kMarkerFormat}, {"epochs", kEpochFormat}, {"plan", kPlanFormat}}}}}};
      write_json_file(cv_out, j);
      std::printf("mean accuracy %.4f (sd %.4f over %dx%d folds)\n", report.mean_accuracy, report.std_accuracy, cv_repeats, cv_folds);
    } else if (*tt) {
      std::vector<double> x, y;
      if (!tt_table.empty()) {
        auto in = open_in(tt_table);
        const auto rows = read_likert_csv(in);
        const auto groups = by_condition(rows);
        if (groups.size() < 2) throw DataError("table needs at least two conditions");
        const std::string a = tt_a.empty() ? groups[0].first : tt_a;
        const std::string b = tt_b.empty() ? groups[1].first : tt_b;
        std::map<std::string, double> bmap;
        for (const auto& r : rows) {
          if (r.condition == b && !bmap.emplace(r.subject, r.response).second) throw DataError("duplicate subject '" + r.subject + "' in condition " + b);
        }
        for (const auto& r : rows) {
          if (r.condition != a) continue;
          auto it = bmap.find(r.subject);
          if (it == bmap.end()) throw DataError("subject '" + r.subject + "' has no response for condition " + b);
          x.push_back(r.response);
          y.push_back(it->second);
        }
        if (x.size() != bmap.size()) throw DataError("conditions " + a + " and " + b + " cover different subjects");
        std::printf("%s vs %s: ", a.c_str(), b.c_str());
      } else {
        if (tt_x.empty() || tt_y.empty()) throw ConfigError("ttest needs --x and --y, or --table");
        auto xi = open_in(tt_x);
        auto yi = open_in(tt_y);
        x = read_number_column(xi);
        y = read_number_column(yi);
      }
      print_ttest(paired_t_test(x, y));
    } else if (*lk) {
      auto in = open_in(lk_in);
      for (const auto& [cond, rows] : by_condition(read_likert_csv(in))) {
        std::vector<int> responses;
        for (const auto* r : rows) responses.push_back(r->response);
        const auto s = likert_summary(responses);
        std::printf("%s: %s (n=%zu, mean %.4f, sd %.4f)\n", cond.c_str(), s.format().c_str(), responses.size(), s.mean, s.sd);
      }
    } else if (*run) {
      RunConfig cfg = run_config_from_json(read_json_file(run_cfg));
      if (const char* env = std::getenv("MIBCI_OUT_DIR"); env && *env) cfg.output_dir = env;
      if (!run_out.empty()) cfg.output_dir = run_out;
      cfg.validate();
      if (dry_run) {
        std::printf("config %s (%s) is valid; config_hash=%s\n", run_cfg.c_str(), cfg.name.c_str(), config_hash(cfg).c_str());
        int k = 1;
        for (const auto& s : stage_plan(cfg)) std::printf("%2d. %s\n", k++, s.c_str());
        std::printf("dry run: no files written\n");
      } else {
        const auto result = run_experiment(cfg);
        std::fputs(result.summary.c_str(), stdout);
        std::printf("bundle written to %s\n", cfg.output_dir.string().c_str());
      }
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
