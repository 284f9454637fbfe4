// Python bindings. Configs cross the boundary as dicts (via their JSON form),
// signals as numpy arrays of shape (channels, samples) or
// (trials, channels, samples).

#include "mibci/csp.hpp"
#include "mibci/dsp.hpp"
#include "mibci/epoching.hpp"
#include "mibci/error.hpp"
#include "mibci/eval.hpp"
#include "mibci/experiment.hpp"
#include "mibci/paradigm.hpp"
#include "mibci/serialize.hpp"
#include "mibci/stats.hpp"
#include "mibci/svm.hpp"
#include "mibci/synth.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mibci;

namespace {

Json to_cpp_json(const py::object& obj) {
  if (obj.is_none()) return Json::object();
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return Json::parse(text);
}

py::object to_py_json(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

using Array3 = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array3 epochs_to_array(const EpochSet& set) {
  const auto t = set.trials(), c = set.channels(), s = set.samples();
  Array3 out({t, c, s});
  auto v = out.mutable_unchecked<3>();
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t r = 0; r < c; ++r)
      for (std::size_t k = 0; k < s; ++k)
        v(i, r, k) = set.epochs[i](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
  return out;
}

EpochSet make_epochs(const Array3& data, const std::vector<ClassLabel>& labels, double rate,
                     std::pair<double, double> window, std::vector<std::string> channels) {
  if (data.ndim() != 3) throw DataError("epochs must be a (trials, channels, samples) array");
  auto v = data.unchecked<3>();
  EpochSet set;
  set.sample_rate = rate;
  set.window = {window.first, window.second};
  set.labels = labels;
  for (py::ssize_t i = 0; i < v.shape(0); ++i) {
    Eigen::MatrixXd e(v.shape(1), v.shape(2));
    for (py::ssize_t r = 0; r < v.shape(1); ++r)
      for (py::ssize_t k = 0; k < v.shape(2); ++k) e(r, k) = v(i, r, k);
    set.epochs.push_back(std::move(e));
  }
  if (channels.empty() && set.channels() == Montage::standard30().size()) channels = Montage::standard30().channels();
  set.channel_names = std::move(channels);
  set.validate();
  return set;
}

}  // namespace

PYBIND11_MODULE(mibci, m) {
  m.doc() = "Offline motor-imagery BCI toolkit: paradigm, synthesis, filtering, CSP, SVM, evaluation.";
  m.attr("__version__") = MIBCI_VERSION_STRING;

  // Translators run newest first, so bases are registered before subclasses.
  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto& validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  auto& config = py::register_exception<ConfigError>(m, "ConfigError", validation.ptr());
  py::register_exception<DataError>(m, "DataError", validation.ptr());
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());
  auto& numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<ConditioningError>(m, "ConditioningError", numerical.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", numerical.ptr());
  // Malformed config dicts surface from the JSON layer.
  static const py::handle config_type = config;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Json::exception& e) {
      py::set_error(config_type, e.what());
    }
  });

  py::enum_<ClassLabel>(m, "ClassLabel")
      .value("LeftHand", ClassLabel::LeftHand)
      .value("RightHand", ClassLabel::RightHand);
  py::enum_<ParadigmKind>(m, "ParadigmKind")
      .value("Arrow", ParadigmKind::Arrow)
      .value("WritingTask", ParadigmKind::WritingTask);
  py::enum_<FilterMode>(m, "FilterMode")
      .value("Causal", FilterMode::Causal)
      .value("ZeroPhase", FilterMode::ZeroPhase);

  // Paradigm
  py::class_<ParadigmSpec>(m, "ParadigmSpec")
      .def(py::init([](ParadigmKind kind, int runs, int trials_per_run) {
             ParadigmSpec s;
             s.kind = kind;
             s.runs = runs;
             s.trials_per_run = trials_per_run;
             s.validate();
             return s;
           }),
           py::arg("kind") = ParadigmKind::Arrow, py::arg("runs") = 2, py::arg("trials_per_run") = 50)
      .def_readwrite("kind", &ParadigmSpec::kind)
      .def_readwrite("runs", &ParadigmSpec::runs)
      .def_readwrite("trials_per_run", &ParadigmSpec::trials_per_run)
      .def_readwrite("fixation_s", &ParadigmSpec::fixation_s)
      .def_readwrite("imagery_s", &ParadigmSpec::imagery_s)
      .def_readwrite("break_s", &ParadigmSpec::break_s)
      .def_property(
          "feature_window", [](const ParadigmSpec& s) { return std::pair{s.feature_window.start_s, s.feature_window.end_s}; },
          [](ParadigmSpec& s, std::pair<double, double> w) { s.feature_window = {w.first, w.second}; })
      .def("validate", &ParadigmSpec::validate);

  py::class_<TrialPlan>(m, "TrialPlan")
      .def_readonly("trial_index", &TrialPlan::trial_index)
      .def_readonly("label", &TrialPlan::label)
      .def_readonly("onset_s", &TrialPlan::onset_s)
      .def_property_readonly("cue_side", [](const TrialPlan& p) { return p.cue.side; })
      .def_property_readonly("character", [](const TrialPlan& p) { return p.cue.character; });

  m.def(
      "generate_sequence",
      [](const ParadigmSpec& spec, std::uint64_t seed) {
        return generate_sequence(spec, CharacterCatalog::default_catalog(), seed);
      },
      py::arg("spec"), py::arg("seed"), "Balanced, seeded trial sequence using the default character catalog.");

  // Recordings and epochs
  py::class_<ContinuousRecording>(m, "Recording")
      .def_readonly("sample_rate", &ContinuousRecording::sample_rate)
      .def_readonly("data", &ContinuousRecording::data)
      .def_property_readonly("channels", [](const ContinuousRecording& r) { return r.montage.channels(); });

  m.def(
      "synthesize",
      [](const ParadigmSpec& spec, const std::vector<TrialPlan>& plans, const py::object& cfg) {
        return synthesize(spec, plans, synth_from_json(to_cpp_json(cfg)), Montage::standard30());
      },
      py::arg("spec"), py::arg("plans"), py::arg("config") = py::none(),
      "Synthetic 30-channel recording; `config` overrides synthesis defaults (seed, erd_depth, ...).");

  py::class_<EpochSet>(m, "EpochSet")
      .def(py::init(&make_epochs), py::arg("data"), py::arg("labels"), py::arg("sample_rate") = kDefaultSampleRate,
           py::arg("window") = std::pair{3.0, 7.0}, py::arg("channel_names") = std::vector<std::string>{})
      .def_property_readonly("data", &epochs_to_array)
      .def_readonly("labels", &EpochSet::labels)
      .def_readonly("sample_rate", &EpochSet::sample_rate)
      .def_readonly("channel_names", &EpochSet::channel_names)
      .def_property_readonly("window", [](const EpochSet& e) { return std::pair{e.window.start_s, e.window.end_s}; })
      .def("subset", &EpochSet::subset)
      .def("__len__", &EpochSet::trials);

  m.def(
      "extract_epochs",
      [](const ContinuousRecording& rec, const std::vector<TrialPlan>& plans, std::pair<double, double> window) {
        return extract_epochs(rec, plans_to_markers(plans, rec.sample_rate), {window.first, window.second});
      },
      py::arg("recording"), py::arg("plans"), py::arg("window") = std::pair{3.0, 7.0});

  // Filtering and spectra
  py::class_<IirFilter>(m, "IirFilter")
      .def_readonly("order", &IirFilter::order)
      .def_readonly("low_hz", &IirFilter::low_hz)
      .def_readonly("high_hz", &IirFilter::high_hz)
      .def_readonly("sample_rate", &IirFilter::sample_rate)
      .def_property_readonly("sos",
                             [](const IirFilter& f) {
                               Eigen::MatrixXd sos(static_cast<Eigen::Index>(f.sections.size()), 6);
                               for (std::size_t i = 0; i < f.sections.size(); ++i) {
                                 const auto& s = f.sections[i];
                                 sos.row(static_cast<Eigen::Index>(i)) << s.b0, s.b1, s.b2, 1.0, s.a1, s.a2;
                               }
                               return sos;
                             })
      .def("response", &IirFilter::response)
      .def("magnitude_db", &IirFilter::magnitude_db)
      .def("poles", &IirFilter::poles);

  m.def("design_bandpass", &design_butterworth_bandpass, py::arg("order"), py::arg("low_hz"), py::arg("high_hz"),
        py::arg("sample_rate"));
  m.def("filter_rows", &filter_rows, py::arg("filter"), py::arg("data"), py::arg("mode") = FilterMode::ZeroPhase);
  m.def("filter_recording", &filter_recording, py::arg("filter"), py::arg("recording"),
        py::arg("mode") = FilterMode::ZeroPhase);
  m.def("filter_epochs", &filter_epochs, py::arg("filter"), py::arg("epochs"), py::arg("mode") = FilterMode::ZeroPhase);

  py::class_<PsdEstimate>(m, "Psd")
      .def_readonly("freqs", &PsdEstimate::freqs)
      .def_readonly("power", &PsdEstimate::power)
      .def_readonly("segments", &PsdEstimate::segments)
      .def("band_power", &PsdEstimate::band_power, py::arg("channel"), py::arg("low_hz"), py::arg("high_hz"));

  m.def(
      "welch_psd",
      [](const Eigen::MatrixXd& signals, double rate, std::size_t seg_len, double overlap) {
        return welch_psd(signals, rate, seg_len, overlap);
      },
      py::arg("signals"), py::arg("sample_rate"), py::arg("seg_len") = kDefaultWelchSegment,
      py::arg("overlap") = kDefaultWelchOverlap);
  m.def(
      "welch_psd_epochs",
      [](const EpochSet& epochs, std::optional<ClassLabel> cls, std::size_t seg_len, double overlap) {
        return welch_psd(epochs, cls, seg_len, overlap);
      },
      py::arg("epochs"), py::arg("label") = py::none(), py::arg("seg_len") = kDefaultWelchSegment,
      py::arg("overlap") = kDefaultWelchOverlap);

  // CSP
  py::class_<CspModel>(m, "CspModel")
      .def_readonly("filters", &CspModel::filters)
      .def_readonly("patterns", &CspModel::patterns)
      .def_readonly("eigvals", &CspModel::eigvals)
      .def_readonly("selected_indices", &CspModel::selected_indices)
      .def_readonly("channel_names", &CspModel::channel_names);

  m.def(
      "fit_csp",
      [](const EpochSet& epochs, int pairs, double ridge, bool normalize_trials) {
        return fit_csp(epochs, CspOptions{pairs, ridge, normalize_trials});
      },
      py::arg("epochs"), py::arg("pairs") = 3, py::arg("ridge") = 1e-8, py::arg("normalize_trials") = true);
  m.def(
      "csp_features", [](const CspModel& model, const EpochSet& epochs) { return csp_features(model, epochs); },
      py::arg("model"), py::arg("epochs"));

  py::class_<FeatureMatrix>(m, "FeatureMatrix")
      .def(py::init([](Eigen::MatrixXd values, std::vector<ClassLabel> labels) {
             if (static_cast<std::size_t>(values.rows()) != labels.size())
               throw DataError("one label per feature row is required");
             return FeatureMatrix{std::move(values), std::move(labels)};
           }),
           py::arg("values"), py::arg("labels"))
      .def_readonly("values", &FeatureMatrix::values)
      .def_readonly("labels", &FeatureMatrix::labels);

  // SVM
  py::class_<SvmModel>(m, "SvmModel")
      .def_readonly("w", &SvmModel::w)
      .def_readonly("b", &SvmModel::b)
      .def_readonly("c", &SvmModel::c)
      .def_readonly("alphas", &SvmModel::alphas)
      .def_readonly("objective", &SvmModel::objective)
      .def_readonly("dual_objective", &SvmModel::dual_objective)
      .def_readonly("duality_gap", &SvmModel::duality_gap);

  m.def(
      "train_svm",
      [](const FeatureMatrix& f, double c, bool standardize, double tol) {
        SvmOptions o;
        o.c = c;
        o.standardize = standardize;
        o.tol = tol;
        return train_svm(f, o);
      },
      py::arg("features"), py::arg("c") = 1.0, py::arg("standardize") = false, py::arg("tol") = 1e-10);

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("labels", &Prediction::labels)
      .def_readonly("decisions", &Prediction::decisions);
  m.def(
      "predict", [](const SvmModel& model, const Eigen::MatrixXd& x) { return predict(model, x); }, py::arg("model"),
      py::arg("features"));

  // Evaluation
  py::class_<CvReport>(m, "CvReport")
      .def_readonly("accuracy", &CvReport::accuracy)
      .def_readonly("mean_accuracy", &CvReport::mean_accuracy)
      .def_readonly("std_accuracy", &CvReport::std_accuracy)
      .def_readonly("repeats", &CvReport::repeats)
      .def_readonly("folds", &CvReport::folds)
      .def_readonly("seed", &CvReport::seed);

  m.def(
      "cross_validate",
      [](const EpochSet& epochs, const py::object& pipeline, int repeats, int folds, std::uint64_t seed) {
        return cross_validate(epochs, pipeline_from_json(to_cpp_json(pipeline)), repeats, folds, seed);
      },
      py::arg("epochs"), py::arg("pipeline") = py::none(), py::arg("repeats") = 10, py::arg("folds") = 10,
      py::arg("seed") = 0, "Repeated stratified k-fold CV of the CSP + SVM pipeline, fitting only on training folds.");

  m.def(
      "screen_subjects",
      [](const std::vector<std::tuple<std::string, double, double>>& rows, double threshold) {
        std::vector<SubjectAccuracy> subjects;
        for (const auto& [id, a, b] : rows) subjects.push_back({id, a, b});
        const auto r = screen_subjects(subjects, threshold);
        return std::pair{r.included, r.excluded};
      },
      py::arg("subjects"), py::arg("threshold") = kScreeningThreshold, "Returns (included, excluded) subject ids.");

  // Statistics
  py::class_<PairedTestResult>(m, "PairedTestResult")
      .def_readonly("n", &PairedTestResult::n)
      .def_readonly("mean_diff", &PairedTestResult::mean_diff)
      .def_readonly("sd_diff", &PairedTestResult::sd_diff)
      .def_readonly("t", &PairedTestResult::t_statistic)
      .def_readonly("df", &PairedTestResult::df)
      .def_readonly("p", &PairedTestResult::p_two_tailed);
  m.def("paired_t_test", &paired_t_test, py::arg("x"), py::arg("y"));

  py::class_<LikertSummary>(m, "LikertSummary")
      .def_readonly("mean", &LikertSummary::mean)
      .def_readonly("sd", &LikertSummary::sd)
      .def("format", &LikertSummary::format)
      .def("__str__", &LikertSummary::format);
  m.def("likert_summary", &likert_summary, py::arg("responses"));

  // Whole experiment
  m.def(
      "run_experiment",
      [](const py::object& cfg, std::optional<std::string> output_dir, bool write_bundle) {
        auto run = run_config_from_json(to_cpp_json(cfg));
        if (output_dir) run.output_dir = *output_dir;
        const auto result = run_experiment(run, write_bundle);
        return to_py_json(result.report);
      },
      py::arg("config"), py::arg("output_dir") = py::none(), py::arg("write_bundle") = false,
      "Runs the full study described by a run config dict and returns the report as a dict.");
  m.def(
      "config_hash", [](const py::object& cfg) { return config_hash(run_config_from_json(to_cpp_json(cfg))); },
      py::arg("config"));
}
