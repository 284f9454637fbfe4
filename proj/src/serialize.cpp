#include "mibci/serialize.hpp"

#include "mibci/error.hpp"
#include "mibci/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mibci {
namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

bool parse_number(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

Json to_json(const ParadigmSpec& s) {
  return Json{{"kind", paradigm_name(s.kind)},
              {"fixation_s", s.fixation_s},
              {"imagery_s", s.imagery_s},
              {"break_s", s.break_s},
              {"feature_window", {s.feature_window.start_s, s.feature_window.end_s}},
              {"runs", s.runs},
              {"trials_per_run", s.trials_per_run}};
}

ParadigmSpec paradigm_from_json(const Json& j) {
  ParadigmSpec s;
  if (j.contains("kind")) s.kind = parse_paradigm(j.at("kind").get<std::string>());
  read_opt(j, "fixation_s", s.fixation_s);
  read_opt(j, "imagery_s", s.imagery_s);
  read_opt(j, "break_s", s.break_s);
  if (j.contains("feature_window")) {
    s.feature_window = {j.at("feature_window").at(0).get<double>(), j.at("feature_window").at(1).get<double>()};
  }
  read_opt(j, "runs", s.runs);
  read_opt(j, "trials_per_run", s.trials_per_run);
  s.validate();
  return s;
}

Json plan_to_json(const ParadigmSpec& spec, std::uint64_t seed, const std::vector<TrialPlan>& plans) {
  Json trials = Json::array();
  for (const auto& p : plans) {
    Json cue = {{"side", std::string(1, label_code(p.cue.side))}};
    if (!p.cue.character.empty()) cue["character"] = p.cue.character;
    trials.push_back({{"trial", p.trial_index},
                      {"label", std::string(1, label_code(p.label))},
                      {"cue", cue},
                      {"onset_s", p.onset_s}});
  }
  return Json{{"format", kPlanFormat}, {"spec", to_json(spec)}, {"seed", seed}, {"trials", trials}};
}

PlanDocument plan_from_json(const Json& j) {
  if (j.value("format", std::string{}) != kPlanFormat) throw DataError("plan file is not plan-v1");
  PlanDocument doc;
  doc.spec = paradigm_from_json(j.at("spec"));
  doc.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("trials")) {
    TrialPlan p;
    p.trial_index = t.at("trial").get<std::int64_t>();
    p.label = parse_label_code(t.at("label").get<std::string>());
    const auto& cue = t.at("cue");
    p.cue.side = parse_label_code(cue.at("side").get<std::string>());
    p.cue.character = cue.value("character", std::string{});
    p.onset_s = t.at("onset_s").get<double>();
    doc.plans.push_back(std::move(p));
  }
  return doc;
}

Json to_json(const SynthConfig& c) {
  return Json{{"seed", c.seed},
              {"sample_rate", c.sample_rate},
              {"noise_scale", c.noise_scale},
              {"mu_amp", c.mu_amp},
              {"mu_freq", c.mu_freq},
              {"beta_amp", c.beta_amp},
              {"beta_freq", c.beta_freq},
              {"erd_depth", c.erd_depth},
              {"erd_window", {c.erd_window.start_s, c.erd_window.end_s}},
              {"source_channels", {{"left_motor", c.left_motor}, {"right_motor", c.right_motor}}},
              {"spread", c.spread},
              {"jitter_depth", c.jitter_depth},
              {"trial_amp_sd", c.trial_amp_sd},
              {"pink_floor_hz", c.pink_floor_hz}};
}

SynthConfig synth_from_json(const Json& j, SynthConfig c) {
  read_opt(j, "seed", c.seed);
  read_opt(j, "sample_rate", c.sample_rate);
  read_opt(j, "noise_scale", c.noise_scale);
  read_opt(j, "mu_amp", c.mu_amp);
  read_opt(j, "mu_freq", c.mu_freq);
  read_opt(j, "beta_amp", c.beta_amp);
  read_opt(j, "beta_freq", c.beta_freq);
  read_opt(j, "erd_depth", c.erd_depth);
  if (j.contains("erd_window")) c.erd_window = {j["erd_window"].at(0).get<double>(), j["erd_window"].at(1).get<double>()};
  if (j.contains("source_channels")) {
    read_opt(j["source_channels"], "left_motor", c.left_motor);
    read_opt(j["source_channels"], "right_motor", c.right_motor);
  }
  read_opt(j, "spread", c.spread);
  read_opt(j, "jitter_depth", c.jitter_depth);
  read_opt(j, "trial_amp_sd", c.trial_amp_sd);
  read_opt(j, "pink_floor_hz", c.pink_floor_hz);
  c.validate();
  return c;
}

Json to_json(const PipelineConfig& c) {
  Json j{{"pairs", c.csp.pairs},
         {"ridge", c.csp.ridge},
         {"normalize_trials", c.csp.normalize_trials},
         {"c", c.c},
         {"standardize", c.standardize},
         {"tune_c", c.tune_c},
         {"c_grid", c.c_grid},
         {"inner_folds", c.inner_folds}};
  if (c.filter) {
    j["filter"] = {{"order", c.filter->order},
                   {"low_hz", c.filter->low_hz},
                   {"high_hz", c.filter->high_hz},
                   {"mode", filter_mode_name(c.filter->mode)}};
  } else {
    j["filter"] = nullptr;
  }
  return j;
}

PipelineConfig pipeline_from_json(const Json& j, PipelineConfig c) {
  read_opt(j, "pairs", c.csp.pairs);
  read_opt(j, "ridge", c.csp.ridge);
  read_opt(j, "normalize_trials", c.csp.normalize_trials);
  read_opt(j, "c", c.c);
  read_opt(j, "standardize", c.standardize);
  read_opt(j, "tune_c", c.tune_c);
  read_opt(j, "c_grid", c.c_grid);
  read_opt(j, "inner_folds", c.inner_folds);
  if (j.contains("filter")) {
    if (j["filter"].is_null()) {
      c.filter.reset();
    } else {
      FilterSpec f = c.filter.value_or(FilterSpec{});
      const auto& jf = j["filter"];
      read_opt(jf, "order", f.order);
      read_opt(jf, "low_hz", f.low_hz);
      read_opt(jf, "high_hz", f.high_hz);
      if (jf.contains("mode")) f.mode = parse_filter_mode(jf["mode"].get<std::string>());
      c.filter = f;
    }
  }
  if (!(c.c > 0.0)) throw ConfigError("pipeline c must be positive");
  if (c.tune_c && (c.c_grid.empty() || c.inner_folds < 2)) throw ConfigError("c tuning needs a grid and >= 2 inner folds");
  return c;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) throw DataError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Json to_json(const CspModel& m) {
  return Json{{"format", "csp-v1"},
              {"full_w", matrix_to_json(m.full_w)},
              {"filters", matrix_to_json(m.filters)},
              {"patterns", matrix_to_json(m.patterns)},
              {"eigvals", vector_to_json(m.eigvals)},
              {"selected_indices", m.selected_indices},
              {"channel_names", m.channel_names},
              {"ridge", m.ridge}};
}

CspModel csp_from_json(const Json& j) {
  CspModel m;
  m.full_w = matrix_from_json(j.at("full_w"));
  m.filters = matrix_from_json(j.at("filters"));
  m.patterns = matrix_from_json(j.at("patterns"));
  m.eigvals = vector_from_json(j.at("eigvals"));
  m.selected_indices = j.at("selected_indices").get<std::vector<int>>();
  m.channel_names = j.value("channel_names", std::vector<std::string>{});
  m.ridge = j.value("ridge", 0.0);
  return m;
}

Json to_json(const SvmModel& m) {
  Json j{{"format", "svm-v1"},
         {"w", vector_to_json(m.w)},
         {"b", m.b},
         {"c", m.c},
         {"objective", m.objective},
         {"dual_objective", m.dual_objective},
         {"duality_gap", m.duality_gap},
         {"updates", m.updates},
         {"solved_w", vector_to_json(m.solved_w)},
         {"solved_b", m.solved_b},
         {"alphas", vector_to_json(m.alphas)}};
  if (m.standardization.identity()) {
    j["standardization"] = nullptr;
  } else {
    j["standardization"] = {{"mean", vector_to_json(m.standardization.mean)},
                            {"scale", vector_to_json(m.standardization.scale)}};
  }
  return j;
}

SvmModel svm_from_json(const Json& j) {
  SvmModel m;
  m.w = vector_from_json(j.at("w"));
  m.b = j.at("b").get<double>();
  m.c = j.at("c").get<double>();
  m.objective = j.value("objective", 0.0);
  m.dual_objective = j.value("dual_objective", 0.0);
  m.duality_gap = j.value("duality_gap", 0.0);
  m.updates = j.value("updates", std::size_t{0});
  if (j.contains("solved_w")) m.solved_w = vector_from_json(j["solved_w"]);
  m.solved_b = j.value("solved_b", 0.0);
  if (j.contains("alphas")) m.alphas = vector_from_json(j["alphas"]);
  if (j.contains("standardization") && !j["standardization"].is_null()) {
    m.standardization.mean = vector_from_json(j["standardization"].at("mean"));
    m.standardization.scale = vector_from_json(j["standardization"].at("scale"));
  }
  return m;
}

Json to_json(const CvReport& r) {
  return Json{{"repeats", r.repeats},
              {"folds", r.folds},
              {"seed", r.seed},
              {"mean_accuracy", r.mean_accuracy},
              {"std_accuracy", r.std_accuracy},
              {"accuracy", matrix_to_json(r.accuracy)}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what(), 0, e.byte);
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(const Json& j) { return content_hash(j.dump()); }

void write_psd_csv(std::ostream& out, const PsdEstimate& psd, const std::vector<std::string>& channels,
                   const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "freq_hz";
  for (Eigen::Index c = 0; c < psd.power.rows(); ++c) {
    out << ',' << (static_cast<std::size_t>(c) < channels.size() ? channels[static_cast<std::size_t>(c)] : "ch" + std::to_string(c));
  }
  out << '\n';
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    out << format_f64(psd.freqs[k]);
    for (Eigen::Index c = 0; c < psd.power.rows(); ++c) out << ',' << format_f64(psd.power(c, static_cast<Eigen::Index>(k)));
    out << '\n';
  }
}

void write_patterns_csv(std::ostream& out, const CspModel& model, const Montage& montage, const std::string& comment) {
  if (montage.size() != model.channels()) throw DataError("montage size differs from the CSP model");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "channel,x,y";
  for (int idx : model.selected_indices) out << ",comp_" << idx;
  out << '\n';
  for (std::size_t c = 0; c < montage.size(); ++c) {
    out << montage.channels()[c] << ',' << format_f64(montage.coordinates()[c].x) << ','
        << format_f64(montage.coordinates()[c].y);
    for (int idx : model.selected_indices) out << ',' << format_f64(model.patterns(static_cast<Eigen::Index>(c), idx));
    out << '\n';
  }
}

void write_features_csv(std::ostream& out, const FeatureMatrix& f, const std::string& tag) {
  if (!tag.empty()) out << "# " << tag << '\n';
  out << "label";
  for (std::size_t j = 0; j < f.cols(); ++j) out << ",f" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < f.rows(); ++i) {
    out << label_code(f.labels[i]);
    for (std::size_t j = 0; j < f.cols(); ++j) out << ',' << format_f64(f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

FeatureMatrix read_features_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  FeatureMatrix f;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (cells.empty()) continue;
    if (cells[0] == "label") {
      width = cells.size() - 1;
      continue;
    }
    if (width == 0) width = cells.size() - 1;
    if (cells.size() != width + 1) throw ParseError("features: line " + std::to_string(line_no) + " has the wrong width", line_no);
    try {
      f.labels.push_back(parse_label_code(cells[0]));
    } catch (const DataError& e) {
      throw ParseError("features: line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    std::vector<double> row;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      double v = 0.0;
      if (!parse_number(cells[k], v)) throw ParseError("features: line " + std::to_string(line_no) + ": bad number", line_no);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  f.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < width; ++k) f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return f;
}

std::vector<double> read_number_column(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto cells = split(line, ',');
    if (cells.empty() || cells[0].empty() || cells[0][0] == '#') continue;
    double v = 0.0;
    if (!parse_number(cells.back(), v)) {
      if (out.empty() && line_no == 1) continue;
      throw ParseError("line " + std::to_string(line_no) + ": expected a number", line_no);
    }
    out.push_back(v);
  }
  return out;
}

std::vector<LikertRow> read_likert_csv(std::istream& in) {
  std::vector<LikertRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto cells = split(line, ',');
    if (cells.empty() || cells[0].empty() || cells[0][0] == '#') continue;
    if (cells.size() != 3) throw ParseError("likert: line " + std::to_string(line_no) + " needs subject,condition,response", line_no);
    if (line_no == 1 && cells[0] == "subject") continue;
    double v = 0.0;
    if (!parse_number(cells[2], v) || v != static_cast<int>(v)) {
      throw ParseError("likert: line " + std::to_string(line_no) + ": response must be an integer", line_no);
    }
    rows.push_back({cells[0], cells[1], static_cast<int>(v)});
  }
  return rows;
}

}  // namespace mibci
