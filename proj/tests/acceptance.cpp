// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any
// failure.
#include "helpers.hpp"
#include "oracles.hpp"

#include "mibci/csp.hpp"
#include "mibci/dsp.hpp"
#include "mibci/eval.hpp"
#include "mibci/experiment.hpp"
#include "mibci/serialize.hpp"
#include "mibci/stats.hpp"
#include "mibci/svm.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

using namespace mibci;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    out_.pass = out_.pass && ok;
    if (!out_.detail.empty()) out_.detail += "; ";
    out_.detail += (ok ? "" : "FAILED ") + what;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
};

std::string num(double v, const char* f = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::string kConfigDir = MIBCI_CONFIG_DIR;

Outcome table_statistics() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  std::ifstream in(kConfigDir + "/tableI.csv");
  std::vector<int> arrow, writing;
  for (const auto& row : read_likert_csv(in)) (row.condition == "arrow" ? arrow : writing).push_back(row.response);
  const auto a = likert_summary(arrow);
  const auto w = likert_summary(writing);
  const auto t = paired_t_test(std::vector<double>(arrow.begin(), arrow.end()),
                               std::vector<double>(writing.begin(), writing.end()));
  const double elapsed = seconds_since(t0);
  c.expect(a.format() == "3.6±1.1", "arrow " + a.format());
  c.expect(w.format() == "2.4±1.1", "writing " + w.format());
  c.expect(std::abs(t.p_two_tailed - 0.0026) <= 0.0002, "p=" + num(t.p_two_tailed));
  c.expect(std::abs(t.t_statistic - 4.13) <= 0.01, "t=" + num(t.t_statistic));
  c.expect(t.df == 9.0, "df=" + num(t.df));
  c.expect(elapsed < 1.0, "time " + num(elapsed, "%.3f") + " s");
  return c.result();
}

Outcome filter_design() {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto f = design_butterworth_bandpass(5, 8.0, 30.0, 250.0);
  const double lo = f.magnitude_db(8.0), hi = f.magnitude_db(30.0);
  const double mid = f.magnitude_db(std::sqrt(8.0 * 30.0)), stop = f.magnitude_db(50.0);
  double worst_pole = 0.0;
  for (const auto& p : f.poles()) worst_pole = std::max(worst_pole, std::abs(p));
  const double elapsed = seconds_since(t0);
  c.expect(std::abs(lo + 3.01) <= 0.1, "8 Hz " + num(lo) + " dB");
  c.expect(std::abs(hi + 3.01) <= 0.1, "30 Hz " + num(hi) + " dB");
  c.expect(mid >= -0.05, "15.49 Hz " + num(mid) + " dB");
  c.expect(stop <= -40.0, "50 Hz " + num(stop) + " dB");
  c.expect(worst_pole < 1.0 - 1e-9 && f.poles().size() == 10, "max |pole| " + num(worst_pole, "%.6f"));
  c.expect(elapsed < 1.0, "time " + num(elapsed, "%.3f") + " s");
  return c.result();
}

Eigen::MatrixXd random_spd(Eigen::Index n, std::uint64_t seed) {
  const Eigen::MatrixXd a = testing::gaussian(n, n + 2, seed);
  Eigen::MatrixXd s = a * a.transpose();
  return s / s.trace();
}

Outcome csp_oracles() {
  Checker c;
  const CspOptions exact{1, 0.0, true};
  const Eigen::MatrixXd cr2 = Eigen::Vector2d(2.0, 1.0).asDiagonal() * (1.0 / 3.0);
  const Eigen::MatrixXd cl2 = Eigen::Vector2d(1.0, 2.0).asDiagonal() * (1.0 / 3.0);
  const auto m2 = fit_csp(cr2, cl2, exact);
  const double analytic = std::max(std::abs(m2.eigvals[0] - 2.0 / 3.0), std::abs(m2.eigvals[1] - 1.0 / 3.0));
  c.expect(analytic <= 1e-9, "2-channel error " + num(analytic));

  double oracle_err = 0.0, diag_err = 0.0;
  bool counts = true;
  for (Eigen::Index n : {3, 4}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Eigen::MatrixXd cr = random_spd(n, 40 + seed * 7 + static_cast<std::uint64_t>(n));
      const Eigen::MatrixXd cl = random_spd(n, 90 + seed * 7 + static_cast<std::uint64_t>(n));
      const auto m = fit_csp(cr, cl, exact);
      const auto roots = oracle::generalized_eigs_by_det(cr, cr + cl);
      counts = counts && roots.size() == static_cast<std::size_t>(n);
      for (std::size_t i = 0; i < roots.size() && i < static_cast<std::size_t>(n); ++i) {
        oracle_err = std::max(oracle_err, std::abs(m.eigvals[static_cast<Eigen::Index>(i)] - roots[i]));
      }
      const Eigen::MatrixXd dr = m.full_w * cr * m.full_w.transpose();
      const Eigen::MatrixXd dl = m.full_w * cl * m.full_w.transpose();
      Eigen::MatrixXd off_r = dr, off_l = dl;
      off_r.diagonal().setZero();
      off_l.diagonal().setZero();
      diag_err = std::max({diag_err, off_r.cwiseAbs().maxCoeff(), off_l.cwiseAbs().maxCoeff(),
                           (dr + dl - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff()});
    }
  }
  c.expect(counts && oracle_err <= 1e-6, "3-4 channel oracle error " + num(oracle_err));
  c.expect(diag_err <= 1e-8, "diagonalization residual " + num(diag_err));

  // Mixing invariance on epochs: arbitrary mixing with raw scatter,
  // orthogonal mixing with trace-normalized scatter.
  EpochSet e;
  const Eigen::VectorXd gain = Eigen::VectorXd::LinSpaced(6, 1.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    const bool right = t % 2 == 0;
    e.epochs.push_back((right ? gain : Eigen::VectorXd(gain.reverse())).asDiagonal() *
                       testing::gaussian(6, 200, 700 + static_cast<std::uint64_t>(t)));
    e.labels.push_back(right ? ClassLabel::RightHand : ClassLabel::LeftHand);
  }
  double mix_err = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd mix = testing::gaussian(6, 6, 800 + seed) + 3.0 * Eigen::MatrixXd::Identity(6, 6);
    const Eigen::MatrixXd rot = Eigen::HouseholderQR<Eigen::MatrixXd>(testing::gaussian(6, 6, 850 + seed)).householderQ();
    for (const auto& [m, normalize] : {std::pair{mix, false}, std::pair{rot, true}}) {
      EpochSet mixed = e;
      for (auto& x : mixed.epochs) x = m * x;
      const CspOptions opts{2, 0.0, normalize};
      mix_err = std::max(mix_err, (fit_csp(e, opts).eigvals - fit_csp(mixed, opts).eigvals).cwiseAbs().maxCoeff());
    }
  }
  c.expect(mix_err <= 1e-6, "mixing invariance error " + num(mix_err));
  return c.result();
}

Outcome svm_optimality() {
  Checker c;
  double worst_gap = 0.0, worst_kkt = 0.0, worst_obj = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    FeatureMatrix f;
    f.values = testing::gaussian(6, 2, 5000 + seed);
    std::vector<int> y{1, 1, 1, -1, -1, -1};
    std::mt19937_64 rng(seed);
    std::shuffle(y.begin(), y.end(), rng);
    Eigen::VectorXd ys(6);
    for (int i = 0; i < 6; ++i) {
      f.values(i, 0) += 0.6 * y[static_cast<std::size_t>(i)];
      f.labels.push_back(decode_label(y[static_cast<std::size_t>(i)]));
      ys[i] = y[static_cast<std::size_t>(i)];
    }
    const auto m = train_svm(f, 1.0);
    const auto ref = oracle::svm_by_enumeration(f.values, ys, 1.0);
    worst_gap = std::max(worst_gap, m.duality_gap / std::max(1.0, m.objective));
    worst_kkt = std::max(worst_kkt, kkt_residual(m, f));
    worst_obj = std::max(worst_obj, std::abs(m.objective - ref.objective));
  }
  c.expect(worst_gap <= 1e-6, "relative gap " + num(worst_gap));
  c.expect(worst_kkt <= 1e-6, "KKT residual " + num(worst_kkt));
  c.expect(worst_obj <= 1e-4, "oracle objective error " + num(worst_obj));

  FeatureMatrix pair;
  pair.values = Eigen::MatrixXd(2, 1);
  pair.values << -1.0, 1.0;
  pair.labels = {ClassLabel::LeftHand, ClassLabel::RightHand};
  const auto m = train_svm(pair, 10.0);
  c.expect(std::abs(m.w[0] - 1.0) <= 1e-9 && std::abs(m.b) <= 1e-9 && std::abs(m.objective - 0.5) <= 1e-9,
           "2-point (w, b, obj) = (" + num(m.w[0], "%.12g") + ", " + num(m.b, "%.3g") + ", " + num(m.objective, "%.12g") + ")");
  return c.result();
}

RunConfig repro_config(const fs::path& out) {
  std::ifstream in(kConfigDir + "/paper-repro.json");
  auto cfg = run_config_from_json(Json::parse(in));
  cfg.output_dir = out;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path kRunA = fs::temp_directory_path() / "mibci_acceptance_run_a";
const fs::path kRunB = fs::temp_directory_path() / "mibci_acceptance_run_b";

Outcome synthetic_reproduction() {
  Checker c;
  fs::remove_all(kRunA);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_experiment(repro_config(kRunA));
  const double elapsed = seconds_since(t0);
  const double a = r.conditions.at(0).mean_accuracy, b = r.conditions.at(1).mean_accuracy;
  const double control = r.conditions.at(2).mean_accuracy;
  c.expect(a - b >= 0.10, "A " + num(a) + " vs B " + num(b));
  c.expect(r.comparison.p_two_tailed < 0.01, "paired p=" + num(r.comparison.p_two_tailed));
  c.expect(std::abs(control - 0.5) <= 0.10, "control " + num(control));
  c.expect(elapsed <= 120.0, "time " + num(elapsed, "%.1f") + " s");
  return c.result();
}

Outcome erd_signature() {
  Checker c;
  SynthConfig cfg;
  cfg.seed = 2016;
  cfg.erd_depth = 0.8;
  const auto epochs = testing::session(cfg, 2016);
  for (const char* name : {"C3", "C4"}) {
    const auto ch = static_cast<Eigen::Index>(Montage::standard30().require_index(name));
    std::vector<double> right, left;
    for (std::size_t t = 0; t < epochs.trials(); ++t) {
      const Eigen::MatrixXd row = epochs.epochs[t].row(ch);
      const double p = welch_psd(row, epochs.sample_rate).band_power(0, 8.0, 12.0);
      (epochs.labels[t] == ClassLabel::RightHand ? right : left).push_back(p);
    }
    const bool lower_for_right = std::string(name) == "C3";
    const double p = welch_t_test_p(right, left);
    const bool direction = lower_for_right ? mean(right) < mean(left) : mean(right) > mean(left);
    c.expect(direction && p < 0.01, std::string(name) + " R " + num(mean(right)) + " vs L " + num(mean(left)) +
                                        " uV^2, p=" + num(p));
  }
  c.expect(epochs.trials() == 100, std::to_string(epochs.trials()) + " trials");
  return c.result();
}

Outcome pattern_localization() {
  Checker c;
  const auto& montage = Montage::standard30();
  auto near = [&](std::size_t ch, const char* name) {
    const auto n = montage.neighborhood(name, kNeighborRadius);
    return std::find(n.begin(), n.end(), ch) != n.end();
  };
  int good = 0;
  std::string peaks;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthConfig cfg;
    cfg.seed = 300 + seed;
    cfg.erd_depth = 0.8;
    const auto model = fit_csp(testing::session(cfg, 300 + seed));
    Eigen::Index first = 0, last = 0;
    model.patterns.col(0).cwiseAbs().maxCoeff(&first);
    model.patterns.col(model.patterns.cols() - 1).cwiseAbs().maxCoeff(&last);
    const auto f = static_cast<std::size_t>(first), l = static_cast<std::size_t>(last);
    good += near(f, "C4") && near(l, "C3");
    peaks += (peaks.empty() ? "" : " ") + montage.channels()[f] + "/" + montage.channels()[l];
  }
  c.expect(good >= 9, std::to_string(good) + "/10 seeds localize (first/last pattern peaks: " + peaks + ")");
  return c.result();
}

Outcome determinism() {
  Checker c;
  fs::remove_all(kRunB);
  run_experiment(repro_config(kRunB));
  const auto a = slurp(kRunA / "report.json"), b = slurp(kRunB / "report.json");
  c.expect(!a.empty() && a == b, "report.json identical (" + std::to_string(a.size()) + " bytes)");
  int inflated = 0;
  bool blind = true;
  double honest_worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = testing::leakage_canary(seed);
    blind = blind && r.held_out_blind;
    honest_worst = std::max(honest_worst, std::abs(r.honest - 0.5));
    inflated += r.leaky > 0.55;
  }
  c.expect(blind, "held-out labels never influence predictions");
  c.expect(honest_worst <= 0.1, "shuffled-label accuracy within 0.5 +- " + num(honest_worst));
  c.expect(inflated >= 8, "deliberate leak inflates accuracy on " + std::to_string(inflated) + "/10 seeds");
  return c.result();
}

Outcome screening() {
  Checker c;
  const auto s = screen_subjects({{"both-below", 0.55, 0.58}, {"one-below", 0.55, 0.72}, {"boundary", 0.60, 0.59}});
  c.expect(s.excluded == std::vector<std::string>{"both-below"}, "(0.55, 0.58) excluded");
  c.expect(s.included == std::vector<std::string>{"one-below", "boundary"}, "(0.55, 0.72) and (0.60, 0.59) included");
  return c.result();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Table I statistics", table_statistics},
      {"filter design", filter_design},
      {"CSP oracle", csp_oracles},
      {"SVM optimality", svm_optimality},
      {"synthetic effect direction", synthetic_reproduction},
      {"ERD signature", erd_signature},
      {"pattern localization", pattern_localization},
      {"determinism and leakage canary", determinism},
      {"screening rule", screening},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("ACC-%zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
