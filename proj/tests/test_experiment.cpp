#include "helpers.hpp"

#include "mibci/error.hpp"
#include "mibci/experiment.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace mibci;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const fs::path& out) {
  RunConfig cfg;
  cfg.name = "small";
  cfg.seed = 99;
  cfg.subjects = 3;
  cfg.paradigm.runs = 1;
  cfg.paradigm.trials_per_run = 20;
  cfg.repeats = 2;
  cfg.folds = 5;
  cfg.conditions = {{"A", ParadigmKind::WritingTask, 0.8}, {"B", ParadigmKind::Arrow, 0.3}};
  cfg.control_erd_depth = 0.0;
  cfg.export_recordings = true;
  cfg.export_subject = 2;
  cfg.output_dir = out;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::set<fs::path> files_under(const fs::path& root) {
  std::set<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.insert(fs::relative(e.path(), root));
  return out;
}

}  // namespace

TEST_CASE("bundle is reproducible byte for byte and tagged with the config hash") {
  const auto dir_a = testing::scratch("bundle_a");
  const auto dir_b = testing::scratch("bundle_b");
  const auto ra = run_experiment(small_config(dir_a));
  const auto rb = run_experiment(small_config(dir_b));
  CHECK(ra.config_hash == rb.config_hash);
  CHECK(ra.config_hash == config_hash(small_config("elsewhere")));

  const auto files = files_under(dir_a);
  REQUIRE(files == files_under(dir_b));
  for (const char* must : {"report.json", "summary.txt", "plans/A_s01.json", "plans/control_s03.json",
                           "recordings/B_s02.csv", "recordings/B_s02.tsv", "psd/A_L.csv", "psd/A_R.csv",
                           "patterns/B.csv"}) {
    CHECK_MESSAGE(files.count(must) == 1, must);
  }
  for (const auto& f : files) {
    CAPTURE(f);
    const auto text = slurp(dir_a / f);
    CHECK(text == slurp(dir_b / f));
    CHECK(text.find(ra.config_hash) != std::string::npos);
  }

  const auto report = Json::parse(slurp(dir_a / "report.json"));
  CHECK(report["format"] == "report-v1");
  CHECK(report["config_hash"] == ra.config_hash);
  CHECK(report["conditions"].size() == 3);
  CHECK(report["conditions"][2]["name"] == "control");
  CHECK(report["conditions"][0]["subjects"].size() == 3);
  CHECK(report.contains("provenance"));
  CHECK(report == ra.report);
  CHECK(ra.conditions.size() == 3);
  CHECK(ra.comparison.n == 3);
  CHECK(ra.summary.find("A") != std::string::npos);
}

TEST_CASE("seeds are a pure function of run, condition and subject") {
  const auto a = derive_seeds(7, 0, 1);
  const auto b = derive_seeds(7, 0, 1);
  CHECK(a.plan == b.plan);
  CHECK(a.synth == b.synth);
  CHECK(a.cv == b.cv);
  std::set<std::uint64_t> all;
  for (std::size_t c = 0; c < 3; ++c)
    for (int s = 1; s <= 10; ++s) {
      const auto d = derive_seeds(7, c, s);
      all.insert(d.plan);
      all.insert(d.synth);
      all.insert(d.cv);
    }
  CHECK(all.size() == 90);
  CHECK(derive_seeds(8, 0, 1).synth != a.synth);
}

TEST_CASE("simulate_session matches the run's per-subject epochs") {
  const auto cfg = small_config(testing::scratch("session"));
  const auto seeds = derive_seeds(cfg.seed, 0, 1);
  const auto a = simulate_session(cfg, cfg.conditions[0], seeds);
  const auto b = simulate_session(cfg, cfg.conditions[0], seeds);
  CHECK(a.trials() == 20);
  CHECK(a.channels() == 30);
  CHECK(a.samples() == 1000);
  CHECK(a.epochs[5] == b.epochs[5]);
}

TEST_CASE("stage plan lists every stage without writing anything") {
  const auto dir = testing::scratch("dry");
  fs::remove_all(dir);
  const auto plan = stage_plan(small_config(dir));
  CHECK(plan.size() >= 8);
  CHECK(plan.front().rfind("conditions:", 0) == 0);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("config validation") {
  auto cfg = small_config("x");
  cfg.conditions.pop_back();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config("x");
  cfg.conditions[1].name = "A";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config("x");
  cfg.folds = 11;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config("x");
  cfg.export_subject = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config("x");
  cfg.conditions[0].erd_depth = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"conditions": [{"name": "A"}]})")), ConfigError);
}

TEST_CASE("config round-trips through JSON with the same hash") {
  const auto cfg = small_config("somewhere");
  const auto back = run_config_from_json(to_json(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
  auto other = cfg;
  other.seed = 100;
  CHECK(config_hash(other) != config_hash(cfg));

  std::ifstream in(std::string(MIBCI_CONFIG_DIR) + "/paper-repro.json");
  const auto repro = run_config_from_json(Json::parse(in));
  CHECK(repro.subjects == 10);
  CHECK(repro.repeats == 10);
  CHECK(repro.folds == 10);
  CHECK(repro.conditions[0].erd_depth == 0.75);
  CHECK(repro.conditions[1].erd_depth == 0.35);
  CHECK(repro.filter.order == 5);
}

TEST_CASE("stage failures carry the stage name and input hashes") {
  auto cfg = small_config(testing::scratch("fail"));
  cfg.synth.left_motor = "C5";
  try {
    run_experiment(cfg, false);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("stage 'simulate A/s01'") != std::string::npos);
    CHECK(what.find("plan=") != std::string::npos);
    CHECK(what.find("C5") != std::string::npos);
  }
}
