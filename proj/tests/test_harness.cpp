#include <fstream>

#include "doctest.h"
#include "json.hpp"

#include "exsel/errors.hpp"
#include "exsel/harness.hpp"
#include "fixtures.hpp"

using namespace exsel;
using json = nlohmann::ordered_json;
namespace hx = exsel::harness;

namespace {

struct CorpusFiles {
  std::string dir;
  std::string dataset;
  std::string skills;
  testfx::SkillCorpus sc;
};

CorpusFiles small_corpus() {
  CorpusFiles files;
  files.dir = testfx::temp_dir();
  files.dataset = files.dir + "/dataset.json";
  files.skills = files.dir + "/skills.json";
  files.sc = testfx::make_skill_corpus(5, 40, 40, 7);
  testfx::write_corpus_files(files.sc, files.dataset, files.skills);
  return files;
}

json base_config(const CorpusFiles& files) {
  json doc;
  doc["dataset"] = files.dataset;
  doc["split"] = "test";
  doc["strategy"] = "random";
  doc["n_eval_problems"] = 20;
  doc["seeds"] = {1, 2};
  doc["backend"] = "mock";
  doc["mock_skills"] = files.skills;
  doc["embedding"] = {{"provider", "hashing"}, {"dimension", 64}};
  doc["train"] = {{"k", 2}, {"pool_size", 20}};
  return doc;
}

json strip_wall_clock(json doc) {
  doc.erase("wall_clock_seconds");
  return doc;
}

}  // namespace

TEST_CASE("configs parse strictly and echo losslessly") {
  const auto files = small_corpus();
  const json doc = base_config(files);
  const auto config = hx::config_from_json(doc);
  CHECK(config.dataset_path == files.dataset);
  CHECK(config.eval_split == corpus::Split::Test);
  CHECK(config.strategy == strat::Kind::Random);
  CHECK(config.n_eval_problems == 20);
  CHECK(config.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(config.train.k == 2);
  CHECK(config.embedding.dimension == 64);

  // The echo re-parses to the identical echo.
  const json echo = hx::config_to_json(config);
  CHECK(hx::config_to_json(hx::config_from_json(echo)) == echo);

  SUBCASE("unknown keys are rejected wherever they appear") {
    json bad = doc;
    bad["surprise"] = 1;
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
    bad = doc;
    bad["train"]["momentum"] = 0.9;
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
    bad = doc;
    bad["embedding"]["quantize"] = true;
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
    bad = doc;
    bad["http"] = {{"port", 80}};
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
  }
  SUBCASE("required and cross-field constraints") {
    json bad = doc;
    bad.erase("dataset");
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
    bad = doc;
    bad["strategy"] = "fixed_manual";  // no fixed_indices configured
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
    bad = doc;
    bad["seeds"] = json::array();
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
    bad = doc;
    bad["train"]["k"] = 30;  // exceeds pool_size 20
    CHECK_THROWS_AS(hx::config_from_json(bad), ConfigError);
    bad = doc;
    bad["split"] = "holdout";
    CHECK_THROWS_AS(hx::config_from_json(bad), ValidationError);
  }
  SUBCASE("null split means the whole dataset") {
    json all = doc;
    all["split"] = nullptr;
    CHECK(!hx::config_from_json(all).eval_split.has_value());
  }
}

TEST_CASE("cmd_eval runs seeded trials against the mock") {
  const auto files = small_corpus();
  auto doc = base_config(files);
  doc["out"] = files.dir + "/report.json";
  const auto config = hx::config_from_json(doc);

  const auto report = hx::cmd_eval(config);
  REQUIRE(report.trials.size() == 2);
  CHECK(report.stats.accuracies.size() == 2);
  CHECK(!report.incomplete);
  for (const auto& trial : report.trials) {
    CHECK(trial.records.size() == 20);
    CHECK(trial.pool_ids.size() == 20);
    CHECK(trial.n_failures == 0);
    CHECK(trial.report.overall.n == 20);
    for (const auto& record : trial.records) {
      CHECK(record.demo_ids.size() == 2);
      CHECK(record.error.empty());
    }
  }
  // Per-seed pools are independent draws from the train split.
  CHECK(report.trials[0].seed == 1);
  CHECK(report.trials[1].seed == 2);
  CHECK(report.trials[0].pool_ids != report.trials[1].pool_ids);

  // The eval set is the same for every trial.
  std::vector<std::string> ids0, ids1;
  for (const auto& r : report.trials[0].records) ids0.push_back(r.id);
  for (const auto& r : report.trials[1].records) ids1.push_back(r.id);
  CHECK(ids0 == ids1);

  // The written report matches the returned one.
  std::ifstream in(files.dir + "/report.json");
  REQUIRE(in.good());
  const json written = json::parse(in);
  CHECK(written == report.to_json());
  CHECK(written.contains("wall_clock_seconds"));

  SUBCASE("asking for more eval problems than the split holds fails") {
    auto big = doc;
    big["n_eval_problems"] = 100;  // test split has 40
    CHECK_THROWS_AS(hx::cmd_eval(hx::config_from_json(big)), ConfigError);
  }
  SUBCASE("an explicit eval seed draws a different but stable eval set") {
    auto drawn = doc;
    drawn.erase("out");
    drawn["eval_seed"] = 99;
    const auto seeded = hx::cmd_eval(hx::config_from_json(drawn));
    std::vector<std::string> seeded_ids;
    for (const auto& r : seeded.trials[0].records) seeded_ids.push_back(r.id);
    CHECK(seeded_ids != ids0);
    std::vector<std::string> second_trial_ids;
    for (const auto& r : seeded.trials[1].records) second_trial_ids.push_back(r.id);
    CHECK(seeded_ids == second_trial_ids);
  }
}

TEST_CASE("cmd_eval reports are byte-identical across repeat runs") {
  const auto files = small_corpus();
  const auto config = hx::config_from_json(base_config(files));
  const auto a = hx::cmd_eval(config);
  const auto b = hx::cmd_eval(config);
  CHECK(strip_wall_clock(a.to_json()).dump() == strip_wall_clock(b.to_json()).dump());
}

TEST_CASE("an explicit pool is honored verbatim for every trial") {
  const auto files = small_corpus();
  auto doc = base_config(files);
  json pool_ids = json::array();
  for (const auto& p : files.sc.pool) pool_ids.push_back(p.id);
  doc["pool_ids"] = pool_ids;
  doc["strategy"] = "fixed_manual";
  doc["fixed_indices"] = {0, 4};  // two pool problems of the same first skill

  const auto report = hx::cmd_eval(hx::config_from_json(doc));
  for (const auto& trial : report.trials) {
    REQUIRE(trial.pool_ids.size() == files.sc.pool.size());
    for (std::size_t i = 0; i < trial.pool_ids.size(); ++i) {
      CHECK(trial.pool_ids[i] == files.sc.pool[i].id);
    }
    for (const auto& record : trial.records) {
      CHECK(record.demo_ids ==
            std::vector<std::string>{files.sc.pool[0].id, files.sc.pool[4].id});
    }
  }
  // Identical pools and a deterministic strategy: zero variance across seeds.
  CHECK(report.stats.stddev == 0.0);

  auto bad = doc;
  bad["pool_ids"].push_back("no-such-problem");
  CHECK_THROWS_AS(hx::cmd_eval(hx::config_from_json(bad)), ConfigError);
}

TEST_CASE("cmd_train fits a policy and cmd_eval can use it") {
  const auto files = small_corpus();
  auto doc = base_config(files);
  json pool_ids = json::array();
  for (const auto& p : files.sc.pool) pool_ids.push_back(p.id);
  doc["pool_ids"] = pool_ids;
  doc["params"] = files.dir + "/params.json";
  doc["seeds"] = {5};
  doc["train"] = {{"k", 2}, {"pool_size", 20}, {"n_train_problems", 32},
                  {"epochs", 2},  {"batch_size", 8}};

  const auto outcome = hx::cmd_train(hx::config_from_json(doc));
  CHECK(outcome.result.status == policy::TrainStatus::Completed);
  CHECK(outcome.result.log.size() == 8);  // 2 epochs x 4 batches
  CHECK(outcome.params_path == files.dir + "/params.json");
  const auto params = policy::load_params(outcome.params_path, 64);
  CHECK(params.d_out() == 64);

  auto eval_doc = doc;
  eval_doc["strategy"] = "learned_policy";
  const auto report = hx::cmd_eval(hx::config_from_json(eval_doc));
  CHECK(report.trials.size() == 1);
  CHECK(report.trials[0].records.size() == 20);

  SUBCASE("the learned strategy requires a params file") {
    auto missing = eval_doc;
    missing["params"] = "";
    CHECK_THROWS_AS(hx::cmd_eval(hx::config_from_json(missing)), ConfigError);
  }
  SUBCASE("a fault-injected run stops early") {
    auto faulty = doc;
    faulty["inject_nan_batch"] = 2;
    faulty["params"] = files.dir + "/faulty_params.json";
    const auto stopped = hx::cmd_train(hx::config_from_json(faulty));
    CHECK(stopped.result.status == policy::TrainStatus::EarlyStopped);
    CHECK(stopped.result.log.size() == 2);
    // Params from the last good step are still saved and loadable.
    CHECK_NOTHROW(policy::load_params(files.dir + "/faulty_params.json", 64));
  }
}

TEST_CASE("cmd_sweep walks an axis and isolates failing points") {
  const auto files = small_corpus();
  auto doc = base_config(files);
  doc["seeds"] = {1};
  doc["n_eval_problems"] = 10;

  const auto report = hx::cmd_sweep(hx::config_from_json(doc), hx::SweepAxis::ShotCount,
                                    {1.0, 2.0, 40.0});
  REQUIRE(report.points.size() == 3);
  CHECK(!report.points[0].failed);
  CHECK(!report.points[1].failed);
  CHECK(report.points[2].failed);  // k=40 exceeds the 20-candidate pool
  CHECK(!report.points[2].error.empty());
  CHECK(report.points[0].stats.accuracies.size() == 1);
  CHECK(report.axis == hx::SweepAxis::ShotCount);

  SUBCASE("pool-size sweeps conflict with an explicit pool") {
    auto fixed = doc;
    json pool_ids = json::array();
    for (const auto& p : files.sc.pool) pool_ids.push_back(p.id);
    fixed["pool_ids"] = pool_ids;
    CHECK_THROWS_AS(hx::cmd_sweep(hx::config_from_json(fixed), hx::SweepAxis::PoolSize,
                                  {10.0, 20.0}),
                    ConfigError);
  }
}

TEST_CASE("the candidate axis screens one-shot demos into a fixed pair") {
  const auto files = small_corpus();
  auto doc = base_config(files);
  doc["seeds"] = {1};
  doc["n_eval_problems"] = 12;
  json pool_ids = json::array();
  for (const auto& p : files.sc.pool) pool_ids.push_back(p.id);
  doc["pool_ids"] = pool_ids;

  const auto report = hx::cmd_sweep(hx::config_from_json(doc), hx::SweepAxis::Candidate,
                                    {0.0, 1.0, 2.0, 3.0});
  REQUIRE(report.points.size() == 4);
  for (const auto& point : report.points) CHECK(!point.failed);
  REQUIRE(report.recommended_fixed_indices.size() == 2);
  CHECK(report.recommended_fixed_indices[0] < 4);
  CHECK(report.recommended_fixed_indices[1] < 4);
  CHECK(report.recommended_fixed_indices[0] != report.recommended_fixed_indices[1]);
}

TEST_CASE("sweep axis names round-trip") {
  for (const auto axis : {hx::SweepAxis::TrainSize, hx::SweepAxis::PoolSize,
                          hx::SweepAxis::ShotCount, hx::SweepAxis::Candidate}) {
    CHECK(hx::sweep_axis_from_string(hx::to_string(axis)) == axis);
  }
  CHECK_THROWS_AS(hx::sweep_axis_from_string("latitude"), ConfigError);
}

TEST_CASE("cmd_stats summarizes a dataset file") {
  const auto stats = hx::cmd_stats(testfx::data_path("mini_dataset.json"));
  CHECK(stats.n_problems == 6);
  const json doc = hx::stats_to_json(stats);
  CHECK(doc["n_problems"] == 6);
  CHECK(doc["n_free_text"] == 4);
  CHECK(doc.contains("avg_solution_words"));

  CHECK_THROWS_AS(hx::cmd_stats("/nonexistent.json"), IoError);
}
