// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Each criterion carries a wall-clock budget that is part of
// the check.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "exsel/corpus.hpp"
#include "exsel/environment.hpp"
#include "exsel/evaluation.hpp"
#include "exsel/harness.hpp"
#include "exsel/policy.hpp"
#include "exsel/prompting.hpp"
#include "exsel/rng.hpp"
#include "fixtures.hpp"

using namespace exsel;
using json = nlohmann::ordered_json;

namespace {

struct Outcome {
  bool pass = true;
  bool skipped = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string format_detail(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

// --- 1. analytic policy gradient vs central finite differences ------------

Outcome check_gradient_finite_differences() {
  Rng rng(derive_seed(2024, "acceptance-grad"));
  const double step = 1e-5;
  double max_rel_err = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t d_in = 3 + rng.below(6);   // 3..8
    const std::size_t d_out = 2 + rng.below(7);  // 2..8
    const std::size_t pool = 2 + rng.below(9);   // 2..10
    const std::size_t k = 1 + rng.below(2);      // 1..2
    const double reward = (instance % 2 == 0) ? 1.0 : -1.0;

    auto params = policy::init_params(d_out, d_in, rng, 0.5);
    const auto draw_vec = [&](std::size_t d) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(d));
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal() / std::sqrt(double(d));
      return v;
    };
    const Eigen::VectorXd p = draw_vec(d_in);
    std::vector<Eigen::VectorXd> cands;
    for (std::size_t j = 0; j < pool; ++j) cands.push_back(draw_vec(d_in));

    const auto dist = policy::policy_distribution(params, p, cands);
    const auto selected =
        policy::sample_selection(dist, std::min(k, pool), rng);
    const auto grads = policy::reinforce_gradient(params, p, cands, selected, reward);

    const auto loss = [&](const policy::PolicyParams& q) {
      return -reward * policy::log_prob(policy::policy_distribution(q, p, cands), selected);
    };
    const auto rel_err = [&](double analytic, double fd) {
      const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-5});
      return std::abs(analytic - fd) / denom;
    };

    for (Eigen::Index r = 0; r < params.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < params.W.cols(); ++c) {
        auto plus = params, minus = params;
        plus.W(r, c) += step;
        minus.W(r, c) -= step;
        const double fd = (loss(plus) - loss(minus)) / (2 * step);
        max_rel_err = std::max(max_rel_err, rel_err(grads.dW(r, c), fd));
      }
    }
    for (Eigen::Index r = 0; r < params.b.size(); ++r) {
      auto plus = params, minus = params;
      plus.b[r] += step;
      minus.b[r] -= step;
      const double fd = (loss(plus) - loss(minus)) / (2 * step);
      max_rel_err = std::max(max_rel_err, rel_err(grads.db[r], fd));
    }
  }
  Outcome out;
  out.pass = max_rel_err < 1e-4;
  out.detail = format_detail("100 instances, max elementwise rel err %.2e (< 1e-4)", max_rel_err);
  return out;
}

// --- 2. softmax invariants ------------------------------------------------

Outcome check_softmax_invariants() {
  Rng rng(derive_seed(2024, "acceptance-softmax"));
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int instance = 0; instance < 1000; ++instance) {
    const std::size_t n = 1 + rng.below(64);
    // Large centers catch naive exp overflow; spreads stay small enough that
    // every true probability is representable as a positive double (the
    // smallest positive double bounds gaps at roughly 745).
    const double center = (rng.uniform() * 2.0 - 1.0) * 1000.0;
    const double scales[] = {1e-3, 1.0, 10.0, 50.0};
    const double scale = scales[rng.below(4)];
    Eigen::VectorXd scores(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < scores.size(); ++i) scores[i] = center + rng.normal() * scale;

    const Eigen::VectorXd probs = policy::softmax(scores);
    worst_sum = std::max(worst_sum, std::abs(probs.sum() - 1.0));
    if (probs.minCoeff() <= 0.0) {
      return {false, false, "a probability is not strictly positive"};
    }
    const Eigen::VectorXd shifted =
        policy::softmax(scores + Eigen::VectorXd::Constant(scores.size(), 1e3));
    worst_shift = std::max(worst_shift, (shifted - probs).cwiseAbs().maxCoeff());

    // Integer scores survive the +1e3 shift exactly, so there the invariance
    // must be bitwise.
    Eigen::VectorXd ints(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < ints.size(); ++i) ints[i] = double(rng.below(17)) - 8.0;
    const Eigen::VectorXd a = policy::softmax(ints);
    const Eigen::VectorXd b =
        policy::softmax(ints + Eigen::VectorXd::Constant(ints.size(), 1e3));
    if ((a - b).norm() != 0.0) {
      return {false, false, "integer-score shift is not bitwise invariant"};
    }
  }
  Outcome out;
  out.pass = worst_sum <= 1e-9 && worst_shift <= 1e-9;
  out.detail = format_detail("1000 instances, |sum-1| max %.2e, shift drift max %.2e", worst_sum,
                             worst_shift);
  return out;
}

// --- 3. zero-mean sampled gradient under constant reward ------------------

Outcome check_gradient_unbiasedness() {
  // Single-draw selections follow the softmax distribution exactly, so with a
  // constant reward the sampled gradient has expectation zero; multi-draw
  // selections renormalize after each draw, which the summed-log estimator
  // does not model, so the zero-mean property is specific to k=1 draws.
  Rng rng(derive_seed(2024, "acceptance-unbiased"));
  const std::size_t d_in = 4, d_out = 3, pool = 6;
  auto params = policy::init_params(d_out, d_in, rng, 0.5);
  const auto draw_vec = [&](std::size_t d) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal() / std::sqrt(double(d));
    return v;
  };
  const Eigen::VectorXd p = draw_vec(d_in);
  std::vector<Eigen::VectorXd> cands;
  for (std::size_t j = 0; j < pool; ++j) cands.push_back(draw_vec(d_in));
  const auto dist = policy::policy_distribution(params, p, cands);

  const std::size_t n_samples = 50000;
  const std::size_t dims = d_out * d_in + d_out;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims));
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims));
  Eigen::VectorXd flat(static_cast<Eigen::Index>(dims));
  for (std::size_t t = 0; t < n_samples; ++t) {
    const auto selected = policy::sample_selection(dist, 1, rng);
    const auto grads = policy::reinforce_gradient(params, p, cands, selected, 1.0);
    flat << Eigen::Map<const Eigen::VectorXd>(grads.dW.data(), grads.dW.size()), grads.db;
    sum += flat;
    sum_sq += flat.cwiseProduct(flat);
  }
  const double n = double(n_samples);
  const Eigen::VectorXd mean = sum / n;
  const Eigen::VectorXd var =
      (sum_sq - n * mean.cwiseProduct(mean)).cwiseMax(0.0) / (n - 1.0);
  const double se = std::sqrt(var.sum() / n);
  Outcome out;
  out.pass = se > 0.0 && mean.norm() < 5.0 * se;
  out.detail = format_detail("50000 samples, |mean| %.3e vs 5 x se %.3e", mean.norm(), 5.0 * se);
  return out;
}

// --- 4. learned selection beats random on the planted-skill mock ----------

struct MockRun {
  std::string dir, dataset, skills;
  testfx::SkillCorpus sc;
};

MockRun write_mock(std::size_t per_skill, std::size_t n_train, std::size_t n_heldout,
                   std::uint64_t seed) {
  MockRun run;
  run.dir = testfx::temp_dir();
  run.dataset = run.dir + "/dataset.json";
  run.skills = run.dir + "/skills.json";
  run.sc = testfx::make_skill_corpus(per_skill, n_train, n_heldout, seed);
  testfx::write_corpus_files(run.sc, run.dataset, run.skills);
  return run;
}

json mock_config(const MockRun& run, std::size_t n_eval) {
  json doc;
  doc["dataset"] = run.dataset;
  doc["split"] = "test";
  doc["strategy"] = "random";
  doc["n_eval_problems"] = n_eval;
  doc["backend"] = "mock";
  doc["mock_skills"] = run.skills;
  json pool_ids = json::array();
  for (const auto& p : run.sc.pool) pool_ids.push_back(p.id);
  doc["pool_ids"] = pool_ids;
  return doc;
}

Outcome check_mock_learning() {
  const auto run = write_mock(5, 200, 200, 7);
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4};

  auto random_doc = mock_config(run, 200);
  random_doc["seeds"] = seeds;
  const auto random_report = harness::cmd_eval(harness::config_from_json(random_doc));

  std::vector<double> trained_acc;
  for (const auto seed : seeds) {
    auto train_doc = mock_config(run, 200);
    train_doc["seeds"] = {seed};
    train_doc["params"] = run.dir + "/params_" + std::to_string(seed) + ".json";
    const auto outcome = harness::cmd_train(harness::config_from_json(train_doc));
    if (outcome.result.status != policy::TrainStatus::Completed) {
      return {false, false, "training did not complete for seed " + std::to_string(seed)};
    }
    auto eval_doc = train_doc;
    eval_doc["strategy"] = "learned_policy";
    const auto report = harness::cmd_eval(harness::config_from_json(eval_doc));
    trained_acc.push_back(report.stats.accuracies.at(0));
  }
  const auto trained = eval::summarize_trials(trained_acc);

  Outcome out;
  out.pass = trained.mean >= random_report.stats.mean + 10.0 &&
             trained.stddev <= random_report.stats.stddev;
  out.detail = format_detail("trained %.2f%% vs random %.2f%%", trained.mean,
                             random_report.stats.mean) +
               format_detail(", std %.2f vs %.2f (4 seeds)", trained.stddev,
                             random_report.stats.stddev);
  return out;
}

// --- 5. random two-shot accuracy matches the closed form ------------------

Outcome check_random_closed_form() {
  // With m matching candidates in a pool of n, a uniform unordered pair hits
  // at least one match with probability 1 - C(n-m,2)/C(n,2); n=20, m=5 gives
  // 1 - 105/190 = 44.7368%.
  const auto run = write_mock(5, 8, 200, 11);
  const auto spec = env::MockSpec::from_problems(run.sc.all(), run.sc.skills);
  prompt::PromptFormat format;  // table+question+options, solution then answer

  Rng rng(derive_seed(2024, "acceptance-random"));
  const std::size_t n_trials = 10000;
  std::size_t n_correct = 0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const auto& test = run.sc.heldout[t % run.sc.heldout.size()];
    const auto picks = rng.sample_indices(run.sc.pool.size(), 2);
    const std::vector<corpus::Problem> demos = {run.sc.pool[picks[0]],
                                                run.sc.pool[picks[1]]};
    const auto prompt = prompt::build_prompt(demos, test, format);
    const auto generation = env::mock_complete(spec, prompt.demo_ids, prompt.test_id);
    if (eval::eval_answer(generation, test).correct) ++n_correct;
  }
  const double accuracy = 100.0 * double(n_correct) / double(n_trials);
  const double expected = 100.0 * (1.0 - 105.0 / 190.0);
  Outcome out;
  out.pass = std::abs(accuracy - expected) <= 2.0;
  out.detail = format_detail("measured %.2f%% vs expected %.2f%% (within 2 points)", accuracy,
                             expected);
  return out;
}

// --- 6. answer evaluation fixtures ----------------------------------------

Outcome check_evaluation_fixtures() {
  const auto problems = corpus::load_dataset(testfx::data_path("mini_dataset.json"));
  const corpus::Problem* paystub = nullptr;
  const corpus::Problem* phone = nullptr;
  for (const auto& p : problems) {
    if (p.id == "paystub") paystub = &p;
    if (p.id == "phone") phone = &p;
  }
  if (!paystub || !phone) return {false, false, "fixture problems missing"};

  const auto extracted = eval::extract_answer(
      "Dhruba earned $620.00 before taxes. Taxes were $167.04. So Dhruba made "
      "$620.00 - $167.04 = $452.96 after taxes. The answer is 452.96.",
      *paystub);
  if (extracted != "452.96") return {false, false, "extraction gave '" + extracted + "'"};

  const auto mc = eval::eval_answer("The answer is buying a used phone.", *phone);
  if (!mc.correct) return {false, false, "option match missed the gold option"};

  const auto thousands = eval::normalize_number("1,207");
  if (!thousands || thousands->to_string() != "1207.00") {
    return {false, false, "'1,207' did not normalize to 1207.00"};
  }
  const auto fraction = eval::normalize_number("68/217");
  if (!fraction || fraction->to_string() != "0.31") {
    return {false, false, "'68/217' did not normalize to 0.31"};
  }

  const auto stats = eval::summarize_trials({59.85, 63.52, 65.39});
  if (std::abs(stats.mean - 62.92) > 0.01 || std::abs(stats.stddev - 2.30) > 0.01) {
    return {false, false,
            format_detail("aggregation gave %.4f +/- %.4f", stats.mean, stats.stddev)};
  }
  return {true, false, "extraction, option match, normalization, aggregation all exact"};
}

// --- 7. fixed manual selection has zero variance --------------------------

Outcome check_fixed_manual_zero_variance() {
  const auto run = write_mock(5, 8, 60, 23);
  auto doc = mock_config(run, 60);
  doc["strategy"] = "fixed_manual";
  doc["fixed_indices"] = {0, 1};
  doc["seeds"] = {1, 2, 3};
  const auto report = harness::cmd_eval(harness::config_from_json(doc));
  Outcome out;
  out.pass = report.stats.stddev == 0.0 && report.stats.accuracies.size() == 3;
  out.detail = format_detail("3 seeds, std %.10f (must be exactly 0)", report.stats.stddev);
  return out;
}

// --- 8. dataset statistics vs published counts (optional) -----------------

std::string real_dataset_path() {
  if (const char* env = std::getenv("EXSEL_TABMWP_PATH"); env && *env) return env;
  const std::string repo_copy =
      std::string(EXSEL_TEST_DATA_DIR) + "/../../data/tabmwp/problems.json";
  if (FILE* f = std::fopen(repo_copy.c_str(), "rb")) {
    std::fclose(f);
    return repo_copy;
  }
  return "";
}

Outcome check_real_dataset_stats() {
  const auto path = real_dataset_path();
  if (path.empty()) {
    return {true, true, "no dataset file (set EXSEL_TABMWP_PATH or add data/tabmwp/problems.json)"};
  }
  const auto stats = harness::cmd_stats(path);
  std::vector<std::string> wrong;
  const auto expect_count = [&](const char* name, std::size_t got, std::size_t want) {
    if (got != want) {
      wrong.push_back(std::string(name) + " " + std::to_string(got) + " != " +
                      std::to_string(want));
    }
  };
  expect_count("problems", stats.n_problems, 38431);
  expect_count("free-text", stats.n_free_text, 28719);
  expect_count("multi-choice", stats.n_multi_choice, 9712);
  expect_count("distinct tables", stats.n_distinct_tables, 37644);
  expect_count("titled tables", stats.n_tables_with_title, 23259);
  const auto expect_avg = [&](const char* name, double got, double want) {
    if (std::abs(got - want) > 0.5) {
      wrong.push_back(std::string(name) + " " + std::to_string(got) + " not within 0.5 of " +
                      std::to_string(want));
    }
  };
  expect_avg("question words", stats.avg_question_words, 22.1);
  expect_avg("answer words", stats.avg_answer_words, 1.1);
  expect_avg("solution words", stats.avg_solution_words, 49.5);
  if (!wrong.empty()) {
    std::string detail = wrong.front();
    for (std::size_t i = 1; i < wrong.size(); ++i) detail += "; " + wrong[i];
    return {false, false, detail};
  }
  return {true, false, "all published counts exact, word averages within 0.5"};
}

// --- 9. byte-identical reports across repeat runs -------------------------

Outcome check_reproducibility() {
  const auto run = write_mock(5, 40, 100, 31);
  auto doc = mock_config(run, 100);
  doc["seeds"] = {1, 2, 3};
  doc.erase("pool_ids");  // per-seed pool draws are part of what must repeat
  const auto config = harness::config_from_json(doc);
  auto a = harness::cmd_eval(config).to_json();
  auto b = harness::cmd_eval(config).to_json();
  a.erase("wall_clock_seconds");
  b.erase("wall_clock_seconds");
  Outcome out;
  out.pass = a.dump() == b.dump();
  out.detail = out.pass ? "two runs identical byte for byte (wall clock excluded)"
                        : "reports differ";
  return out;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"policy gradient matches central finite differences", 10, check_gradient_finite_differences},
      {"softmax sums to one, stays positive, shift-invariant", 5, check_softmax_invariants},
      {"sampled gradient has zero mean under constant reward", 60, check_gradient_unbiasedness},
      {"learned selection beats random on the skill mock", 300, check_mock_learning},
      {"random two-shot accuracy matches the closed form", 30, check_random_closed_form},
      {"answer extraction, normalization, and aggregation fixtures", 1, check_evaluation_fixtures},
      {"fixed manual selection is zero-variance across seeds", 30, check_fixed_manual_zero_variance},
      {"dataset statistics match published counts", 600, check_real_dataset_stats},
      {"repeat runs produce byte-identical reports", 30, check_reproducibility},
  };

  int n_failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = elapsed < c.budget_seconds;
    const bool ok = out.pass && (out.skipped || in_budget);
    if (!ok) ++n_failed;
    const char* verdict = out.skipped ? "SKIP" : (ok ? "PASS" : "FAIL");
    std::printf("%s  %zu. %s  —  %s  [%.2fs%s]\n", verdict, i + 1, c.name.c_str(),
                out.detail.c_str(), elapsed,
                out.skipped ? "" : (in_budget ? "" : " OVER BUDGET"));
  }
  if (n_failed == 0) {
    std::printf("all criteria satisfied\n");
  } else {
    std::printf("%d criteria failed\n", n_failed);
  }
  return n_failed == 0 ? 0 : 1;
}
