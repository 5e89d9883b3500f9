#include "exsel/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "exsel/embedding.hpp"
#include "exsel/errors.hpp"
#include "exsel/rng.hpp"

namespace exsel::harness {

namespace {

using json = nlohmann::ordered_json;

std::string read_text(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + ": " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void expect_keys(const json& doc, const std::vector<std::string>& allowed,
                 const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

std::unique_ptr<embed::EmbeddingProvider> make_provider(const EmbeddingSpec& spec) {
  if (spec.provider == "hashing") {
    return std::make_unique<embed::HashingProvider>(spec.dimension);
  }
  if (spec.provider == "file") {
    if (spec.path.empty()) throw ConfigError("config: embedding.path required for provider 'file'");
    return std::make_unique<embed::FileProvider>(embed::FileProvider::load(spec.path));
  }
  throw ConfigError("config: unknown embedding provider '" + spec.provider + "'");
}

std::unordered_map<std::string, std::string> load_skills(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path, "mock skills file"));
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw ValidationError("mock skills file must map problem id -> tag");
  std::unordered_map<std::string, std::string> skills;
  for (const auto& [id, tag] : doc.items()) {
    if (!tag.is_string()) throw ValidationError("mock skills file must map problem id -> tag");
    skills[id] = tag.get<std::string>();
  }
  return skills;
}

std::unique_ptr<env::CompletionBackend> make_backend(
    const ExperimentConfig& config, const std::vector<corpus::Problem>& all_problems) {
  if (config.backend == BackendKind::Mock) {
    if (config.mock_skills_path.empty()) {
      throw ConfigError("config: mock backend needs mock_skills");
    }
    const auto skills = load_skills(config.mock_skills_path);
    return std::make_unique<env::MockBackend>(
        env::MockSpec::from_problems(all_problems, skills));
  }
  return std::make_unique<env::HttpBackend>(config.http);
}

std::vector<corpus::Problem> of_split(const std::vector<corpus::Problem>& problems,
                                      std::optional<corpus::Split> split) {
  if (!split) return problems;
  std::vector<corpus::Problem> out;
  for (const auto& p : problems) {
    if (p.split == *split) out.push_back(p);
  }
  return out;
}

std::vector<corpus::Problem> choose_eval_set(const ExperimentConfig& config,
                                             const std::vector<corpus::Problem>& source) {
  if (config.n_eval_problems == 0) throw ConfigError("config: n_eval_problems must be >= 1");
  if (config.n_eval_problems > source.size()) {
    throw ConfigError("config: n_eval_problems=" + std::to_string(config.n_eval_problems) +
                      " exceeds the eval split of " + std::to_string(source.size()));
  }
  std::vector<corpus::Problem> chosen;
  if (config.eval_seed) {
    Rng rng(derive_seed(*config.eval_seed, "eval-set"));
    for (std::size_t idx : rng.sample_indices(source.size(), config.n_eval_problems)) {
      chosen.push_back(source[idx]);
    }
  } else {
    chosen.assign(source.begin(),
                  source.begin() + static_cast<std::ptrdiff_t>(config.n_eval_problems));
  }
  return chosen;
}

// The candidate pool for one trial: the configured explicit pool, or a
// per-seed uniform draw from the train split.
std::vector<corpus::Problem> resolve_pool(const ExperimentConfig& config,
                                          const std::vector<corpus::Problem>& all,
                                          const std::vector<corpus::Problem>& train_source,
                                          std::uint64_t seed) {
  std::vector<corpus::Problem> pool;
  if (!config.pool_ids.empty()) {
    std::unordered_map<std::string, const corpus::Problem*> by_id;
    for (const auto& p : all) by_id[p.id] = &p;
    std::unordered_set<std::string> seen;
    for (const auto& id : config.pool_ids) {
      if (!seen.insert(id).second) throw ConfigError("config: pool_ids repeat '" + id + "'");
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ConfigError("config: pool id '" + id + "' not in dataset");
      pool.push_back(*it->second);
    }
    return pool;
  }
  const std::size_t n = config.train.pool_size;
  if (n == 0) throw ConfigError("config: pool_size must be >= 1");
  if (n > train_source.size()) {
    throw ConfigError("config: pool_size=" + std::to_string(n) +
                      " exceeds the train split of " + std::to_string(train_source.size()));
  }
  Rng rng(derive_seed(seed, "pool"));
  for (std::size_t idx : rng.sample_indices(train_source.size(), n)) {
    pool.push_back(train_source[idx]);
  }
  return pool;
}

strat::SelectionStrategy make_strategy(const ExperimentConfig& config,
                                       const embed::EmbeddingProvider* provider,
                                       const policy::PolicyParams* params) {
  strat::SelectionStrategy strategy;
  strategy.kind = config.strategy;
  strategy.fixed_indices = config.fixed_indices;
  strategy.provider = provider;
  strategy.params = params;
  strategy.format = config.format;
  return strategy;
}

TrialOutcome run_eval_trial(const ExperimentConfig& config,
                            const strat::SelectionStrategy& strategy,
                            const std::vector<corpus::Problem>& pool,
                            const std::vector<corpus::Problem>& eval_problems,
                            env::CompletionBackend& backend, std::uint64_t seed) {
  TrialOutcome outcome;
  outcome.seed = seed;
  for (const auto& p : pool) outcome.pool_ids.push_back(p.id);

  Rng strategy_rng(derive_seed(seed, "strategy"));
  std::vector<eval::EvalResult> results;
  results.reserve(eval_problems.size());

  for (const auto& test : eval_problems) {
    ProblemRecord record;
    record.id = test.id;
    try {
      const auto indices = strat::select(strategy, test, pool, config.train.k, strategy_rng);
      std::vector<corpus::Problem> demos;
      demos.reserve(indices.size());
      for (std::size_t idx : indices) demos.push_back(pool[idx]);
      const prompt::Prompt built = prompt::build_prompt(demos, test, config.format);
      record.demo_ids = built.demo_ids;

      const std::string generation = backend.complete(built);
      const eval::EvalResult res = eval::eval_answer(generation, test);
      record.extracted = res.extracted;
      record.reward = res.reward;
      record.correct = res.correct;
      results.push_back(res);
    } catch (const BackendError& e) {
      record.error = e.what();
      ++outcome.n_failures;
    }
    outcome.records.push_back(std::move(record));
  }

  outcome.report = eval::aggregate(results, eval_problems);
  return outcome;
}

json bucket_to_json(const eval::BucketStat& b) {
  json out;
  out["n"] = b.n;
  out["correct"] = b.n_correct;
  out["accuracy"] = b.accuracy();
  return out;
}

json report_to_json(const eval::AggregateReport& report) {
  json out;
  out["overall"] = bucket_to_json(report.overall);
  for (const char* key : {"by_question_type", "by_answer_type", "by_grade_band"}) {
    out[key] = json::object();
  }
  for (const auto& [name, stat] : report.by_question_type) {
    out["by_question_type"][name] = bucket_to_json(stat);
  }
  for (const auto& [name, stat] : report.by_answer_type) {
    out["by_answer_type"][name] = bucket_to_json(stat);
  }
  for (const auto& [name, stat] : report.by_grade_band) {
    out["by_grade_band"][name] = bucket_to_json(stat);
  }
  if (report.trials) {
    json t;
    t["accuracies"] = report.trials->accuracies;
    t["mean"] = report.trials->mean;
    t["std"] = report.trials->stddev;
    out["trials"] = std::move(t);
  }
  return out;
}

json trial_to_json(const TrialOutcome& trial) {
  json out;
  out["seed"] = trial.seed;
  out["pool_ids"] = trial.pool_ids;
  out["accuracy"] = trial.report.overall.accuracy();
  out["n_failures"] = trial.n_failures;
  out["report"] = report_to_json(trial.report);
  json records = json::array();
  for (const auto& r : trial.records) {
    json rec;
    rec["id"] = r.id;
    rec["demo_ids"] = r.demo_ids;
    if (r.error.empty()) {
      rec["extracted"] = r.extracted;
      rec["reward"] = r.reward;
      rec["correct"] = r.correct;
    } else {
      rec["error"] = r.error;
    }
    records.push_back(std::move(rec));
  }
  out["records"] = std::move(records);
  return out;
}

std::string status_name(policy::TrainStatus status) {
  switch (status) {
    case policy::TrainStatus::Completed: return "completed";
    case policy::TrainStatus::EarlyStopped: return "early_stopped";
    case policy::TrainStatus::Aborted: return "aborted";
  }
  return "completed";
}

// Training problems for one trial: a uniform draw from the train split minus
// the pool.
std::vector<corpus::Problem> draw_train_problems(const ExperimentConfig& config,
                                                 const std::vector<corpus::Problem>& train_source,
                                                 const std::vector<corpus::Problem>& pool,
                                                 std::uint64_t seed) {
  std::unordered_set<std::string> in_pool;
  for (const auto& p : pool) in_pool.insert(p.id);
  std::vector<corpus::Problem> remainder;
  for (const auto& p : train_source) {
    if (!in_pool.contains(p.id)) remainder.push_back(p);
  }
  const std::size_t n = config.train.n_train_problems;
  if (n > remainder.size()) {
    throw ConfigError("config: n_train_problems=" + std::to_string(n) +
                      " exceeds the train split minus the pool (" +
                      std::to_string(remainder.size()) + ")");
  }
  std::vector<corpus::Problem> chosen;
  Rng rng(derive_seed(seed, "train-set"));
  for (std::size_t idx : rng.sample_indices(remainder.size(), n)) {
    chosen.push_back(remainder[idx]);
  }
  return chosen;
}

policy::TrainResult train_one(const ExperimentConfig& config,
                              const embed::EmbeddingProvider& provider,
                              const std::vector<corpus::Problem>& all,
                              const std::vector<corpus::Problem>& train_source,
                              const std::vector<corpus::Problem>& pool,
                              env::CompletionBackend& backend, std::uint64_t seed) {
  const auto train_problems = draw_train_problems(config, train_source, pool, seed);
  policy::TrainConfig train_config = config.train;
  train_config.seed = seed;
  train_config.format = config.format;

  std::function<double(double, std::size_t)> hook;
  if (config.inject_nan_batch) {
    const std::size_t target = *config.inject_nan_batch;
    hook = [target](double loss, std::size_t batch) {
      return batch == target ? std::numeric_limits<double>::quiet_NaN() : loss;
    };
  }
  return policy::train(provider, train_problems, pool, backend, train_config, hook);
}

}  // namespace

SweepAxis sweep_axis_from_string(std::string_view name) {
  if (name == "train_size") return SweepAxis::TrainSize;
  if (name == "pool_size") return SweepAxis::PoolSize;
  if (name == "shot_count") return SweepAxis::ShotCount;
  if (name == "candidate") return SweepAxis::Candidate;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::TrainSize: return "train_size";
    case SweepAxis::PoolSize: return "pool_size";
    case SweepAxis::ShotCount: return "shot_count";
    case SweepAxis::Candidate: return "candidate";
  }
  return "shot_count";
}

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: root must be a JSON object");
  expect_keys(doc,
              {"dataset", "split", "format", "zero_shot_cot", "strategy", "fixed_indices",
               "params", "n_eval_problems", "seeds", "backend", "mock_skills", "http",
               "train", "embedding", "pool_ids", "eval_seed", "out", "inject_nan_batch"},
              "the top level");

  ExperimentConfig config;
  if (!doc.contains("dataset") || !doc["dataset"].is_string()) {
    throw ConfigError("config: 'dataset' (string) is required");
  }
  config.dataset_path = doc["dataset"].get<std::string>();

  if (doc.contains("split")) {
    if (doc["split"].is_null()) {
      config.eval_split = std::nullopt;
    } else {
      config.eval_split = corpus::split_from_string(doc["split"].get<std::string>());
    }
  }
  try {
    if (doc.contains("format")) {
      config.format = prompt::parse_format(doc["format"].get<std::string>());
    }
    if (doc.contains("zero_shot_cot")) {
      config.format.zero_shot_cot = doc["zero_shot_cot"].get<bool>();
    }
    if (doc.contains("strategy")) {
      config.strategy = strat::kind_from_string(doc["strategy"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  try {
    if (doc.contains("fixed_indices")) {
      config.fixed_indices = doc["fixed_indices"].get<std::vector<std::size_t>>();
    }
    if (doc.contains("params")) config.params_path = doc["params"].get<std::string>();
    if (doc.contains("n_eval_problems")) {
      config.n_eval_problems = doc["n_eval_problems"].get<std::size_t>();
    }
    if (doc.contains("seeds")) {
      config.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
      if (config.seeds.empty()) throw ConfigError("config: 'seeds' must not be empty");
    }
    if (doc.contains("backend")) {
      const std::string kind = doc["backend"].get<std::string>();
      if (kind == "mock") {
        config.backend = BackendKind::Mock;
      } else if (kind == "http") {
        config.backend = BackendKind::Http;
      } else {
        throw ConfigError("config: backend must be 'mock' or 'http', got '" + kind + "'");
      }
    }
    if (doc.contains("mock_skills")) config.mock_skills_path = doc["mock_skills"].get<std::string>();

    if (doc.contains("http")) {
      const json& h = doc["http"];
      expect_keys(h,
                  {"base_url", "path", "model", "api_key_env", "timeout_seconds",
                   "max_attempts", "max_in_flight", "backoff_initial_seconds"},
                  "'http'");
      if (h.contains("base_url")) config.http.base_url = h["base_url"].get<std::string>();
      if (h.contains("path")) config.http.path = h["path"].get<std::string>();
      if (h.contains("model")) config.http.model = h["model"].get<std::string>();
      if (h.contains("api_key_env")) config.http.api_key_env = h["api_key_env"].get<std::string>();
      if (h.contains("timeout_seconds")) config.http.timeout_seconds = h["timeout_seconds"].get<double>();
      if (h.contains("max_attempts")) config.http.max_attempts = h["max_attempts"].get<int>();
      if (h.contains("max_in_flight")) config.http.max_in_flight = h["max_in_flight"].get<int>();
      if (h.contains("backoff_initial_seconds")) {
        config.http.backoff_initial_seconds = h["backoff_initial_seconds"].get<double>();
      }
    }

    if (doc.contains("train")) {
      const json& t = doc["train"];
      expect_keys(t,
                  {"k", "pool_size", "n_train_problems", "epochs", "batch_size",
                   "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "init_scale"},
                  "'train'");
      if (t.contains("k")) config.train.k = t["k"].get<std::size_t>();
      if (t.contains("pool_size")) config.train.pool_size = t["pool_size"].get<std::size_t>();
      if (t.contains("n_train_problems")) {
        config.train.n_train_problems = t["n_train_problems"].get<std::size_t>();
      }
      if (t.contains("epochs")) config.train.epochs = t["epochs"].get<std::size_t>();
      if (t.contains("batch_size")) config.train.batch_size = t["batch_size"].get<std::size_t>();
      if (t.contains("learning_rate")) config.train.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("adam_beta1")) config.train.adam_beta1 = t["adam_beta1"].get<double>();
      if (t.contains("adam_beta2")) config.train.adam_beta2 = t["adam_beta2"].get<double>();
      if (t.contains("adam_epsilon")) config.train.adam_epsilon = t["adam_epsilon"].get<double>();
      if (t.contains("init_scale")) config.train.init_scale = t["init_scale"].get<double>();
    }

    if (doc.contains("embedding")) {
      const json& e = doc["embedding"];
      expect_keys(e, {"provider", "dimension", "path"}, "'embedding'");
      if (e.contains("provider")) config.embedding.provider = e["provider"].get<std::string>();
      if (e.contains("dimension")) config.embedding.dimension = e["dimension"].get<std::size_t>();
      if (e.contains("path")) config.embedding.path = e["path"].get<std::string>();
    }

    if (doc.contains("pool_ids")) {
      config.pool_ids = doc["pool_ids"].get<std::vector<std::string>>();
    }
    if (doc.contains("eval_seed") && !doc["eval_seed"].is_null()) {
      config.eval_seed = doc["eval_seed"].get<std::uint64_t>();
    }
    if (doc.contains("out")) config.out_path = doc["out"].get<std::string>();
    if (doc.contains("inject_nan_batch") && !doc["inject_nan_batch"].is_null()) {
      config.inject_nan_batch = doc["inject_nan_batch"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (config.train.k == 0) throw ConfigError("config: train.k must be >= 1");
  if (config.train.k > config.train.pool_size && config.pool_ids.empty()) {
    throw ConfigError("config: train.k exceeds train.pool_size");
  }
  if (config.strategy == strat::Kind::FixedManual && config.fixed_indices.empty()) {
    throw ConfigError("config: fixed_manual needs fixed_indices");
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path, "config file"));
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  return config_from_json(doc);
}

json config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["dataset"] = config.dataset_path;
  doc["split"] = config.eval_split ? json(corpus::to_string(*config.eval_split)) : json(nullptr);
  doc["format"] = prompt::format_name(config.format);
  doc["zero_shot_cot"] = config.format.zero_shot_cot;
  doc["strategy"] = strat::to_string(config.strategy);
  doc["fixed_indices"] = config.fixed_indices;
  doc["params"] = config.params_path;
  doc["n_eval_problems"] = config.n_eval_problems;
  doc["seeds"] = config.seeds;
  doc["backend"] = config.backend == BackendKind::Mock ? "mock" : "http";
  doc["mock_skills"] = config.mock_skills_path;
  json http;
  http["base_url"] = config.http.base_url;
  http["path"] = config.http.path;
  http["model"] = config.http.model;
  http["api_key_env"] = config.http.api_key_env;
  http["timeout_seconds"] = config.http.timeout_seconds;
  http["max_attempts"] = config.http.max_attempts;
  http["max_in_flight"] = config.http.max_in_flight;
  http["backoff_initial_seconds"] = config.http.backoff_initial_seconds;
  doc["http"] = std::move(http);
  json train;
  train["k"] = config.train.k;
  train["pool_size"] = config.train.pool_size;
  train["n_train_problems"] = config.train.n_train_problems;
  train["epochs"] = config.train.epochs;
  train["batch_size"] = config.train.batch_size;
  train["learning_rate"] = config.train.learning_rate;
  train["adam_beta1"] = config.train.adam_beta1;
  train["adam_beta2"] = config.train.adam_beta2;
  train["adam_epsilon"] = config.train.adam_epsilon;
  train["init_scale"] = config.train.init_scale;
  doc["train"] = std::move(train);
  json embedding;
  embedding["provider"] = config.embedding.provider;
  embedding["dimension"] = config.embedding.dimension;
  embedding["path"] = config.embedding.path;
  doc["embedding"] = std::move(embedding);
  doc["pool_ids"] = config.pool_ids;
  doc["eval_seed"] = config.eval_seed ? json(*config.eval_seed) : json(nullptr);
  doc["out"] = config.out_path;
  if (config.inject_nan_batch) doc["inject_nan_batch"] = *config.inject_nan_batch;
  return doc;
}

json TrialReport::to_json() const {
  json doc;
  doc["config"] = config_echo;
  json trial_array = json::array();
  for (const auto& t : trials) trial_array.push_back(trial_to_json(t));
  doc["trials"] = std::move(trial_array);
  doc["accuracies"] = stats.accuracies;
  doc["accuracy_mean"] = stats.mean;
  doc["accuracy_std"] = stats.stddev;
  doc["incomplete"] = incomplete;
  doc["wall_clock_seconds"] = wall_clock_seconds;
  return doc;
}

json TrainOutcome::to_json() const {
  json doc;
  doc["config"] = config_echo;
  doc["status"] = status_name(result.status);
  doc["error"] = result.error;
  doc["params_path"] = params_path;
  doc["n_batches"] = result.log.size();
  json log_array = json::array();
  for (const auto& entry : result.log) {
    json e;
    e["epoch"] = entry.epoch;
    e["batch"] = entry.batch;
    e["loss"] = std::isfinite(entry.loss) ? json(entry.loss) : json(nullptr);
    e["mean_reward"] = entry.mean_reward;
    log_array.push_back(std::move(e));
  }
  doc["log"] = std::move(log_array);
  doc["wall_clock_seconds"] = wall_clock_seconds;
  return doc;
}

json SweepReport::to_json() const {
  json doc;
  doc["config"] = config_echo;
  doc["axis"] = harness::to_string(axis);
  json point_array = json::array();
  for (const auto& p : points) {
    json e;
    e["value"] = p.value;
    e["failed"] = p.failed;
    e["error"] = p.error;
    e["accuracies"] = p.stats.accuracies;
    e["mean"] = p.stats.mean;
    e["std"] = p.stats.stddev;
    point_array.push_back(std::move(e));
  }
  doc["points"] = std::move(point_array);
  doc["recommended_fixed_indices"] = recommended_fixed_indices;
  doc["wall_clock_seconds"] = wall_clock_seconds;
  return doc;
}

TrialReport cmd_eval(const ExperimentConfig& config) {
  Timer timer;
  const auto all = corpus::load_dataset(config.dataset_path);
  const auto train_source = of_split(all, corpus::Split::Train);
  const auto eval_problems = choose_eval_set(config, of_split(all, config.eval_split));

  const auto provider = make_provider(config.embedding);
  const auto backend = make_backend(config, all);

  std::optional<policy::PolicyParams> params;
  if (config.strategy == strat::Kind::LearnedPolicy) {
    if (config.params_path.empty()) {
      throw ConfigError("config: learned_policy evaluation needs 'params'");
    }
    params = policy::load_params(config.params_path, provider->dimension());
  }
  const auto strategy =
      make_strategy(config, provider.get(), params ? &*params : nullptr);

  TrialReport report;
  report.config_echo = config_to_json(config);
  std::vector<double> accuracies;
  for (const std::uint64_t seed : config.seeds) {
    const auto pool = resolve_pool(config, all, train_source, seed);
    TrialOutcome outcome =
        run_eval_trial(config, strategy, pool, eval_problems, *backend, seed);
    accuracies.push_back(outcome.report.overall.accuracy());
    if (outcome.n_failures * 100 > eval_problems.size()) report.incomplete = true;
    report.trials.push_back(std::move(outcome));
  }
  report.stats = eval::summarize_trials(accuracies);
  report.wall_clock_seconds = timer.seconds();

  if (!config.out_path.empty()) {
    write_text(config.out_path, report.to_json().dump(2) + "\n");
  }
  return report;
}

TrainOutcome cmd_train(const ExperimentConfig& config) {
  Timer timer;
  const auto all = corpus::load_dataset(config.dataset_path);
  const auto train_source = of_split(all, corpus::Split::Train);
  const auto provider = make_provider(config.embedding);
  const auto backend = make_backend(config, all);

  const std::uint64_t seed = config.seeds.front();
  const auto pool = resolve_pool(config, all, train_source, seed);

  TrainOutcome outcome;
  outcome.config_echo = config_to_json(config);
  outcome.result = train_one(config, *provider, all, train_source, pool, *backend, seed);

  if (!config.params_path.empty()) {
    policy::save_params(outcome.result.params, config.params_path);
    outcome.params_path = config.params_path;
  }
  outcome.wall_clock_seconds = timer.seconds();
  if (!config.out_path.empty()) {
    write_text(config.out_path, outcome.to_json().dump(2) + "\n");
  }
  return outcome;
}

SweepReport cmd_sweep(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<double>& values) {
  Timer timer;
  const auto all = corpus::load_dataset(config.dataset_path);
  const auto train_source = of_split(all, corpus::Split::Train);
  const auto eval_problems = choose_eval_set(config, of_split(all, config.eval_split));
  const auto provider = make_provider(config.embedding);
  const auto backend = make_backend(config, all);

  SweepReport report;
  report.config_echo = config_to_json(config);
  report.axis = axis;

  if (axis == SweepAxis::Candidate) {
    // Manual pre-screen: each candidate alone as a one-shot demo, best two
    // become the recommended fixed selection.
    const std::uint64_t seed = config.seeds.front();
    const auto pool = resolve_pool(config, all, train_source, seed);
    std::vector<double> candidate_values = values;
    if (candidate_values.empty()) {
      for (std::size_t i = 0; i < pool.size(); ++i) {
        candidate_values.push_back(static_cast<double>(i));
      }
    }
    std::vector<std::pair<double, std::size_t>> ranking;  // (-accuracy, index)
    for (const double value : candidate_values) {
      SweepPoint point;
      point.value = value;
      try {
        const auto idx = static_cast<std::size_t>(value);
        if (value < 0 || idx >= pool.size() || static_cast<double>(idx) != value) {
          throw ConfigError("candidate sweep: " + std::to_string(value) +
                            " is not a pool index");
        }
        ExperimentConfig point_config = config;
        point_config.strategy = strat::Kind::FixedManual;
        point_config.fixed_indices = {idx};
        point_config.train.k = 1;
        const auto strategy = make_strategy(point_config, provider.get(), nullptr);
        const auto outcome = run_eval_trial(point_config, strategy, pool, eval_problems,
                                            *backend, seed);
        point.stats = eval::summarize_trials({outcome.report.overall.accuracy()});
        ranking.emplace_back(-outcome.report.overall.accuracy(), idx);
      } catch (const std::exception& e) {
        point.failed = true;
        point.error = e.what();
      }
      report.points.push_back(std::move(point));
    }
    std::sort(ranking.begin(), ranking.end());
    for (std::size_t i = 0; i < ranking.size() && i < 2; ++i) {
      report.recommended_fixed_indices.push_back(ranking[i].second);
    }
    report.wall_clock_seconds = timer.seconds();
    if (!config.out_path.empty()) {
      write_text(config.out_path, report.to_json().dump(2) + "\n");
    }
    return report;
  }

  if (axis == SweepAxis::PoolSize && !config.pool_ids.empty()) {
    throw ConfigError("config: a pool_size sweep conflicts with fixed pool_ids");
  }

  for (const double value : values) {
    SweepPoint point;
    point.value = value;
    try {
      const auto n = static_cast<std::size_t>(value);
      if (value < 1 || static_cast<double>(n) != value) {
        throw ConfigError("sweep: value " + std::to_string(value) +
                          " is not a positive integer");
      }
      ExperimentConfig point_config = config;
      switch (axis) {
        case SweepAxis::TrainSize: point_config.train.n_train_problems = n; break;
        case SweepAxis::PoolSize: point_config.train.pool_size = n; break;
        case SweepAxis::ShotCount: point_config.train.k = n; break;
        case SweepAxis::Candidate: break;  // handled above
      }

      std::vector<double> accuracies;
      for (const std::uint64_t seed : point_config.seeds) {
        const auto pool = resolve_pool(point_config, all, train_source, seed);
        std::optional<policy::PolicyParams> params;
        if (point_config.strategy == strat::Kind::LearnedPolicy) {
          const auto trained = train_one(point_config, *provider, all, train_source, pool,
                                         *backend, seed);
          if (trained.status == policy::TrainStatus::Aborted) {
            throw TransportError("training aborted: " + trained.error);
          }
          params = trained.params;
        }
        const auto strategy =
            make_strategy(point_config, provider.get(), params ? &*params : nullptr);
        const auto outcome = run_eval_trial(point_config, strategy, pool, eval_problems,
                                            *backend, seed);
        accuracies.push_back(outcome.report.overall.accuracy());
      }
      point.stats = eval::summarize_trials(accuracies);
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
    }
    report.points.push_back(std::move(point));
  }

  report.wall_clock_seconds = timer.seconds();
  if (!config.out_path.empty()) {
    write_text(config.out_path, report.to_json().dump(2) + "\n");
  }
  return report;
}

corpus::DatasetStats cmd_stats(const std::string& dataset_path) {
  return corpus::compute_stats(corpus::load_dataset(dataset_path));
}

json stats_to_json(const corpus::DatasetStats& s) {
  json doc;
  doc["n_problems"] = s.n_problems;
  doc["n_free_text"] = s.n_free_text;
  doc["n_multi_choice"] = s.n_multi_choice;
  doc["n_distinct_questions"] = s.n_distinct_questions;
  doc["n_distinct_answers"] = s.n_distinct_answers;
  doc["n_distinct_solutions"] = s.n_distinct_solutions;
  doc["n_distinct_tables"] = s.n_distinct_tables;
  doc["n_tables_with_title"] = s.n_tables_with_title;
  doc["avg_cells"] = s.avg_cells;
  doc["max_cells"] = s.max_cells;
  doc["avg_rows"] = s.avg_rows;
  doc["max_rows"] = s.max_rows;
  doc["avg_cols"] = s.avg_cols;
  doc["max_cols"] = s.max_cols;
  doc["avg_question_words"] = s.avg_question_words;
  doc["max_question_words"] = s.max_question_words;
  doc["avg_answer_words"] = s.avg_answer_words;
  doc["max_answer_words"] = s.max_answer_words;
  doc["avg_solution_words"] = s.avg_solution_words;
  doc["max_solution_words"] = s.max_solution_words;
  return doc;
}

}  // namespace exsel::harness
