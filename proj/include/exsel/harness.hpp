#ifndef EXSEL_HARNESS_HPP
#define EXSEL_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "exsel/corpus.hpp"
#include "exsel/environment.hpp"
#include "exsel/evaluation.hpp"
#include "exsel/policy.hpp"
#include "exsel/prompting.hpp"
#include "exsel/strategies.hpp"

namespace exsel::harness {

enum class BackendKind { Mock, Http };

struct EmbeddingSpec {
  std::string provider = "hashing";  // "hashing" | "file"
  std::size_t dimension = 768;       // hashing provider width
  std::string path;                  // file provider source
};

// One experiment, fully described. Every random decision of a trial flows
// from its seed through tagged sub-streams (pool draw, train-set draw,
// strategy randomness, policy init/sampling), so a (config, seeds) pair pins
// the whole run.
struct ExperimentConfig {
  std::string dataset_path;
  std::optional<corpus::Split> eval_split = corpus::Split::Test;  // nullopt = all
  prompt::PromptFormat format;  // shared by prompts, the encoder, and training
  strat::Kind strategy = strat::Kind::Random;
  std::vector<std::size_t> fixed_indices;  // fixed_manual
  std::string params_path;                 // learned_policy input / train output
  std::size_t n_eval_problems = 1000;
  std::vector<std::uint64_t> seeds = {1};
  BackendKind backend = BackendKind::Mock;
  std::string mock_skills_path;  // JSON object: problem id -> skill tag
  env::HttpConfig http;
  policy::TrainConfig train;
  EmbeddingSpec embedding;
  // When set, this exact pool (resolved by id, in this order) is used for
  // every trial instead of a per-seed draw from the train split. Required for
  // cross-seed-stable fixed_manual selections.
  std::vector<std::string> pool_ids;
  // When set, the eval set is drawn with this seed; otherwise the first
  // n_eval_problems of the eval split are used. Fixed across trials either way.
  std::optional<std::uint64_t> eval_seed;
  std::string out_path;  // report destination; empty = don't write a file
  // Testing seam: force the loss of this 1-based global batch to NaN.
  std::optional<std::size_t> inject_nan_batch;
};

ExperimentConfig config_from_json(const nlohmann::ordered_json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

// One evaluated problem. Backend failures leave a record too (error set,
// no reward), so every trial always carries n_eval_problems records.
struct ProblemRecord {
  std::string id;
  std::vector<std::string> demo_ids;
  std::string extracted;
  int reward = 0;
  bool correct = false;
  std::string error;
};

struct TrialOutcome {
  std::uint64_t seed = 0;
  std::vector<std::string> pool_ids;
  eval::AggregateReport report;
  std::vector<ProblemRecord> records;
  std::size_t n_failures = 0;
};

struct TrialReport {
  nlohmann::ordered_json config_echo;
  std::vector<TrialOutcome> trials;
  eval::TrialStats stats;  // overall accuracy per trial
  bool incomplete = false;  // >1% of queries failed in some trial
  double wall_clock_seconds = 0.0;

  // Stable field order; wall_clock_seconds is the single volatile field.
  nlohmann::ordered_json to_json() const;
};

struct TrainOutcome {
  nlohmann::ordered_json config_echo;
  policy::TrainResult result;
  std::string params_path;
  double wall_clock_seconds = 0.0;

  nlohmann::ordered_json to_json() const;
};

enum class SweepAxis { TrainSize, PoolSize, ShotCount, Candidate };
SweepAxis sweep_axis_from_string(std::string_view name);
std::string to_string(SweepAxis axis);

struct SweepPoint {
  double value = 0.0;
  bool failed = false;
  std::string error;
  eval::TrialStats stats;
};

struct SweepReport {
  nlohmann::ordered_json config_echo;
  SweepAxis axis = SweepAxis::ShotCount;
  std::vector<SweepPoint> points;
  // Candidate axis only: the two best one-shot candidates, ready to be used
  // as fixed_manual indices.
  std::vector<std::size_t> recommended_fixed_indices;
  double wall_clock_seconds = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Evaluates the configured strategy over the eval set, once per seed, and
// writes the report to config.out_path when set. Per-problem backend failures
// are recorded and counted; a trial with more than 1% failures marks the run
// incomplete. Throws ConfigError/IoError/... on unusable configuration.
TrialReport cmd_eval(const ExperimentConfig& config);

// Trains a selection policy on the train split with the first seed: draws the
// candidate pool, then the training problems from the remainder, runs the
// policy-gradient loop against the backend, and saves params to
// config.params_path when set (plus the training log to config.out_path).
TrainOutcome cmd_train(const ExperimentConfig& config);

// Re-runs the experiment along one axis (training-set size, pool size, shot
// count), training per seed when the strategy is learned_policy. A failing
// point is marked and the sweep continues. The Candidate axis is the manual
// pre-screen instead: each pool candidate is evaluated alone as a one-shot
// demo and the two best become recommended fixed_manual indices (values may
// narrow the candidate range; empty = all).
SweepReport cmd_sweep(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<double>& values);

// Corpus statistics of a dataset file (all splits).
corpus::DatasetStats cmd_stats(const std::string& dataset_path);
nlohmann::ordered_json stats_to_json(const corpus::DatasetStats& stats);

}  // namespace exsel::harness

#endif  // EXSEL_HARNESS_HPP
