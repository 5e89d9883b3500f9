// Experiment driver: train / eval / sweep / stats over a tabular
// math-word-problem dataset, against a mock or HTTP completion backend.
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "exsel/errors.hpp"
#include "exsel/harness.hpp"
#include "exsel/policy.hpp"

namespace {

namespace hx = exsel::harness;

struct Cli {
  std::string config_path;
  std::string dataset_path;
  std::string out_path;
  std::string params_path;
  std::string strategy;
  std::vector<std::uint64_t> seeds;
  std::size_t n_eval = 0;
  std::string axis = "shot_count";
  std::vector<double> values;
  long long inject_nan_batch = -1;
};

void add_common(CLI::App* sub, Cli& cli) {
  sub->add_option("--config", cli.config_path, "experiment config (JSON)")->required();
  sub->add_option("--dataset", cli.dataset_path, "override the dataset path");
  sub->add_option("--out", cli.out_path, "override the report output path");
  sub->add_option("--params", cli.params_path, "override the policy parameter path");
  sub->add_option("--seeds", cli.seeds, "override the trial seeds")->delimiter(',');
  sub->add_option("--n-eval", cli.n_eval, "override the eval-set size");
  sub->add_option("--strategy", cli.strategy, "override the selection strategy");
}

hx::ExperimentConfig load_with_overrides(const CLI::App* sub, const Cli& cli) {
  hx::ExperimentConfig config = hx::load_config(cli.config_path);
  if (!cli.dataset_path.empty()) config.dataset_path = cli.dataset_path;
  if (!cli.out_path.empty()) config.out_path = cli.out_path;
  if (!cli.params_path.empty()) config.params_path = cli.params_path;
  if (!cli.strategy.empty()) config.strategy = exsel::strat::kind_from_string(cli.strategy);
  if (!cli.seeds.empty()) config.seeds = cli.seeds;
  if (sub->count("--n-eval") > 0) config.n_eval_problems = cli.n_eval;
  if (cli.inject_nan_batch >= 0) {
    config.inject_nan_batch = static_cast<std::size_t>(cli.inject_nan_batch);
  }
  return config;
}

int run(const CLI::App& app, const Cli& cli) {
  if (const auto* sub = app.get_subcommand("stats"); sub->parsed()) {
    const auto stats = hx::cmd_stats(cli.dataset_path);
    std::cout << hx::stats_to_json(stats).dump(2) << "\n";
    return 0;
  }
  if (const auto* sub = app.get_subcommand("eval"); sub->parsed()) {
    const auto report = hx::cmd_eval(load_with_overrides(sub, cli));
    std::cout << report.to_json().dump(2) << "\n";
    if (report.incomplete) {
      std::cerr << "warning: more than 1% of completion queries failed; "
                   "the report is marked incomplete\n";
    }
    return 0;
  }
  if (const auto* sub = app.get_subcommand("train"); sub->parsed()) {
    const auto outcome = hx::cmd_train(load_with_overrides(sub, cli));
    std::cout << outcome.to_json().dump(2) << "\n";
    if (outcome.result.status == exsel::policy::TrainStatus::Aborted) {
      std::cerr << "error: training aborted: " << outcome.result.error << "\n";
      return 3;
    }
    if (outcome.result.status == exsel::policy::TrainStatus::EarlyStopped) {
      std::cerr << "warning: training stopped early on a non-finite loss; "
                   "saved params are from the last good step\n";
      return 4;
    }
    return 0;
  }
  const auto* sub = app.get_subcommand("sweep");
  const auto report = hx::cmd_sweep(load_with_overrides(sub, cli),
                                    hx::sweep_axis_from_string(cli.axis), cli.values);
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot example-selection experiments for tabular math word problems"};
  app.require_subcommand(1);
  Cli cli;

  auto* stats = app.add_subcommand("stats", "Summarize a dataset file");
  stats->add_option("--dataset", cli.dataset_path, "dataset (JSON)")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a selection strategy");
  add_common(eval, cli);

  auto* train = app.add_subcommand("train", "Train a selection policy");
  add_common(train, cli);
  train->add_option("--inject-nan-batch", cli.inject_nan_batch)->group("");

  auto* sweep = app.add_subcommand("sweep", "Re-run an experiment along one axis");
  add_common(sweep, cli);
  sweep->add_option("--axis", cli.axis,
                    "train_size | pool_size | shot_count | candidate");
  sweep->add_option("--values", cli.values, "axis values")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    return run(app, cli);
  } catch (const exsel::BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const exsel::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const exsel::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    // ConfigError, ValidationError, FormatError, DimensionError, and anything
    // else unusable about the request.
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
