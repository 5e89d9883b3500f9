#ifndef EXSEL_POLICY_HPP
#define EXSEL_POLICY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "exsel/embedding.hpp"
#include "exsel/environment.hpp"
#include "exsel/prompting.hpp"
#include "exsel/rng.hpp"

namespace exsel::policy {

// The only trainable state: a linear map h(x) = W x + b applied to frozen
// embeddings. A candidate is scored against a problem by h(e) . h(p).
struct PolicyParams {
  Eigen::MatrixXd W;  // d_out x d_in
  Eigen::VectorXd b;  // d_out

  std::size_t d_out() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t d_in() const { return static_cast<std::size_t>(W.cols()); }
};

// W ~ N(0, scale^2) entrywise (row-major draw order), b = 0.
PolicyParams init_params(std::size_t d_out, std::size_t d_in, Rng& rng, double scale = 1e-2);

// W x + b. Throws DimensionError when x does not match W's columns.
Eigen::VectorXd project(const PolicyParams& params, const Eigen::VectorXd& x);

// Numerically stable softmax: max score subtracted before exponentiation, so
// adding any constant to all scores leaves the result unchanged.
Eigen::VectorXd softmax(const Eigen::VectorXd& scores);

// Selection probabilities of every candidate for one problem.
struct SelectionDistribution {
  std::vector<std::string> candidate_ids;  // optional labels, may be empty
  Eigen::VectorXd scores;                  // h(e_j) . h(p)
  Eigen::VectorXd probs;                   // softmax(scores)
};

// Scores each candidate embedding against the problem embedding and applies
// softmax. Requires at least one candidate; throws ValidationError on
// non-finite embeddings and DimensionError on width mismatches.
SelectionDistribution policy_distribution(const PolicyParams& params,
                                          const Eigen::VectorXd& problem_emb,
                                          const std::vector<Eigen::VectorXd>& candidate_embs);

// k distinct candidate indices, drawn sequentially without replacement with
// renormalization over the remaining candidates. Deterministic given the rng
// state. Throws ConfigError when k exceeds the candidate count.
std::vector<std::size_t> sample_selection(const SelectionDistribution& dist, std::size_t k,
                                          Rng& rng);

// Joint log-probability of the selection under the independent form:
// sum of ln probs[i] over the selected indices. Always <= 0.
double log_prob(const SelectionDistribution& dist, const std::vector<std::size_t>& indices);

struct Gradients {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
};

// Analytic gradient of the policy-gradient loss term
//     l = -reward * sum_k ln pi(i_k)
// with respect to W and b, for one problem and its sampled selection.
// Score derivatives: ds_j/dW = h(p) e_j^T + h(e_j) p^T, ds_j/db = h(e_j)+h(p);
// d ln pi_k/dtheta = ds_k/dtheta - sum_j pi_j ds_j/dtheta.
Gradients reinforce_gradient(const PolicyParams& params, const Eigen::VectorXd& problem_emb,
                             const std::vector<Eigen::VectorXd>& candidate_embs,
                             const std::vector<std::size_t>& selected, double reward);

// First/second-moment accumulators for Adam.
struct AdamState {
  Eigen::MatrixXd mW, vW;
  Eigen::VectorXd mb, vb;
  std::int64_t step = 0;
};

AdamState init_adam(std::size_t d_out, std::size_t d_in);

// One Adam update with bias correction. Throws ValidationError on non-finite
// gradients and DimensionError on shape mismatches.
void adam_step(PolicyParams& params, const Gradients& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

struct TrainConfig {
  std::size_t k = 2;                  // examples selected per prompt
  std::size_t pool_size = 20;         // candidate pool drawn by the harness
  std::size_t n_train_problems = 160;
  std::size_t epochs = 30;
  std::size_t batch_size = 20;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double init_scale = 1e-2;
  std::uint64_t seed = 0;
  prompt::PromptFormat format;        // defaults to TQ(C)->SA
};

enum class TrainStatus { Completed, EarlyStopped, Aborted };

struct BatchLog {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 1-based within the epoch
  double loss = 0.0;      // summed over the batch
  double mean_reward = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<BatchLog> log;
  TrainStatus status = TrainStatus::Completed;
  std::string error;  // set when status == Aborted
};

// Policy-gradient training loop: per epoch, walk the training problems in
// fixed batches; per problem, sample a selection, query the backend with the
// assembled prompt, score the generation for a +/-1 reward, and accumulate
// loss and gradients; per batch, take one Adam step. Training stops early
// (keeping the params from the last good step) when a batch loss or gradient
// goes non-finite, and aborts with partial progress when the backend fails
// persistently. Uses the first n_train_problems of `train_problems`; the
// projection is square (d = provider dimension). `debug_loss_hook` is a fault
// -injection seam for tests: it may rewrite each batch loss before the
// finiteness check.
TrainResult train(const embed::EmbeddingProvider& provider,
                  const std::vector<corpus::Problem>& train_problems,
                  const std::vector<corpus::Problem>& candidate_pool,
                  env::CompletionBackend& backend, const TrainConfig& config,
                  std::function<double(double, std::size_t)> debug_loss_hook = {});

// JSON parameter container: magic header, version, shapes, row-major W, b.
// Round-trips doubles exactly. load_params throws FormatError on a wrong
// magic/version, ValidationError on inconsistent shapes, and DimensionError
// when expect_d_in is given and does not match.
void save_params(const PolicyParams& params, const std::string& path);
PolicyParams load_params(const std::string& path,
                         std::optional<std::size_t> expect_d_in = std::nullopt);

}  // namespace exsel::policy

#endif  // EXSEL_POLICY_HPP
