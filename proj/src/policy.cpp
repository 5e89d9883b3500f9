#include "exsel/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "exsel/errors.hpp"
#include "exsel/evaluation.hpp"

namespace exsel::policy {

namespace {

using json = nlohmann::ordered_json;

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw ValidationError(std::string("policy: non-finite ") + what);
  }
}

// Gradient math shared by the public reinforce_gradient and the cached path
// inside train(). With pi the softmax over scores and S the selected set:
//   dl/dW = -r [ h(p) (sum_S e - K e_bar)^T + (sum_S h(e) - K h_bar) p^T ]
//   dl/db = -r [ sum_S h(e) - K h_bar ]
// where e_bar = sum_j pi_j e_j and h_bar = sum_j pi_j h(e_j); the h(p) terms
// of db cancel exactly.
Gradients gradient_from_parts(const Eigen::VectorXd& problem_emb, const Eigen::VectorXd& h_p,
                              const std::vector<Eigen::VectorXd>& candidate_embs,
                              const std::vector<Eigen::VectorXd>& h_cands,
                              const Eigen::VectorXd& probs,
                              const std::vector<std::size_t>& selected, double reward) {
  const auto d_in = problem_emb.size();
  const auto d_out = h_p.size();
  const double k = static_cast<double>(selected.size());

  Eigen::VectorXd e_bar = Eigen::VectorXd::Zero(d_in);
  Eigen::VectorXd h_bar = Eigen::VectorXd::Zero(d_out);
  for (std::size_t j = 0; j < candidate_embs.size(); ++j) {
    e_bar += probs[static_cast<Eigen::Index>(j)] * candidate_embs[j];
    h_bar += probs[static_cast<Eigen::Index>(j)] * h_cands[j];
  }

  Eigen::VectorXd e_sel = Eigen::VectorXd::Zero(d_in);
  Eigen::VectorXd h_sel = Eigen::VectorXd::Zero(d_out);
  for (std::size_t idx : selected) {
    e_sel += candidate_embs[idx];
    h_sel += h_cands[idx];
  }

  Gradients g;
  g.dW = -reward * (h_p * (e_sel - k * e_bar).transpose() +
                    (h_sel - k * h_bar) * problem_emb.transpose());
  g.db = -reward * (h_sel - k * h_bar);
  return g;
}

void check_selected(const std::vector<std::size_t>& selected, std::size_t n) {
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i] >= n) {
      throw ConfigError("policy: selected index " + std::to_string(selected[i]) +
                        " out of range for " + std::to_string(n) + " candidates");
    }
    for (std::size_t j = i + 1; j < selected.size(); ++j) {
      if (selected[i] == selected[j]) {
        throw ConfigError("policy: selected indices repeat index " +
                          std::to_string(selected[i]));
      }
    }
  }
}

}  // namespace

PolicyParams init_params(std::size_t d_out, std::size_t d_in, Rng& rng, double scale) {
  PolicyParams params;
  params.W.resize(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in));
  for (Eigen::Index r = 0; r < params.W.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.W.cols(); ++c) {
      params.W(r, c) = scale * rng.normal();
    }
  }
  params.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_out));
  return params;
}

Eigen::VectorXd project(const PolicyParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.W.cols()) {
    throw DimensionError("project: input has dimension " + std::to_string(x.size()) +
                         ", params expect " + std::to_string(params.W.cols()));
  }
  return params.W * x + params.b;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw ValidationError("softmax: empty score vector");
  const double max_score = scores.maxCoeff();
  Eigen::VectorXd exps = (scores.array() - max_score).exp();
  return exps / exps.sum();
}

SelectionDistribution policy_distribution(const PolicyParams& params,
                                          const Eigen::VectorXd& problem_emb,
                                          const std::vector<Eigen::VectorXd>& candidate_embs) {
  if (candidate_embs.empty()) {
    throw ValidationError("policy_distribution: no candidates");
  }
  check_finite(problem_emb, "problem embedding");

  SelectionDistribution dist;
  const Eigen::VectorXd h_p = project(params, problem_emb);
  dist.scores.resize(static_cast<Eigen::Index>(candidate_embs.size()));
  for (std::size_t j = 0; j < candidate_embs.size(); ++j) {
    check_finite(candidate_embs[j], "candidate embedding");
    dist.scores[static_cast<Eigen::Index>(j)] = project(params, candidate_embs[j]).dot(h_p);
  }
  if (!dist.scores.allFinite()) {
    throw ValidationError("policy_distribution: scores overflowed to non-finite values");
  }
  dist.probs = softmax(dist.scores);
  return dist;
}

std::vector<std::size_t> sample_selection(const SelectionDistribution& dist, std::size_t k,
                                          Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(dist.probs.size());
  if (k > n) {
    throw ConfigError("sample_selection: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(n) + " candidates");
  }
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> selected;
  selected.reserve(k);
  double remaining = 1.0;
  for (std::size_t draw = 0; draw < k; ++draw) {
    const double u = rng.uniform() * remaining;
    double cum = 0.0;
    std::size_t chosen = n;  // sentinel
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      cum += dist.probs[static_cast<Eigen::Index>(j)];
      if (u < cum) {
        chosen = j;
        break;
      }
    }
    if (chosen == n) {
      // Rounding pushed u past the attainable mass; take the last free slot.
      for (std::size_t j = n; j-- > 0;) {
        if (!taken[j]) {
          chosen = j;
          break;
        }
      }
    }
    taken[chosen] = true;
    selected.push_back(chosen);
    remaining -= dist.probs[static_cast<Eigen::Index>(chosen)];
    if (remaining < 0.0) remaining = 0.0;
  }
  return selected;
}

double log_prob(const SelectionDistribution& dist, const std::vector<std::size_t>& indices) {
  check_selected(indices, static_cast<std::size_t>(dist.probs.size()));
  double total = 0.0;
  for (std::size_t idx : indices) {
    total += std::log(dist.probs[static_cast<Eigen::Index>(idx)]);
  }
  return total;
}

Gradients reinforce_gradient(const PolicyParams& params, const Eigen::VectorXd& problem_emb,
                             const std::vector<Eigen::VectorXd>& candidate_embs,
                             const std::vector<std::size_t>& selected, double reward) {
  check_selected(selected, candidate_embs.size());
  const SelectionDistribution dist = policy_distribution(params, problem_emb, candidate_embs);
  const Eigen::VectorXd h_p = project(params, problem_emb);
  std::vector<Eigen::VectorXd> h_cands;
  h_cands.reserve(candidate_embs.size());
  for (const auto& e : candidate_embs) h_cands.push_back(project(params, e));
  return gradient_from_parts(problem_emb, h_p, candidate_embs, h_cands, dist.probs, selected,
                             reward);
}

AdamState init_adam(std::size_t d_out, std::size_t d_in) {
  AdamState state;
  state.mW = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d_out),
                                   static_cast<Eigen::Index>(d_in));
  state.vW = state.mW;
  state.mb = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_out));
  state.vb = state.mb;
  return state;
}

void adam_step(PolicyParams& params, const Gradients& grads, AdamState& state, double lr,
               double beta1, double beta2, double epsilon) {
  if (grads.dW.rows() != params.W.rows() || grads.dW.cols() != params.W.cols() ||
      grads.db.size() != params.b.size()) {
    throw DimensionError("adam_step: gradient shapes do not match the params");
  }
  if (!grads.dW.allFinite() || !grads.db.allFinite()) {
    throw ValidationError("adam_step: non-finite gradients");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  state.mW = beta1 * state.mW + (1.0 - beta1) * grads.dW;
  state.vW = beta2 * state.vW + (1.0 - beta2) * grads.dW.cwiseProduct(grads.dW);
  state.mb = beta1 * state.mb + (1.0 - beta1) * grads.db;
  state.vb = beta2 * state.vb + (1.0 - beta2) * grads.db.cwiseProduct(grads.db);

  params.W -= (lr * (state.mW / bc1).array() /
               ((state.vW / bc2).array().sqrt() + epsilon))
                  .matrix();
  params.b -= (lr * (state.mb / bc1).array() /
               ((state.vb / bc2).array().sqrt() + epsilon))
                  .matrix();
}

TrainResult train(const embed::EmbeddingProvider& provider,
                  const std::vector<corpus::Problem>& train_problems,
                  const std::vector<corpus::Problem>& candidate_pool,
                  env::CompletionBackend& backend, const TrainConfig& config,
                  std::function<double(double, std::size_t)> debug_loss_hook) {
  if (config.k == 0) throw ConfigError("train: k must be >= 1");
  if (config.k > candidate_pool.size()) {
    throw ConfigError("train: k=" + std::to_string(config.k) + " exceeds the pool of " +
                      std::to_string(candidate_pool.size()));
  }
  if (config.batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");

  const std::size_t d = provider.dimension();
  Rng init_rng(derive_seed(config.seed, "policy-init"));
  Rng sample_rng(derive_seed(config.seed, "policy-sample"));

  TrainResult result;
  result.params = init_params(d, d, init_rng, config.init_scale);
  AdamState adam = init_adam(d, d);

  const std::size_t n_train = std::min(config.n_train_problems, train_problems.size());
  std::vector<Eigen::VectorXd> problem_embs;
  problem_embs.reserve(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    problem_embs.push_back(provider.embed_problem(train_problems[i], config.format));
  }
  std::vector<Eigen::VectorXd> cand_embs;
  cand_embs.reserve(candidate_pool.size());
  for (const auto& c : candidate_pool) {
    cand_embs.push_back(provider.embed_problem(c, config.format));
  }

  std::size_t global_batch = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t batch_begin = 0; batch_begin < n_train;
         batch_begin += config.batch_size) {
      const std::size_t batch_end = std::min(batch_begin + config.batch_size, n_train);
      ++global_batch;

      // Candidate projections are fixed within the batch (W only moves at the
      // batch boundary), so compute them once.
      std::vector<Eigen::VectorXd> h_cands;
      h_cands.reserve(cand_embs.size());
      for (const auto& e : cand_embs) h_cands.push_back(project(result.params, e));

      double batch_loss = 0.0;
      double reward_sum = 0.0;
      Gradients grads{Eigen::MatrixXd::Zero(result.params.W.rows(), result.params.W.cols()),
                      Eigen::VectorXd::Zero(result.params.b.size())};

      for (std::size_t i = batch_begin; i < batch_end; ++i) {
        const corpus::Problem& problem = train_problems[i];

        SelectionDistribution dist;
        const Eigen::VectorXd h_p = project(result.params, problem_embs[i]);
        dist.scores.resize(static_cast<Eigen::Index>(h_cands.size()));
        for (std::size_t j = 0; j < h_cands.size(); ++j) {
          dist.scores[static_cast<Eigen::Index>(j)] = h_cands[j].dot(h_p);
        }
        if (!dist.scores.allFinite()) {
          throw ValidationError("train: scores overflowed to non-finite values");
        }
        dist.probs = softmax(dist.scores);

        const auto selected = sample_selection(dist, config.k, sample_rng);
        std::vector<corpus::Problem> demos;
        demos.reserve(selected.size());
        for (std::size_t idx : selected) demos.push_back(candidate_pool[idx]);
        const prompt::Prompt built = prompt::build_prompt(demos, problem, config.format);

        std::string generation;
        try {
          generation = backend.complete(built);
        } catch (const BackendError& e) {
          result.status = TrainStatus::Aborted;
          result.error = "backend failed on problem '" + problem.id + "': " + e.what();
          return result;
        }

        const double reward = eval::eval_answer(generation, problem).reward;
        reward_sum += reward;
        batch_loss += -reward * log_prob(dist, selected);
        const Gradients g = gradient_from_parts(problem_embs[i], h_p, cand_embs, h_cands,
                                                dist.probs, selected, reward);
        grads.dW += g.dW;
        grads.db += g.db;
      }

      if (debug_loss_hook) batch_loss = debug_loss_hook(batch_loss, global_batch);

      const bool finite = std::isfinite(batch_loss) && grads.dW.allFinite() &&
                          grads.db.allFinite();
      BatchLog log_entry;
      log_entry.epoch = epoch;
      log_entry.batch = (batch_begin / config.batch_size) + 1;
      log_entry.loss = batch_loss;
      log_entry.mean_reward =
          reward_sum / static_cast<double>(batch_end - batch_begin);
      result.log.push_back(log_entry);

      if (!finite) {
        result.status = TrainStatus::EarlyStopped;
        return result;  // params still hold the last good step
      }
      adam_step(result.params, grads, adam, config.learning_rate, config.adam_beta1,
                config.adam_beta2, config.adam_epsilon);
    }
  }
  result.status = TrainStatus::Completed;
  return result;
}

void save_params(const PolicyParams& params, const std::string& path) {
  json doc;
  doc["magic"] = "exsel-policy-params";
  doc["version"] = 1;
  doc["d_out"] = params.d_out();
  doc["d_in"] = params.d_in();
  json w = json::array();
  for (Eigen::Index r = 0; r < params.W.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.W.cols(); ++c) {
      w.push_back(params.W(r, c));
    }
  }
  doc["W"] = std::move(w);
  json b = json::array();
  for (Eigen::Index i = 0; i < params.b.size(); ++i) b.push_back(params.b[i]);
  doc["b"] = std::move(b);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write params file: " + path);
  out << doc.dump() << '\n';
}

PolicyParams load_params(const std::string& path, std::optional<std::size_t> expect_d_in) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open params file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object() || !doc.contains("magic") || !doc["magic"].is_string() ||
      doc["magic"].get<std::string>() != "exsel-policy-params") {
    throw FormatError("params file has a wrong magic header: " + path);
  }
  if (!doc.contains("version") || doc["version"].get<int>() != 1) {
    throw FormatError("params file has an unsupported version: " + path);
  }

  const auto d_out = doc["d_out"].get<std::size_t>();
  const auto d_in = doc["d_in"].get<std::size_t>();
  const auto& w = doc["W"];
  const auto& b = doc["b"];
  if (!w.is_array() || w.size() != d_out * d_in || !b.is_array() || b.size() != d_out) {
    throw ValidationError("params file shapes are inconsistent: " + path);
  }
  if (expect_d_in && d_in != *expect_d_in) {
    throw DimensionError("params trained at d_in=" + std::to_string(d_in) +
                         ", provider has d_in=" + std::to_string(*expect_d_in));
  }

  PolicyParams params;
  params.W.resize(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in));
  std::size_t flat = 0;
  for (Eigen::Index r = 0; r < params.W.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.W.cols(); ++c) {
      params.W(r, c) = w[flat++].get<double>();
    }
  }
  params.b.resize(static_cast<Eigen::Index>(d_out));
  for (Eigen::Index i = 0; i < params.b.size(); ++i) params.b[i] = b[i].get<double>();
  return params;
}

}  // namespace exsel::policy
