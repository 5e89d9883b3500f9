#include "exsel/strategies.hpp"

#include <algorithm>
#include <cctype>

#include "exsel/errors.hpp"

namespace exsel::strat {

namespace {

std::size_t word_count(std::string_view s) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

// Top-k pool indices by descending key, pool order on ties.
std::vector<std::size_t> top_k_by(const std::vector<double>& keys, std::size_t k) {
  std::vector<std::size_t> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  order.resize(k);
  return order;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = a.norm() * b.norm();
  return denom == 0.0 ? 0.0 : a.dot(b) / denom;
}

// Uniform choice among `matching`, padded with uniform draws from the rest of
// the pool when there are fewer than k matches. Matches come first.
std::vector<std::size_t> match_then_pad(const std::vector<std::size_t>& matching,
                                        std::size_t pool_size, std::size_t k, Rng& rng) {
  std::vector<std::size_t> selected;
  if (matching.size() >= k) {
    for (std::size_t pick : rng.sample_indices(matching.size(), k)) {
      selected.push_back(matching[pick]);
    }
    return selected;
  }
  selected = matching;
  std::vector<bool> used(pool_size, false);
  for (std::size_t idx : matching) used[idx] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < pool_size; ++i) {
    if (!used[i]) rest.push_back(i);
  }
  for (std::size_t pick : rng.sample_indices(rest.size(), k - matching.size())) {
    selected.push_back(rest[pick]);
  }
  return selected;
}

}  // namespace

Kind kind_from_string(std::string_view name) {
  if (name == "random") return Kind::Random;
  if (name == "fixed_manual") return Kind::FixedManual;
  if (name == "same_question_type") return Kind::SameQuestionType;
  if (name == "same_answer_type") return Kind::SameAnswerType;
  if (name == "same_grade") return Kind::SameGrade;
  if (name == "most_complex_cells") return Kind::MostComplexCells;
  if (name == "most_complex_words") return Kind::MostComplexWords;
  if (name == "nearest_neighbor") return Kind::NearestNeighbor;
  if (name == "learned_policy") return Kind::LearnedPolicy;
  throw ConfigError("unknown selection strategy '" + std::string(name) + "'");
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::Random: return "random";
    case Kind::FixedManual: return "fixed_manual";
    case Kind::SameQuestionType: return "same_question_type";
    case Kind::SameAnswerType: return "same_answer_type";
    case Kind::SameGrade: return "same_grade";
    case Kind::MostComplexCells: return "most_complex_cells";
    case Kind::MostComplexWords: return "most_complex_words";
    case Kind::NearestNeighbor: return "nearest_neighbor";
    case Kind::LearnedPolicy: return "learned_policy";
  }
  return "random";
}

std::vector<std::size_t> select(const SelectionStrategy& strategy, const corpus::Problem& test,
                                const std::vector<corpus::Problem>& pool, std::size_t k,
                                Rng& rng) {
  if (k == 0) throw ConfigError("select: k must be >= 1");
  if (k > pool.size()) {
    throw ConfigError("select: k=" + std::to_string(k) + " exceeds the pool of " +
                      std::to_string(pool.size()));
  }

  switch (strategy.kind) {
    case Kind::Random:
      return rng.sample_indices(pool.size(), k);

    case Kind::FixedManual: {
      if (strategy.fixed_indices.size() != k) {
        throw ConfigError("fixed_manual: configured " +
                          std::to_string(strategy.fixed_indices.size()) +
                          " indices, need exactly " + std::to_string(k));
      }
      for (std::size_t i = 0; i < strategy.fixed_indices.size(); ++i) {
        if (strategy.fixed_indices[i] >= pool.size()) {
          throw ConfigError("fixed_manual: index " +
                            std::to_string(strategy.fixed_indices[i]) +
                            " out of range for a pool of " + std::to_string(pool.size()));
        }
        for (std::size_t j = i + 1; j < strategy.fixed_indices.size(); ++j) {
          if (strategy.fixed_indices[i] == strategy.fixed_indices[j]) {
            throw ConfigError("fixed_manual: indices repeat");
          }
        }
      }
      return strategy.fixed_indices;
    }

    case Kind::SameQuestionType:
    case Kind::SameAnswerType:
    case Kind::SameGrade: {
      std::vector<std::size_t> matching;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& p = pool[i];
        const bool match = strategy.kind == Kind::SameQuestionType
                               ? p.question_type == test.question_type
                               : strategy.kind == Kind::SameAnswerType
                                     ? p.answer_type == test.answer_type
                                     : p.grade == test.grade;
        if (match) matching.push_back(i);
      }
      return match_then_pad(matching, pool.size(), k, rng);
    }

    case Kind::MostComplexCells: {
      std::vector<double> keys(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        keys[i] = static_cast<double>(pool[i].table.n_cells());
      }
      return top_k_by(keys, k);
    }

    case Kind::MostComplexWords: {
      std::vector<double> keys(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        keys[i] = static_cast<double>(word_count(pool[i].question));
      }
      return top_k_by(keys, k);
    }

    case Kind::NearestNeighbor: {
      if (!strategy.provider) throw ConfigError("nearest_neighbor: no embedding provider");
      const Eigen::VectorXd test_emb = strategy.provider->embed_problem(test, strategy.format);
      std::vector<double> keys(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        keys[i] = cosine(test_emb, strategy.provider->embed_problem(pool[i], strategy.format));
      }
      return top_k_by(keys, k);
    }

    case Kind::LearnedPolicy: {
      if (!strategy.provider) throw ConfigError("learned_policy: no embedding provider");
      if (!strategy.params) throw ConfigError("learned_policy: no trained params");
      const Eigen::VectorXd test_emb = strategy.provider->embed_problem(test, strategy.format);
      std::vector<Eigen::VectorXd> cand_embs;
      cand_embs.reserve(pool.size());
      for (const auto& p : pool) {
        cand_embs.push_back(strategy.provider->embed_problem(p, strategy.format));
      }
      const auto dist = policy::policy_distribution(*strategy.params, test_emb, cand_embs);
      std::vector<double> keys(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        keys[i] = dist.probs[static_cast<Eigen::Index>(i)];
      }
      return top_k_by(keys, k);
    }
  }
  throw ConfigError("select: unhandled strategy kind");
}

}  // namespace exsel::strat
