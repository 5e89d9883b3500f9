#ifndef EXSEL_STRATEGIES_HPP
#define EXSEL_STRATEGIES_HPP

#include <string>
#include <string_view>
#include <vector>

#include "exsel/corpus.hpp"
#include "exsel/embedding.hpp"
#include "exsel/policy.hpp"
#include "exsel/rng.hpp"

namespace exsel::strat {

enum class Kind {
  Random,            // uniform without replacement
  FixedManual,       // preconfigured pool indices, ignores the test problem
  SameQuestionType,  // uniform among pool members sharing the attribute...
  SameAnswerType,
  SameGrade,
  MostComplexCells,  // top-k by table cell count
  MostComplexWords,  // top-k by question word count
  NearestNeighbor,   // top-k by embedding cosine similarity
  LearnedPolicy,     // greedy top-k by trained policy probability
};

Kind kind_from_string(std::string_view name);
std::string to_string(Kind kind);

// A strategy plus whatever it needs: fixed indices for FixedManual, an
// embedding provider for NearestNeighbor/LearnedPolicy, trained params for
// LearnedPolicy. Unused fields stay empty/null.
struct SelectionStrategy {
  Kind kind = Kind::Random;
  std::vector<std::size_t> fixed_indices;
  const embed::EmbeddingProvider* provider = nullptr;
  const policy::PolicyParams* params = nullptr;
  prompt::PromptFormat format;  // text fed to the provider
};

// k demonstration indices into `pool` for one test problem, in selection
// order. Deterministic given the rng state; rng is only consumed by Random
// and by the attribute strategies (uniform choice among matches, uniform
// padding when matches run short — matches always precede padding). Ties in
// the ranking strategies break toward the lower pool index. Throws
// ConfigError on k > pool size, missing provider/params, or bad fixed
// indices.
std::vector<std::size_t> select(const SelectionStrategy& strategy,
                                const corpus::Problem& test,
                                const std::vector<corpus::Problem>& pool, std::size_t k,
                                Rng& rng);

}  // namespace exsel::strat

#endif  // EXSEL_STRATEGIES_HPP
