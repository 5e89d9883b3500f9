#ifndef EXSEL_TESTS_FIXTURES_HPP
#define EXSEL_TESTS_FIXTURES_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "exsel/corpus.hpp"

namespace exsel::testfx {

// Synthetic corpus with a planted skill structure: every problem carries one
// of four arithmetic skills (sum / difference / largest / smallest), phrased
// with a skill-specific question template over a small two-row table. The
// mock backend answers correctly exactly when a demonstration shares the
// test problem's skill, so selection quality is directly measurable.
struct SkillCorpus {
  std::vector<corpus::Problem> pool;     // candidate pool, train split
  std::vector<corpus::Problem> train;    // policy-training problems, train split
  std::vector<corpus::Problem> heldout;  // evaluation problems, test split
  std::unordered_map<std::string, std::string> skills;  // id -> skill tag

  std::vector<corpus::Problem> all() const;
};

// Sizes are rounded to multiples of the four skills (round-robin), so
// per_skill_pool=5 yields the 20-candidate pool with 5 matches per skill.
SkillCorpus make_skill_corpus(std::size_t per_skill_pool = 5, std::size_t n_train = 200,
                              std::size_t n_heldout = 200, std::uint64_t seed = 7);

// Writes the corpus as a dataset file plus the id->skill map the mock
// backend consumes.
void write_corpus_files(const SkillCorpus& sc, const std::string& dataset_path,
                        const std::string& skills_path);

// Path of a checked-in test data file.
std::string data_path(const std::string& name);

// Fresh private directory for files a test writes.
std::string temp_dir();

}  // namespace exsel::testfx

#endif  // EXSEL_TESTS_FIXTURES_HPP
