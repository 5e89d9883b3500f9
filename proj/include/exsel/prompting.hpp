#ifndef EXSEL_PROMPTING_HPP
#define EXSEL_PROMPTING_HPP

#include <string>
#include <string_view>
#include <vector>

#include "exsel/corpus.hpp"

namespace exsel::prompt {

enum class OutputStyle { AnswerOnly, SolutionThenAnswer };

// Which blocks an example shows and how its answer section reads. The named
// forms follow the "TQ(C)->SA" convention: T table, Q question, (C) options
// when the problem is multi-choice, -> A bare answer, -> SA worked solution
// then answer.
struct PromptFormat {
  bool table = true;
  bool question = true;
  bool options = true;
  OutputStyle output = OutputStyle::SolutionThenAnswer;
  bool zero_shot_cot = false;  // append "Let's think step by step." to the stub

  bool operator==(const PromptFormat&) const = default;
};

// Accepts "TQ(C)->A", "TQ(C)->SA", "TQ->A", "T->A", "Q->A", "T(C)->A",
// "Q(C)->A". Throws ConfigError on anything else.
PromptFormat parse_format(std::string_view name);
std::string format_name(const PromptFormat& format);

// A fully assembled prompt, carrying the ids that built it so downstream
// consumers (deterministic mock, reports) can see past the flat text.
struct Prompt {
  std::string text;
  std::vector<std::string> demo_ids;
  std::string test_id;
  PromptFormat format;
};

// One example as prompt text: its blocks in fixed order (table, question,
// options), then the answer cue. With reveal_answer the cue line carries the
// solution (per the output style) and "The answer is {answer}."; without it
// the example ends at "Answer:". The gold answer never appears unless
// revealed.
std::string render_example(const corpus::Problem& p, const PromptFormat& format,
                           bool reveal_answer);

// Demos (revealed) then the test problem (not revealed), separated by blank
// lines. Throws ValidationError when a demo id repeats or equals the test id.
Prompt build_prompt(const std::vector<corpus::Problem>& demos,
                    const corpus::Problem& test, const PromptFormat& format);

}  // namespace exsel::prompt

#endif  // EXSEL_PROMPTING_HPP
