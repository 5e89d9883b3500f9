#ifndef EXSEL_EVALUATION_HPP
#define EXSEL_EVALUATION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exsel/corpus.hpp"

namespace exsel::eval {

// Canonical comparison form of an answer: either a number held as an exact
// count of hundredths (two fixed decimal digits), or lowercased trimmed text.
struct NormalizedAnswer {
  enum class Kind { Number, Text };
  Kind kind = Kind::Text;
  std::int64_t hundredths = 0;  // meaningful when kind == Number
  std::string text;             // meaningful when kind == Text

  // "1207.00", "-3.50", or the text form.
  std::string to_string() const;

  bool operator==(const NormalizedAnswer&) const = default;
};

NormalizedAnswer normalized_text(const std::string& text);

// All substrings of `text` matching the number-token grammar: optional sign,
// digits with optional well-formed thousands commas, optional decimal part.
std::vector<std::string> find_number_tokens(const std::string& text);

// Parses text as a number after stripping whitespace, '$', a trailing '%',
// and a trailing word equal to `unit` (case-insensitive). Accepts signs,
// decimals, comma-grouped thousands, and fractions "a/b" (evaluated as a
// division). The value is rounded half-away-from-zero to two decimal digits
// using exact integer arithmetic. Returns nullopt when the text is not a
// number in this grammar ("9:45", "yes", malformed groupings like "1,20").
std::optional<NormalizedAnswer> normalize_number(
    const std::string& text,
    const std::optional<std::string>& unit = std::nullopt);

// The answer span from the LAST "The answer is X" frame in the generation
// (case-insensitive; X runs to the end of the sentence). Without a frame:
// free-text falls back to the last number token, multi-choice to the whole
// generation trimmed; empty string when nothing is extractable.
std::string extract_answer(const std::string& generation,
                           const corpus::Problem& problem);

// Index of the option most similar to pred: token-level F1 over lowercased
// whitespace tokens, ties broken by character-level normalized edit
// similarity, then by lowest index. An exact (case-insensitive) match always
// wins. Throws ValidationError on an empty option list.
std::size_t match_option(const std::string& pred,
                         const std::vector<std::string>& options);

struct EvalResult {
  std::string problem_id;
  std::string raw_generation;
  std::string extracted;
  NormalizedAnswer prediction;
  NormalizedAnswer gold;
  bool correct = false;
  int reward = -1;  // +1 correct, -1 otherwise
};

// Scores one generation against the gold answer. Free-text compares numeric
// normalizations (failure to normalize is simply incorrect); multi-choice
// maps the extraction onto an option and compares indices.
EvalResult eval_answer(const std::string& generation,
                       const corpus::Problem& problem);

struct BucketStat {
  std::size_t n = 0;
  std::size_t n_correct = 0;
  double accuracy() const {  // percent
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(n_correct) / static_cast<double>(n);
  }
};

// Accuracy per trial with their mean and spread (std dev over the trial
// values, divisor n).
struct TrialStats {
  std::vector<double> accuracies;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AggregateReport {
  BucketStat overall;
  std::map<std::string, BucketStat> by_question_type;  // "FREE", "MC"
  std::map<std::string, BucketStat> by_answer_type;    // "INT", "DEC", "EXTR", "BOOL", "OTH"
  std::map<std::string, BucketStat> by_grade_band;     // "1-6", "7-8"
  std::optional<TrialStats> trials;
};

double mean(const std::vector<double>& xs);
double stddev(const std::vector<double>& xs);  // divisor n
TrialStats summarize_trials(const std::vector<double>& accuracies);

// Buckets results by question type, answer type, and grade band (1-6 / 7-8).
// Results are joined to problems by id; an unknown id is a ValidationError.
AggregateReport aggregate(const std::vector<EvalResult>& results,
                          const std::vector<corpus::Problem>& problems);

}  // namespace exsel::eval

#endif  // EXSEL_EVALUATION_HPP
