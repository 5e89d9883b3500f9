#ifndef EXSEL_CORPUS_HPP
#define EXSEL_CORPUS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exsel/rng.hpp"

namespace exsel::corpus {

// A tabular context: ordered rows of text cells, optionally titled. The first
// row is typically a header but is not treated specially.
struct TableContext {
  std::optional<std::string> title;
  std::vector<std::vector<std::string>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return rows.empty() ? 0 : rows.front().size(); }
  std::size_t n_cells() const { return n_rows() * n_cols(); }

  bool operator==(const TableContext&) const = default;
};

enum class Split { Train, Dev, Test };
enum class QuestionType { FreeText, MultiChoice };
enum class AnswerType { Integer, Decimal, Extractive, Boolean, Other };

// One question grounded in a table, with its gold answer and worked solution.
struct Problem {
  std::string id;
  TableContext table;
  std::string question;
  std::optional<std::vector<std::string>> options;  // multi-choice only
  std::optional<std::string> unit;
  std::string answer;
  std::optional<std::string> solution;
  QuestionType question_type = QuestionType::FreeText;
  AnswerType answer_type = AnswerType::Integer;
  int grade = 1;
  Split split = Split::Train;

  bool operator==(const Problem&) const = default;
};

struct DatasetStats {
  std::size_t n_problems = 0;
  std::size_t n_free_text = 0;
  std::size_t n_multi_choice = 0;
  std::size_t n_distinct_questions = 0;
  std::size_t n_distinct_answers = 0;
  std::size_t n_distinct_solutions = 0;
  std::size_t n_distinct_tables = 0;
  std::size_t n_tables_with_title = 0;  // counted over problems, not distinct tables
  double avg_cells = 0, avg_rows = 0, avg_cols = 0;
  std::size_t max_cells = 0, max_rows = 0, max_cols = 0;
  double avg_question_words = 0, avg_answer_words = 0, avg_solution_words = 0;
  std::size_t max_question_words = 0, max_answer_words = 0, max_solution_words = 0;
};

std::string to_string(Split s);
std::string to_string(QuestionType q);
std::string to_string(AnswerType a);
Split split_from_string(std::string_view s);            // "train" | "dev" | "test"
QuestionType question_type_from_string(std::string_view s);
AnswerType answer_type_from_string(std::string_view s);

// Flat text form of a table: one line per row, cells joined by " | ", with an
// optional "[TITLE]: ..." first line. parse_table inverts it, accepting any
// amount of whitespace around the separators; it throws ParseError on empty
// input and ValidationError on ragged rows.
std::string serialize_table(const TableContext& table);
TableContext parse_table(const std::string& text);

// Throws ValidationError (naming the problem id and field) if any documented
// invariant fails: empty/ragged table, grade outside 1..8, multi-choice answer
// not matching exactly one option, free-text answer that is not numeric, ...
void validate_problem(const Problem& p);

// Loads a JSON dataset file: an object keyed by problem id, each value holding
// "question", "choices", "answer", "unit", "table_title", "table", "solution",
// "ques_type", "ans_type", "grade", "split". Unknown record fields are
// ignored. Problems arrive in file order; pass a split to keep only it.
// Throws IoError (missing file), ParseError (malformed JSON, byte offset),
// or ValidationError (invariant violation, problem id + field named).
std::vector<Problem> load_dataset(const std::string& path,
                                  std::optional<Split> split = std::nullopt);
std::vector<Problem> parse_dataset(const std::string& json_text,
                                   std::optional<Split> split = std::nullopt);

// Corpus-wide counts and length statistics. Throws ValidationError on an
// empty problem list. Lengths are whitespace-token counts; distinctness is
// exact string equality (tables compared in serialized form).
DatasetStats compute_stats(const std::vector<Problem>& problems);

// Answer-free baseline: multi-choice -> a uniformly random option; free-text
// -> a uniformly random number token drawn from the serialized table and the
// question ("0" when neither contains a number).
std::string heuristic_guess(const Problem& p, Rng& rng);

}  // namespace exsel::corpus

#endif  // EXSEL_CORPUS_HPP
