#include "exsel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "exsel/errors.hpp"
#include "exsel/evaluation.hpp"

namespace exsel::corpus {

namespace {

using json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

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

constexpr std::string_view kTitlePrefix = "[TITLE]:";

[[noreturn]] void field_error(const std::string& id, const std::string& field,
                              const std::string& what) {
  throw ValidationError("problem '" + id + "': field '" + field + "': " + what);
}

std::string require_string(const json& record, const std::string& id, const std::string& field) {
  if (!record.contains(field)) field_error(id, field, "missing");
  if (!record[field].is_string()) field_error(id, field, "expected a string");
  return record[field].get<std::string>();
}

std::optional<std::string> optional_string(const json& record, const std::string& id,
                                           const std::string& field) {
  if (!record.contains(field) || record[field].is_null()) return std::nullopt;
  if (!record[field].is_string()) field_error(id, field, "expected a string or null");
  return record[field].get<std::string>();
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

std::string to_string(QuestionType q) {
  return q == QuestionType::FreeText ? "free_text" : "multi_choice";
}

std::string to_string(AnswerType a) {
  switch (a) {
    case AnswerType::Integer: return "integer_number";
    case AnswerType::Decimal: return "decimal_number";
    case AnswerType::Extractive: return "extractive_text";
    case AnswerType::Boolean: return "boolean_text";
    case AnswerType::Other: return "other_text";
  }
  return "other_text";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

QuestionType question_type_from_string(std::string_view s) {
  if (s == "free_text") return QuestionType::FreeText;
  if (s == "multi_choice") return QuestionType::MultiChoice;
  throw ValidationError("unknown question type '" + std::string(s) + "'");
}

AnswerType answer_type_from_string(std::string_view s) {
  if (s == "integer_number") return AnswerType::Integer;
  if (s == "decimal_number") return AnswerType::Decimal;
  if (s == "extractive_text") return AnswerType::Extractive;
  if (s == "boolean_text") return AnswerType::Boolean;
  if (s == "other_text") return AnswerType::Other;
  throw ValidationError("unknown answer type '" + std::string(s) + "'");
}

std::string serialize_table(const TableContext& table) {
  std::string out;
  if (table.title) {
    out += kTitlePrefix;
    out += ' ';
    out += *table.title;
    out += '\n';
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (r > 0) out += '\n';
    const auto& row = table.rows[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += " | ";
      out += row[c];
    }
  }
  return out;
}

TableContext parse_table(const std::string& text) {
  if (trim(text).empty()) throw ParseError("parse_table: empty table text", 0);

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  // A trailing newline is tolerated; it does not add an empty row.
  if (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();

  TableContext table;
  std::size_t first_row = 0;
  if (!lines.empty() && trim(lines.front()).starts_with(kTitlePrefix)) {
    const std::string head = trim(lines.front());
    table.title = trim(head.substr(kTitlePrefix.size()));
    first_row = 1;
  }
  for (std::size_t i = first_row; i < lines.size(); ++i) {
    std::vector<std::string> cells;
    const std::string& line = lines[i];
    std::size_t pos = 0;
    while (true) {
      const std::size_t bar = line.find('|', pos);
      if (bar == std::string::npos) {
        cells.push_back(trim(line.substr(pos)));
        break;
      }
      cells.push_back(trim(line.substr(pos, bar - pos)));
      pos = bar + 1;
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.rows.empty()) throw ValidationError("parse_table: table has no rows");
  for (std::size_t r = 1; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.rows[0].size()) {
      throw ValidationError("parse_table: row " + std::to_string(r + 1) + " has " +
                            std::to_string(table.rows[r].size()) + " cells, expected " +
                            std::to_string(table.rows[0].size()));
    }
  }
  return table;
}

void validate_problem(const Problem& p) {
  const auto fail = [&](const std::string& field, const std::string& what) {
    field_error(p.id, field, what);
  };
  if (p.id.empty()) throw ValidationError("problem with empty id");
  if (p.question.empty()) fail("question", "empty");
  if (p.answer.empty()) fail("answer", "empty");
  if (p.table.rows.empty()) fail("table", "no rows");
  if (p.table.rows.front().empty()) fail("table", "no columns");
  for (std::size_t r = 1; r < p.table.rows.size(); ++r) {
    if (p.table.rows[r].size() != p.table.rows.front().size()) {
      fail("table", "row " + std::to_string(r + 1) + " has a different cell count");
    }
  }
  if (p.grade < 1 || p.grade > 8) fail("grade", "outside 1..8");

  if (p.question_type == QuestionType::MultiChoice) {
    if (!p.options || p.options->size() < 2) fail("choices", "multi-choice needs >= 2 options");
    const auto n_match = std::count(p.options->begin(), p.options->end(), p.answer);
    if (n_match != 1) {
      fail("answer", "must equal exactly one option, matches " + std::to_string(n_match));
    }
  } else {
    if (p.options) fail("choices", "free-text problems take no options");
    if (!eval::normalize_number(p.answer, p.unit)) {
      fail("answer", "free-text answer is not numeric: '" + p.answer + "'");
    }
  }
}

std::vector<Problem> parse_dataset(const std::string& json_text, std::optional<Split> split) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw ValidationError("dataset root must be a JSON object keyed by id");

  std::vector<Problem> problems;
  for (const auto& [id, record] : doc.items()) {
    if (!record.is_object()) throw ValidationError("problem '" + id + "': record is not an object");
    Problem p;
    p.id = id;
    p.question = require_string(record, id, "question");
    p.answer = require_string(record, id, "answer");
    p.unit = optional_string(record, id, "unit");
    p.solution = optional_string(record, id, "solution");

    if (record.contains("choices") && !record["choices"].is_null()) {
      if (!record["choices"].is_array()) field_error(id, "choices", "expected an array or null");
      std::vector<std::string> options;
      for (const auto& c : record["choices"]) {
        if (!c.is_string()) field_error(id, "choices", "options must be strings");
        options.push_back(c.get<std::string>());
      }
      p.options = std::move(options);
    }

    const std::string table_text = require_string(record, id, "table");
    try {
      p.table = parse_table(table_text);
    } catch (const std::exception& e) {
      field_error(id, "table", e.what());
    }
    if (auto title = optional_string(record, id, "table_title")) p.table.title = title;

    try {
      p.question_type = question_type_from_string(require_string(record, id, "ques_type"));
      p.answer_type = answer_type_from_string(require_string(record, id, "ans_type"));
      p.split = split_from_string(require_string(record, id, "split"));
    } catch (const ValidationError& e) {
      throw ValidationError("problem '" + id + "': " + e.what());
    }

    if (!record.contains("grade") || !record["grade"].is_number_integer()) {
      field_error(id, "grade", "expected an integer");
    }
    p.grade = record["grade"].get<int>();

    validate_problem(p);
    if (!split || p.split == *split) problems.push_back(std::move(p));
  }
  return problems;
}

std::vector<Problem> load_dataset(const std::string& path, std::optional<Split> split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), split);
}

DatasetStats compute_stats(const std::vector<Problem>& problems) {
  if (problems.empty()) throw ValidationError("compute_stats: empty problem list");

  DatasetStats s;
  std::unordered_set<std::string> questions, answers, solutions, tables;
  double cells = 0, rows = 0, cols = 0, q_words = 0, a_words = 0, s_words = 0;
  std::size_t n_solutions = 0;

  for (const auto& p : problems) {
    ++s.n_problems;
    if (p.question_type == QuestionType::FreeText) {
      ++s.n_free_text;
    } else {
      ++s.n_multi_choice;
    }
    questions.insert(p.question);
    answers.insert(p.answer);
    tables.insert(serialize_table(p.table));
    if (p.table.title) ++s.n_tables_with_title;

    const std::size_t nc = p.table.n_cells();
    cells += static_cast<double>(nc);
    rows += static_cast<double>(p.table.n_rows());
    cols += static_cast<double>(p.table.n_cols());
    s.max_cells = std::max(s.max_cells, nc);
    s.max_rows = std::max(s.max_rows, p.table.n_rows());
    s.max_cols = std::max(s.max_cols, p.table.n_cols());

    const std::size_t qw = word_count(p.question);
    const std::size_t aw = word_count(p.answer);
    q_words += static_cast<double>(qw);
    a_words += static_cast<double>(aw);
    s.max_question_words = std::max(s.max_question_words, qw);
    s.max_answer_words = std::max(s.max_answer_words, aw);
    if (p.solution) {
      solutions.insert(*p.solution);
      ++n_solutions;
      const std::size_t sw = word_count(*p.solution);
      s_words += static_cast<double>(sw);
      s.max_solution_words = std::max(s.max_solution_words, sw);
    }
  }

  s.n_distinct_questions = questions.size();
  s.n_distinct_answers = answers.size();
  s.n_distinct_solutions = solutions.size();
  s.n_distinct_tables = tables.size();
  const auto n = static_cast<double>(s.n_problems);
  s.avg_cells = cells / n;
  s.avg_rows = rows / n;
  s.avg_cols = cols / n;
  s.avg_question_words = q_words / n;
  s.avg_answer_words = a_words / n;
  s.avg_solution_words = n_solutions == 0 ? 0.0 : s_words / static_cast<double>(n_solutions);
  return s;
}

std::string heuristic_guess(const Problem& p, Rng& rng) {
  if (p.question_type == QuestionType::MultiChoice) {
    const auto& options = *p.options;
    return options[rng.below(options.size())];
  }
  const auto numbers =
      eval::find_number_tokens(serialize_table(p.table) + "\n" + p.question);
  if (numbers.empty()) return "0";
  return numbers[rng.below(numbers.size())];
}

}  // namespace exsel::corpus
