#include "exsel/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "exsel/errors.hpp"

namespace exsel::prompt {

namespace {

std::string trim_right(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

}  // namespace

PromptFormat parse_format(std::string_view name) {
  PromptFormat f;
  const std::size_t arrow = name.find("->");
  if (arrow == std::string_view::npos) {
    throw ConfigError("unknown prompt format '" + std::string(name) + "'");
  }
  const std::string_view inputs = name.substr(0, arrow);
  const std::string_view outputs = name.substr(arrow + 2);

  f.table = f.question = f.options = false;
  std::size_t i = 0;
  while (i < inputs.size()) {
    if (inputs[i] == 'T') {
      f.table = true;
      ++i;
    } else if (inputs[i] == 'Q') {
      f.question = true;
      ++i;
    } else if (inputs.substr(i, 3) == "(C)") {
      f.options = true;
      i += 3;
    } else {
      throw ConfigError("unknown prompt format '" + std::string(name) + "'");
    }
  }
  if (!f.table && !f.question) {
    throw ConfigError("prompt format '" + std::string(name) + "' shows neither table nor question");
  }

  if (outputs == "A") {
    f.output = OutputStyle::AnswerOnly;
  } else if (outputs == "SA") {
    f.output = OutputStyle::SolutionThenAnswer;
  } else {
    throw ConfigError("unknown prompt format '" + std::string(name) + "'");
  }
  return f;
}

std::string format_name(const PromptFormat& format) {
  std::string name;
  if (format.table) name += 'T';
  if (format.question) name += 'Q';
  if (format.options) name += "(C)";
  name += "->";
  name += format.output == OutputStyle::AnswerOnly ? "A" : "SA";
  return name;
}

std::string render_example(const corpus::Problem& p, const PromptFormat& format,
                           bool reveal_answer) {
  std::vector<std::string> blocks;
  if (format.table) {
    blocks.push_back("Table:\n" + corpus::serialize_table(p.table));
  }
  if (format.question) {
    std::string q = "Question: " + p.question;
    if (p.unit) q += " (Unit: " + *p.unit + ")";
    blocks.push_back(std::move(q));
  }
  if (format.options && p.question_type == corpus::QuestionType::MultiChoice) {
    std::string line = "Options:";
    char letter = 'A';
    for (const auto& option : *p.options) {
      line += " (";
      line += letter++;
      line += ") ";
      line += option;
    }
    blocks.push_back(std::move(line));
  }

  std::string answer_line = "Answer:";
  if (reveal_answer) {
    if (format.output == OutputStyle::SolutionThenAnswer && p.solution) {
      answer_line += ' ';
      answer_line += trim_right(*p.solution);
    }
    answer_line += " The answer is " + p.answer + ".";
  }
  blocks.push_back(std::move(answer_line));

  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) out += '\n';
    out += blocks[i];
  }
  return out;
}

Prompt build_prompt(const std::vector<corpus::Problem>& demos, const corpus::Problem& test,
                    const PromptFormat& format) {
  std::unordered_set<std::string> seen;
  for (const auto& d : demos) {
    if (!seen.insert(d.id).second) {
      throw ValidationError("build_prompt: duplicate demo id '" + d.id + "'");
    }
    if (d.id == test.id) {
      throw ValidationError("build_prompt: demo '" + d.id + "' is the test problem");
    }
  }

  Prompt prompt;
  prompt.format = format;
  prompt.test_id = test.id;
  for (const auto& d : demos) {
    prompt.demo_ids.push_back(d.id);
    prompt.text += render_example(d, format, /*reveal_answer=*/true);
    prompt.text += "\n\n";
  }
  prompt.text += render_example(test, format, /*reveal_answer=*/false);
  if (format.zero_shot_cot && demos.empty()) prompt.text += "\nLet's think step by step.";
  return prompt;
}

}  // namespace exsel::prompt
