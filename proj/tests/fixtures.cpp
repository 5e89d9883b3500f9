#include "fixtures.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "exsel/rng.hpp"

namespace exsel::testfx {

namespace {

using json = nlohmann::ordered_json;

const std::vector<std::string> kNames = {"Ava",  "Ben",  "Cara", "Dev",
                                         "Elle", "Finn", "Gina", "Hugo"};
const std::vector<std::string> kSkills = {"sum", "difference", "largest", "smallest"};

corpus::Problem make_skill_problem(const std::string& id, const std::string& skill,
                                   corpus::Split split, int grade, Rng& rng) {
  const int a = 12 + static_cast<int>(rng.below(30));      // 12..41
  const int b = 3 + static_cast<int>(rng.below(a - 6));    // 3..a-4, so b < a
  const std::size_t i1 = rng.below(kNames.size());
  std::size_t i2 = rng.below(kNames.size() - 1);
  if (i2 >= i1) ++i2;
  const std::string& n1 = kNames[i1];
  const std::string& n2 = kNames[i2];

  corpus::Problem p;
  p.id = id;
  p.table.rows = {{"name", "count"}, {n1, std::to_string(a)}, {n2, std::to_string(b)}};
  p.question_type = corpus::QuestionType::FreeText;
  p.answer_type = corpus::AnswerType::Integer;
  p.grade = grade;
  p.split = split;

  if (skill == "sum") {
    p.question = "What is the combined total of the counts in the table?";
    p.answer = std::to_string(a + b);
    p.solution = "Add the counts: " + std::to_string(a) + " + " + std::to_string(b) +
                 " = " + p.answer + ".";
  } else if (skill == "difference") {
    p.question = "What is the difference between the two counts in the table?";
    p.answer = std::to_string(a - b);
    p.solution = "Subtract the counts: " + std::to_string(a) + " - " + std::to_string(b) +
                 " = " + p.answer + ".";
  } else if (skill == "largest") {
    p.question = "What is the largest count in the table?";
    p.answer = std::to_string(a);
    p.solution = "Compare the counts: " + std::to_string(a) + " > " + std::to_string(b) +
                 ", so the largest is " + p.answer + ".";
  } else {
    p.question = "What is the smallest count in the table?";
    p.answer = std::to_string(b);
    p.solution = "Compare the counts: " + std::to_string(b) + " < " + std::to_string(a) +
                 ", so the smallest is " + p.answer + ".";
  }
  return p;
}

std::vector<corpus::Problem> make_block(const std::string& prefix, std::size_t n,
                                        corpus::Split split, Rng& rng,
                                        std::unordered_map<std::string, std::string>& skills) {
  std::vector<corpus::Problem> problems;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& skill = kSkills[i % kSkills.size()];
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%03zu", prefix.c_str(), i);
    const int grade = 1 + static_cast<int>(i % 8);
    problems.push_back(make_skill_problem(id, skill, split, grade, rng));
    skills[id] = skill;
  }
  return problems;
}

}  // namespace

std::vector<corpus::Problem> SkillCorpus::all() const {
  std::vector<corpus::Problem> out = pool;
  out.insert(out.end(), train.begin(), train.end());
  out.insert(out.end(), heldout.begin(), heldout.end());
  return out;
}

SkillCorpus make_skill_corpus(std::size_t per_skill_pool, std::size_t n_train,
                              std::size_t n_heldout, std::uint64_t seed) {
  SkillCorpus sc;
  Rng pool_rng(derive_seed(seed, "fixture-pool"));
  Rng train_rng(derive_seed(seed, "fixture-train"));
  Rng heldout_rng(derive_seed(seed, "fixture-heldout"));
  sc.pool = make_block("pool", per_skill_pool * kSkills.size(), corpus::Split::Train,
                       pool_rng, sc.skills);
  sc.train = make_block("train", n_train, corpus::Split::Train, train_rng, sc.skills);
  sc.heldout = make_block("heldout", n_heldout, corpus::Split::Test, heldout_rng, sc.skills);
  return sc;
}

void write_corpus_files(const SkillCorpus& sc, const std::string& dataset_path,
                        const std::string& skills_path) {
  json dataset = json::object();
  for (const auto& p : sc.all()) {
    json record;
    record["question"] = p.question;
    record["choices"] = p.options ? json(*p.options) : json(nullptr);
    record["answer"] = p.answer;
    record["unit"] = p.unit ? json(*p.unit) : json(nullptr);
    record["table_title"] = p.table.title ? json(*p.table.title) : json(nullptr);
    record["table"] = corpus::serialize_table(p.table);
    record["solution"] = p.solution ? json(*p.solution) : json(nullptr);
    record["ques_type"] = corpus::to_string(p.question_type);
    record["ans_type"] = corpus::to_string(p.answer_type);
    record["grade"] = p.grade;
    record["split"] = corpus::to_string(p.split);
    dataset[p.id] = std::move(record);
  }
  json skills = json::object();
  for (const auto& p : sc.all()) skills[p.id] = sc.skills.at(p.id);

  std::ofstream d(dataset_path, std::ios::binary);
  if (!d) throw std::runtime_error("cannot write " + dataset_path);
  d << dataset.dump(2) << "\n";
  std::ofstream s(skills_path, std::ios::binary);
  if (!s) throw std::runtime_error("cannot write " + skills_path);
  s << skills.dump(2) << "\n";
}

std::string data_path(const std::string& name) {
  return std::string(EXSEL_TEST_DATA_DIR) + "/" + name;
}

std::string temp_dir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "exsel-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  return tmpl;
}

}  // namespace exsel::testfx
