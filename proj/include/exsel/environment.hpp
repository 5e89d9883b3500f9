#ifndef EXSEL_ENVIRONMENT_HPP
#define EXSEL_ENVIRONMENT_HPP

#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "exsel/corpus.hpp"
#include "exsel/prompting.hpp"

namespace exsel::env {

// One completion call. Decoding defaults are greedy and generous enough for
// worked solutions: temperature 0, nucleus 1.0, 512 tokens, no penalties.
struct CompletionRequest {
  std::string prompt;
  std::string model;
  int max_tokens = 512;
  double temperature = 0.0;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
  std::optional<std::vector<std::string>> stop;
};

// Anything that can answer a prompt: a real completion endpoint or the
// deterministic mock below.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const prompt::Prompt& prompt) = 0;
};

// Deterministic offline stand-in for an LLM with a simple competence model:
// every problem carries a skill tag, and the mock answers correctly exactly
// when some demonstration shares the test problem's skill. It reads the
// prompt's metadata (demo ids + test id), never the text, so experiments are
// exactly reproducible.
struct MockSpec {
  std::unordered_map<std::string, std::string> skill_of;
  std::unordered_map<std::string, std::string> answer_of;        // gold answers
  std::unordered_map<std::string, std::string> wrong_answer_of;  // always != gold

  // Derives answers from the problems: wrong = gold + 1 for free-text
  // (numeric) golds, first non-gold option for multi-choice. Every problem id
  // must have a skill tag.
  static MockSpec from_problems(const std::vector<corpus::Problem>& problems,
                                const std::unordered_map<std::string, std::string>& skills);
};

// "The answer is {gold}." when a demo shares the test's skill, else
// "The answer is {wrong}.". Unknown ids are an error.
std::string mock_complete(const MockSpec& spec, const std::vector<std::string>& demo_ids,
                          const std::string& test_id);

class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(MockSpec spec) : spec_(std::move(spec)) {}
  std::string complete(const prompt::Prompt& prompt) override {
    return mock_complete(spec_, prompt.demo_ids, prompt.test_id);
  }
  const MockSpec& spec() const { return spec_; }

 private:
  MockSpec spec_;
};

struct HttpConfig {
  std::string base_url;                       // e.g. "https://api.openai.com"
  std::string path = "/v1/completions";
  std::string model = "text-davinci-002";
  std::string api_key_env = "OPENAI_API_KEY";  // key is read from this env var
  double timeout_seconds = 60.0;
  int max_attempts = 3;       // exponential backoff between attempts
  int max_in_flight = 4;      // concurrent requests cap
  double backoff_initial_seconds = 0.5;
};

// Client for OpenAI-style completion endpoints. Sends the full decoding
// parameter set on every call, retries transient failures (connect errors,
// timeouts, 429, 5xx) with exponential backoff, and raises typed errors
// otherwise; a transport failure is never silently an empty generation.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(HttpConfig config);

  // Raw completion call; returns the first choice's text.
  std::string complete(const CompletionRequest& request);

  // Builds a CompletionRequest from the prompt text and the configured model.
  std::string complete(const prompt::Prompt& prompt) override;

  const HttpConfig& config() const { return config_; }

 private:
  HttpConfig config_;
  std::string api_key_;
  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
};

}  // namespace exsel::env

#endif  // EXSEL_ENVIRONMENT_HPP
