#include "exsel/environment.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "exsel/errors.hpp"
#include "exsel/evaluation.hpp"

namespace exsel::env {

namespace {

using json = nlohmann::ordered_json;

const std::string& lookup(const std::unordered_map<std::string, std::string>& map,
                          const std::string& id, const char* what) {
  const auto it = map.find(id);
  if (it == map.end()) {
    throw ValidationError(std::string("mock: no ") + what + " for problem id '" + id + "'");
  }
  return it->second;
}

// Releases an in-flight slot even when the request throws.
struct SlotGuard {
  std::mutex& mutex;
  std::condition_variable& cv;
  int& count;
  ~SlotGuard() {
    {
      std::lock_guard<std::mutex> lock(mutex);
      --count;
    }
    cv.notify_one();
  }
};

}  // namespace

MockSpec MockSpec::from_problems(const std::vector<corpus::Problem>& problems,
                                 const std::unordered_map<std::string, std::string>& skills) {
  MockSpec spec;
  for (const auto& p : problems) {
    const auto it = skills.find(p.id);
    if (it == skills.end()) {
      throw ValidationError("mock: no skill tag for problem id '" + p.id + "'");
    }
    spec.skill_of[p.id] = it->second;
    spec.answer_of[p.id] = p.answer;

    std::string wrong;
    if (p.question_type == corpus::QuestionType::MultiChoice) {
      for (const auto& option : *p.options) {
        if (option != p.answer) {
          wrong = option;
          break;
        }
      }
    } else {
      auto gold = eval::normalize_number(p.answer, p.unit);
      if (!gold) {
        throw ValidationError("mock: free-text answer of '" + p.id + "' is not numeric");
      }
      gold->hundredths += 100;  // gold + 1
      wrong = gold->to_string();
    }
    if (wrong.empty() || wrong == p.answer) {
      throw ValidationError("mock: could not derive a wrong answer for '" + p.id + "'");
    }
    spec.wrong_answer_of[p.id] = wrong;
  }
  return spec;
}

std::string mock_complete(const MockSpec& spec, const std::vector<std::string>& demo_ids,
                          const std::string& test_id) {
  const std::string& test_skill = lookup(spec.skill_of, test_id, "skill tag");
  bool has_matching_demo = false;
  for (const auto& demo : demo_ids) {
    if (lookup(spec.skill_of, demo, "skill tag") == test_skill) {
      has_matching_demo = true;
      break;
    }
  }
  const auto& answers = has_matching_demo ? spec.answer_of : spec.wrong_answer_of;
  return "The answer is " + lookup(answers, test_id, "answer") + ".";
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("http backend: base_url is empty");
  if (config_.max_attempts < 1) throw ConfigError("http backend: max_attempts must be >= 1");
  if (config_.max_in_flight < 1) throw ConfigError("http backend: max_in_flight must be >= 1");
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key) api_key_ = key;
}

std::string HttpBackend::complete(const CompletionRequest& request) {
  if (api_key_.empty()) {
    throw AuthError("http backend: environment variable " + config_.api_key_env +
                    " is not set");
  }

  {
    std::unique_lock<std::mutex> lock(mutex_);
    slot_free_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  SlotGuard guard{mutex_, slot_free_, in_flight_};

  json body;
  body["model"] = request.model;
  body["prompt"] = request.prompt;
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  body["top_p"] = request.top_p;
  body["frequency_penalty"] = request.frequency_penalty;
  body["presence_penalty"] = request.presence_penalty;
  if (request.stop) body["stop"] = *request.stop;
  const std::string payload = body.dump();

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(std::chrono::milliseconds(
      static_cast<int>(config_.timeout_seconds * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(
      static_cast<int>(config_.timeout_seconds * 1000)));
  client.set_write_timeout(std::chrono::milliseconds(
      static_cast<int>(config_.timeout_seconds * 1000)));
  const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

  std::string last_failure;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double seconds =
          config_.backoff_initial_seconds * static_cast<double>(1 << (attempt - 2));
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }

    auto result = client.Post(config_.path, headers, payload, "application/json");
    if (!result) {
      last_failure = httplib::to_string(result.error());
      continue;  // connect/timeout failure: transient
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw AuthError("http backend: endpoint rejected credentials (HTTP " +
                      std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500) {
      last_failure = "HTTP " + std::to_string(status);
      continue;  // rate limit / server error: transient
    }
    if (status != 200) {
      throw BackendError("http backend: HTTP " + std::to_string(status) + ": " +
                         result->body);
    }

    json reply;
    try {
      reply = json::parse(result->body);
    } catch (const json::parse_error& e) {
      throw MalformedResponseError(std::string("http backend: response is not JSON: ") +
                                   e.what());
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() || !reply["choices"][0].contains("text") ||
        !reply["choices"][0]["text"].is_string()) {
      throw MalformedResponseError("http backend: response has no choices[0].text");
    }
    return reply["choices"][0]["text"].get<std::string>();
  }
  throw TransportError("http backend: giving up after " +
                       std::to_string(config_.max_attempts) + " attempts; last failure: " +
                       last_failure);
}

std::string HttpBackend::complete(const prompt::Prompt& prompt) {
  CompletionRequest request;
  request.prompt = prompt.text;
  request.model = config_.model;
  return complete(request);
}

}  // namespace exsel::env
