#include "exsel/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "exsel/errors.hpp"

namespace exsel::eval {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) toks.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return toks;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Tries to read one number token starting at `pos`: optional sign, digits
// with optional well-formed ",ddd" thousands groups, optional ".digits".
// Returns the end position, or pos if no token starts here.
std::size_t scan_number(std::string_view s, std::size_t pos) {
  std::size_t j = pos;
  if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
  const std::size_t digits_begin = j;
  while (j < s.size() && is_digit(s[j])) ++j;
  if (j == digits_begin) return pos;  // sign with no digits, or no digits at all
  // Thousands groups only attach to a 1-3 digit head, and a group must not be
  // followed by a fourth digit ("1,2345" is not a grouped number).
  if (j - digits_begin <= 3) {
    std::size_t k = j;
    while (k + 3 < s.size() && s[k] == ',' && is_digit(s[k + 1]) && is_digit(s[k + 2]) &&
           is_digit(s[k + 3]) && (k + 4 >= s.size() || !is_digit(s[k + 4]))) {
      k += 4;
    }
    if (k > j) j = k;
  }
  if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
    ++j;
    while (j < s.size() && is_digit(s[j])) ++j;
  }
  return j;
}

// Exact decimal parse: sign applied to 100*intpart + rounded fraction.
// `int_digits` has commas already removed. Half-away-from-zero on the third
// fractional digit, done in integer arithmetic so 0.315-style inputs are
// immune to binary-float representation error.
std::optional<std::int64_t> hundredths_from_decimal(bool negative,
                                                    std::string_view int_digits,
                                                    std::string_view frac_digits) {
  if (int_digits.size() > 15) return std::nullopt;  // overflow guard
  std::int64_t units = 0;
  for (char c : int_digits) units = units * 10 + (c - '0');
  std::int64_t cents = units * 100;
  if (!frac_digits.empty()) cents += (frac_digits[0] - '0') * 10;
  if (frac_digits.size() >= 2) cents += frac_digits[1] - '0';
  if (frac_digits.size() >= 3 && frac_digits[2] >= '5') cents += 1;
  return negative ? -cents : cents;
}

struct BestMatch {
  double f1 = -1.0;
  double edit_sim = -1.0;
  std::size_t index = 0;
};

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double token_f1(const std::vector<std::string>& pred, const std::vector<std::string>& opt) {
  if (pred.empty() || opt.empty()) return 0.0;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : opt) ++counts[t];
  std::size_t overlap = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(pred.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(opt.size());
  return 2.0 * p * r / (p + r);
}

std::string answer_type_label(corpus::AnswerType a) {
  switch (a) {
    case corpus::AnswerType::Integer: return "INT";
    case corpus::AnswerType::Decimal: return "DEC";
    case corpus::AnswerType::Extractive: return "EXTR";
    case corpus::AnswerType::Boolean: return "BOOL";
    case corpus::AnswerType::Other: return "OTH";
  }
  return "OTH";
}

}  // namespace

std::string NormalizedAnswer::to_string() const {
  if (kind == Kind::Text) return text;
  const std::int64_t mag = hundredths < 0 ? -hundredths : hundredths;
  std::string out = hundredths < 0 ? "-" : "";
  out += std::to_string(mag / 100);
  const std::int64_t cents = mag % 100;
  out += '.';
  out += static_cast<char>('0' + cents / 10);
  out += static_cast<char>('0' + cents % 10);
  return out;
}

NormalizedAnswer normalized_text(const std::string& text) {
  NormalizedAnswer out;
  out.kind = NormalizedAnswer::Kind::Text;
  out.text = ascii_lower(trim(text));
  return out;
}

std::vector<std::string> find_number_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t end = scan_number(text, i);
    if (end > i) {
      tokens.emplace_back(text.substr(i, end - i));
      i = end;
    } else {
      ++i;
    }
  }
  return tokens;
}

std::optional<NormalizedAnswer> normalize_number(const std::string& text,
                                                 const std::optional<std::string>& unit) {
  std::string s = trim(text);
  if (unit && !unit->empty()) {
    const std::string lower = ascii_lower(s);
    const std::string u = ascii_lower(trim(*unit));
    if (lower.size() > u.size() && lower.ends_with(u) &&
        std::isspace(static_cast<unsigned char>(lower[lower.size() - u.size() - 1]))) {
      s = trim(s.substr(0, s.size() - u.size()));
    }
  }
  if (!s.empty() && s.back() == '%') s = trim(s.substr(0, s.size() - 1));
  std::erase(s, '$');
  s = trim(s);
  if (s.empty()) return std::nullopt;

  bool negative = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }

  // Fraction "a/b": evaluated as a division, rounded like everything else.
  const std::size_t slash = s.find('/', i);
  if (slash != std::string::npos) {
    const std::string num = s.substr(i, slash - i);
    const std::string den = s.substr(slash + 1);
    if (num.empty() || den.empty() || num.size() > 12 || den.size() > 12) return std::nullopt;
    if (!std::all_of(num.begin(), num.end(), is_digit)) return std::nullopt;
    if (!std::all_of(den.begin(), den.end(), is_digit)) return std::nullopt;
    const std::int64_t a = std::strtoll(num.c_str(), nullptr, 10);
    const std::int64_t b = std::strtoll(den.c_str(), nullptr, 10);
    if (b == 0) return std::nullopt;
    const std::int64_t cents = (200 * a + b) / (2 * b);  // floor(100a/b + 1/2)
    NormalizedAnswer out;
    out.kind = NormalizedAnswer::Kind::Number;
    out.hundredths = negative ? -cents : cents;
    return out;
  }

  // Integer part, optionally comma-grouped; commas must be well formed.
  std::string int_digits;
  const std::size_t int_begin = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  int_digits = s.substr(int_begin, i - int_begin);
  if (i < s.size() && s[i] == ',') {
    if (int_digits.empty() || int_digits.size() > 3) return std::nullopt;
    while (i < s.size() && s[i] == ',') {
      if (i + 3 >= s.size()) return std::nullopt;  // fewer than 3 digits after ','
      if (!(is_digit(s[i + 1]) && is_digit(s[i + 2]) && is_digit(s[i + 3]))) return std::nullopt;
      int_digits += s.substr(i + 1, 3);
      i += 4;
    }
    if (i < s.size() && is_digit(s[i])) return std::nullopt;  // group followed by a digit
  }

  std::string frac_digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    const std::size_t frac_begin = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    frac_digits = s.substr(frac_begin, i - frac_begin);
    if (frac_digits.empty()) return std::nullopt;
  }

  if (i != s.size()) return std::nullopt;              // trailing junk
  if (int_digits.empty() && frac_digits.empty()) return std::nullopt;

  const auto cents = hundredths_from_decimal(negative, int_digits, frac_digits);
  if (!cents) return std::nullopt;
  NormalizedAnswer out;
  out.kind = NormalizedAnswer::Kind::Number;
  out.hundredths = *cents;
  return out;
}

std::string extract_answer(const std::string& generation, const corpus::Problem& problem) {
  static const std::string kMarker = "the answer is";
  const std::string lower = ascii_lower(generation);
  const std::size_t pos = lower.rfind(kMarker);
  if (pos != std::string::npos) {
    std::string span = generation.substr(pos + kMarker.size());
    const std::size_t nl = span.find('\n');
    if (nl != std::string::npos) span = span.substr(0, nl);
    // Cut at the sentence-final period: one followed by whitespace or at the
    // very end. Periods inside "452.96" or "A.M" survive.
    for (std::size_t i = 0; i < span.size(); ++i) {
      if (span[i] != '.') continue;
      if (i + 1 == span.size() || std::isspace(static_cast<unsigned char>(span[i + 1]))) {
        span = span.substr(0, i);
        break;
      }
    }
    span = trim(span);
    if (!span.empty()) return span;
  }
  if (problem.question_type == corpus::QuestionType::FreeText) {
    const auto numbers = find_number_tokens(generation);
    return numbers.empty() ? std::string{} : numbers.back();
  }
  return trim(generation);
}

std::size_t match_option(const std::string& pred, const std::vector<std::string>& options) {
  if (options.empty()) throw ValidationError("match_option: empty option list");
  const std::string pred_lower = ascii_lower(trim(pred));
  const auto pred_tokens = whitespace_tokens(pred_lower);
  BestMatch best;
  for (std::size_t idx = 0; idx < options.size(); ++idx) {
    const std::string opt_lower = ascii_lower(trim(options[idx]));
    const double f1 = token_f1(pred_tokens, whitespace_tokens(opt_lower));
    const std::size_t longest = std::max(pred_lower.size(), opt_lower.size());
    const double sim =
        longest == 0 ? 1.0
                     : 1.0 - static_cast<double>(edit_distance(pred_lower, opt_lower)) /
                                 static_cast<double>(longest);
    if (f1 > best.f1 || (f1 == best.f1 && sim > best.edit_sim)) {
      best = {f1, sim, idx};
    }
  }
  return best.index;
}

EvalResult eval_answer(const std::string& generation, const corpus::Problem& problem) {
  EvalResult res;
  res.problem_id = problem.id;
  res.raw_generation = generation;
  res.extracted = extract_answer(generation, problem);

  if (problem.question_type == corpus::QuestionType::MultiChoice) {
    if (!problem.options || problem.options->empty()) {
      throw ValidationError("eval_answer: multi-choice problem '" + problem.id +
                            "' has no options");
    }
    const auto& options = *problem.options;
    const auto gold_it = std::find(options.begin(), options.end(), problem.answer);
    if (gold_it == options.end()) {
      throw ValidationError("eval_answer: answer of '" + problem.id +
                            "' matches no option");
    }
    const std::size_t gold_idx = static_cast<std::size_t>(gold_it - options.begin());
    const std::size_t pred_idx = match_option(res.extracted, options);
    res.prediction = normalized_text(options[pred_idx]);
    res.gold = normalized_text(options[gold_idx]);
    res.correct = pred_idx == gold_idx;
  } else {
    const auto pred = normalize_number(res.extracted, problem.unit);
    const auto gold = normalize_number(problem.answer, problem.unit);
    res.prediction = pred ? *pred : normalized_text(res.extracted);
    res.gold = gold ? *gold : normalized_text(problem.answer);
    res.correct = pred && gold && *pred == *gold;
  }
  res.reward = res.correct ? 1 : -1;
  return res;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double stddev(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

TrialStats summarize_trials(const std::vector<double>& accuracies) {
  TrialStats out;
  out.accuracies = accuracies;
  out.mean = mean(accuracies);
  out.stddev = stddev(accuracies);
  return out;
}

AggregateReport aggregate(const std::vector<EvalResult>& results,
                          const std::vector<corpus::Problem>& problems) {
  std::unordered_map<std::string, const corpus::Problem*> by_id;
  for (const auto& p : problems) by_id[p.id] = &p;

  AggregateReport report;
  for (const auto& r : results) {
    const auto it = by_id.find(r.problem_id);
    if (it == by_id.end()) {
      throw ValidationError("aggregate: no problem with id '" + r.problem_id + "'");
    }
    const corpus::Problem& p = *it->second;
    const auto tally = [&](BucketStat& b) {
      ++b.n;
      if (r.correct) ++b.n_correct;
    };
    tally(report.overall);
    tally(report.by_question_type[p.question_type == corpus::QuestionType::FreeText ? "FREE"
                                                                                     : "MC"]);
    tally(report.by_answer_type[answer_type_label(p.answer_type)]);
    tally(report.by_grade_band[p.grade <= 6 ? "1-6" : "7-8"]);
  }
  return report;
}

}  // namespace exsel::eval
