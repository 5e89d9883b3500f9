#include "exsel/embedding.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "exsel/errors.hpp"

namespace exsel::embed {

namespace {

using json = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Lowercased alphanumeric word tokens; everything else separates.
std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace

Eigen::VectorXd EmbeddingProvider::embed_problem(const corpus::Problem& p,
                                                 const prompt::PromptFormat& format) const {
  return embed_text(prompt::render_example(p, format, /*reveal_answer=*/false));
}

HashingProvider::HashingProvider(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw DimensionError("HashingProvider: dimension must be >= 1");
}

Eigen::VectorXd HashingProvider::embed_text(const std::string& text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension_));
  const auto tokens = word_tokens(text);
  const auto bump = [&](std::string_view feature) {
    const std::uint64_t h = fnv1a64(feature);
    v[static_cast<Eigen::Index>(h % dimension_)] += 1.0;
  };
  for (const auto& t : tokens) bump(t);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    bump(tokens[i] + ' ' + tokens[i + 1]);
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

FileProvider FileProvider::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object() || !doc.contains("count") || !doc.contains("dimension") ||
      !doc.contains("embeddings") || !doc["embeddings"].is_object()) {
    throw FormatError("embedding file needs {count, dimension, embeddings}: " + path);
  }

  FileProvider provider;
  provider.dimension_ = doc["dimension"].get<std::size_t>();
  if (provider.dimension_ == 0) throw FormatError("embedding file declares dimension 0");
  for (const auto& [id, vec] : doc["embeddings"].items()) {
    if (!vec.is_array() || vec.size() != provider.dimension_) {
      throw ValidationError("embedding for '" + id + "' does not have the declared dimension");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(provider.dimension_));
    for (std::size_t i = 0; i < vec.size(); ++i) {
      v[static_cast<Eigen::Index>(i)] = vec[i].get<double>();
    }
    provider.by_id_.emplace(id, std::move(v));
  }
  if (provider.by_id_.size() != doc["count"].get<std::size_t>()) {
    throw ValidationError("embedding file count does not match its records");
  }
  return provider;
}

Eigen::VectorXd FileProvider::embed_text(const std::string&) const {
  throw ValidationError("FileProvider embeds by problem id, not raw text");
}

Eigen::VectorXd FileProvider::embed_problem(const corpus::Problem& p,
                                            const prompt::PromptFormat&) const {
  const auto it = by_id_.find(p.id);
  if (it == by_id_.end()) {
    throw ValidationError("no embedding for problem id '" + p.id + "'");
  }
  return it->second;
}

void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, Eigen::VectorXd>>& embeddings,
                     std::size_t dimension) {
  json doc;
  doc["count"] = embeddings.size();
  doc["dimension"] = dimension;
  json records = json::object();
  for (const auto& [id, v] : embeddings) {
    if (static_cast<std::size_t>(v.size()) != dimension) {
      throw DimensionError("embedding for '" + id + "' does not match the declared dimension");
    }
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    records[id] = std::move(arr);
  }
  doc["embeddings"] = std::move(records);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace exsel::embed
