#ifndef EXSEL_EMBEDDING_HPP
#define EXSEL_EMBEDDING_HPP

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "exsel/corpus.hpp"
#include "exsel/prompting.hpp"

namespace exsel::embed {

// Frozen text encoder: a fixed mapping from problems to vectors. The policy
// only ever trains a projection on top of these, so a provider must return
// identical vectors for identical inputs, forever.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dimension() const = 0;

  // Encodes raw text. Providers keyed by id rather than content may not
  // support this and throw.
  virtual Eigen::VectorXd embed_text(const std::string& text) const = 0;

  // Encodes a problem. The default renders it as unanswered prompt text under
  // `format` and encodes that, so the encoder sees what the LLM would see.
  virtual Eigen::VectorXd embed_problem(const corpus::Problem& p,
                                        const prompt::PromptFormat& format) const;
};

// Self-contained encoder: lowercased word unigrams and bigrams, feature-hashed
// into `dimension` buckets, L2-normalized. Deterministic across runs and
// platforms; no model files needed.
class HashingProvider : public EmbeddingProvider {
 public:
  explicit HashingProvider(std::size_t dimension);

  std::size_t dimension() const override { return dimension_; }
  Eigen::VectorXd embed_text(const std::string& text) const override;

 private:
  std::size_t dimension_;
};

// Precomputed embeddings loaded from a JSON file:
//   {"count": N, "dimension": D, "embeddings": {"<id>": [D numbers], ...}}
// Problems are looked up by id; embed_text is unsupported.
class FileProvider : public EmbeddingProvider {
 public:
  static FileProvider load(const std::string& path);

  std::size_t dimension() const override { return dimension_; }
  Eigen::VectorXd embed_text(const std::string& text) const override;
  Eigen::VectorXd embed_problem(const corpus::Problem& p,
                                const prompt::PromptFormat& format) const override;

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> by_id_;
};

// Writes the FileProvider format.
void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, Eigen::VectorXd>>& embeddings,
                     std::size_t dimension);

}  // namespace exsel::embed

#endif  // EXSEL_EMBEDDING_HPP
