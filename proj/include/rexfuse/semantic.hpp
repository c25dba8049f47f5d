#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rexfuse/dataset.hpp"
#include "rexfuse/matrix.hpp"

namespace rexfuse {

/// Per-item semantic vectors, all of length `dim`. Items absent from
/// `vectors` have no content.
struct ItemEmbeddingTable {
  std::size_t dim = 0;
  std::map<std::size_t, std::vector<double>> vectors;
  std::size_t skipped = 0;  ///< input records whose item was not indexed

  /// nullptr when the item has no vector.
  const std::vector<double>* find(std::size_t item) const;

  friend bool operator==(const ItemEmbeddingTable& a, const ItemEmbeddingTable& b) {
    return a.dim == b.dim && a.vectors == b.vectors;
  }
};

/// Linear map W (k x dim) from embedding space into the latent space.
struct Projection {
  Matrix weights;

  std::size_t latent_dim() const noexcept { return weights.rows(); }
  std::size_t embedding_dim() const noexcept { return weights.cols(); }

  friend bool operator==(const Projection&, const Projection&) = default;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing: each token adds +1 or -1 (the sign is the top
/// bit of its FNV-1a hash) to bucket hash % dim, and the result is
/// L2-normalized. Text without tokens maps to the zero vector.
std::vector<double> embed_hashed_bow(std::string_view text, std::size_t dim);

/// W * e. Throws on a dimension mismatch.
std::vector<double> project(const Projection& projection, std::span<const double> embedding);

ItemEmbeddingTable parse_embeddings(std::istream& in, const IdIndex& items,
                                    const std::string& source = "<stream>");
/// JSON-lines `{"item_id": str, "vector": [num, ...]}`. The first record
/// fixes the dimension.
ItemEmbeddingTable load_embeddings_file(const std::filesystem::path& path, const IdIndex& items);

/// Source of item vectors standing in for a language-model encoder.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual ItemEmbeddingTable embed(const IdIndex& items) const = 0;
  /// Short human-readable description stored alongside trained models.
  virtual std::string describe() const = 0;
};

/// Embeds every item that has text in the corpus with embed_hashed_bow.
class HashedBowProvider final : public EmbeddingProvider {
 public:
  HashedBowProvider(const ItemTextCorpus& corpus, std::size_t dim) : corpus_(corpus), dim_(dim) {}
  ItemEmbeddingTable embed(const IdIndex& items) const override;
  std::string describe() const override;

 private:
  const ItemTextCorpus& corpus_;
  std::size_t dim_;
};

/// Precomputed vectors from an external model.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(std::filesystem::path path) : path_(std::move(path)) {}
  ItemEmbeddingTable embed(const IdIndex& items) const override;
  std::string describe() const override;

 private:
  std::filesystem::path path_;
};

}  // namespace rexfuse
