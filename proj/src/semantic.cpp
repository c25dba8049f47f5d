#include "rexfuse/semantic.hpp"

#include <cmath>
#include <istream>

#include "io_util.hpp"
#include "json.hpp"
#include "rexfuse/error.hpp"

namespace rexfuse {

namespace {

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char ascii_lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

}  // namespace

const std::vector<double>* ItemEmbeddingTable::find(std::size_t item) const {
  auto it = vectors.find(item);
  return it == vectors.end() ? nullptr : &it->second;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_ascii_alnum(c)) {
      current.push_back(ascii_lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<double> embed_hashed_bow(std::string_view text, std::size_t dim) {
  if (dim == 0) throw Error("embedding dimension must be positive");
  std::vector<double> v(dim, 0.0);
  for (const auto& token : tokenize(text)) {
    const std::uint64_t h = fnv1a64(token);
    v[h % dim] += (h >> 63) == 0 ? 1.0 : -1.0;
  }
  const double norm = std::sqrt(squared_norm(v));
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<double> project(const Projection& projection, std::span<const double> embedding) {
  const Matrix& w = projection.weights;
  if (embedding.size() != w.cols())
    throw Error("projection expects embedding dimension " + std::to_string(w.cols()) + ", got " +
                std::to_string(embedding.size()));
  std::vector<double> out(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) out[r] = dot(w.row(r), embedding);
  return out;
}

ItemEmbeddingTable parse_embeddings(std::istream& in, const IdIndex& items, const std::string& source) {
  ItemEmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw ParseError(source, line_no, "malformed JSON object");
    auto id = obj.find("item_id");
    auto vec = obj.find("vector");
    if (id == obj.end() || !id->is_string() || vec == obj.end() || !vec->is_array())
      throw ParseError(source, line_no, "expected string 'item_id' and array 'vector'");

    std::vector<double> values;
    values.reserve(vec->size());
    for (const auto& x : *vec) {
      if (!x.is_number()) throw ParseError(source, line_no, "vector holds a non-numeric value");
      const double value = x.get<double>();
      if (!std::isfinite(value)) throw ParseError(source, line_no, "vector holds a non-finite value");
      values.push_back(value);
    }
    if (first) {
      if (values.empty()) throw ParseError(source, line_no, "empty vector");
      table.dim = values.size();
      first = false;
    } else if (values.size() != table.dim) {
      throw ParseError(source, line_no, "vector has length " + std::to_string(values.size()) +
                                            ", expected " + std::to_string(table.dim));
    }

    auto index = items.find(id->get<std::string>());
    if (!index) {
      ++table.skipped;
      continue;
    }
    table.vectors[*index] = std::move(values);
  }
  return table;
}

ItemEmbeddingTable load_embeddings_file(const std::filesystem::path& path, const IdIndex& items) {
  auto in = detail::open_input(path);
  return parse_embeddings(in, items, path.string());
}

ItemEmbeddingTable HashedBowProvider::embed(const IdIndex& items) const {
  ItemEmbeddingTable table;
  table.dim = dim_;
  for (const auto& [item, text] : corpus_.texts) {
    if (item >= items.size()) throw Error("corpus references item index " + std::to_string(item) + " outside the index");
    table.vectors[item] = embed_hashed_bow(text, dim_);
  }
  return table;
}

std::string HashedBowProvider::describe() const { return "hashed-bow:fnv1a64:dim=" + std::to_string(dim_); }

ItemEmbeddingTable FileEmbeddingProvider::embed(const IdIndex& items) const {
  return load_embeddings_file(path_, items);
}

std::string FileEmbeddingProvider::describe() const { return "file:" + path_.string(); }

}  // namespace rexfuse
