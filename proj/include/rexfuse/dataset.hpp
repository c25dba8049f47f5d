#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rexfuse {

/// One raw rating record as read from disk.
struct Interaction {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

enum class InteractionFormat {
  movielens100k,  ///< `user<TAB>item<TAB>rating<TAB>timestamp`, no header
  csv,            ///< header `user_id,item_id,rating[,timestamp]`
};

InteractionFormat parse_interaction_format(std::string_view name);

/// Bidirectional map between external string ids and dense indices 0..n-1.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::vector<std::string> ids);

  /// Returns the index of `id`, assigning the next free one if unseen.
  std::size_t insert(const std::string& id);

  std::optional<std::size_t> find(const std::string& id) const;
  const std::string& id(std::size_t index) const { return backward_.at(index); }
  const std::vector<std::string>& ids() const noexcept { return backward_; }
  std::size_t size() const noexcept { return backward_.size(); }

  friend bool operator==(const IdIndex& a, const IdIndex& b) { return a.backward_ == b.backward_; }

 private:
  std::unordered_map<std::string, std::size_t> forward_;
  std::vector<std::string> backward_;
};

/// A rating keyed by dense indices.
struct Rating {
  std::size_t user = 0;
  std::size_t item = 0;
  double value = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
  friend auto operator<=>(const Rating&, const Rating&) = default;
};

struct InteractionDataset {
  IdIndex users;
  IdIndex items;
  std::vector<Rating> train;
  std::vector<Rating> validation;
  std::vector<Rating> test;

  friend bool operator==(const InteractionDataset&, const InteractionDataset&) = default;
};

/// Item descriptions keyed by dense item index. Items without an entry have
/// no text; `text()` returns an empty view for them.
struct ItemTextCorpus {
  std::map<std::size_t, std::string> texts;
  std::size_t skipped = 0;  ///< lines whose item_id is not indexed

  std::string_view text(std::size_t item) const;
};

std::vector<Interaction> parse_interactions(std::istream& in, InteractionFormat format,
                                            const std::string& source = "<stream>");
std::vector<Interaction> load_interactions(const std::filesystem::path& path,
                                           InteractionFormat format);

/// Indexes users and items in first-appearance order and splits the
/// interactions 70/15/15 after a seeded shuffle. Sizes are floor(0.70 N),
/// floor(0.15 N) and the remainder.
InteractionDataset build_dataset(const std::vector<Interaction>& interactions,
                                 std::uint64_t split_seed);

ItemTextCorpus parse_item_text(std::istream& in, const IdIndex& items,
                               const std::string& source = "<stream>");
ItemTextCorpus load_item_text(const std::filesystem::path& path, const IdIndex& items);

/// Number of training interactions per item.
std::vector<std::size_t> item_train_counts(const InteractionDataset& dataset);

}  // namespace rexfuse
