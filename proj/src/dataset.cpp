#include "rexfuse/dataset.hpp"

#include <istream>
#include <numeric>

#include "io_util.hpp"
#include "json.hpp"
#include "rexfuse/error.hpp"
#include "rexfuse/random.hpp"

namespace rexfuse {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

Interaction parse_fields(const std::vector<std::string_view>& fields, bool timestamp_required,
                         const std::string& source, std::size_t line_no) {
  Interaction rec;
  rec.user = std::string(fields[0]);
  rec.item = std::string(fields[1]);
  if (rec.user.empty() || rec.item.empty()) throw ParseError(source, line_no, "empty user or item id");
  auto rating = detail::parse_double(fields[2]);
  if (!rating) throw ParseError(source, line_no, "rating is not a finite number: '" + std::string(fields[2]) + "'");
  rec.rating = *rating;
  if (fields.size() > 3) {
    auto ts = detail::parse_integer(fields[3]);
    if (!ts) throw ParseError(source, line_no, "timestamp is not an integer: '" + std::string(fields[3]) + "'");
    rec.timestamp = *ts;
  } else if (timestamp_required) {
    throw ParseError(source, line_no, "missing timestamp");
  }
  return rec;
}

}  // namespace

InteractionFormat parse_interaction_format(std::string_view name) {
  if (name == "movielens100k") return InteractionFormat::movielens100k;
  if (name == "csv") return InteractionFormat::csv;
  throw Error("unknown interaction format '" + std::string(name) + "' (expected movielens100k or csv)");
}

IdIndex::IdIndex(std::vector<std::string> ids) {
  for (auto& id : ids) {
    if (find(id)) throw Error("duplicate id '" + id + "' in index");
    insert(id);
  }
}

std::size_t IdIndex::insert(const std::string& id) {
  auto [it, inserted] = forward_.try_emplace(id, backward_.size());
  if (inserted) backward_.push_back(id);
  return it->second;
}

std::optional<std::size_t> IdIndex::find(const std::string& id) const {
  auto it = forward_.find(id);
  if (it == forward_.end()) return std::nullopt;
  return it->second;
}

std::string_view ItemTextCorpus::text(std::size_t item) const {
  auto it = texts.find(item);
  return it == texts.end() ? std::string_view{} : std::string_view{it->second};
}

std::vector<Interaction> parse_interactions(std::istream& in, InteractionFormat format,
                                            const std::string& source) {
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;

    if (format == InteractionFormat::movielens100k) {
      auto fields = split(line, '\t');
      if (fields.size() != 4)
        throw ParseError(source, line_no, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
      out.push_back(parse_fields(fields, true, source, line_no));
      continue;
    }

    auto fields = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      bool ok = (fields.size() == 3 || fields.size() == 4) && fields[0] == "user_id" &&
                fields[1] == "item_id" && fields[2] == "rating" &&
                (fields.size() == 3 || fields[3] == "timestamp");
      if (!ok) throw ParseError(source, line_no, "expected header 'user_id,item_id,rating[,timestamp]'");
      continue;
    }
    if (fields.size() != 3 && fields.size() != 4)
      throw ParseError(source, line_no, "expected 3 or 4 comma-separated fields, got " + std::to_string(fields.size()));
    out.push_back(parse_fields(fields, false, source, line_no));
  }
  if (out.empty()) throw Error(source + ": no interactions found (empty file)");
  return out;
}

std::vector<Interaction> load_interactions(const std::filesystem::path& path, InteractionFormat format) {
  auto in = detail::open_input(path);
  return parse_interactions(in, format, path.string());
}

InteractionDataset build_dataset(const std::vector<Interaction>& interactions, std::uint64_t split_seed) {
  const std::size_t n = interactions.size();
  if (n < 3) throw Error("need at least 3 interactions to split, got " + std::to_string(n));

  InteractionDataset ds;
  std::vector<Rating> all;
  all.reserve(n);
  for (const auto& rec : interactions) {
    std::size_t u = ds.users.insert(rec.user);
    std::size_t i = ds.items.insert(rec.item);
    all.push_back({u, i, rec.rating});
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(split_seed, "split"));
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t n_train = n * 70 / 100;
  const std::size_t n_validation = n * 15 / 100;
  ds.train.reserve(n_train);
  ds.validation.reserve(n_validation);
  ds.test.reserve(n - n_train - n_validation);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const Rating& r = all[order[pos]];
    if (pos < n_train)
      ds.train.push_back(r);
    else if (pos < n_train + n_validation)
      ds.validation.push_back(r);
    else
      ds.test.push_back(r);
  }
  return ds;
}

ItemTextCorpus parse_item_text(std::istream& in, const IdIndex& items, const std::string& source) {
  ItemTextCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw ParseError(source, line_no, "malformed JSON object");
    auto id = obj.find("item_id");
    auto text = obj.find("text");
    if (id == obj.end() || !id->is_string() || text == obj.end() || !text->is_string())
      throw ParseError(source, line_no, "expected string fields 'item_id' and 'text'");
    auto index = items.find(id->get<std::string>());
    if (!index) {
      ++corpus.skipped;
      continue;
    }
    corpus.texts[*index] = text->get<std::string>();
  }
  return corpus;
}

ItemTextCorpus load_item_text(const std::filesystem::path& path, const IdIndex& items) {
  auto in = detail::open_input(path);
  return parse_item_text(in, items, path.string());
}

std::vector<std::size_t> item_train_counts(const InteractionDataset& dataset) {
  std::vector<std::size_t> counts(dataset.items.size(), 0);
  for (const auto& r : dataset.train) ++counts[r.item];
  return counts;
}

}  // namespace rexfuse
