#include "rexfuse/model_file.hpp"

#include <fstream>
#include <sstream>

#include "io_util.hpp"
#include "json.hpp"
#include "rexfuse/error.hpp"

namespace rexfuse {

using nlohmann::ordered_json;

namespace {

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (double x : m.row(r)) row.push_back(x);
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& j, std::size_t rows, std::size_t cols, const char* name) {
  if (!j.is_array() || j.size() != rows)
    throw Error(std::string("model file: ") + name + " must have " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols)
      throw Error(std::string("model file: ") + name + " row " + std::to_string(r) + " must have " +
                  std::to_string(cols) + " columns");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  if (!m.all_finite()) throw Error(std::string("model file: ") + name + " has non-finite entries");
  return m;
}

template <class T>
T required(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("model file: missing field '") + key + "'");
  return it->get<T>();
}

}  // namespace

ModelMode parse_model_mode(std::string_view name) {
  if (name == "mf") return ModelMode::mf;
  if (name == "hybrid") return ModelMode::hybrid;
  throw Error("unknown mode '" + std::string(name) + "' (expected mf or hybrid)");
}

std::string_view to_string(ModelMode mode) { return mode == ModelMode::hybrid ? "hybrid" : "mf"; }

const FactorModel& ModelFile::factors() const {
  if (const auto* h = std::get_if<HybridModel>(&model)) return h->factors;
  return std::get<FactorModel>(model);
}

double ModelFile::predict(std::size_t user, std::size_t item) const {
  if (const auto* h = std::get_if<HybridModel>(&model)) return predict_hybrid(*h, user, item);
  return predict_mf(std::get<FactorModel>(model), user, item);
}

std::string serialize_model(const ModelFile& file) {
  const FactorModel& f = file.factors();
  ordered_json j;
  j["version"] = ModelFile::kVersion;
  j["mode"] = to_string(file.mode());
  j["k"] = f.k();
  j["split_seed"] = file.split_seed;
  j["train_config"] = {{"k", file.train_config.k},
                       {"learning_rate", file.train_config.learning_rate},
                       {"reg", file.train_config.reg},
                       {"epochs", file.train_config.epochs},
                       {"init_scale", file.train_config.init_scale},
                       {"seed", file.train_config.seed}};
  j["embedding_provider"] = file.embedding_provider;
  j["user_index"] = file.users.ids();
  j["item_index"] = file.items.ids();
  j["item_train_counts"] = file.item_train_counts;
  j["P"] = matrix_to_json(f.P);
  j["Q"] = matrix_to_json(f.Q);
  if (const auto* h = std::get_if<HybridModel>(&file.model)) {
    j["d_e"] = h->embeddings.dim;
    j["alpha"] = h->alpha;
    j["fusion"] = to_string(h->fusion);
    j["W"] = matrix_to_json(h->projection.weights);
    ordered_json emb = ordered_json::array();
    for (const auto& [item, vec] : h->embeddings.vectors) emb.push_back({{"item", item}, {"vector", vec}});
    j["embeddings"] = std::move(emb);
  }
  return j.dump() + "\n";
}

ModelFile deserialize_model(const std::string& text) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("model file is not a JSON object");
  auto version = j.find("version");
  if (version == j.end() || !version->is_number_integer()) throw Error("model file has no integer 'version'");
  if (version->get<int>() != ModelFile::kVersion)
    throw Error("model file version " + std::to_string(version->get<int>()) + " is not supported (expected " +
                std::to_string(ModelFile::kVersion) + ")");

  try {
    ModelFile file;
    const ModelMode mode = parse_model_mode(required<std::string>(j, "mode"));
    const std::size_t k = required<std::size_t>(j, "k");
    file.split_seed = required<std::uint64_t>(j, "split_seed");
    const auto& tc = j.at("train_config");
    file.train_config.k = tc.at("k").get<std::size_t>();
    file.train_config.learning_rate = tc.at("learning_rate").get<double>();
    file.train_config.reg = tc.at("reg").get<double>();
    file.train_config.epochs = tc.at("epochs").get<int>();
    file.train_config.init_scale = tc.at("init_scale").get<double>();
    file.train_config.seed = tc.at("seed").get<std::uint64_t>();
    file.embedding_provider = required<std::string>(j, "embedding_provider");
    file.users = IdIndex(required<std::vector<std::string>>(j, "user_index"));
    file.items = IdIndex(required<std::vector<std::string>>(j, "item_index"));
    file.item_train_counts = required<std::vector<std::size_t>>(j, "item_train_counts");
    if (file.item_train_counts.size() != file.items.size())
      throw Error("model file: item_train_counts does not match the item index");

    FactorModel factors{matrix_from_json(j.at("P"), file.users.size(), k, "P"),
                        matrix_from_json(j.at("Q"), file.items.size(), k, "Q")};
    if (mode == ModelMode::mf) {
      file.model = std::move(factors);
      return file;
    }

    HybridModel h;
    h.factors = std::move(factors);
    h.alpha = required<double>(j, "alpha");
    h.fusion = parse_fusion_mode(required<std::string>(j, "fusion"));
    h.embeddings.dim = required<std::size_t>(j, "d_e");
    h.projection.weights = matrix_from_json(j.at("W"), k, h.embeddings.dim, "W");
    for (const auto& entry : j.at("embeddings")) {
      h.embeddings.vectors[entry.at("item").get<std::size_t>()] = entry.at("vector").get<std::vector<double>>();
    }
    h.validate();
    file.model = std::move(h);
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << serialize_model(file);
  if (!out) throw Error("failed writing " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace rexfuse
