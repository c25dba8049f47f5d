#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "rexfuse/dataset.hpp"
#include "rexfuse/eval.hpp"
#include "rexfuse/factor_model.hpp"
#include "rexfuse/hybrid.hpp"

namespace rexfuse {

enum class ModelMode { mf, hybrid };

ModelMode parse_model_mode(std::string_view name);
std::string_view to_string(ModelMode mode);

/// Everything needed to score, re-split and describe a trained model. Saved
/// as one JSON document with a mandatory `version` field.
struct ModelFile {
  static constexpr int kVersion = 1;

  IdIndex users;
  IdIndex items;
  TrainConfig train_config;
  std::uint64_t split_seed = 0;
  std::vector<std::size_t> item_train_counts;
  std::string embedding_provider;  ///< empty in mf mode
  std::variant<FactorModel, HybridModel> model;

  ModelMode mode() const noexcept {
    return std::holds_alternative<HybridModel>(model) ? ModelMode::hybrid : ModelMode::mf;
  }
  const FactorModel& factors() const;

  /// Warm-path score: P_u . Q_i, or the fused score for hybrid models.
  double predict(std::size_t user, std::size_t item) const;

  friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

std::string serialize_model(const ModelFile& file);
ModelFile deserialize_model(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace rexfuse
