#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "rexfuse/dataset.hpp"
#include "rexfuse/factor_model.hpp"
#include "rexfuse/semantic.hpp"

namespace rexfuse {

/// How the collaborative and semantic scores are combined.
enum class FusionMode {
  additive,  ///< cf + alpha * semantic
  convex,    ///< (1 - alpha) * cf + alpha * semantic
};

FusionMode parse_fusion_mode(std::string_view name);
std::string_view to_string(FusionMode mode);

/// Matrix factorization plus a projected content term. The semantic score of
/// (u, i) is P_u . (W E_i); items without an embedding contribute zero.
struct HybridModel {
  FactorModel factors;
  Projection projection;
  ItemEmbeddingTable embeddings;
  double alpha = 0.0;
  FusionMode fusion = FusionMode::additive;

  /// Throws when shapes or alpha are inconsistent.
  void validate() const;

  double cf_weight() const noexcept { return fusion == FusionMode::convex ? 1.0 - alpha : 1.0; }
  double semantic_weight() const noexcept { return alpha; }

  friend bool operator==(const HybridModel&, const HybridModel&) = default;
};

/// W E_i, or the zero vector when item i has no embedding.
std::vector<double> projected_embedding(const HybridModel& model, std::size_t item);

double semantic_score(const HybridModel& model, std::size_t user, std::size_t item);
double predict_hybrid(const HybridModel& model, std::size_t user, std::size_t item);

/// Content-only score P_u . (W E_i); never reads Q. Throws if item i has no
/// embedding at all.
double predict_cold_start(const HybridModel& model, std::size_t user, std::size_t item);

/// Hybrid objective: per-interaction squared error of predict_hybrid plus
/// reg * (|P_u|^2 + |Q_i|^2), averaged, plus reg * |W|_F^2.
double loss_regularized(const HybridModel& model, std::span<const Rating> data, double reg);

struct HybridGradient {
  Matrix P;
  Matrix Q;
  Matrix W;
};

HybridGradient objective_gradient(const HybridModel& model, std::span<const Rating> data, double reg);

struct HybridTrainResult {
  HybridModel model;
  std::vector<double> loss_trace;
};

/// Joint SGD over P, Q and W with embeddings held fixed. With the same
/// config, P and Q follow train_mf exactly when alpha is 0 in additive mode.
HybridTrainResult train_hybrid(const InteractionDataset& dataset, ItemEmbeddingTable embeddings,
                               const TrainConfig& config, double alpha,
                               FusionMode fusion = FusionMode::additive);

/// Scores many pairs against one model with W E_i cached per item. Results
/// are bitwise equal to predict_hybrid / predict_cold_start.
class HybridScorer {
 public:
  explicit HybridScorer(const HybridModel& model);

  double operator()(std::size_t user, std::size_t item) const;
  double cold_start(std::size_t user, std::size_t item) const;
  bool has_content(std::size_t item) const { return has_content_[item] != 0; }

 private:
  const HybridModel& model_;
  Matrix projected_;
  std::vector<char> has_content_;
};

}  // namespace rexfuse
