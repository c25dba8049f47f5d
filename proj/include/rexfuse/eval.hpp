#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "rexfuse/dataset.hpp"
#include "rexfuse/factor_model.hpp"
#include "rexfuse/hybrid.hpp"

namespace rexfuse {

/// Any (user, item) -> score function. Must be safe to call concurrently.
using Scorer = std::function<double(std::size_t user, std::size_t item)>;

struct EvalConfig {
  std::size_t k = 10;                ///< list length
  double relevance_threshold = 4.0;  ///< test ratings >= this are relevant
  bool exclude_train = true;         ///< never recommend an item the user trained on

  void validate() const;
};

struct EvalReport {
  std::optional<double> alpha;
  double precision = 0.0;
  double recall = 0.0;
  double coverage = 0.0;
  double rmse = 0.0;
  std::size_t n_users_evaluated = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Top-K lists keyed by user index.
using Recommendations = std::map<std::size_t, std::vector<std::size_t>>;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t n_users = 0;  ///< users with at least one relevant test item
};

/// The `k` best items by score, skipping `exclude`. Ties go to the lower
/// item index.
std::vector<std::size_t> topk(std::span<const double> scores, std::size_t k,
                              const std::unordered_set<std::size_t>& exclude = {});
std::vector<std::size_t> topk(const Scorer& scorer, std::size_t user, std::size_t n_items, std::size_t k,
                              const std::unordered_set<std::size_t>& exclude = {});

/// Micro-averaged over users holding at least one relevant test item:
/// precision = sum hits / sum list lengths, recall = sum hits / sum relevant.
PrecisionRecall precision_recall(const Recommendations& recommendations, std::span<const Rating> test,
                                 double threshold);

/// Fraction of the catalog that appears in at least one list.
double coverage(const Recommendations& recommendations, std::size_t n_items);

double rmse(const Scorer& scorer, std::span<const Rating> test);

/// Top-K lists for every user holding a relevant test item, skipping the
/// user's training items when `config.exclude_train` is set.
Recommendations recommend_for_test_users(const Scorer& scorer, const InteractionDataset& dataset,
                                         const EvalConfig& config, unsigned workers = 1);

/// Builds top-K lists for every user with a relevant test item and scores
/// them. `workers` > 1 splits users across threads; the result does not
/// depend on the worker count.
EvalReport evaluate(const Scorer& scorer, const InteractionDataset& dataset, const EvalConfig& config,
                    unsigned workers = 1);

Scorer mf_scorer(const FactorModel& model);

/// Trains one hybrid model per alpha (same config and seed) and evaluates
/// each on the test split, in the order given.
std::vector<EvalReport> sweep_alpha(const InteractionDataset& dataset, const ItemEmbeddingTable& embeddings,
                                    const TrainConfig& config, std::span<const double> alphas,
                                    const EvalConfig& eval_config = {},
                                    FusionMode fusion = FusionMode::additive, unsigned workers = 1);

/// `{"alpha":..,"precision":..,"recall":..,"coverage":..,"rmse":..,"n_users_evaluated":..}`;
/// alpha is null when absent.
std::string to_json(const EvalReport& report);
std::string to_json(std::span<const EvalReport> reports);

/// Aligned plain-text table: alpha, Precision, Recall, Coverage, RMSE, users.
std::string format_table(std::span<const EvalReport> reports);

}  // namespace rexfuse
