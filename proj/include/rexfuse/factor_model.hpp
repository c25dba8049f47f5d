#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rexfuse/dataset.hpp"
#include "rexfuse/matrix.hpp"

namespace rexfuse {

/// SGD hyperparameters. Defaults are tuned for MovieLens-100K scale.
struct TrainConfig {
  std::size_t k = 32;            ///< latent dimension
  double learning_rate = 0.005;
  double reg = 0.02;             ///< lambda
  int epochs = 30;
  double init_scale = 0.05;      ///< factors start uniform on [-init_scale, init_scale]
  std::uint64_t seed = 42;

  /// Throws rexfuse::Error when a field is out of range.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// User factors P (n_users x k) and item factors Q (n_items x k).
struct FactorModel {
  Matrix P;
  Matrix Q;

  std::size_t k() const noexcept { return P.cols(); }
  std::size_t n_users() const noexcept { return P.rows(); }
  std::size_t n_items() const noexcept { return Q.rows(); }

  friend bool operator==(const FactorModel&, const FactorModel&) = default;
};

struct PredictionPair {
  double predicted = 0.0;
  double actual = 0.0;
};

FactorModel init_factors(std::size_t n_users, std::size_t n_items, const TrainConfig& config);

/// Dot product of P_u and Q_i.
double predict_mf(const FactorModel& model, std::size_t user, std::size_t item);

/// Mean squared error over the pairs; throws on an empty list.
double loss_mse(std::span<const PredictionPair> pairs);

/// Training objective, averaged over `data`:
///   (1/N) sum_{(u,i)} [ (P_u . Q_i - y_ui)^2 + reg * (|P_u|^2 + |Q_i|^2) ]
/// The penalty is charged once per interaction, so rows are weighted by
/// their interaction counts; this is the objective per-touch SGD decay
/// descends.
double loss_regularized(const FactorModel& model, std::span<const Rating> data, double reg);

struct FactorGradient {
  Matrix P;
  Matrix Q;
};

/// Exact full-batch gradient of loss_regularized with respect to P and Q.
FactorGradient objective_gradient(const FactorModel& model, std::span<const Rating> data, double reg);

struct MfTrainResult {
  FactorModel model;
  std::vector<double> loss_trace;  ///< objective after each epoch
};

/// Per-interaction SGD over `dataset.train`, reshuffled every epoch.
/// Throws TrainingDiverged if the objective stops being finite.
MfTrainResult train_mf(const InteractionDataset& dataset, const TrainConfig& config);

namespace detail {
void check_index(std::size_t index, std::size_t size, const char* what);
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);
}  // namespace detail

}  // namespace rexfuse
