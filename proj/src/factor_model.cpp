#include "rexfuse/factor_model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rexfuse/error.hpp"
#include "rexfuse/random.hpp"

namespace rexfuse {

namespace detail {

void check_index(std::size_t index, std::size_t size, const char* what) {
  if (index >= size)
    throw Error(std::string(what) + " index " + std::to_string(index) + " out of range (size " +
                std::to_string(size) + ")");
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

}  // namespace detail

void TrainConfig::validate() const {
  if (k == 0) throw Error("k must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning rate must be positive");
  if (!(reg >= 0.0) || !std::isfinite(reg)) throw Error("regularization must be non-negative");
  if (epochs <= 0) throw Error("epochs must be positive");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) throw Error("init scale must be non-negative");
}

FactorModel init_factors(std::size_t n_users, std::size_t n_items, const TrainConfig& config) {
  config.validate();
  if (n_users == 0 || n_items == 0) throw Error("cannot build factors for zero users or items");
  FactorModel model{Matrix(n_users, config.k), Matrix(n_items, config.k)};
  Rng rng(derive_seed(config.seed, "factors"));
  for (double& x : model.P.values()) x = rng.symmetric(config.init_scale);
  for (double& x : model.Q.values()) x = rng.symmetric(config.init_scale);
  return model;
}

double predict_mf(const FactorModel& model, std::size_t user, std::size_t item) {
  detail::check_index(user, model.n_users(), "user");
  detail::check_index(item, model.n_items(), "item");
  return dot(model.P.row(user), model.Q.row(item));
}

double loss_mse(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw Error("MSE of an empty prediction list");
  double sum = 0.0;
  for (const auto& [predicted, actual] : pairs) {
    const double e = predicted - actual;
    sum += e * e;
  }
  return sum / static_cast<double>(pairs.size());
}

double loss_regularized(const FactorModel& model, std::span<const Rating> data, double reg) {
  if (data.empty()) throw Error("objective over an empty dataset");
  double sum = 0.0;
  for (const auto& r : data) {
    const double e = predict_mf(model, r.user, r.item) - r.value;
    sum += e * e + reg * (squared_norm(model.P.row(r.user)) + squared_norm(model.Q.row(r.item)));
  }
  return sum / static_cast<double>(data.size());
}

FactorGradient objective_gradient(const FactorModel& model, std::span<const Rating> data, double reg) {
  if (data.empty()) throw Error("gradient over an empty dataset");
  FactorGradient grad{Matrix(model.n_users(), model.k()), Matrix(model.n_items(), model.k())};
  const double scale = 2.0 / static_cast<double>(data.size());
  for (const auto& r : data) {
    const double e = predict_mf(model, r.user, r.item) - r.value;
    auto pu = model.P.row(r.user);
    auto qi = model.Q.row(r.item);
    auto gp = grad.P.row(r.user);
    auto gq = grad.Q.row(r.item);
    for (std::size_t f = 0; f < model.k(); ++f) {
      gp[f] += scale * (e * qi[f] + reg * pu[f]);
      gq[f] += scale * (e * pu[f] + reg * qi[f]);
    }
  }
  return grad;
}

MfTrainResult train_mf(const InteractionDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.train.empty()) throw Error("training split is empty");
  MfTrainResult result{init_factors(dataset.users.size(), dataset.items.size(), config), {}};
  FactorModel& model = result.model;
  const double lr = config.learning_rate;
  const double reg = config.reg;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t idx : detail::epoch_order(dataset.train.size(), config.seed, epoch)) {
      const Rating& r = dataset.train[idx];
      auto pu = model.P.row(r.user);
      auto qi = model.Q.row(r.item);
      const double e = dot(pu, qi) - r.value;
      for (std::size_t f = 0; f < pu.size(); ++f) {
        const double p = pu[f];
        const double q = qi[f];
        pu[f] = p - lr * (e * q + reg * p);
        qi[f] = q - lr * (e * p + reg * q);
      }
    }
    const double loss = loss_regularized(model, dataset.train, reg);
    if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
    result.loss_trace.push_back(loss);
  }
  return result;
}

}  // namespace rexfuse
