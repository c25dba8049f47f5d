#include <cmath>

#include "doctest.h"
#include "rexfuse/error.hpp"
#include "rexfuse/factor_model.hpp"
#include "rexfuse/random.hpp"
#include "test_support.hpp"

using namespace rexfuse;
using testing::rel_err;

namespace {

std::vector<Rating> rank1_ratings() {
  // outer([1,2,3], [1,1,1])
  std::vector<Rating> out;
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t i = 0; i < 3; ++i) out.push_back({u, i, static_cast<double>(u + 1)});
  return out;
}

FactorModel random_model(std::size_t users, std::size_t items, std::size_t k, std::uint64_t seed) {
  TrainConfig c;
  c.k = k;
  c.seed = seed;
  c.init_scale = 1.0;
  return init_factors(users, items, c);
}

}  // namespace

TEST_CASE("init_factors: shape, determinism, degenerate scale") {
  TrainConfig c;
  c.k = 4;
  c.seed = 11;
  auto a = init_factors(3, 5, c);
  CHECK(a.P.rows() == 3);
  CHECK(a.P.cols() == 4);
  CHECK(a.Q.rows() == 5);
  CHECK(a == init_factors(3, 5, c));
  for (double x : a.P.values()) CHECK(std::abs(x) <= c.init_scale);

  c.init_scale = 0.0;
  auto z = init_factors(3, 5, c);
  CHECK(z.P.squared_norm() == 0.0);
  CHECK(z.Q.squared_norm() == 0.0);

  CHECK_THROWS_AS(init_factors(0, 5, c), Error);
  c.k = 0;
  CHECK_THROWS_AS(init_factors(3, 5, c), Error);
}

TEST_CASE("predict_mf is the row dot product") {
  FactorModel m{Matrix(1, 2), Matrix(2, 2)};
  m.P(0, 0) = 1.0;
  m.Q(0, 0) = 0.5;
  m.Q(0, 1) = 2.0;
  CHECK(predict_mf(m, 0, 0) == 0.5);
  CHECK(predict_mf(m, 0, 1) == 0.0);
  CHECK_THROWS_AS(predict_mf(m, 1, 0), Error);
  CHECK_THROWS_AS(predict_mf(m, 0, 2), Error);
}

TEST_CASE("loss_mse") {
  std::vector<PredictionPair> same{{1, 1}, {2.5, 2.5}};
  CHECK(loss_mse(same) == 0.0);
  std::vector<PredictionPair> one{{1, 3}};
  CHECK(loss_mse(one) == 4.0);
  CHECK_THROWS_AS(loss_mse({}), Error);

  Rng rng(5);
  std::vector<PredictionPair> pairs;
  std::vector<std::pair<double, double>> plain;
  for (int n = 0; n < 1000; ++n) {
    double p = rng.symmetric(5.0), y = rng.symmetric(5.0);
    pairs.push_back({p, y});
    plain.emplace_back(p, y);
  }
  CHECK(rel_err(loss_mse(pairs), oracle::mse(plain)) < 1e-12);
}

TEST_CASE("loss_regularized") {
  FactorModel one{Matrix(1, 2, 1.0), Matrix(1, 2, 1.0)};
  std::vector<Rating> perfect{{0, 0, 2.0}};
  CHECK(loss_regularized(one, perfect, 0.1) == doctest::Approx(0.4).epsilon(1e-15));

  auto m = random_model(4, 5, 3, 8);
  std::vector<Rating> data{{0, 0, 4}, {1, 2, 1}, {3, 4, 5}, {2, 1, 3}, {0, 3, 2}};
  std::vector<PredictionPair> pairs;
  for (const auto& r : data) pairs.push_back({predict_mf(m, r.user, r.item), r.value});
  CHECK(loss_regularized(m, data, 0.0) == loss_mse(pairs));
  CHECK(rel_err(loss_regularized(m, data, 0.3), oracle::objective(testing::to_params(m), testing::to_triples(data), 0.3)) <
        1e-12);
}

TEST_CASE("analytic gradient matches central finite differences") {
  auto m = random_model(4, 5, 3, 21);
  Rng rng(4);
  std::vector<Rating> data;
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t i = 0; i < 5; ++i)
      if (rng.uniform01() < 0.7) data.push_back({u, i, 1.0 + static_cast<double>(rng.below(5))});
  const double reg = 0.05, h = 1e-5;
  auto grad = objective_gradient(m, data, reg);

  auto check = [&](Matrix& param, const Matrix& analytic) {
    for (std::size_t n = 0; n < param.values().size(); ++n) {
      const double saved = param.values()[n];
      param.values()[n] = saved + h;
      const double up = loss_regularized(m, data, reg);
      param.values()[n] = saved - h;
      const double down = loss_regularized(m, data, reg);
      param.values()[n] = saved;
      CHECK(rel_err(analytic.values()[n], (up - down) / (2 * h)) < 1e-4);
    }
  };
  check(m.P, grad.P);
  check(m.Q, grad.Q);
}

TEST_CASE("train_mf recovers a rank-1 matrix") {
  auto ds = testing::dataset_from(3, 3, rank1_ratings());
  TrainConfig c;
  c.k = 1;
  c.reg = 0.0;
  c.learning_rate = 0.05;
  c.epochs = 200;
  c.init_scale = 0.5;
  auto trained = train_mf(ds, c);
  REQUIRE(trained.loss_trace.size() == 200);
  CHECK(trained.loss_trace.back() < 1e-3);

  SUBCASE("predictions agree with the full-batch oracle at convergence") {
    c.epochs = 3000;
    auto sgd = train_mf(ds, c);
    auto start = testing::to_params(init_factors(3, 3, c));
    auto gd = oracle::full_batch_gd(start, testing::to_triples(ds.train), 0.0, 0.05, 20000);
    for (const auto& r : ds.train) CHECK(std::abs(predict_mf(sgd.model, r.user, r.item) - gd.predict(r.user, r.item)) < 1e-6);
  }
}

TEST_CASE("strong regularization shrinks factors monotonically") {
  auto ds = testing::dataset_from(3, 3, rank1_ratings());
  TrainConfig c;
  c.k = 2;
  c.reg = 10.0;
  c.init_scale = 1.0;
  double previous = INFINITY;
  for (int epochs = 1; epochs <= 12; ++epochs) {
    c.epochs = epochs;
    auto m = train_mf(ds, c).model;
    const double norm = m.P.squared_norm() + m.Q.squared_norm();
    if (epochs >= 3) CHECK(norm <= previous);
    previous = norm;
  }
}

TEST_CASE("training is bitwise deterministic and epoch traces are prefixes") {
  Rng rng(99);
  std::vector<Rating> data;
  for (int n = 0; n < 300; ++n) data.push_back({rng.below(20), rng.below(30), 1.0 + static_cast<double>(rng.below(5))});
  auto ds = testing::dataset_from(20, 30, data);
  TrainConfig c;
  c.k = 8;
  c.epochs = 6;
  auto a = train_mf(ds, c);
  auto b = train_mf(ds, c);
  CHECK(a.model == b.model);
  CHECK(a.loss_trace == b.loss_trace);
  c.epochs = 3;
  auto prefix = train_mf(ds, c);
  CHECK(std::equal(prefix.loss_trace.begin(), prefix.loss_trace.end(), a.loss_trace.begin()));
  c.seed += 1;
  CHECK_FALSE(train_mf(ds, c).model == prefix.model);
}

TEST_CASE("divergence is reported with its epoch") {
  auto ds = testing::dataset_from(3, 3, rank1_ratings());
  TrainConfig c;
  c.k = 4;
  c.learning_rate = 50.0;
  c.init_scale = 1.0;
  try {
    train_mf(ds, c);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch() >= 1);
    CHECK(std::string(e.what()).find("smaller learning rate") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.reg = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}
