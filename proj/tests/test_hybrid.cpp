#include <cmath>

#include "doctest.h"
#include "rexfuse/error.hpp"
#include "rexfuse/hybrid.hpp"
#include "rexfuse/random.hpp"
#include "test_support.hpp"

using namespace rexfuse;
using testing::rel_err;

namespace {

/// 1 user/2 items, k=2, W = identity, E_0 = [2, 0]; item 1 has no content.
HybridModel tiny(double alpha) {
  HybridModel m;
  m.factors = FactorModel{Matrix(1, 2), Matrix(2, 2)};
  m.factors.P(0, 0) = 1.0;
  m.factors.Q(0, 1) = 1.0;
  m.projection.weights = Matrix(2, 2);
  m.projection.weights(0, 0) = m.projection.weights(1, 1) = 1.0;
  m.embeddings.dim = 2;
  m.embeddings.vectors[0] = {2.0, 0.0};
  m.alpha = alpha;
  m.validate();
  return m;
}

HybridModel random_hybrid(std::size_t users, std::size_t items, std::size_t k, std::size_t dim, double alpha,
                          std::uint64_t seed, FusionMode fusion = FusionMode::additive) {
  Rng rng(seed);
  HybridModel m;
  m.factors = FactorModel{Matrix(users, k), Matrix(items, k)};
  for (double& x : m.factors.P.values()) x = rng.symmetric(1.0);
  for (double& x : m.factors.Q.values()) x = rng.symmetric(1.0);
  m.projection.weights = Matrix(k, dim);
  for (double& x : m.projection.weights.values()) x = rng.symmetric(1.0);
  m.embeddings.dim = dim;
  for (std::size_t i = 0; i + 1 < items; ++i) {  // last item has no content
    std::vector<double> e(dim);
    for (auto& x : e) x = rng.symmetric(1.0);
    m.embeddings.vectors[i] = e;
  }
  m.alpha = alpha;
  m.fusion = fusion;
  m.validate();
  return m;
}

std::vector<Rating> random_ratings(std::size_t users, std::size_t items, std::uint64_t seed, double density = 0.7) {
  Rng rng(seed);
  std::vector<Rating> out;
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t i = 0; i < items; ++i)
      if (rng.uniform01() < density) out.push_back({u, i, 1.0 + static_cast<double>(rng.below(5))});
  return out;
}

ItemEmbeddingTable bow_table(const std::vector<std::string>& texts, std::size_t dim) {
  ItemEmbeddingTable t;
  t.dim = dim;
  for (std::size_t i = 0; i < texts.size(); ++i) t.vectors[i] = embed_hashed_bow(texts[i], dim);
  return t;
}

}  // namespace

TEST_CASE("semantic_score and predict_hybrid by hand") {
  auto m = tiny(0.5);
  CHECK(semantic_score(m, 0, 0) == 2.0);
  CHECK(semantic_score(m, 0, 1) == 0.0);
  CHECK(predict_hybrid(m, 0, 0) == 1.0);  // 0 + 0.5 * 2
  CHECK(predict_hybrid(m, 0, 1) == 0.0);  // P_0 . Q_1 = 0, no content
  CHECK_THROWS_AS(semantic_score(m, 1, 0), Error);
  CHECK_THROWS_AS(predict_hybrid(m, 0, 2), Error);
}

TEST_CASE("hybrid scores match naive recomputation") {
  for (FusionMode fusion : {FusionMode::additive, FusionMode::convex}) {
    auto m = random_hybrid(3, 4, 3, 5, 0.6, 12, fusion);
    auto params = testing::to_params(m);
    for (std::size_t u = 0; u < 3; ++u) {
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rel_err(predict_hybrid(m, u, i), params.predict(u, i)) < 1e-12);
        auto it = params.E.find(i);
        const double sem = it == params.E.end() ? 0.0 : oracle::dotv(params.P[u], oracle::matvec(params.W, it->second));
        CHECK(std::abs(semantic_score(m, u, i) - sem) <= 1e-12 * std::max(1.0, std::abs(sem)));
      }
    }
  }
}

TEST_CASE("alpha = 0 reduces to plain factorization and alpha is affine") {
  auto m = random_hybrid(5, 6, 4, 3, 0.0, 7);
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t i = 0; i < 6; ++i) CHECK(predict_hybrid(m, u, i) == predict_mf(m.factors, u, i));

  for (std::size_t u = 0; u < 5; ++u) {
    for (std::size_t i = 0; i < 6; ++i) {
      double p[3];
      for (int a = 0; a < 3; ++a) {
        m.alpha = a;
        p[a] = predict_hybrid(m, u, i);
      }
      CHECK(std::abs((p[2] - p[1]) - (p[1] - p[0])) < 1e-12);
      CHECK(std::abs((p[1] - p[0]) - semantic_score(m, u, i)) < 1e-12);
    }
  }
}

TEST_CASE("cold-start scoring") {
  HybridModel m;
  m.factors = FactorModel{Matrix(1, 2, 1.0), Matrix(3, 2, 9.0)};
  m.projection.weights = Matrix(2, 2);
  m.projection.weights(0, 0) = m.projection.weights(1, 1) = 1.0;
  m.embeddings.dim = 2;
  m.embeddings.vectors[0] = {0.5, 0.5};
  m.embeddings.vectors[1] = {0.0, 0.0};
  m.validate();
  CHECK(predict_cold_start(m, 0, 0) == 1.0);
  CHECK(predict_cold_start(m, 0, 1) == 0.0);
  CHECK_THROWS_WITH_AS(predict_cold_start(m, 0, 2), doctest::Contains("cold item without content"), Error);

  auto r = random_hybrid(4, 6, 3, 5, 0.4, 31);
  std::vector<double> before;
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t i = 0; i < 5; ++i) before.push_back(predict_cold_start(r, u, i));
  for (double& q : r.factors.Q.values()) q += 3.0;
  std::size_t n = 0;
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t i = 0; i < 5; ++i) CHECK(predict_cold_start(r, u, i) == before[n++]);
}

TEST_CASE("HybridScorer agrees bitwise with the free functions") {
  auto m = random_hybrid(4, 7, 3, 6, 0.35, 5);
  HybridScorer s(m);
  for (std::size_t u = 0; u < 4; ++u) {
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(s(u, i) == predict_hybrid(m, u, i));
      if (s.has_content(i)) CHECK(s.cold_start(u, i) == predict_cold_start(m, u, i));
    }
  }
  CHECK_FALSE(s.has_content(6));
}

TEST_CASE("joint gradient matches central finite differences") {
  for (FusionMode fusion : {FusionMode::additive, FusionMode::convex}) {
    auto m = random_hybrid(3, 4, 3, 5, 0.7, 44, fusion);
    auto data = random_ratings(3, 4, 9, 0.8);
    const double reg = 0.03, h = 1e-5;
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
    check(m.factors.P, grad.P);
    check(m.factors.Q, grad.Q);
    check(m.projection.weights, grad.W);
    CHECK(rel_err(loss_regularized(m, data, reg), oracle::objective(testing::to_params(m), testing::to_triples(data), reg)) <
          1e-12);
  }
}

TEST_CASE("train_hybrid at alpha 0 follows train_mf bit for bit") {
  auto data = random_ratings(12, 15, 2, 0.5);
  auto ds = testing::dataset_from(12, 15, data);
  std::vector<std::string> texts;
  for (int i = 0; i < 15; ++i) texts.push_back(i % 2 ? "space opera" : "quiet drama");
  TrainConfig c;
  c.k = 5;
  c.epochs = 8;
  auto mf = train_mf(ds, c);
  auto hy = train_hybrid(ds, bow_table(texts, 8), c, 0.0);
  CHECK(hy.model.factors == mf.model);
  CHECK(hy.loss_trace.size() == 8);
}

TEST_CASE("train_hybrid fits a rank-1 matrix driven by text") {
  // rating = a_u * b_i, where b_i is 1 for "low" items and 2 for "high" items
  const std::vector<std::string> texts{"low", "high", "low", "high", "high"};
  std::vector<Rating> data;
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t i = 0; i < 5; ++i) data.push_back({u, i, (1.0 + 0.5 * u) * (texts[i] == "high" ? 2.0 : 1.0)});
  auto ds = testing::dataset_from(4, 5, data);
  TrainConfig c;
  c.k = 1;
  c.reg = 0.0;
  c.learning_rate = 0.02;
  c.epochs = 400;
  c.init_scale = 0.5;
  auto table = bow_table(texts, 4);
  auto trained = train_hybrid(ds, table, c, 1.0);
  std::vector<PredictionPair> pairs;
  for (const auto& r : data) pairs.push_back({predict_hybrid(trained.model, r.user, r.item), r.value});
  CHECK(loss_mse(pairs) < 1e-2);

  SUBCASE("converged predictions agree with the full-batch joint oracle") {
    c.epochs = 4000;
    auto sgd = train_hybrid(ds, table, c, 1.0);
    auto gd = oracle::full_batch_gd(testing::to_params(trained.model), testing::to_triples(data), 0.0, 0.02, 40000);
    for (const auto& r : data)
      CHECK(std::abs(predict_hybrid(sgd.model, r.user, r.item) - gd.predict(r.user, r.item)) < 1e-6);
  }
}

TEST_CASE("train_hybrid errors") {
  auto ds = testing::dataset_from(2, 2, {{0, 0, 1.0}, {1, 1, 2.0}});
  TrainConfig c;
  c.k = 2;
  CHECK_THROWS_AS(train_hybrid(ds, ItemEmbeddingTable{}, c, 0.5), Error);
  ItemEmbeddingTable t;
  t.dim = 3;
  t.vectors[0] = {1, 0, 0};
  CHECK_THROWS_AS(train_hybrid(ds, t, c, -1.0), Error);
  CHECK_THROWS_AS(train_hybrid(ds, t, c, 1.5, FusionMode::convex), Error);
  c.learning_rate = 1e3;
  c.init_scale = 1.0;
  CHECK_THROWS_AS(train_hybrid(ds, t, c, 1.0), TrainingDiverged);
}

TEST_CASE("validate catches shape mismatches") {
  auto m = tiny(0.5);
  m.projection.weights = Matrix(2, 3);
  CHECK_THROWS_AS(m.validate(), Error);
  m = tiny(0.5);
  m.embeddings.vectors[5] = {1.0, 1.0};
  CHECK_THROWS_AS(m.validate(), Error);
  CHECK(parse_fusion_mode("convex") == FusionMode::convex);
  CHECK_THROWS_AS(parse_fusion_mode("mul"), Error);
}
